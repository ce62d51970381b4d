//! The temporal Datalog data model.
//!
//! Predicates are either *rigid* (every position has object sort) or
//! *temporal* (the last position has time sort, all others object sort). An
//! [`Atom`] keeps its object arguments and its optional time argument apart,
//! so the temporal/rigid split is visible in the type rather than recovered
//! from a sort list.
//!
//! Time points are stored as `i64`. Complexity statements about this
//! language usually assume unary-coded numbers; nothing here depends on that.

mod analysis;
mod normalize;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

pub use analysis::{analyze, rule_radius, ProgramAnalysis};
pub use normalize::{normalize_dataset, normalize_rigid_atoms, rigid_twin_name};
pub use validate::{validate, validate_structure, ValidationError, ValidationKind, ValidationReport};

/// Prefix reserved for names introduced by the decision procedures.
pub const RESERVED_PREFIX: &str = "__";

// ------------------------------------------------------------------------------------------------
// Names and terms
// ------------------------------------------------------------------------------------------------

/// An interned-by-sharing name: predicate, object or variable.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_reserved(&self) -> bool {
        self.0.starts_with(RESERVED_PREFIX)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl From<String> for Symbol {
    fn from(s: String) -> Self {
        Symbol(Arc::from(s))
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An object term: an object variable or an object constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Symbol),
    Obj(Symbol),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Symbol::new(name))
    }

    pub fn obj(name: &str) -> Self {
        Term::Obj(Symbol::new(name))
    }

    pub fn as_var(&self) -> Option<&Symbol> {
        match self {
            Term::Var(v) => Some(v),
            Term::Obj(_) => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        matches!(self, Term::Obj(_))
    }
}

/// A time term: a time point, or a time variable plus an integer offset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimeTerm {
    Point(i64),
    Var { var: Symbol, offset: i64 },
}

impl TimeTerm {
    pub fn var(name: &str) -> Self {
        TimeTerm::Var { var: Symbol::new(name), offset: 0 }
    }

    pub fn var_offset(name: &str, offset: i64) -> Self {
        TimeTerm::Var { var: Symbol::new(name), offset }
    }

    /// The offset of the term; zero for time points.
    pub fn offset(&self) -> i64 {
        match self {
            TimeTerm::Point(_) => 0,
            TimeTerm::Var { offset, .. } => *offset,
        }
    }

    pub fn as_var(&self) -> Option<&Symbol> {
        match self {
            TimeTerm::Point(_) => None,
            TimeTerm::Var { var, .. } => Some(var),
        }
    }

    pub fn as_point(&self) -> Option<i64> {
        match self {
            TimeTerm::Point(p) => Some(*p),
            TimeTerm::Var { .. } => None,
        }
    }

    pub fn shifted(&self, by: i64) -> TimeTerm {
        match self {
            TimeTerm::Point(p) => TimeTerm::Point(p + by),
            TimeTerm::Var { var, offset } => TimeTerm::Var { var: var.clone(), offset: offset + by },
        }
    }
}

// ------------------------------------------------------------------------------------------------
// Predicates
// ------------------------------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Object,
    Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Edb,
    Idb,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Rigid,
    Temporal,
}

/// Declared or inferred signature of a predicate.
///
/// `arity` counts every position, including the time position of a temporal
/// predicate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PredicateSig {
    pub name: Symbol,
    pub arity: usize,
    pub shape: Shape,
    pub origin: Origin,
}

impl PredicateSig {
    pub fn new(name: &str, arity: usize, shape: Shape, origin: Origin) -> Self {
        PredicateSig { name: Symbol::new(name), arity, shape, origin }
    }

    pub fn is_temporal(&self) -> bool {
        self.shape == Shape::Temporal
    }

    pub fn is_edb(&self) -> bool {
        self.origin == Origin::Edb
    }

    /// Number of object positions.
    pub fn object_arity(&self) -> usize {
        match self.shape {
            Shape::Rigid => self.arity,
            Shape::Temporal => self.arity.saturating_sub(1),
        }
    }

    pub fn sorts(&self) -> Vec<Sort> {
        let mut sorts = vec![Sort::Object; self.object_arity()];
        if self.is_temporal() {
            sorts.push(Sort::Time);
        }
        sorts
    }
}

// ------------------------------------------------------------------------------------------------
// Atoms, rules, programs
// ------------------------------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: Symbol,
    pub args: Vec<Term>,
    pub time: Option<TimeTerm>,
}

impl Atom {
    pub fn rigid(pred: &str, args: Vec<Term>) -> Self {
        Atom { pred: Symbol::new(pred), args, time: None }
    }

    pub fn temporal(pred: &str, args: Vec<Term>, time: TimeTerm) -> Self {
        Atom { pred: Symbol::new(pred), args, time: Some(time) }
    }

    pub fn is_temporal(&self) -> bool {
        self.time.is_some()
    }

    pub fn arity(&self) -> usize {
        self.args.len() + usize::from(self.time.is_some())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground) && self.time.as_ref().is_none_or(|t| t.as_point().is_some())
    }

    pub fn object_vars(&self) -> impl Iterator<Item = &Symbol> {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn time_var(&self) -> Option<&Symbol> {
        self.time.as_ref().and_then(TimeTerm::as_var)
    }

    pub fn objects(&self) -> impl Iterator<Item = &Symbol> {
        self.args.iter().filter_map(|t| match t {
            Term::Obj(o) => Some(o),
            Term::Var(_) => None,
        })
    }

    /// Converts a ground atom into a fact.
    pub fn to_fact(&self) -> Option<Fact> {
        let args = self
            .args
            .iter()
            .map(|t| match t {
                Term::Obj(o) => Some(o.clone()),
                Term::Var(_) => None,
            })
            .collect::<Option<Vec<_>>>()?;
        let time = match &self.time {
            None => None,
            Some(TimeTerm::Point(p)) => Some(*p),
            Some(TimeTerm::Var { .. }) => return None,
        };
        Some(Fact { pred: self.pred.clone(), args, time })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Atom>) -> Self {
        Rule { head, body }
    }

    pub fn fact(head: Atom) -> Self {
        Rule { head, body: Vec::new() }
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        std::iter::once(&self.head).chain(self.body.iter())
    }

    /// Distinct time variables of the rule.
    pub fn time_vars(&self) -> BTreeSet<&Symbol> {
        self.atoms().filter_map(Atom::time_var).collect()
    }

    pub fn time_points(&self) -> impl Iterator<Item = i64> + '_ {
        self.atoms().filter_map(|a| a.time.as_ref().and_then(TimeTerm::as_point))
    }

    /// Applies `f` to every time term of the rule.
    pub fn map_times(&self, f: impl Fn(&TimeTerm) -> TimeTerm) -> Rule {
        let map_atom = |a: &Atom| Atom { pred: a.pred.clone(), args: a.args.clone(), time: a.time.as_ref().map(&f) };
        Rule { head: map_atom(&self.head), body: self.body.iter().map(map_atom).collect() }
    }
}

/// A finite set of rules together with the signatures of every predicate they
/// mention.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub sigs: BTreeMap<Symbol, PredicateSig>,
}

impl Program {
    /// Builds a program and infers signatures for every predicate it uses.
    ///
    /// A predicate is temporal when its atoms carry a time term, and IDB when
    /// it heads a rule with a non-empty body.
    pub fn new(rules: Vec<Rule>) -> Self {
        let mut program = Program { rules, sigs: BTreeMap::new() };
        program.infer_missing_sigs();
        program
    }

    /// Builds a program with explicit signatures; predicates without one are
    /// inferred as in [`Program::new`].
    pub fn with_sigs(rules: Vec<Rule>, sigs: impl IntoIterator<Item = PredicateSig>) -> Self {
        let mut program = Program { rules, sigs: sigs.into_iter().map(|s| (s.name.clone(), s)).collect() };
        program.infer_missing_sigs();
        program
    }

    pub fn empty() -> Self {
        Program::default()
    }

    pub fn infer_missing_sigs(&mut self) {
        let mut idb: BTreeSet<Symbol> = BTreeSet::new();
        for rule in &self.rules {
            if !rule.is_fact() {
                idb.insert(rule.head.pred.clone());
            }
        }
        for rule in &self.rules {
            for atom in rule.atoms() {
                if self.sigs.contains_key(&atom.pred) {
                    continue;
                }
                let shape = if atom.is_temporal() { Shape::Temporal } else { Shape::Rigid };
                let origin = if idb.contains(&atom.pred) { Origin::Idb } else { Origin::Edb };
                self.sigs.insert(
                    atom.pred.clone(),
                    PredicateSig { name: atom.pred.clone(), arity: atom.arity(), shape, origin },
                );
            }
        }
    }

    pub fn sig(&self, pred: &Symbol) -> Option<&PredicateSig> {
        self.sigs.get(pred)
    }

    pub fn declare(&mut self, sig: PredicateSig) {
        self.sigs.insert(sig.name.clone(), sig);
    }

    pub fn push(&mut self, rule: Rule) {
        self.rules.push(rule);
        self.infer_missing_sigs();
    }

    pub fn is_edb(&self, pred: &Symbol) -> bool {
        self.sigs.get(pred).is_some_and(PredicateSig::is_edb)
    }

    pub fn is_temporal(&self, pred: &Symbol) -> bool {
        self.sigs.get(pred).is_some_and(PredicateSig::is_temporal)
    }

    /// Temporal EDB predicates mentioned by the rules.
    pub fn temporal_edb_predicates(&self) -> Vec<&PredicateSig> {
        let used: BTreeSet<&Symbol> = self.rules.iter().flat_map(|r| r.atoms().map(|a| &a.pred)).collect();
        self.sigs
            .values()
            .filter(|s| s.is_temporal() && s.is_edb() && used.contains(&s.name))
            .collect()
    }

    /// All object constants occurring in the rules.
    pub fn objects(&self) -> BTreeSet<Symbol> {
        self.rules.iter().flat_map(|r| r.atoms().flat_map(|a| a.objects().cloned())).collect()
    }

    /// All time points occurring in the rules.
    pub fn time_points(&self) -> BTreeSet<i64> {
        self.rules.iter().flat_map(Rule::time_points).collect()
    }

    /// Rules whose head uses `pred`.
    pub fn rules_for<'a>(&'a self, pred: &'a Symbol) -> impl Iterator<Item = (usize, &'a Rule)> + 'a {
        self.rules.iter().enumerate().filter(move |(_, r)| &r.head.pred == pred)
    }

    /// Union of two programs; signatures of `self` take precedence.
    pub fn union(&self, other: &Program) -> Program {
        let mut rules = self.rules.clone();
        rules.extend(other.rules.iter().cloned());
        let mut sigs = other.sigs.clone();
        sigs.extend(self.sigs.iter().map(|(k, v)| (k.clone(), v.clone())));
        let mut program = Program { rules, sigs };
        program.infer_missing_sigs();
        program
    }
}

/// A query: an IDB output predicate and the program defining it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub output: Symbol,
    pub program: Program,
}

impl Query {
    pub fn new(output: &str, program: Program) -> Self {
        Query { output: Symbol::new(output), program }
    }

    pub fn output_sig(&self) -> Option<&PredicateSig> {
        self.program.sig(&self.output)
    }

    pub fn is_temporal(&self) -> bool {
        self.program.is_temporal(&self.output)
    }

    /// Number of object positions of the output predicate.
    pub fn output_object_arity(&self) -> usize {
        self.output_sig().map_or(0, PredicateSig::object_arity)
    }
}

// ------------------------------------------------------------------------------------------------
// Facts and datasets
// ------------------------------------------------------------------------------------------------

/// A ground, function-free rigid or temporal atom.
///
/// The derived ordering (predicate, arguments, time) is the canonical output
/// order for facts and answers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub pred: Symbol,
    pub args: Vec<Symbol>,
    pub time: Option<i64>,
}

impl Fact {
    pub fn rigid(pred: &str, args: &[&str]) -> Self {
        Fact { pred: Symbol::new(pred), args: args.iter().map(|a| Symbol::new(a)).collect(), time: None }
    }

    pub fn temporal(pred: &str, args: &[&str], time: i64) -> Self {
        Fact { pred: Symbol::new(pred), args: args.iter().map(|a| Symbol::new(a)).collect(), time: Some(time) }
    }

    pub fn is_temporal(&self) -> bool {
        self.time.is_some()
    }

    pub fn to_atom(&self) -> Atom {
        Atom {
            pred: self.pred.clone(),
            args: self.args.iter().cloned().map(Term::Obj).collect(),
            time: self.time.map(TimeTerm::Point),
        }
    }

    pub fn to_rule(&self) -> Rule {
        Rule::fact(self.to_atom())
    }

    pub fn shifted(&self, by: i64) -> Fact {
        Fact { pred: self.pred.clone(), args: self.args.clone(), time: self.time.map(|t| t + by) }
    }
}

/// An answer tuple: the object arguments of an output fact.
pub type Tuple = Vec<Symbol>;

/// A finite set of EDB facts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Dataset {
    facts: BTreeSet<Fact>,
}

impl Dataset {
    pub fn new() -> Self {
        Dataset::default()
    }

    pub fn insert(&mut self, fact: Fact) -> bool {
        self.facts.insert(fact)
    }

    pub fn extend(&mut self, facts: impl IntoIterator<Item = Fact>) {
        self.facts.extend(facts);
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    pub fn facts(&self) -> &BTreeSet<Fact> {
        &self.facts
    }

    pub fn union(&self, other: &Dataset) -> Dataset {
        let mut facts = self.facts.clone();
        facts.extend(other.facts.iter().cloned());
        Dataset { facts }
    }

    pub fn objects(&self) -> BTreeSet<Symbol> {
        self.facts.iter().flat_map(|f| f.args.iter().cloned()).collect()
    }

    pub fn times(&self) -> BTreeSet<i64> {
        self.facts.iter().filter_map(|f| f.time).collect()
    }

    pub fn max_time(&self) -> Option<i64> {
        self.facts.iter().filter_map(|f| f.time).max()
    }

    pub fn min_time(&self) -> Option<i64> {
        self.facts.iter().filter_map(|f| f.time).min()
    }

    /// Every temporal fact shifted by `by` time points; rigid facts unchanged.
    pub fn shifted(&self, by: i64) -> Dataset {
        self.facts.iter().map(|f| f.shifted(by)).collect()
    }

    /// True when every temporal fact holds at or before `t_in`.
    pub fn is_history(&self, t_in: i64) -> bool {
        self.facts.iter().all(|f| f.time.is_none_or(|t| t <= t_in))
    }

    /// True when every fact is temporal and holds strictly after `t_in`.
    pub fn is_update(&self, t_in: i64) -> bool {
        self.facts.iter().all(|f| f.time.is_some_and(|t| t > t_in))
    }

    /// The facts as a program of fact rules.
    pub fn to_rules(&self) -> Vec<Rule> {
        self.facts.iter().map(Fact::to_rule).collect()
    }
}

impl FromIterator<Fact> for Dataset {
    fn from_iter<I: IntoIterator<Item = Fact>>(iter: I) -> Self {
        Dataset { facts: iter.into_iter().collect() }
    }
}

impl IntoIterator for Dataset {
    type Item = Fact;
    type IntoIter = std::collections::btree_set::IntoIter<Fact>;

    fn into_iter(self) -> Self::IntoIter {
        self.facts.into_iter()
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Fact;
    type IntoIter = std::collections::btree_set::Iter<'a, Fact>;

    fn into_iter(self) -> Self::IntoIter {
        self.facts.iter()
    }
}

/// The τ-segment of `dataset`: all rigid facts plus the temporal facts holding
/// strictly after `tau`.
pub fn segment(dataset: &Dataset, tau: i64) -> Dataset {
    dataset.iter().filter(|f| f.time.is_none_or(|t| t > tau)).cloned().collect()
}

// ------------------------------------------------------------------------------------------------
// Display (surface syntax)
// ------------------------------------------------------------------------------------------------

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Obj(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Display for TimeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeTerm::Point(p) => write!(f, "{p}"),
            TimeTerm::Var { var, offset: 0 } => write!(f, "{var}"),
            TimeTerm::Var { var, offset } if *offset > 0 => write!(f, "{var}+{offset}"),
            TimeTerm::Var { var, offset } => write!(f, "{var}{offset}"),
        }
    }
}

fn write_args(
    f: &mut fmt::Formatter<'_>,
    pred: &Symbol,
    args: impl Iterator<Item = String>,
) -> fmt::Result {
    write!(f, "{pred}(")?;
    for (i, a) in args.enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        f.write_str(&a)?;
    }
    f.write_str(")")
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args = self.args.iter().map(ToString::to_string).chain(self.time.iter().map(ToString::to_string));
        write_args(f, &self.pred, args)
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args = self.args.iter().map(ToString::to_string).chain(self.time.iter().map(ToString::to_string));
        write_args(f, &self.pred, args)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{atom}")?;
        }
        if !self.body.is_empty() {
            f.write_str(" -> ")?;
        }
        write!(f, "{}.", self.head)
    }
}
