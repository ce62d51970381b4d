//! Containment of nonrecursive temporal queries.
//!
//! `Q1 ⊑ Q2` holds when `Q1(D, τ) ⊆ Q2(D, τ)` for every dataset `D` and time
//! point `τ`. For nonrecursive queries `Q1` unfolds into a finite union of
//! conjunctive queries, and a conjunctive query is contained in `Q2` exactly
//! when `Q2` derives its frozen head from its frozen body. The decision
//! procedures here unfold `Q1` at a set of anchor atoms and check each
//! disjunct by resolution of `Q2` against the frozen body.

mod grounding;
mod oracle;
mod unfold;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::ops::ControlFlow;

pub use grounding::{grounded_output_name, rigid_subquery, temporal_grounding};
pub use oracle::{containment_oracle, ContainmentVerdict};

use crate::error::DecisionError;
use crate::model::{analyze, Atom, Query, Symbol, Term, TimeTerm};
pub(crate) use grounding::require_plain;
use unfold::{FlatCq, Namer, Search, Space, UAtom, UObj, UTime, Unfolder, Var};

/// Default bound on the number of conjunctive queries an unfolding may produce.
pub const DEFAULT_UNFOLDING_CAP: usize = 100_000;

/// The output atom an unfolding starts from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Anchor {
    pub args: Vec<Term>,
    pub time: Option<TimeTerm>,
}

impl Anchor {
    /// `(__x0, …, __x{n-1})` at a fixed time point, or rigid when `time` is `None`.
    pub fn at(arity: usize, time: Option<i64>) -> Self {
        Anchor { args: Self::vars(arity), time: time.map(TimeTerm::Point) }
    }

    /// `(__x0, …, __x{n-1})` at the time variable `__t`.
    pub fn symbolic(arity: usize) -> Self {
        Anchor { args: Self::vars(arity), time: Some(TimeTerm::var("__t")) }
    }

    /// Anchor matching the output shape of `query`.
    pub fn for_query(query: &Query, time: i64) -> Self {
        Self::at(query.output_object_arity(), query.is_temporal().then_some(time))
    }

    fn vars(arity: usize) -> Vec<Term> {
        (0..arity).map(|i| Term::var(&format!("__x{i}"))).collect()
    }

    fn to_goal(&self, pred: &Symbol, namer: &mut Namer) -> UAtom {
        namer.atom(&Atom { pred: pred.clone(), args: self.args.clone(), time: self.time.clone() })
    }
}

/// A conjunctive query: head atom and body atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cq {
    pub head: Atom,
    pub body: Vec<Atom>,
}

/// A union of conjunctive queries with a common head predicate.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ucq {
    pub disjuncts: Vec<Cq>,
}

impl Ucq {
    pub fn len(&self) -> usize {
        self.disjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }
}

/// Substitution of the variables of one conjunctive query by terms of another.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ContainmentMapping {
    pub objects: BTreeMap<Symbol, Term>,
    pub times: BTreeMap<Symbol, TimeTerm>,
}

impl ContainmentMapping {
    pub fn apply(&self, atom: &Atom) -> Atom {
        Atom {
            pred: atom.pred.clone(),
            args: atom
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => self.objects.get(v).cloned().unwrap_or_else(|| t.clone()),
                    o => o.clone(),
                })
                .collect(),
            time: atom.time.as_ref().map(|t| match t {
                TimeTerm::Var { var, offset } => self.times.get(var).map_or_else(|| t.clone(), |b| b.shifted(*offset)),
                p => p.clone(),
            }),
        }
    }

    fn extend(&self, from: &Atom, to: &Atom) -> Option<ContainmentMapping> {
        if from.pred != to.pred || from.args.len() != to.args.len() {
            return None;
        }
        let mut m = self.clone();
        for (f, t) in from.args.iter().zip(&to.args) {
            match f {
                Term::Obj(_) if f != t => return None,
                Term::Obj(_) => {}
                Term::Var(v) => {
                    if m.objects.entry(v.clone()).or_insert_with(|| t.clone()) != t {
                        return None;
                    }
                }
            }
        }
        match (&from.time, &to.time) {
            (None, None) => {}
            (Some(TimeTerm::Point(p)), Some(TimeTerm::Point(q))) if p == q => {}
            (Some(TimeTerm::Var { var, offset }), Some(t)) => {
                let base = t.shifted(-offset);
                if *m.times.entry(var.clone()).or_insert_with(|| base.clone()) != base {
                    return None;
                }
            }
            _ => return None,
        }
        Some(m)
    }
}

fn map_body(m: ContainmentMapping, from: &[Atom], to: &[Atom]) -> Option<ContainmentMapping> {
    let Some((first, rest)) = from.split_first() else { return Some(m) };
    to.iter().filter_map(|t| m.extend(first, t)).find_map(|m| map_body(m, rest, to))
}

/// A mapping sending the head of `from` to the head of `to` and every body
/// atom of `from` into the body of `to`. Variables of `to` are treated as
/// constants. A mapping from `Q2'` to `Q1'` witnesses `Q1' ⊑ Q2'`.
pub fn find_containment_mapping(from: &Cq, to: &Cq) -> Option<ContainmentMapping> {
    let m = ContainmentMapping::default().extend(
        &Atom { pred: to.head.pred.clone(), ..from.head.clone() },
        &to.head,
    )?;
    map_body(m, &from.body, &to.body)
}

fn require_nonrecursive(query: &Query) -> Result<(), DecisionError> {
    if analyze(&query.program).is_nonrecursive {
        Ok(())
    } else {
        Err(DecisionError::Recursive { output: query.output.clone() })
    }
}

fn same_shape(q1: &Query, q2: &Query) -> Result<(), DecisionError> {
    if q1.is_temporal() != q2.is_temporal() || q1.output_object_arity() != q2.output_object_arity() {
        return Err(DecisionError::Instance(format!(
            "outputs {} and {} have different signatures",
            q1.output, q2.output
        )));
    }
    Ok(())
}

fn to_cq(cq: &FlatCq, anchor: &Anchor) -> Cq {
    let mut names: HashMap<Var, Symbol> = HashMap::new();
    for (arg, a) in cq.head.args.iter().zip(&anchor.args) {
        if let (UObj::Var(v), Term::Var(n)) = (arg, a) {
            names.entry(*v).or_insert_with(|| n.clone());
        }
    }
    if let (Some(UTime::Var(v, o)), Some(TimeTerm::Var { var, offset })) = (cq.head.time, &anchor.time) {
        if o == *offset {
            names.entry(v).or_insert_with(|| var.clone());
        }
    }
    let mut name = |v: Var| names.entry(v).or_insert_with(|| Symbol::from(format!("v{v}"))).clone();
    let mut atom = |a: &UAtom| Atom {
        pred: a.pred.clone(),
        args: a
            .args
            .iter()
            .map(|t| match t {
                UObj::Var(v) => Term::Var(name(*v)),
                UObj::Const(c) => Term::Obj(c.clone()),
            })
            .collect(),
        time: a.time.map(|t| match t {
            UTime::Point(p) => TimeTerm::Point(p),
            UTime::Var(v, o) => TimeTerm::Var { var: name(v), offset: o },
        }),
    };
    let head = atom(&cq.head);
    let body = cq.body.iter().map(&mut atom).collect();
    Cq { head, body }
}

fn for_each_cq(
    unfolder: &Unfolder,
    output: &Symbol,
    anchor: &Anchor,
    cap: usize,
    f: &mut dyn FnMut(&FlatCq) -> ControlFlow<()>,
) -> Result<(), DecisionError> {
    let mut namer = Namer::default();
    let goal = anchor.to_goal(output, &mut namer);
    let mut space = Space::default();
    space.fresh(namer.ids.len() as Var);
    let mut seen: HashSet<FlatCq> = HashSet::new();
    let mut search = Search::new(unfolder, space, cap);
    let _ = search
        .run(goal.clone(), &mut |space, leaves| {
            let cq = FlatCq::capture(space, &goal, leaves);
            if seen.insert(cq.clone()) {
                f(&cq)
            } else {
                ControlFlow::Continue(())
            }
        })
        .map_err(|_| DecisionError::UnfoldingCap { cap })?;
    Ok(())
}

/// All maximal unfoldings of the output of `query` at `anchor`.
pub fn unfold(query: &Query, anchor: &Anchor) -> Result<Ucq, DecisionError> {
    unfold_with_cap(query, anchor, DEFAULT_UNFOLDING_CAP)
}

pub fn unfold_with_cap(query: &Query, anchor: &Anchor, cap: usize) -> Result<Ucq, DecisionError> {
    require_nonrecursive(query)?;
    let unfolder = Unfolder::new(&query.program);
    let mut disjuncts = Vec::new();
    for_each_cq(&unfolder, &query.output, anchor, cap, &mut |cq| {
        disjuncts.push(to_cq(cq, anchor));
        ControlFlow::Continue(())
    })?;
    Ok(Ucq { disjuncts })
}

/// Whether `output` of the unfolder's program is derivable for the frozen
/// head of `cq` from its frozen body.
fn provable(unfolder: &Unfolder, output: &Symbol, cq: &FlatCq, cap: usize) -> Result<bool, DecisionError> {
    let mut space = Space::default();
    space.freeze(cq.vars);
    let goal = UAtom { pred: output.clone(), ..cq.head.clone() };
    let mut found = false;
    let _ = Search::new(unfolder, space, cap)
        .against(&cq.body)
        .run(goal, &mut |_, _| {
            found = true;
            ControlFlow::Break(())
        })
        .map_err(|_| DecisionError::UnfoldingCap { cap })?;
    Ok(found)
}

/// `Q1 ⊑ Q2` restricted to the given anchors: every disjunct of the
/// unfolding of `Q1` at each anchor is contained in `Q2`.
pub fn decide_containment_unfolded(q1: &Query, q2: &Query, anchors: &[Anchor]) -> Result<bool, DecisionError> {
    decide_containment_unfolded_with_cap(q1, q2, anchors, DEFAULT_UNFOLDING_CAP)
}

pub fn decide_containment_unfolded_with_cap(
    q1: &Query,
    q2: &Query,
    anchors: &[Anchor],
    cap: usize,
) -> Result<bool, DecisionError> {
    require_nonrecursive(q1)?;
    require_nonrecursive(q2)?;
    same_shape(q1, q2)?;
    let u1 = Unfolder::new(&q1.program);
    let u2 = Unfolder::new(&q2.program);
    for anchor in anchors {
        let mut verdict = Ok(true);
        for_each_cq(&u1, &q1.output, anchor, cap, &mut |cq| match provable(&u2, &q2.output, cq, cap) {
            Ok(true) => ControlFlow::Continue(()),
            other => {
                verdict = other;
                ControlFlow::Break(())
            }
        })?;
        if !verdict? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest program radius of the two queries.
fn shared_radius(q1: &Query, q2: &Query) -> u64 {
    analyze(&q1.program).program_radius.max(analyze(&q2.program).program_radius)
}

/// `Q1 ⊑ Q2` for nonrecursive connected queries without time points, by
/// grounding both programs on `[0, 2m]` and comparing at the single anchor `m`.
pub fn decide_containment_grounded(q1: &Query, q2: &Query) -> Result<bool, DecisionError> {
    require_plain(q1)?;
    require_plain(q2)?;
    same_shape(q1, q2)?;
    let m = shared_radius(q1, q2);
    let g1 = temporal_grounding(q1, m)?;
    let g2 = temporal_grounding(q2, m)?;
    let anchor = Anchor::at(q1.output_object_arity(), q1.is_temporal().then_some(m as i64));
    decide_containment_unfolded(&g1, &g2, &[anchor])
}

/// `Q1 ⊑ Q2` via a single unfolding at a symbolic time. Sound and complete
/// for nonrecursive queries without time points, which are shift invariant.
pub fn decide_containment_symbolic(q1: &Query, q2: &Query) -> Result<bool, DecisionError> {
    for q in [q1, q2] {
        require_nonrecursive(q)?;
        if analyze(&q.program).has_time_points {
            return Err(DecisionError::HasTimePoints { output: q.output.clone() });
        }
    }
    same_shape(q1, q2)?;
    let arity = q1.output_object_arity();
    let anchor = if q1.is_temporal() { Anchor::symbolic(arity) } else { Anchor::at(arity, None) };
    decide_containment_unfolded(q1, q2, &[anchor])
}

/// `Q1 ⊑ Q2`: the grounding route for connected queries, the symbolic route
/// otherwise.
pub fn decide_containment(q1: &Query, q2: &Query) -> Result<bool, DecisionError> {
    let connected = analyze(&q1.program).is_connected && analyze(&q2.program).is_connected;
    if connected {
        decide_containment_grounded(q1, q2)
    } else {
        decide_containment_symbolic(q1, q2)
    }
}
