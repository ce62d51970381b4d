//! Definitive time points.
//!
//! The answers of a query at `τ_out` are definitive for a `τ_in`-history `D`
//! when no `τ_in`-update can add answers at `τ_out`. Two deciders are
//! provided: a general one that evaluates a propagation-augmented query over
//! a single critical update, and one for nonrecursive connected queries that
//! only needs a bounded update and plain evaluation.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use crate::bruteforce::{for_each_subset, max_temporal_edb_leaves, relevant_facts, OracleOutcome, DEFAULT_ENUMERATION_CAP};
use crate::engine::Evaluator;
use crate::error::DecisionError;
use crate::model::{
    analyze, normalize_dataset, normalize_rigid_atoms, rigid_twin_name, Atom, Dataset, Fact, Origin, PredicateSig,
    Program, Query, Rule, Shape, Symbol, Term, TimeTerm, Tuple,
};

/// Fresh object standing for every object outside the query and the history.
pub const FRESH_OBJECT: &str = "__fresh_obj";
/// Marks the first time point after the history.
pub const UPDATE_MARKER: &str = "__A";
/// Holds at every time point from the marker onwards.
pub const FUTURE: &str = "__V";

/// Fresh IDB name replacing a temporal EDB predicate.
pub fn renamed_edb(pred: &Symbol) -> Symbol {
    Symbol::from(format!("{pred}__r"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DtpInstance {
    pub query: Query,
    pub history: Dataset,
    pub t_in: i64,
    pub t_out: i64,
}

impl DtpInstance {
    /// Checks that the query is valid, `history` is a `t_in`-history and
    /// `t_out ≤ t_in`.
    pub fn new(query: Query, history: Dataset, t_in: i64, t_out: i64) -> Result<Self, DecisionError> {
        let report = query.validate_structure();
        if !report.is_ok() {
            return Err(DecisionError::Invalid(report));
        }
        if t_out > t_in {
            return Err(DecisionError::Instance(format!("t_out {t_out} is after t_in {t_in}")));
        }
        if !history.is_history(t_in) {
            return Err(DecisionError::Instance(format!("history has facts after t_in {t_in}")));
        }
        Ok(DtpInstance { query, history, t_in, t_out })
    }

    fn output_time(&self) -> Option<i64> {
        self.query.is_temporal().then_some(self.t_out)
    }
}

/// Objects of the program and the history plus the fresh object.
pub fn critical_domain(instance: &DtpInstance) -> BTreeSet<Symbol> {
    let mut d = instance.query.program.objects();
    d.extend(instance.history.objects());
    d.insert(Symbol::new(FRESH_OBJECT));
    d
}

fn all_tuples(domain: &[Symbol], arity: usize) -> Vec<Tuple> {
    (0..arity).fold(vec![Vec::new()], |acc, _| {
        acc.into_iter()
            .flat_map(|t| {
                domain.iter().map(move |o| {
                    let mut t = t.clone();
                    t.push(o.clone());
                    t
                })
            })
            .collect()
    })
}

fn temporal_edb(program: &Program) -> Vec<PredicateSig> {
    program.temporal_edb_predicates().into_iter().cloned().collect()
}

/// The marker at `τ_in + 1` plus every temporal EDB fact over the critical
/// domain at `τ_in + 1`.
pub fn critical_update(instance: &DtpInstance) -> Dataset {
    let next = instance.t_in + 1;
    let domain: Vec<Symbol> = critical_domain(instance).into_iter().collect();
    let mut u = Dataset::new();
    u.insert(Fact::temporal(UPDATE_MARKER, &[], next));
    for sig in temporal_edb(&instance.query.program) {
        for t in all_tuples(&domain, sig.object_arity()) {
            u.insert(Fact { pred: sig.name.clone(), args: t, time: Some(next) });
        }
    }
    u
}

fn vars(n: usize) -> Vec<Term> {
    (0..n).map(|i| Term::var(&format!("X{i}"))).collect()
}

/// Renames every temporal EDB predicate `P` of the program to `P__r`.
pub(crate) fn rename_temporal_edb(program: &Program) -> (Vec<Rule>, Vec<PredicateSig>) {
    let renamed: BTreeSet<Symbol> = temporal_edb(program).into_iter().map(|s| s.name).collect();
    let rename = |a: &Atom| {
        if renamed.contains(&a.pred) {
            Atom { pred: renamed_edb(&a.pred), ..a.clone() }
        } else {
            a.clone()
        }
    };
    let rules = program.rules.iter().map(|r| Rule { head: rename(&r.head), body: r.body.iter().map(rename).collect() }).collect();
    let mut sigs: Vec<PredicateSig> = program.sigs.values().cloned().collect();
    for p in &renamed {
        let sig = &program.sigs[p];
        sigs.push(PredicateSig { name: renamed_edb(p), arity: sig.arity, shape: Shape::Temporal, origin: Origin::Idb });
    }
    (rules, sigs)
}

/// The query whose answers over `D ∪ U` (U the critical update) are exactly
/// the answers reachable by some update: temporal EDB facts at `τ_in + 1` are
/// propagated to every later time point.
pub fn critical_query(instance: &DtpInstance) -> Query {
    let program = &instance.query.program;
    let (mut rules, mut sigs) = rename_temporal_edb(program);
    let t = |o: i64| TimeTerm::var_offset("T", o);
    let a = Symbol::new(UPDATE_MARKER);
    let v = Symbol::new(FUTURE);
    rules.push(Rule::new(Atom { pred: v.clone(), args: vec![], time: Some(t(0)) }, vec![Atom { pred: a.clone(), args: vec![], time: Some(t(0)) }]));
    rules.push(Rule::new(Atom { pred: v.clone(), args: vec![], time: Some(t(1)) }, vec![Atom { pred: v.clone(), args: vec![], time: Some(t(0)) }]));
    for sig in temporal_edb(program) {
        let x = vars(sig.object_arity());
        let r = renamed_edb(&sig.name);
        rules.push(Rule::new(
            Atom { pred: r.clone(), args: x.clone(), time: Some(t(0)) },
            vec![Atom { pred: sig.name.clone(), args: x.clone(), time: Some(t(0)) }],
        ));
        rules.push(Rule::new(
            Atom { pred: r.clone(), args: x.clone(), time: Some(t(1)) },
            vec![
                Atom { pred: v.clone(), args: vec![], time: Some(t(1)) },
                Atom { pred: r, args: x, time: Some(t(0)) },
            ],
        ));
    }
    sigs.push(PredicateSig::new(UPDATE_MARKER, 1, Shape::Temporal, Origin::Edb));
    sigs.push(PredicateSig::new(FUTURE, 1, Shape::Temporal, Origin::Idb));
    Query { output: instance.query.output.clone(), program: Program::with_sigs(rules, sigs) }
}

fn answers(ev: &Evaluator, data: &Dataset, query: &Query, time: Option<i64>) -> Result<BTreeSet<Tuple>, DecisionError> {
    Ok(ev.tuples_at(data, &query.output, time)?)
}

/// Decides DTP for any query through the critical query and update.
pub fn decide_dtp_general(instance: &DtpInstance) -> Result<bool, DecisionError> {
    let q = critical_query(instance);
    let ev = Evaluator::new(&q.program)?;
    let with_update = answers(&ev, &instance.history.union(&critical_update(instance)), &q, instance.output_time())?;
    if with_update.is_empty() {
        return Ok(true);
    }
    let without = answers(&ev, &instance.history, &q, instance.output_time())?;
    Ok(with_update.is_subset(&without))
}

fn require_nonrecursive_connected(query: &Query) -> Result<(), DecisionError> {
    let a = analyze(&query.program);
    if !a.is_nonrecursive {
        return Err(DecisionError::Recursive { output: query.output.clone() });
    }
    if !a.is_connected {
        return Err(DecisionError::Disconnected { output: query.output.clone() });
    }
    Ok(())
}

/// Every temporal EDB fact over the critical domain at each time point in
/// `(τ_in, τ₀ + rad]`, `τ₀` the larger of `τ_out` and the largest time point
/// of the rigid-normalized program.
pub fn bounded_critical_update(instance: &DtpInstance) -> Result<Dataset, DecisionError> {
    require_nonrecursive_connected(&instance.query)?;
    let normalized = normalize_rigid_atoms(&instance.query);
    let analysis = analyze(&normalized.program);
    let tau0 = normalized.program.time_points().last().map_or(instance.t_out, |&p| p.max(instance.t_out));
    let hi = tau0 + analysis.program_radius as i64;
    let domain: Vec<Symbol> = critical_domain(instance).into_iter().collect();
    let twins: BTreeSet<Symbol> =
        instance.query.program.sigs.values().filter(|s| !s.is_temporal()).map(|s| rigid_twin_name(&s.name)).collect();
    let mut u = Dataset::new();
    for sig in temporal_edb(&normalized.program).into_iter().filter(|s| !twins.contains(&s.name)) {
        for t in all_tuples(&domain, sig.object_arity()) {
            for time in instance.t_in + 1..=hi {
                u.insert(Fact { pred: sig.name.clone(), args: t.clone(), time: Some(time) });
            }
        }
    }
    Ok(u)
}

/// Decides DTP for nonrecursive connected queries with the bounded update.
pub fn decide_dtp_nonrecursive(instance: &DtpInstance) -> Result<bool, DecisionError> {
    let update = bounded_critical_update(instance)?;
    let q = normalize_rigid_atoms(&instance.query);
    let ev = Evaluator::new(&q.program)?;
    let d = normalize_dataset(&instance.history);
    let time = Some(if instance.query.is_temporal() { instance.t_out } else { 0 });
    let with_update = answers(&ev, &d.union(&update), &q, time)?;
    if with_update.is_empty() {
        return Ok(true);
    }
    Ok(with_update.is_subset(&answers(&ev, &d, &q, time)?))
}

/// Checks the definition directly: every update over `domain` with facts at
/// `(τ_in, τ_in + time_bound]` is tried, smallest first.
///
/// Only facts matching some body atom of the program are considered. For
/// nonrecursive queries updates are limited to the largest number of temporal
/// EDB leaves of a derivation, which loses nothing because queries are
/// monotone; recursive queries use `max_update` (default 3).
pub fn dtp_oracle(
    instance: &DtpInstance,
    time_bound: i64,
    domain: &[Symbol],
    max_update: Option<usize>,
) -> Result<OracleOutcome, DecisionError> {
    dtp_oracle_with_cap(instance, time_bound, domain, max_update, DEFAULT_ENUMERATION_CAP)
}

/// [`dtp_oracle`] trying at most `cap` updates.
pub fn dtp_oracle_with_cap(
    instance: &DtpInstance,
    time_bound: i64,
    domain: &[Symbol],
    max_update: Option<usize>,
    cap: usize,
) -> Result<OracleOutcome, DecisionError> {
    let program = &instance.query.program;
    let times = instance.t_in + 1..=instance.t_in + time_bound;
    let universe: Vec<Fact> =
        temporal_edb(program).iter().flat_map(|s| relevant_facts(program, &s.name, domain, times.clone())).collect();
    let limit = max_update.or_else(|| max_temporal_edb_leaves(&instance.query)).unwrap_or(3);
    let ev = Evaluator::new(program)?;
    let base = answers(&ev, &instance.history, &instance.query, instance.output_time())?;
    let mut witness = None;
    let mut failure = None;
    let checked = for_each_subset(universe.len(), limit, cap, &mut |subset| {
        let mut d = instance.history.clone();
        d.extend(subset.iter().map(|&i| universe[i].clone()));
        match answers(&ev, &d, &instance.query, instance.output_time()) {
            Ok(a) if a.is_subset(&base) => ControlFlow::Continue(()),
            Ok(_) => {
                witness = Some(subset.iter().map(|&i| universe[i].clone()).collect());
                ControlFlow::Break(())
            }
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(OracleOutcome { holds: witness.is_none(), witness, checked })
}
