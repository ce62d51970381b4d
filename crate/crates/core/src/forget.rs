//! Forgetting: whether the facts up to `τ_mem` can be dropped from a
//! `τ_in`-history without changing any answer at or after `τ_out`, under
//! every future update.
//!
//! For nonrecursive connected queries without time points this reduces to
//! containment of two queries that embed the full and the truncated history,
//! compared at the finitely many output time points that can be affected.

use std::collections::BTreeSet;
use std::ops::{ControlFlow, RangeInclusive};

use crate::bruteforce::{for_each_subset, leaf_time_spans, max_temporal_edb_leaves, relevant_facts, OracleOutcome, DEFAULT_ENUMERATION_CAP};
use crate::containment::{decide_containment_unfolded, require_plain, Anchor};
use crate::dtp::renamed_edb;
use crate::engine::Evaluator;
use crate::error::DecisionError;
use crate::model::{
    segment, Atom, Dataset, Fact, Origin, PredicateSig, Program, Query, Rule, Shape, Symbol, Term, TimeTerm,
};

/// Marks the time points at which updates may add facts.
pub const UPDATE_SLOT: &str = "__B";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForgetInstance {
    pub query: Query,
    pub history: Dataset,
    pub t_in: i64,
    pub t_out: i64,
    pub t_mem: i64,
}

impl ForgetInstance {
    /// Requires `t_mem ≤ t_out ≤ t_in + 1` and a `t_in`-history. The upper
    /// bound admits the state right after the answers at `t_in` were emitted.
    pub fn new(query: Query, history: Dataset, t_in: i64, t_out: i64, t_mem: i64) -> Result<Self, DecisionError> {
        let report = query.validate_structure();
        if !report.is_ok() {
            return Err(DecisionError::Invalid(report));
        }
        if !(t_mem <= t_out && t_out <= t_in + 1) {
            return Err(DecisionError::Instance(format!(
                "need t_mem <= t_out <= t_in + 1, got t_mem={t_mem}, t_out={t_out}, t_in={t_in}"
            )));
        }
        if !history.is_history(t_in) {
            return Err(DecisionError::Instance(format!("history has facts after t_in {t_in}")));
        }
        Ok(ForgetInstance { query, history, t_in, t_out, t_mem })
    }
}

/// Output time points that forgetting may affect and time points at which
/// relevant updates may occur.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelevantPoints {
    pub output: RangeInclusive<i64>,
    pub update: RangeInclusive<i64>,
}

/// Output points `[τ_out, τ_mem + rad]` and update points `(τ_in, τ_mem + 2·rad]`.
pub fn relevant_points(instance: &ForgetInstance) -> Result<RelevantPoints, DecisionError> {
    let rad = require_plain(&instance.query)?.program_radius as i64;
    Ok(RelevantPoints {
        output: instance.t_out..=instance.t_mem + rad,
        update: instance.t_in + 1..=instance.t_mem + 2 * rad,
    })
}

fn rename_edb(program: &Program, a: &Atom) -> Atom {
    if program.is_edb(&a.pred) {
        Atom { pred: renamed_edb(&a.pred), ..a.clone() }
    } else {
        a.clone()
    }
}

fn rename_facts(program: &Program, data: &Dataset) -> Vec<Rule> {
    data.iter().map(|f| Rule::fact(rename_edb(program, &f.to_atom()))).collect()
}

/// The pair `(Q1, Q2)` with `Forget ⟺ Q1 ⊑ Q2` at the output points.
///
/// Both share the program: the rules with EDB predicates renamed, the rules
/// for the output grounded at the output points, the update slots
/// `__B(τ)`, and `P(x̄, t) ∧ __B(t) → P__r(x̄, t)` for every temporal EDB
/// predicate `P`. `Q1` embeds the renamed history and `Q2` its segment after
/// `τ_mem`.
pub fn build_forget_queries(instance: &ForgetInstance) -> Result<(Query, Query), DecisionError> {
    let points = relevant_points(instance)?;
    let program = &instance.query.program;
    let output = &instance.query.output;
    let slot = Symbol::new(UPDATE_SLOT);
    let mut rules = Vec::new();
    for rule in &program.rules {
        let renamed = Rule { head: rename_edb(program, &rule.head), body: rule.body.iter().map(|a| rename_edb(program, a)).collect() };
        if &rule.head.pred != output {
            rules.push(renamed);
            continue;
        }
        let Some(head_time) = renamed.head.time.clone() else {
            rules.push(renamed);
            continue;
        };
        for tau in points.output.clone() {
            let base = tau - head_time.offset();
            rules.push(renamed.map_times(|t| match t {
                TimeTerm::Var { offset, .. } => TimeTerm::Point(base + offset),
                p => p.clone(),
            }));
        }
    }
    for tau in points.update.clone() {
        rules.push(Rule::fact(Atom { pred: slot.clone(), args: vec![], time: Some(TimeTerm::Point(tau)) }));
    }
    let mut sigs: Vec<PredicateSig> = program.sigs.values().cloned().collect();
    sigs.push(PredicateSig::new(UPDATE_SLOT, 1, Shape::Temporal, Origin::Idb));
    for sig in program.sigs.values().filter(|s| s.is_edb()) {
        sigs.push(PredicateSig { name: renamed_edb(&sig.name), arity: sig.arity, shape: sig.shape, origin: Origin::Idb });
        if sig.is_temporal() {
            let x: Vec<Term> = (0..sig.object_arity()).map(|i| Term::var(&format!("X{i}"))).collect();
            let t = TimeTerm::var("T");
            rules.push(Rule::new(
                Atom { pred: renamed_edb(&sig.name), args: x.clone(), time: Some(t.clone()) },
                vec![
                    Atom { pred: sig.name.clone(), args: x, time: Some(t.clone()) },
                    Atom { pred: slot.clone(), args: vec![], time: Some(t) },
                ],
            ));
        }
    }
    let build = |data: &Dataset| {
        let mut r = rules.clone();
        r.extend(rename_facts(program, data));
        Query { output: output.clone(), program: Program::with_sigs(r, sigs.clone()) }
    };
    Ok((build(&instance.history), build(&segment(&instance.history, instance.t_mem))))
}

/// Decides Forget by containment at every output point.
pub fn decide_forget(instance: &ForgetInstance) -> Result<bool, DecisionError> {
    let points = relevant_points(instance)?;
    if points.output.is_empty() || !instance.query.is_temporal() {
        return Ok(true);
    }
    let (q1, q2) = build_forget_queries(instance)?;
    let arity = instance.query.output_object_arity();
    let anchors: Vec<Anchor> = points.output.clone().map(|t| Anchor::at(arity, Some(t))).collect();
    decide_containment_unfolded(&q1, &q2, &anchors)
}

/// Objects of the query and history plus two fresh objects.
pub fn default_oracle_domain(query: &Query, history: &Dataset) -> Vec<Symbol> {
    let mut d: BTreeSet<Symbol> = query.program.objects();
    d.extend(history.objects());
    d.insert(Symbol::new("__fresh0"));
    d.insert(Symbol::new("__fresh1"));
    d.into_iter().collect()
}

/// Checks the definition directly over updates built from `domain`,
/// comparing answers at every output point. Update facts are placed at the
/// update points that a derivation of some output point can reach.
pub fn forget_oracle(instance: &ForgetInstance, domain: &[Symbol]) -> Result<OracleOutcome, DecisionError> {
    forget_oracle_with_cap(instance, domain, DEFAULT_ENUMERATION_CAP)
}

/// [`forget_oracle`] trying at most `cap` updates.
pub fn forget_oracle_with_cap(instance: &ForgetInstance, domain: &[Symbol], cap: usize) -> Result<OracleOutcome, DecisionError> {
    let points = relevant_points(instance)?;
    let program = &instance.query.program;
    // an update fact matters only if it can be a leaf below some output point
    let spans = leaf_time_spans(&instance.query).unwrap_or_default();
    let universe: Vec<Fact> = program
        .temporal_edb_predicates()
        .iter()
        .flat_map(|s| {
            let Some(&(lo, hi)) = spans.get(&s.name) else { return Vec::new() };
            let times = (*points.update.start()).max(points.output.start() + lo)..=(*points.update.end()).min(points.output.end() + hi);
            relevant_facts(program, &s.name, domain, times)
        })
        .collect();
    let limit = max_temporal_edb_leaves(&instance.query).unwrap_or(0);
    let ev = Evaluator::new(program)?;
    let kept = segment(&instance.history, instance.t_mem);
    let out = &instance.query.output;
    let time = |t: i64| instance.query.is_temporal().then_some(t);
    let mut witness = None;
    let checked = for_each_subset(universe.len(), limit, cap, &mut |subset| {
        let update: Dataset = subset.iter().map(|&i| universe[i].clone()).collect();
        let full = ev.saturate_unbounded(&instance.history.union(&update));
        let cut = ev.saturate_unbounded(&kept.union(&update));
        let differs = points.output.clone().any(|t| !full.tuples_at(out, time(t)).is_subset(&cut.tuples_at(out, time(t))));
        if differs {
            witness = Some(update);
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    })?;
    Ok(OracleOutcome { holds: witness.is_none(), witness, checked })
}
