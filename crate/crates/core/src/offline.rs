//! Offline parameters: a delay `d` after which answers are definitive, and a
//! window `s` of past time points that must be kept to produce them.
//!
//! Both are decided by reduction to containment of nonrecursive queries. The
//! reductions mark the time points at which data may be present with helper
//! predicates and gate every temporal EDB predicate through them.

use std::collections::BTreeSet;
use std::ops::{ControlFlow, RangeInclusive};

use crate::bruteforce::{for_each_subset, leaf_time_spans, max_edb_leaves, relevant_facts, DEFAULT_ENUMERATION_CAP};
use crate::containment::{decide_containment_grounded, require_plain};
use crate::dtp::{rename_temporal_edb, renamed_edb};
use crate::engine::Evaluator;
use crate::error::DecisionError;
use crate::model::{
    analyze, segment, Atom, Dataset, Fact, Origin, PredicateSig, Program, Query, Rule, Shape, Symbol, Term, TimeTerm,
};

/// Marks the output time point in delay queries.
pub const OUTPUT_MARK: &str = "__A";
/// Marks the time points whose data is available.
pub const AVAILABLE: &str = "__B";
/// Output of the reduction queries.
pub const GATED_OUTPUT: &str = "__G";
/// Marks the current time point in window queries.
pub const NOW: &str = "__In";
/// Marks the output time points in window queries.
pub const OUTPUT_POINTS: &str = "__Out";

fn var(name: &str) -> Term {
    Term::var(name)
}

fn tvar(offset: i64) -> TimeTerm {
    TimeTerm::var_offset("T", offset)
}

fn marker(pred: &str, time: TimeTerm) -> Atom {
    Atom { pred: Symbol::new(pred), args: vec![], time: Some(time) }
}

fn output_vars(query: &Query) -> Vec<Term> {
    (0..query.output_object_arity()).map(|i| var(&format!("X{i}"))).collect()
}

/// `P_Q(x̄, t) ∧ gate(t) → __G(x̄, t)`.
fn gated_output_rule(query: &Query, gate: &str) -> Rule {
    let x = output_vars(query);
    Rule::new(
        Atom { pred: Symbol::new(GATED_OUTPUT), args: x.clone(), time: Some(tvar(0)) },
        vec![Atom { pred: query.output.clone(), args: x, time: Some(tvar(0)) }, marker(gate, tvar(0))],
    )
}

/// `P(x̄, t) ∧ __B(t) → P__r(x̄, t)` for every temporal EDB predicate.
fn availability_rules(program: &Program) -> Vec<Rule> {
    program
        .temporal_edb_predicates()
        .into_iter()
        .map(|sig| {
            let x: Vec<Term> = (0..sig.object_arity()).map(|i| var(&format!("Y{i}"))).collect();
            Rule::new(
                Atom { pred: renamed_edb(&sig.name), args: x.clone(), time: Some(tvar(0)) },
                vec![Atom { pred: sig.name.clone(), args: x, time: Some(tvar(0)) }, marker(AVAILABLE, tvar(0))],
            )
        })
        .collect()
}

/// `from(t) → to(t + k)` for every `k` in `range`.
fn shift_rules<'a>(from: &'a str, to: &'a str, range: RangeInclusive<i64>) -> impl Iterator<Item = Rule> + 'a {
    range.map(move |k| Rule::new(marker(to, tvar(k)), vec![marker(from, tvar(0))]))
}

fn helper_sigs(query: &Query, edb: &[&str], idb: &[&str]) -> Vec<PredicateSig> {
    let mut sigs: Vec<PredicateSig> = edb.iter().map(|p| PredicateSig::new(p, 1, Shape::Temporal, Origin::Edb)).collect();
    sigs.extend(idb.iter().map(|p| PredicateSig::new(p, 1, Shape::Temporal, Origin::Idb)));
    sigs.push(PredicateSig::new(GATED_OUTPUT, query.output_object_arity() + 1, Shape::Temporal, Origin::Idb));
    sigs
}

fn reduction_query(rules: Vec<Rule>, sigs: Vec<PredicateSig>) -> Query {
    Query { output: Symbol::new(GATED_OUTPUT), program: Program::with_sigs(rules, sigs) }
}

fn require_offline_shape(query: &Query) -> Result<u64, DecisionError> {
    let report = query.validate_structure();
    if !report.is_ok() {
        return Err(DecisionError::Invalid(report));
    }
    Ok(require_plain(query)?.program_radius)
}

/// The pair `(Q1, Q2)` with `Q` having delay `d` iff `Q1 ⊑ Q2`.
///
/// `Q1` is `Q` with its output gated by `__A`. `Q2` sees each temporal EDB
/// fact only at the points `__B(t + k)`, `-rad ≤ k ≤ d`, around the marked
/// output point.
pub fn build_delay_queries(query: &Query, d: u64) -> Result<(Query, Query), DecisionError> {
    let rad = require_offline_shape(query)? as i64;
    let gate = gated_output_rule(query, OUTPUT_MARK);

    let mut r1 = query.program.rules.clone();
    r1.push(gate.clone());
    let mut s1: Vec<PredicateSig> = query.program.sigs.values().cloned().collect();
    s1.extend(helper_sigs(query, &[OUTPUT_MARK], &[]));

    let (mut r2, mut s2) = rename_temporal_edb(&query.program);
    r2.push(gate);
    r2.extend(shift_rules(OUTPUT_MARK, AVAILABLE, -rad..=d as i64));
    r2.extend(availability_rules(&query.program));
    s2.extend(helper_sigs(query, &[OUTPUT_MARK], &[AVAILABLE]));

    Ok((reduction_query(r1, s1), reduction_query(r2, s2)))
}

/// Whether the answers at `τ - d` never change once the data up to `τ` is
/// known. Rigid outputs do not depend on time and always have delay 0.
pub fn decide_delay(query: &Query, d: u64) -> Result<bool, DecisionError> {
    let (q1, q2) = build_delay_queries(query, d)?;
    if !query.is_temporal() {
        return Ok(true);
    }
    decide_containment_grounded(&q1, &q2)
}

/// Smallest valid delay. The program radius is always valid.
pub fn minimal_delay(query: &Query) -> Result<u64, DecisionError> {
    let rad = require_offline_shape(query)?;
    for d in 0..rad {
        if decide_delay(query, d)? {
            return Ok(d);
        }
    }
    Ok(rad)
}

/// Reduction queries for a window check; `Vacuous` when no output point can
/// be affected by dropping old data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WindowQueries {
    Vacuous,
    Pair(Query, Query),
}

fn window_ranges(rad: i64, d: i64, s: i64) -> RangeInclusive<i64> {
    -d + 1..=-s + rad
}

/// The program `Π^j`: outputs at `__Out(t + k)` for `-d < k ≤ -s + rad`
/// around the current point `__In(t)`, and data available at
/// `__B(t + l)` for `-j < l ≤ -s + 2·rad`.
fn window_program(query: &Query, rad: i64, d: i64, s: i64, j: i64) -> Query {
    let (mut rules, mut sigs) = rename_temporal_edb(&query.program);
    rules.extend(shift_rules(NOW, OUTPUT_POINTS, window_ranges(rad, d, s)));
    rules.push(gated_output_rule(query, OUTPUT_POINTS));
    rules.extend(shift_rules(NOW, AVAILABLE, -j + 1..=-s + 2 * rad));
    rules.extend(availability_rules(&query.program));
    sigs.extend(helper_sigs(query, &[NOW], &[OUTPUT_POINTS, AVAILABLE]));
    reduction_query(rules, sigs)
}

/// The pair `(Π^{d+rad}, Π^s)`: the first keeps all data that can reach an
/// output point after `τ_in - d`, the second only data after `τ_in - s`.
pub fn build_window_queries(query: &Query, d: u64, s: u64) -> Result<WindowQueries, DecisionError> {
    let rad = require_offline_shape(query)? as i64;
    let (d, s) = (d as i64, s as i64);
    if window_ranges(rad, d, s).is_empty() {
        return Ok(WindowQueries::Vacuous);
    }
    Ok(WindowQueries::Pair(window_program(query, rad, d, s, d + rad), window_program(query, rad, d, s, s)))
}

fn require_window_shape(query: &Query) -> Result<u64, DecisionError> {
    if !analyze(&query.program).is_nonrecursive && query.validate_structure().is_ok() {
        return Err(DecisionError::NoCertifiedWindow { output: query.output.clone() });
    }
    require_offline_shape(query)
}

/// Whether, with delay `d`, keeping the last `s` time points suffices to
/// compute every answer that is still to be emitted.
pub fn decide_window(query: &Query, d: u64, s: u64) -> Result<bool, DecisionError> {
    require_window_shape(query)?;
    if !query.is_temporal() {
        return Ok(true);
    }
    match build_window_queries(query, d, s)? {
        WindowQueries::Vacuous => Ok(true),
        WindowQueries::Pair(q1, q2) => decide_containment_grounded(&q1, &q2),
    }
}

/// Smallest valid window for delay `d`. The window `d + rad` is always valid.
pub fn minimal_window(query: &Query, d: u64) -> Result<u64, DecisionError> {
    let rad = require_window_shape(query)?;
    for s in 0..d + rad {
        if decide_window(query, d, s)? {
            return Ok(s);
        }
    }
    Ok(d + rad)
}

/// Bounds of the offline oracles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleBounds {
    /// Objects added to the constants of the program.
    pub fresh_objects: usize,
    /// Largest dataset tried; defaults to the most EDB leaves of a derivation.
    pub max_facts: Option<usize>,
    pub cap: usize,
}

impl Default for OracleBounds {
    fn default() -> Self {
        OracleBounds { fresh_objects: 2, max_facts: None, cap: DEFAULT_ENUMERATION_CAP }
    }
}

/// A history, an update and an output point at which the property fails,
/// all relative to `τ_in = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OfflineCounterexample {
    pub history: Dataset,
    pub update: Dataset,
    pub t_out: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OfflineOracleOutcome {
    pub holds: bool,
    pub counterexample: Option<OfflineCounterexample>,
    pub checked: usize,
}

struct Universe {
    domain: Vec<Symbol>,
    limit: usize,
    ev: Evaluator,
}

impl Universe {
    fn new(query: &Query, bounds: &OracleBounds) -> Result<Self, DecisionError> {
        require_offline_shape(query)?;
        let mut domain: BTreeSet<Symbol> = query.program.objects();
        domain.extend((0..bounds.fresh_objects).map(|i| Symbol::from(format!("__fresh{i}"))));
        let limit = bounds.max_facts.unwrap_or_else(|| max_edb_leaves(query).unwrap_or(0));
        Ok(Universe { domain: domain.into_iter().collect(), limit, ev: Evaluator::new(&query.program)? })
    }

    /// Every EDB fact that can be a leaf of a derivation of an output at `t_out`.
    fn facts_around(&self, query: &Query, t_out: i64) -> Vec<Fact> {
        let program = &query.program;
        let spans = leaf_time_spans(query).unwrap_or_default();
        let mut out = Vec::new();
        for sig in program.sigs.values().filter(|s| s.is_edb()) {
            let times = match spans.get(&sig.name) {
                Some(&(lo, hi)) => t_out + lo..=t_out + hi,
                None if sig.is_temporal() => continue,
                None => 0..=0,
            };
            out.extend(relevant_facts(program, &sig.name, &self.domain, times));
        }
        out
    }

    /// Tries every dataset of at most `limit` facts from `universe` and reports
    /// the first whose answers at `t_out` are not all kept by `cut`.
    fn search(
        &self,
        query: &Query,
        t_out: i64,
        universe: &[Fact],
        cap: usize,
        cut: &dyn Fn(&Dataset) -> Dataset,
    ) -> Result<(Option<OfflineCounterexample>, usize), DecisionError> {
        let mut found = None;
        let checked = for_each_subset(universe.len(), self.limit, cap, &mut |subset| {
            let all: Dataset = subset.iter().map(|&i| universe[i].clone()).collect();
            let kept = cut(&all);
            if kept == all {
                return ControlFlow::Continue(());
            }
            let full = self.ev.saturate_unbounded(&all).tuples_at(&query.output, Some(t_out));
            let part = self.ev.saturate_unbounded(&kept).tuples_at(&query.output, Some(t_out));
            if full.is_subset(&part) {
                return ControlFlow::Continue(());
            }
            let (history, update): (Vec<Fact>, Vec<Fact>) = all.iter().cloned().partition(|f| f.time.is_none_or(|t| t <= 0));
            found = Some(OfflineCounterexample {
                history: history.into_iter().collect(),
                update: update.into_iter().collect(),
                t_out,
            });
            ControlFlow::Break(())
        })?;
        Ok((found, checked))
    }
}

fn history_part(data: &Dataset) -> Dataset {
    data.iter().filter(|f| f.time.is_none_or(|t| t <= 0)).cloned().collect()
}

/// Checks the delay definition at `τ_in = 0` directly: no dataset within the
/// bounds has an answer at `-d` that the data up to 0 does not already give.
pub fn delay_oracle(query: &Query, d: u64, bounds: &OracleBounds) -> Result<OfflineOracleOutcome, DecisionError> {
    let u = Universe::new(query, bounds)?;
    if !query.is_temporal() {
        return Ok(OfflineOracleOutcome { holds: true, counterexample: None, checked: 0 });
    }
    let t_out = -(d as i64);
    let facts = u.facts_around(query, t_out);
    let (counterexample, checked) = u.search(query, t_out, &facts, bounds.cap, &history_part)?;
    Ok(OfflineOracleOutcome { holds: counterexample.is_none(), counterexample, checked })
}

/// Checks the window definition at `τ_in = 0` directly: for every output
/// point after `-d` that dropping data can affect, no dataset within the
/// bounds loses an answer when only its part after `-s` is kept.
pub fn window_oracle(query: &Query, d: u64, s: u64, bounds: &OracleBounds) -> Result<OfflineOracleOutcome, DecisionError> {
    let rad = require_window_shape(query)? as i64;
    let u = Universe::new(query, bounds)?;
    let mut checked = 0;
    if query.is_temporal() {
        let cut = |data: &Dataset| segment(data, -(s as i64));
        for t_out in window_ranges(rad, d as i64, s as i64) {
            let facts = u.facts_around(query, t_out);
            let (counterexample, n) = u.search(query, t_out, &facts, bounds.cap.saturating_sub(checked), &cut)?;
            checked += n;
            if counterexample.is_some() {
                return Ok(OfflineOracleOutcome { holds: false, counterexample, checked });
            }
        }
    }
    Ok(OfflineOracleOutcome { holds: true, counterexample: None, checked })
}
