//! Bottom-up evaluation.
//!
//! Nonrecursive programs have a finite least model and are saturated
//! outright. Recursive programs may derive facts at infinitely many time
//! points, so they are saturated over a window around the time points of
//! interest that is widened until the facts in focus and the states at both
//! window edges stop changing. Failure to stabilise below the horizon cap is
//! reported as [`EngineError::HorizonExceeded`].

mod derivation;
pub(crate) mod eval;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

pub use derivation::{check_derivation, is_instance_of, DerivationTree};
pub use eval::Model;
pub use store::FactStore;

use crate::error::EngineError;
use crate::model::{analyze, Dataset, Fact, Program, Query, Symbol, Tuple};
use eval::Compiled;

/// Default horizon cap for recursive programs.
pub const DEFAULT_MAX_HORIZON: i64 = 256;

/// Environment variable overriding [`DEFAULT_MAX_HORIZON`].
pub const MAX_HORIZON_ENV: &str = "TDL_MAX_HORIZON";

/// Closed interval of time points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TimeWindow {
    pub lo: i64,
    pub hi: i64,
}

impl TimeWindow {
    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "empty window [{lo}, {hi}]");
        TimeWindow { lo, hi }
    }

    pub fn point(t: i64) -> Self {
        TimeWindow { lo: t, hi: t }
    }

    pub fn contains(&self, t: i64) -> bool {
        self.lo <= t && t <= self.hi
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    #[default]
    SemiNaive,
    Naive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub max_horizon: i64,
    pub strategy: Strategy,
}

impl Default for EngineConfig {
    /// Semi-naive evaluation; the horizon cap honours `TDL_MAX_HORIZON`.
    fn default() -> Self {
        let max_horizon = std::env::var(MAX_HORIZON_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<i64>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_MAX_HORIZON);
        EngineConfig { max_horizon, strategy: Strategy::SemiNaive }
    }
}

/// Output facts of a query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnswerSet {
    pub pred: Symbol,
    pub facts: BTreeSet<Fact>,
}

impl AnswerSet {
    /// Tuples holding at `tau`; for a rigid output every tuple.
    pub fn at(&self, tau: i64) -> BTreeSet<Tuple> {
        self.facts.iter().filter(|f| f.time.is_none_or(|t| t == tau)).map(|f| f.args.clone()).collect()
    }

    pub fn by_time(&self) -> BTreeMap<Option<i64>, BTreeSet<Tuple>> {
        let mut out: BTreeMap<Option<i64>, BTreeSet<Tuple>> = BTreeMap::new();
        for f in &self.facts {
            out.entry(f.time).or_default().insert(f.args.clone());
        }
        out
    }
}

/// A compiled program that can be evaluated over many datasets.
#[derive(Clone, Debug)]
pub struct Evaluator {
    compiled: Arc<Compiled>,
    nonrecursive: bool,
    max_rule_radius: i64,
    program_radius: i64,
    time_points: BTreeSet<i64>,
    config: EngineConfig,
}

impl Evaluator {
    pub fn new(program: &Program) -> Result<Self, EngineError> {
        Self::with_config(program, EngineConfig::default())
    }

    pub fn with_config(program: &Program, config: EngineConfig) -> Result<Self, EngineError> {
        let analysis = analyze(program);
        Ok(Evaluator {
            compiled: Arc::new(Compiled::new(program)?),
            nonrecursive: analysis.is_nonrecursive,
            max_rule_radius: analysis.max_rule_radius as i64,
            program_radius: analysis.program_radius as i64,
            time_points: program.time_points(),
            config,
        })
    }

    /// Saturates without any time restriction. Only terminates when the
    /// program is nonrecursive or derived facts stay inside finitely many
    /// time points.
    pub fn saturate_unbounded(&self, dataset: &Dataset) -> Model {
        self.compiled.saturate(dataset, None, self.config.strategy)
    }

    /// Saturates over an explicit window of derived time points.
    pub fn saturate_window(&self, dataset: &Dataset, window: TimeWindow) -> Model {
        self.compiled.saturate(dataset, Some(window), self.config.strategy)
    }

    /// A model that is exact for every fact with time in `focus`.
    pub fn saturate(&self, dataset: &Dataset, focus: TimeWindow) -> Result<Model, EngineError> {
        if self.nonrecursive {
            return Ok(self.saturate_unbounded(dataset));
        }
        let mut lo = focus.lo;
        let mut hi = focus.hi;
        for t in dataset.times().into_iter().chain(self.time_points.iter().copied()) {
            lo = lo.min(t);
            hi = hi.max(t);
        }
        let edge = self.max_rule_radius.max(1);
        let cap = self.config.max_horizon.max(1);
        let mut horizon = self.program_radius.max(1).min(cap);
        let mut previous: Option<(BTreeSet<Fact>, BTreeSet<Fact>, BTreeSet<Fact>)> = None;
        loop {
            let window = TimeWindow::new(lo - horizon, hi + horizon);
            let model = self.saturate_window(dataset, window);
            let state = (
                model.facts_in(focus.lo, focus.hi),
                shifted_slices(&model, window.lo, window.lo + edge - 1, window.lo),
                shifted_slices(&model, window.hi - edge + 1, window.hi, window.hi),
            );
            if previous.as_ref() == Some(&state) {
                return Ok(model);
            }
            if horizon >= cap {
                return Err(EngineError::HorizonExceeded { cap });
            }
            previous = Some(state);
            horizon = (horizon * 2).min(cap);
        }
    }

    /// Tuples of `pred` at `tau` (or all tuples when `pred` is rigid).
    pub fn tuples_at(&self, dataset: &Dataset, pred: &Symbol, tau: Option<i64>) -> Result<BTreeSet<Tuple>, EngineError> {
        let focus = TimeWindow::point(tau.unwrap_or(0));
        Ok(self.saturate(dataset, focus)?.tuples_at(pred, tau))
    }
}

fn shifted_slices(model: &Model, lo: i64, hi: i64, by: i64) -> BTreeSet<Fact> {
    model.facts_in(lo, hi).into_iter().filter(|f| f.time.is_some()).map(|f| f.shifted(-by)).collect()
}

fn query_time(query: &Query, tau: i64) -> Option<i64> {
    query.is_temporal().then_some(tau)
}

/// Plain fixpoint with an optional window on derived time points.
pub fn fixpoint(program: &Program, dataset: &Dataset, window: Option<TimeWindow>, strategy: Strategy) -> Result<Model, EngineError> {
    let config = EngineConfig { strategy, ..EngineConfig::default() };
    let ev = Evaluator::with_config(program, config)?;
    Ok(match window {
        Some(w) => ev.saturate_window(dataset, w),
        None => ev.saturate_unbounded(dataset),
    })
}

/// `Q(D, τ)`: tuples `ā` with `Π_Q ∪ D ⊨ P_Q(ā, τ)`.
pub fn evaluate_at(query: &Query, dataset: &Dataset, tau: i64) -> Result<BTreeSet<Tuple>, EngineError> {
    Evaluator::new(&query.program)?.tuples_at(dataset, &query.output, query_time(query, tau))
}

/// All answers of a query. For recursive programs only answers between the
/// smallest and largest time point of the data and the program are reported.
pub fn evaluate(query: &Query, dataset: &Dataset) -> Result<AnswerSet, EngineError> {
    let ev = Evaluator::new(&query.program)?;
    let times: BTreeSet<i64> = dataset.times().into_iter().chain(query.program.time_points()).collect();
    let focus = TimeWindow::new(times.first().copied().unwrap_or(0), times.last().copied().unwrap_or(0));
    let model = ev.saturate(dataset, focus)?;
    let facts = model
        .facts_of(&query.output)
        .into_iter()
        .filter(|f| ev.nonrecursive || f.time.is_none_or(|t| focus.contains(t)))
        .collect();
    Ok(AnswerSet { pred: query.output.clone(), facts })
}

/// `Π ∪ D ⊨ fact`.
pub fn entails_with(program: &Program, dataset: &Dataset, fact: &Fact) -> Result<bool, EngineError> {
    let ev = Evaluator::new(program)?;
    let model = ev.saturate(dataset, TimeWindow::point(fact.time.unwrap_or(0)))?;
    Ok(model.contains(fact))
}

/// `Π ⊨ fact`.
pub fn entails(program: &Program, fact: &Fact) -> Result<bool, EngineError> {
    entails_with(program, &Dataset::new(), fact)
}

/// A derivation tree of `fact` from `program ∪ dataset`, if one exists.
pub fn derivation(program: &Program, dataset: &Dataset, fact: &Fact) -> Result<Option<DerivationTree>, EngineError> {
    let ev = Evaluator::new(program)?;
    let model = ev.saturate(dataset, TimeWindow::point(fact.time.unwrap_or(0)))?;
    Ok(model.locate(fact).map(|(r, i)| derivation::derive(&model, r, i)))
}

/// Window of time points outside of which no derived fact matters for the
/// answers at `tau` of a nonrecursive connected query.
pub fn relevant_window(query: &Query, _dataset: &Dataset, tau: i64) -> Result<TimeWindow, EngineError> {
    let analysis = analyze(&query.program);
    if !analysis.is_nonrecursive {
        return Err(EngineError::Unsupported(format!("{} is recursive", query.output)));
    }
    if !analysis.is_connected {
        return Err(EngineError::Unsupported(format!("{} is not connected", query.output)));
    }
    let points = query.program.time_points();
    let lo = points.first().copied().unwrap_or(tau).min(tau);
    let hi = points.last().copied().unwrap_or(tau).max(tau);
    let a = analysis.max_rule_radius as i64;
    let rank = analysis.program_rank.unwrap_or(0) as i64;
    Ok(TimeWindow::new(lo - a * rank - 1, hi + analysis.program_radius as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textio::parse_program;

    fn shdn() -> Query {
        Query::new(
            "Shdn",
            parse_program(
                "@var x.\nTemp(x, high, t) -> Flag(x, t).\nFlag(x, t) & Flag(x, t+1) -> Cool(x, t+1).\nCool(x, t) & Flag(x, t+1) -> Shdn(x, t+1).\n",
            )
            .unwrap(),
        )
    }

    fn three_high() -> Dataset {
        (0..3).map(|t| Fact::temporal("Temp", &["a", "high"], t)).collect()
    }

    #[test]
    fn shdn_at_two() {
        let ans = evaluate_at(&shdn(), &three_high(), 2).unwrap();
        assert_eq!(ans, BTreeSet::from([vec![Symbol::new("a")]]));
        assert!(evaluate_at(&shdn(), &three_high(), 1).unwrap().is_empty());
    }

    #[test]
    fn cool_entailed() {
        let mut p = shdn().program;
        for f in three_high() {
            p.push(f.to_rule());
        }
        assert!(entails(&p, &Fact::temporal("Cool", &["a"], 2)).unwrap());
        assert!(!entails(&Program::empty(), &Fact::temporal("Cool", &["a"], 2)).unwrap());
    }

    #[test]
    fn relevant_windows() {
        assert_eq!(relevant_window(&shdn(), &three_high(), 2).unwrap(), TimeWindow::new(-2, 5));
        assert_eq!(relevant_window(&shdn(), &Dataset::new(), 0).unwrap(), TimeWindow::new(-4, 3));
    }

    #[test]
    fn derivation_of_shdn() {
        let tree = derivation(&shdn().program, &three_high(), &Fact::temporal("Shdn", &["a"], 2)).unwrap().unwrap();
        assert!(check_derivation(&shdn().program, &three_high(), &tree));
        assert_eq!(tree.depth(), 4);
        assert!(tree.leaves().iter().all(|f| f.pred.as_str() == "Temp"));
        assert!(derivation(&shdn().program, &three_high(), &Fact::temporal("Shdn", &["a"], 1)).unwrap().is_none());
        let leaf = derivation(&shdn().program, &three_high(), &Fact::temporal("Temp", &["a", "high"], 0)).unwrap().unwrap();
        assert!(leaf.children.is_empty());
    }

    #[test]
    fn recursive_evaluation_stabilises() {
        let p = parse_program("@var x.\nAtRisk(x, t) -> AtRisk(x, t+1).\n").unwrap();
        let q = Query::new("AtRisk", p);
        let d: Dataset = [Fact::temporal("AtRisk", &["b"], 3)].into_iter().collect();
        assert!(evaluate_at(&q, &d, 2).unwrap().is_empty());
        assert_eq!(evaluate_at(&q, &d, 40).unwrap().len(), 1);
    }
}
