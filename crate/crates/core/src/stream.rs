//! Stream-reasoning runtimes.
//!
//! The online runtime emits the answers at a time point as soon as they are
//! definitive and drops old data once it provably no longer matters. The
//! offline runtime works with a fixed delay `d` and window `s`: at tick `τ` it
//! emits the answers at `τ - d` and keeps only the last `s` time points.

use std::collections::{BTreeMap, BTreeSet};

use crate::containment::require_plain;
use crate::dtp::{decide_dtp_general, decide_dtp_nonrecursive, DtpInstance};
use crate::engine::{Evaluator, FactStore};
use crate::error::{DecisionError, ParseError, StreamError};
use crate::forget::{decide_forget, ForgetInstance};
use crate::model::{Dataset, Query, Tuple};
use crate::offline::{decide_delay, decide_window};
use crate::textio::StreamEvent;

/// Answers at one time point, emitted once and in increasing `t_out` order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Emission {
    pub t_out: i64,
    pub tuples: BTreeSet<Tuple>,
}

/// Final counters of a session.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SessionSummary {
    /// Next tick to be read.
    pub t_in: i64,
    /// Next time point to be emitted.
    pub t_out: i64,
    /// Oldest time point whose data may still be kept.
    pub t_mem: i64,
    pub ticks: usize,
    pub emitted: usize,
    /// Largest number of facts held at once.
    pub peak_history: usize,
    /// Largest number of distinct time points held at once.
    pub peak_slices: usize,
}

fn answers(ev: &Evaluator, query: &Query, history: &Dataset, t_out: i64) -> Result<BTreeSet<Tuple>, StreamError> {
    let time = query.is_temporal().then_some(t_out);
    ev.tuples_at(history, &query.output, time).map_err(|e| StreamError::Decision(DecisionError::Engine(e)))
}

/// Feeds events tick by tick, filling gaps with empty ticks from 0.
struct Ticker {
    next: i64,
    previous: Option<i64>,
}

impl Ticker {
    fn new() -> Self {
        Ticker { next: 0, previous: None }
    }

    fn feed(&mut self, event: StreamEvent, step: &mut dyn FnMut(i64, Dataset) -> Result<(), StreamError>) -> Result<(), StreamError> {
        if event.tick < 0 {
            return Err(StreamError::NegativeTick(event.tick));
        }
        if let Some(previous) = self.previous {
            if event.tick <= previous {
                return Err(StreamError::OutOfOrder { previous, found: event.tick });
            }
        }
        self.previous = Some(event.tick);
        while self.next < event.tick {
            step(self.next, Dataset::new())?;
            self.next += 1;
        }
        step(event.tick, event.facts)?;
        self.next += 1;
        Ok(())
    }
}

/// Options of the online runtime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OnlineOptions {
    /// Drop data once Forget holds. Ignored for queries outside the class
    /// where Forget is decidable.
    pub forget: bool,
}

impl Default for OnlineOptions {
    fn default() -> Self {
        OnlineOptions { forget: true }
    }
}

/// State of the online runtime.
pub struct OnlineSession {
    query: Query,
    ev: Evaluator,
    history: FactStore,
    t_in: i64,
    t_out: i64,
    t_mem: i64,
    bounded_dtp: bool,
    forgetting: bool,
    summary: SessionSummary,
}

impl OnlineSession {
    pub fn new(query: Query, options: &OnlineOptions) -> Result<Self, StreamError> {
        let report = query.validate();
        if !report.is_ok() {
            return Err(DecisionError::Invalid(report).into());
        }
        let plain = require_plain(&query).is_ok();
        let ev = Evaluator::new(&query.program).map_err(DecisionError::Engine)?;
        Ok(OnlineSession {
            query,
            ev,
            history: FactStore::new(),
            t_in: 0,
            t_out: 0,
            t_mem: 0,
            bounded_dtp: plain,
            forgetting: options.forget && plain,
            summary: SessionSummary::default(),
        })
    }

    /// Whether this session drops data.
    pub fn forgetting(&self) -> bool {
        self.forgetting
    }

    pub fn history(&self) -> &FactStore {
        &self.history
    }

    fn definitive(&self) -> Result<bool, DecisionError> {
        let instance = DtpInstance::new(self.query.clone(), self.history.to_dataset(), self.t_in, self.t_out)?;
        if self.bounded_dtp {
            decide_dtp_nonrecursive(&instance)
        } else {
            decide_dtp_general(&instance)
        }
    }

    fn forgettable(&self) -> Result<bool, DecisionError> {
        let instance = ForgetInstance::new(self.query.clone(), self.history.to_dataset(), self.t_in, self.t_out, self.t_mem)?;
        decide_forget(&instance)
    }

    /// Processes the facts of the current tick.
    pub fn tick(&mut self, facts: Dataset, emit: &mut dyn FnMut(Emission)) -> Result<(), StreamError> {
        self.history.extend(facts.iter().cloned());
        self.summary.peak_history = self.summary.peak_history.max(self.history.len());
        self.summary.peak_slices = self.summary.peak_slices.max(self.history.slice_count());
        while self.t_out <= self.t_in && self.definitive()? {
            let tuples = answers(&self.ev, &self.query, &self.history.to_dataset(), self.t_out)?;
            emit(Emission { t_out: self.t_out, tuples });
            self.summary.emitted += 1;
            self.t_out += 1;
        }
        if self.forgetting {
            while self.t_mem < self.t_out && self.forgettable()? {
                self.history.drop_slice(self.t_mem);
                self.t_mem += 1;
            }
        }
        self.t_in += 1;
        self.summary.ticks += 1;
        Ok(())
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary { t_in: self.t_in, t_out: self.t_out, t_mem: self.t_mem, ..self.summary.clone() }
    }
}

/// State of the offline runtime.
pub struct OfflineSession {
    query: Query,
    ev: Evaluator,
    d: i64,
    s: i64,
    history: FactStore,
    t_in: i64,
    summary: SessionSummary,
}

impl OfflineSession {
    /// A session that trusts `(d, s)` without checking them.
    pub fn trusted(query: Query, d: u64, s: u64) -> Result<Self, StreamError> {
        let report = query.validate();
        if !report.is_ok() {
            return Err(DecisionError::Invalid(report).into());
        }
        let ev = Evaluator::new(&query.program).map_err(DecisionError::Engine)?;
        Ok(OfflineSession { query, ev, d: d as i64, s: s as i64, history: FactStore::new(), t_in: 0, summary: SessionSummary::default() })
    }

    /// A session whose delay and window are first verified.
    pub fn verified(query: Query, d: u64, s: u64) -> Result<Self, StreamError> {
        if !decide_delay(&query, d)? {
            return Err(StreamError::InvalidParameters(format!("{d} is not a valid delay for {}", query.output)));
        }
        if !decide_window(&query, d, s)? {
            return Err(StreamError::InvalidParameters(format!("{s} is not a valid window for {} with delay {d}", query.output)));
        }
        Self::trusted(query, d, s)
    }

    pub fn history(&self) -> &FactStore {
        &self.history
    }

    pub fn tick(&mut self, facts: Dataset, emit: &mut dyn FnMut(Emission)) -> Result<(), StreamError> {
        self.history.extend(facts.iter().cloned());
        self.summary.peak_history = self.summary.peak_history.max(self.history.len());
        self.summary.peak_slices = self.summary.peak_slices.max(self.history.slice_count());
        let t_out = self.t_in - self.d;
        if t_out >= 0 {
            let tuples = answers(&self.ev, &self.query, &self.history.to_dataset(), t_out)?;
            emit(Emission { t_out, tuples });
            self.summary.emitted += 1;
        }
        let expired: Vec<i64> = self.history.times().take_while(|&t| t <= self.t_in - self.s).collect();
        for t in expired {
            self.history.drop_slice(t);
        }
        self.t_in += 1;
        self.summary.ticks += 1;
        Ok(())
    }

    pub fn summary(&self) -> SessionSummary {
        let t_out = (self.t_in - self.d).max(0);
        SessionSummary { t_in: self.t_in, t_out, t_mem: (self.t_in - self.s).max(0), ..self.summary.clone() }
    }
}

fn drive(
    events: impl IntoIterator<Item = Result<StreamEvent, ParseError>>,
    step: &mut dyn FnMut(i64, Dataset) -> Result<(), StreamError>,
) -> Result<(), StreamError> {
    let mut ticker = Ticker::new();
    for event in events {
        ticker.feed(event?, step)?;
    }
    Ok(())
}

/// Runs the online runtime over `events`.
pub fn run_online(
    query: Query,
    options: &OnlineOptions,
    events: impl IntoIterator<Item = Result<StreamEvent, ParseError>>,
    emit: &mut dyn FnMut(Emission),
) -> Result<SessionSummary, StreamError> {
    let mut session = OnlineSession::new(query, options)?;
    drive(events, &mut |_, facts| session.tick(facts, emit))?;
    Ok(session.summary())
}

/// Runs the offline runtime over `events`, checking `(d, s)` first unless
/// `trust` is set.
pub fn run_offline(
    query: Query,
    d: u64,
    s: u64,
    trust: bool,
    events: impl IntoIterator<Item = Result<StreamEvent, ParseError>>,
    emit: &mut dyn FnMut(Emission),
) -> Result<SessionSummary, StreamError> {
    let mut session = if trust { OfflineSession::trusted(query, d, s)? } else { OfflineSession::verified(query, d, s)? };
    drive(events, &mut |_, facts| session.tick(facts, emit))?;
    Ok(session.summary())
}

/// Answers over the whole stream at every tick from 0 to the last one.
pub fn reference_run(query: &Query, events: &[StreamEvent]) -> Result<BTreeMap<i64, BTreeSet<Tuple>>, StreamError> {
    let Some(last) = events.iter().map(|e| e.tick).max() else {
        return Ok(BTreeMap::new());
    };
    let mut all = Dataset::new();
    for e in events {
        all.extend(e.facts.iter().cloned());
    }
    let ev = Evaluator::new(&query.program).map_err(DecisionError::Engine)?;
    (0..=last).map(|t| Ok((t, answers(&ev, query, &all, t)?))).collect()
}
