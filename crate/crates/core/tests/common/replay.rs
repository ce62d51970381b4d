//! Replays random streams through both runtimes and checks every emission
//! against answers computed over the whole stream.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tdl_core::model::analyze;
use tdl_core::offline::{minimal_delay, minimal_window};
use tdl_core::stream::{reference_run, run_offline, run_online, Emission, OnlineOptions};
use tdl_core::textio::StreamEvent;
use tdl_core::{Query, Tuple};

use super::{atrisk, malfunc, random_dataset, random_query, rng, shdn, to_events, with_rigid_facts, GenConfig};

const MAX_TICKS: i64 = 30;
const EXTENSIONS: usize = 5;

#[derive(Debug, Default)]
pub struct ReplayReport {
    pub streams: usize,
    pub emissions: usize,
    pub offline_runs: usize,
    pub failures: Vec<String>,
    pub elapsed: Duration,
}

impl ReplayReport {
    pub fn passed(&self, wanted: usize) -> bool {
        self.streams >= wanted && self.failures.is_empty()
    }
}

impl fmt::Display for ReplayReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "replay: {} streams, {} emissions, {} offline runs, {} failures, {:.1?}",
            self.streams,
            self.emissions,
            self.offline_runs,
            self.failures.len(),
            self.elapsed
        )
    }
}

type Answers = BTreeMap<i64, BTreeSet<Tuple>>;

fn collect(run: impl FnOnce(&mut dyn FnMut(Emission)) -> Result<tdl_core::stream::SessionSummary, tdl_core::StreamError>) -> Result<(Vec<Emission>, tdl_core::stream::SessionSummary), String> {
    let mut out = Vec::new();
    let summary = run(&mut |e| out.push(e)).map_err(|e| e.to_string())?;
    Ok((out, summary))
}

fn online(query: &Query, events: &[StreamEvent], forget: bool) -> Result<Vec<Emission>, String> {
    let options = OnlineOptions { forget };
    collect(|emit| run_online(query.clone(), &options, events.iter().cloned().map(Ok), emit)).map(|(e, _)| e)
}

/// Emissions that disagree with `reference`, described.
fn mismatches(emissions: &[Emission], reference: &Answers) -> Vec<String> {
    emissions
        .iter()
        .filter(|e| reference.get(&e.t_out) != Some(&e.tuples))
        .map(|e| format!("t_out={} emitted {:?}, expected {:?}", e.t_out, e.tuples, reference.get(&e.t_out)))
        .collect()
}

fn pick_query(r: &mut ChaCha8Rng, i: usize) -> Query {
    match i {
        0 => shdn(),
        1 => malfunc(),
        2 => atrisk(),
        _ => {
            let cfg = GenConfig { recursive: r.gen_bool(0.3), ..GenConfig::small() };
            random_query(r, &cfg)
        }
    }
}

fn check_stream(r: &mut ChaCha8Rng, base: &Query, report: &mut ReplayReport) -> Result<(), String> {
    let last = r.gen_range(5..MAX_TICKS);
    let data = random_dataset(r, base, 0..=last, 0.3);
    let query = with_rigid_facts(base, &data);
    let events = to_events(&data, last);
    let reference = reference_run(&query, &events).map_err(|e| e.to_string())?;

    let emitted = online(&query, &events, true)?;
    report.emissions += emitted.len();
    if let Some(m) = mismatches(&emitted, &reference).into_iter().next() {
        return Err(format!("online: {m}"));
    }
    let ticks: Vec<i64> = emitted.iter().map(|e| e.t_out).collect();
    if ticks != (0..ticks.len() as i64).collect::<Vec<_>>() {
        return Err(format!("online emitted out of order: {ticks:?}"));
    }

    // later data never revises an emitted answer
    for _ in 0..EXTENSIONS {
        let extra = r.gen_range(1..=5);
        let more = random_dataset(r, base, last + 1..=last + extra, 0.3);
        let mut longer = events.clone();
        longer.extend(to_events(&more, last + extra).into_iter().skip(last as usize + 1));
        let extended = reference_run(&query, &longer).map_err(|e| e.to_string())?;
        if let Some(m) = mismatches(&emitted, &extended).into_iter().next() {
            return Err(format!("answer revised by a later tick: {m}"));
        }
    }

    if online(&query, &events, false)? != emitted {
        return Err("forgetting changed the output".into());
    }
    if online(&query, &events, true)? != emitted {
        return Err("output differs between identical runs".into());
    }

    if analyze(&query.program).is_nonrecursive {
        let d = minimal_delay(&query).map_err(|e| e.to_string())?;
        let s = minimal_window(&query, d).map_err(|e| e.to_string())?;
        let (out, summary) = collect(|emit| run_offline(query.clone(), d, s, false, events.iter().cloned().map(Ok), emit))?;
        report.offline_runs += 1;
        if let Some(m) = mismatches(&out, &reference).into_iter().next() {
            return Err(format!("offline d={d} s={s}: {m}"));
        }
        let expected = (last + 1 - d as i64).max(0) as usize;
        if out.len() != expected {
            return Err(format!("offline d={d} s={s} emitted {} times, expected {expected}", out.len()));
        }
        if summary.peak_slices > s as usize + 1 {
            return Err(format!("offline d={d} s={s} kept {} slices", summary.peak_slices));
        }
    }
    Ok(())
}

/// Replays `streams` random streams; the first three use the example queries.
pub fn replay_suite(streams: usize, seed: u64) -> ReplayReport {
    let start = Instant::now();
    let mut r = rng(seed);
    let mut report = ReplayReport::default();
    for i in 0..streams {
        let query = pick_query(&mut r, i);
        if let Err(e) = check_stream(&mut r, &query, &mut report) {
            report.failures.push(format!("{e}\n{}", tdl_core::textio::render_program(&query.program, Some(&query.output))));
        }
        report.streams += 1;
    }
    report.elapsed = start.elapsed();
    report
}
