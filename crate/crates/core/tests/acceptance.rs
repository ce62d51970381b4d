//! Acceptance run: one PASS/FAIL line per criterion, with timings.

mod common;

use std::time::{Duration, Instant};

use common::engine_checks::{brute_force_agreement, derivation_trees, semi_naive_agreement, shift_invariance};
use common::replay::replay_suite;
use common::suites::{containment_suite, delay_suite, dtp_suite, forget_suite, window_suite};
use common::{atrisk, malfunc, shdn};
use tdl_core::dtp::{decide_dtp_general, decide_dtp_nonrecursive, DtpInstance};
use tdl_core::forget::{decide_forget, ForgetInstance};
use tdl_core::model::analyze;
use tdl_core::offline::{decide_delay, decide_window, delay_oracle, minimal_delay, minimal_window, window_oracle, OracleBounds};
use tdl_core::{Dataset, DecisionError, Fact};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: DecisionError) -> String {
    e.to_string()
}

fn temps(readings: &[(&str, i64)]) -> Dataset {
    readings.iter().map(|&(v, t)| Fact::temporal("Temp", &["a", v], t)).collect()
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let mut outcome = f();
    let elapsed = start.elapsed();
    if outcome.is_ok() && elapsed > limit {
        outcome = Err(format!("took {elapsed:.1?}, limit {limit:?}"));
    }
    (outcome, elapsed)
}

fn definitive_time_points() -> Outcome {
    for (reading, expected) in [("high", false), ("na", true)] {
        let instance = DtpInstance::new(malfunc(), temps(&[(reading, 0)]), 0, 0).map_err(err)?;
        for (name, decide) in [("general", decide_dtp_general as fn(&DtpInstance) -> _), ("nonrecursive", decide_dtp_nonrecursive)] {
            let start = Instant::now();
            let v = decide(&instance).map_err(err)?;
            ensure(v == expected, format!("{name} on Temp(a,{reading},0): {v}, expected {expected}"))?;
            ensure(start.elapsed() < Duration::from_secs(1), format!("{name} on Temp(a,{reading},0) took {:?}", start.elapsed()))?;
        }
    }
    Ok("Malfunc at 0: false after high, true after na".into())
}

fn forgetting() -> Outcome {
    for (data, expected) in [(temps(&[("high", 0), ("low", 1)]), true), (temps(&[("high", 0), ("high", 1)]), false)] {
        let start = Instant::now();
        let v = decide_forget(&ForgetInstance::new(shdn(), data.clone(), 1, 1, 1).map_err(err)?).map_err(err)?;
        ensure(v == expected, format!("{data:?}: {v}, expected {expected}"))?;
        ensure(start.elapsed() < Duration::from_secs(1), format!("{data:?} took {:?}", start.elapsed()))?;
    }
    Ok("Shdn at (1,1,1): true after high,low and false after high,high".into())
}

fn delays() -> Outcome {
    ensure(decide_delay(&shdn(), 0).map_err(err)?, "Shdn delay 0 rejected")?;
    ensure(decide_delay(&malfunc(), 2).map_err(err)?, "Malfunc delay 2 rejected")?;
    let min = minimal_delay(&malfunc()).map_err(err)?;
    ensure(min == 2, format!("minimal Malfunc delay {min}"))?;
    for d in [0, 1] {
        let o = delay_oracle(&malfunc(), d, &OracleBounds::default()).map_err(err)?;
        ensure(!o.holds && o.counterexample.is_some(), format!("oracle accepts Malfunc delay {d}"))?;
    }
    Ok("Malfunc minimal delay 2, oracle refutes 0 and 1".into())
}

fn windows() -> Outcome {
    ensure(decide_window(&shdn(), 0, 2).map_err(err)?, "Shdn window (0,2) rejected")?;
    let min = minimal_window(&shdn(), 0).map_err(err)?;
    ensure(min == 2, format!("minimal Shdn window {min}"))?;
    for s in [0, 1] {
        let o = window_oracle(&shdn(), 0, s, &OracleBounds::default()).map_err(err)?;
        ensure(!o.holds && o.counterexample.is_some(), format!("oracle accepts Shdn window {s}"))?;
    }
    match minimal_window(&atrisk(), 0) {
        Err(e @ DecisionError::NoCertifiedWindow { .. }) => ensure(e.to_string().contains("no valid window size"), format!("unexpected message: {e}"))?,
        other => return Err(format!("AtRisk window: {other:?}")),
    }
    Ok("Shdn minimal window 2, oracle refutes 0 and 1, AtRisk has no valid window size".into())
}

fn differential() -> Outcome {
    let reports =
        [dtp_suite(50, 11), forget_suite(50, 12), containment_suite(50, 13), delay_suite(50, 14), window_suite(50, 15)];
    let summary = reports.iter().map(|r| format!("{}={}/{}", r.name, r.compared - r.disagreements.len(), r.compared)).collect::<Vec<_>>().join(" ");
    for r in &reports {
        ensure(r.passed(50), format!("{r}: {}", r.disagreements.first().map(String::as_str).unwrap_or("too few instances")))?;
    }
    Ok(summary)
}

fn engine() -> Outcome {
    let grounding = brute_force_agreement(100)?;
    let semi = semi_naive_agreement(100)?;
    let trees = derivation_trees(30)?;
    let shifts = shift_invariance(30)?;
    Ok(format!("{grounding} grounding, {semi} semi-naive, {trees} trees, {shifts} shifts"))
}

fn replay() -> Outcome {
    let report = replay_suite(20, 81);
    ensure(report.passed(20), format!("{report}: {}", report.failures.first().map(String::as_str).unwrap_or("")))?;
    Ok(report.to_string())
}

fn derived_bounds() -> Outcome {
    for (name, q) in [("Shdn", shdn()), ("Malfunc", malfunc())] {
        let rad = analyze(&q.program).program_radius;
        ensure(decide_delay(&q, rad).map_err(err)?, format!("{name} delay {rad} rejected"))?;
        for d in 0..=rad {
            ensure(decide_window(&q, d, d + rad).map_err(err)?, format!("{name} window ({d},{}) rejected", d + rad))?;
        }
    }
    ensure(matches!(decide_window(&atrisk(), 0, 0), Err(DecisionError::NoCertifiedWindow { .. })), "AtRisk window certified")?;
    Ok("delay rad and window (d, d+rad) hold for Shdn and Malfunc".into())
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let criteria: [Criterion; 8] = [
        ("definitive time points", secs(2), definitive_time_points),
        ("forgetting", secs(2), forgetting),
        ("delay", secs(30), delays),
        ("window", secs(30), windows),
        ("differential suites", secs(600), differential),
        ("engine", secs(600), engine),
        ("replay", secs(600), replay),
        ("derived bounds", secs(600), derived_bounds),
    ];
    let mut failed = Vec::new();
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let (outcome, elapsed) = timed(limit, check);
        let n = i + 1;
        match outcome {
            Ok(detail) => println!("PASS {n} {name} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                println!("FAIL {n} {name} ({elapsed:.2?}): {why}");
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
