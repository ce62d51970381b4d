//! Differential suites: each decision procedure against its brute-force
//! oracle on random instances. Instances whose enumeration exceeds the cap
//! are drawn again, so every suite compares the requested number.

use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tdl_core::bruteforce::leaf_time_spans;
use tdl_core::containment::{containment_oracle, decide_containment};
use tdl_core::dtp::{decide_dtp_general, decide_dtp_nonrecursive, dtp_oracle_with_cap, DtpInstance};
use tdl_core::forget::{decide_forget, default_oracle_domain, forget_oracle_with_cap, ForgetInstance};
use tdl_core::model::analyze;
use tdl_core::offline::{decide_delay, decide_window, delay_oracle, window_oracle, OracleBounds};
use tdl_core::{DecisionError, Program, Query, Rule, Term};

use super::{history_until, random_dataset, random_query, rng, GenConfig};

/// Largest number of candidate datasets an oracle may try per instance.
pub const ORACLE_CAP: usize = 200_000;
const MAX_DRAWS: usize = 2_000;

#[derive(Debug, Default)]
pub struct SuiteReport {
    pub name: &'static str,
    pub compared: usize,
    pub skipped: usize,
    /// Instances where the procedure said true.
    pub positive: usize,
    pub disagreements: Vec<String>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn passed(&self, wanted: usize) -> bool {
        self.compared >= wanted && self.disagreements.is_empty()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} compared ({} true), {} skipped, {} disagreements, {:.1?}",
            self.name,
            self.compared,
            self.positive,
            self.skipped,
            self.disagreements.len(),
            self.elapsed
        )
    }
}

enum Outcome {
    Agree(bool),
    Disagree(String),
    Skip,
}

fn run_suite(name: &'static str, wanted: usize, seed: u64, mut case: impl FnMut(&mut ChaCha8Rng) -> Outcome) -> SuiteReport {
    let start = Instant::now();
    let mut r = rng(seed);
    let mut report = SuiteReport { name, ..SuiteReport::default() };
    for _ in 0..MAX_DRAWS {
        if report.compared >= wanted {
            break;
        }
        match case(&mut r) {
            Outcome::Agree(v) => {
                report.compared += 1;
                report.positive += usize::from(v);
            }
            Outcome::Disagree(msg) => {
                report.compared += 1;
                report.disagreements.push(msg);
            }
            Outcome::Skip => report.skipped += 1,
        }
    }
    report.elapsed = start.elapsed();
    report
}

fn compare(decided: bool, oracle: bool, describe: impl FnOnce() -> String) -> Outcome {
    if decided == oracle {
        Outcome::Agree(decided)
    } else {
        Outcome::Disagree(format!("procedure {decided}, oracle {oracle}: {}", describe()))
    }
}

fn describe(query: &Query) -> String {
    tdl_core::textio::render_program(&query.program, Some(&query.output))
}

/// Latest time a derivation of an output at `t_out` can reach.
fn reach(query: &Query, t_out: i64) -> i64 {
    leaf_time_spans(query).unwrap_or_default().values().map(|&(_, hi)| t_out + hi).max().unwrap_or(t_out)
}

pub fn dtp_suite(wanted: usize, seed: u64) -> SuiteReport {
    run_suite("dtp", wanted, seed, |r| {
        let query = random_query(r, &GenConfig::small());
        let t_in = r.gen_range(0..=5);
        let t_out = r.gen_range(0..=t_in);
        let history = random_dataset(r, &query, 0..=t_in, 0.3);
        let instance = DtpInstance::new(query.clone(), history.clone(), t_in, t_out).unwrap();
        let domain = default_oracle_domain(&query, &history);
        let bound = (reach(&query, t_out) - t_in).max(0);
        let oracle = match dtp_oracle_with_cap(&instance, bound, &domain, None, ORACLE_CAP) {
            Ok(o) => o.holds,
            Err(DecisionError::EnumerationCap { .. }) => return Outcome::Skip,
            Err(e) => return Outcome::Disagree(format!("oracle failed: {e}")),
        };
        let general = decide_dtp_general(&instance).unwrap();
        let bounded = decide_dtp_nonrecursive(&instance).unwrap();
        let ctx = || format!("t_in={t_in} t_out={t_out} history={history:?}\n{}", describe(&query));
        match compare(general, oracle, ctx) {
            Outcome::Agree(_) => compare(bounded, oracle, || format!("(bounded) t_in={t_in} t_out={t_out}\n{}", describe(&query))),
            other => other,
        }
    })
}

pub fn forget_suite(wanted: usize, seed: u64) -> SuiteReport {
    run_suite("forget", wanted, seed, |r| {
        let query = random_query(r, &GenConfig::small());
        let t_in = r.gen_range(0..=5);
        let t_out = r.gen_range(0..=t_in + 1);
        let t_mem = r.gen_range(0..=t_out);
        let history = random_dataset(r, &query, 0..=t_in, 0.3);
        let instance = ForgetInstance::new(query.clone(), history.clone(), t_in, t_out, t_mem).unwrap();
        let domain = default_oracle_domain(&query, &history);
        let oracle = match forget_oracle_with_cap(&instance, &domain, ORACLE_CAP) {
            Ok(o) => o.holds,
            Err(DecisionError::EnumerationCap { .. }) => return Outcome::Skip,
            Err(e) => return Outcome::Disagree(format!("oracle failed: {e}")),
        };
        let decided = decide_forget(&instance).unwrap();
        compare(decided, oracle, || format!("t_in={t_in} t_out={t_out} t_mem={t_mem} history={history:?}\n{}", describe(&query)))
    })
}

/// A variant of `query` with one change: a rule dropped, a body atom
/// dropped, a time offset shifted or an argument replaced by a constant.
fn mutate(r: &mut ChaCha8Rng, query: &Query) -> Query {
    let mut rules = query.program.rules.clone();
    let i = r.gen_range(0..rules.len());
    let mut body = rules[i].body.clone();
    let j = r.gen_range(0..body.len());
    match r.gen_range(0..4) {
        0 if rules.len() > 1 => {
            rules.remove(i);
        }
        1 if body.len() > 1 => {
            body.remove(j);
            rules[i] = Rule::new(rules[i].head.clone(), body);
        }
        2 if body[j].time.is_some() => {
            body[j].time = body[j].time.as_ref().map(|t| t.shifted(if r.gen_bool(0.5) { 1 } else { -1 }));
            rules[i] = Rule::new(rules[i].head.clone(), body);
        }
        _ if !body[j].args.is_empty() => {
            let k = r.gen_range(0..body[j].args.len());
            body[j].args[k] = Term::obj("c");
            rules[i] = Rule::new(rules[i].head.clone(), body);
        }
        _ => {}
    }
    Query { output: query.output.clone(), program: Program::with_sigs(rules, query.program.sigs.values().cloned()) }
}

fn usable_for_containment(q: &Query) -> bool {
    let a = analyze(&q.program);
    q.validate().is_ok() && a.is_nonrecursive && a.is_connected && !a.has_time_points && q.program.rules_for(&q.output).next().is_some()
}

pub fn containment_suite(wanted: usize, seed: u64) -> SuiteReport {
    run_suite("containment", wanted, seed, |r| {
        let base = random_query(r, &GenConfig::small());
        let other = if r.gen_bool(0.25) { random_query(r, &GenConfig::small()) } else { mutate(r, &base) };
        let (q1, q2) = if r.gen_bool(0.5) { (base, other) } else { (other, base) };
        if !usable_for_containment(&q1) || !usable_for_containment(&q2) || q1.output_object_arity() != q2.output_object_arity() || q1.output != q2.output {
            return Outcome::Skip;
        }
        let decided = match decide_containment(&q1, &q2) {
            Ok(v) => v,
            Err(DecisionError::UnfoldingCap { .. }) => return Outcome::Skip,
            Err(e) => return Outcome::Disagree(format!("procedure failed: {e}")),
        };
        let oracle = containment_oracle(&q1, &q2, 100, r.gen()).unwrap().contained;
        compare(decided, oracle, || format!("\n{}\n---\n{}", describe(&q1), describe(&q2)))
    })
}

fn bounds() -> OracleBounds {
    OracleBounds { cap: ORACLE_CAP, ..OracleBounds::default() }
}

pub fn delay_suite(wanted: usize, seed: u64) -> SuiteReport {
    run_suite("delay", wanted, seed, |r| {
        let query = random_query(r, &GenConfig::small());
        let d = r.gen_range(0..=3);
        let oracle = match delay_oracle(&query, d, &bounds()) {
            Ok(o) => o.holds,
            Err(DecisionError::EnumerationCap { .. }) => return Outcome::Skip,
            Err(e) => return Outcome::Disagree(format!("oracle failed: {e}")),
        };
        compare(decide_delay(&query, d).unwrap(), oracle, || format!("d={d}\n{}", describe(&query)))
    })
}

pub fn window_suite(wanted: usize, seed: u64) -> SuiteReport {
    run_suite("window", wanted, seed, |r| {
        let query = random_query(r, &GenConfig::small());
        let rad = analyze(&query.program).program_radius;
        let d = r.gen_range(0..=2);
        // concentrate on windows below the radius bound, where answers vary
        let s = r.gen_range(0..=(d + rad).min(d + 4));
        let oracle = match window_oracle(&query, d, s, &bounds()) {
            Ok(o) => o.holds,
            Err(DecisionError::EnumerationCap { .. }) => return Outcome::Skip,
            Err(e) => return Outcome::Disagree(format!("oracle failed: {e}")),
        };
        compare(decide_window(&query, d, s).unwrap(), oracle, || format!("d={d} s={s}\n{}", describe(&query)))
    })
}

/// The history part of a random dataset, for callers that need one.
pub fn random_history(r: &mut ChaCha8Rng, query: &Query, t_in: i64) -> tdl_core::Dataset {
    history_until(&random_dataset(r, query, 0..=t_in, 0.3), t_in)
}
