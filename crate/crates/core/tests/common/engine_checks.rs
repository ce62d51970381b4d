//! Engine checks against a brute-force grounding evaluator, shared by the
//! engine property tests and the acceptance run. Each check returns the
//! number of cases it compared or a description of the first failure.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use tdl_core::engine::{check_derivation, derivation, evaluate_at, fixpoint, Evaluator, Strategy, TimeWindow};
use tdl_core::model::analyze;
use tdl_core::{Atom, Dataset, Fact, Program, Query, Symbol, Term, TimeTerm};

use super::{random_dataset, random_query, rng, GenConfig};

/// Brute-force fixpoint: every rule instance over `domain` and `times` is
/// tried until nothing new is derived.
fn naive_model(program: &Program, data: &Dataset, domain: &[Symbol], times: &[i64]) -> BTreeSet<Fact> {
    let mut facts: BTreeSet<Fact> = data.iter().cloned().collect();
    let ground = |a: &Atom, obj: &BTreeMap<Symbol, Symbol>, t: i64| Fact {
        pred: a.pred.clone(),
        args: a.args.iter().map(|x| match x {
            Term::Var(v) => obj[v].clone(),
            Term::Obj(o) => o.clone(),
        }).collect(),
        time: a.time.as_ref().map(|tt| match tt {
            TimeTerm::Point(p) => *p,
            TimeTerm::Var { offset, .. } => t + offset,
        }),
    };
    loop {
        let mut new = Vec::new();
        for rule in &program.rules {
            let vars: Vec<Symbol> = rule.atoms().flat_map(|a| a.object_vars()).cloned().collect::<BTreeSet<_>>().into_iter().collect();
            let rule_times: Vec<i64> = if rule.time_vars().is_empty() { vec![0] } else { times.to_vec() };
            let mut idx = vec![0usize; vars.len()];
            loop {
                let obj: BTreeMap<Symbol, Symbol> = vars.iter().cloned().zip(idx.iter().map(|&i| domain[i].clone())).collect();
                for &t in &rule_times {
                    if rule.body.iter().all(|a| facts.contains(&ground(a, &obj, t))) {
                        let head = ground(&rule.head, &obj, t);
                        if head.time.is_none_or(|h| times.contains(&h)) && !facts.contains(&head) {
                            new.push(head);
                        }
                    }
                }
                // next assignment
                let mut k = 0;
                while k < idx.len() {
                    idx[k] += 1;
                    if idx[k] < domain.len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
        }
        if new.is_empty() {
            return facts;
        }
        facts.extend(new);
    }
}

fn show(q: &Query) -> String {
    tdl_core::textio::render_program(&q.program, Some(&q.output))
}

fn answers(q: &Query, d: &Dataset, tau: i64) -> Result<BTreeSet<Vec<Symbol>>, String> {
    evaluate_at(q, d, tau).map_err(|e| e.to_string())
}

pub fn brute_force_agreement(cases: usize) -> Result<usize, String> {
    let mut r = rng(31);
    for _ in 0..cases {
        let q = random_query(&mut r, &GenConfig::default());
        let d = random_dataset(&mut r, &q, 0..=5, 0.3);
        let rad = analyze(&q.program).program_radius as i64;
        let times: Vec<i64> = (-2 * rad - 1..=5 + 2 * rad + 1).collect();
        let domain: Vec<Symbol> = d.objects().union(&q.program.objects()).cloned().collect();
        let model = naive_model(&q.program, &d, &domain, &times);
        for tau in -rad - 1..=5 + rad + 1 {
            let expected: BTreeSet<Vec<Symbol>> =
                model.iter().filter(|f| f.pred == q.output && f.time == Some(tau)).map(|f| f.args.clone()).collect();
            let got = evaluate_at(&q, &d, tau).map_err(|e| e.to_string())?;
            if got != expected {
                return Err(format!("at {tau}: engine {got:?}, grounding {expected:?}\n{}", show(&q)));
            }
        }
    }
    Ok(cases)
}

pub fn semi_naive_agreement(cases: usize) -> Result<usize, String> {
    let mut r = rng(32);
    for i in 0..cases {
        let cfg = GenConfig { recursive: i % 2 == 1, ..GenConfig::default() };
        let q = random_query(&mut r, &cfg);
        let d = random_dataset(&mut r, &q, 0..=5, 0.3);
        let window = cfg.recursive.then(|| TimeWindow::new(-3, 10));
        let a = fixpoint(&q.program, &d, window, Strategy::SemiNaive).map_err(|e| e.to_string())?;
        let b = fixpoint(&q.program, &d, window, Strategy::Naive).map_err(|e| e.to_string())?;
        if a.facts() != b.facts() {
            return Err(format!("semi-naive and naive models differ\n{}", show(&q)));
        }
    }
    Ok(cases)
}

pub fn monotonicity(cases: usize) -> Result<usize, String> {
    let mut r = rng(33);
    for _ in 0..cases {
        let q = random_query(&mut r, &GenConfig::default());
        let small = random_dataset(&mut r, &q, 0..=5, 0.2);
        let big = small.union(&random_dataset(&mut r, &q, 0..=5, 0.2));
        for tau in -2..=7 {
            if !answers(&q, &small, tau)?.is_subset(&answers(&q, &big, tau)?) {
                return Err(format!("answers at {tau} shrank on more data\n{}", show(&q)));
            }
        }
    }
    Ok(cases)
}

pub fn shift_invariance(cases: usize) -> Result<usize, String> {
    let mut r = rng(34);
    for _ in 0..cases {
        let q: Query = random_query(&mut r, &GenConfig { constant_rate: 0.0, ..GenConfig::default() });
        let d = random_dataset(&mut r, &q, 0..=5, 0.3);
        let delta = r.gen_range(-5..=5);
        let shifted: Dataset = d.iter().map(|f| f.shifted(delta)).collect();
        for tau in -2..=7 {
            if answers(&q, &d, tau)? != answers(&q, &shifted, tau + delta)? {
                return Err(format!("shift by {delta} changed answers at {tau}\n{}", show(&q)));
            }
        }
    }
    Ok(cases)
}

pub fn derivation_trees(cases: usize) -> Result<usize, String> {
    let mut r = rng(35);
    let mut checked = 0;
    for i in 0..cases {
        let cfg = GenConfig { recursive: i % 3 == 2, ..GenConfig::default() };
        let q = random_query(&mut r, &cfg);
        let d = random_dataset(&mut r, &q, 0..=5, 0.3);
        let ev = Evaluator::new(&q.program).map_err(|e| e.to_string())?;
        let model = ev.saturate_window(&d, TimeWindow::new(0, 5));
        for fact in model.facts().into_iter().filter(|f| !q.program.is_edb(&f.pred) && f.time.is_none_or(|t| (0..=5).contains(&t))) {
            let Some(tree) = derivation(&q.program, &d, &fact).map_err(|e| e.to_string())? else {
                return Err(format!("entailed fact {fact:?} has no tree\n{}", show(&q)));
            };
            if tree.head() != &fact.to_atom() || !check_derivation(&q.program, &d, &tree) {
                return Err(format!("tree for {fact:?} does not validate\n{}", show(&q)));
            }
            checked += 1;
        }
        // a fact over an unused object is never entailed
        let arity = q.output_object_arity();
        let absent = Fact { pred: q.output.clone(), args: vec![Symbol::new("nowhere"); arity], time: Some(2) };
        if derivation(&q.program, &d, &absent).map_err(|e| e.to_string())?.is_some() {
            return Err(format!("tree for non-entailed {absent:?}\n{}", show(&q)));
        }
    }
    if checked <= 50 {
        return Err(format!("only {checked} trees checked"));
    }
    Ok(checked)
}
