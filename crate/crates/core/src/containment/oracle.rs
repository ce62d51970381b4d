use std::collections::BTreeSet;
use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::unfold::{FlatCq, UObj, UTime, Unfolder};
use super::{for_each_cq, Anchor, DEFAULT_UNFOLDING_CAP};
use crate::engine::Evaluator;
use crate::error::DecisionError;
use crate::model::{analyze, Dataset, Fact, PredicateSig, Query, Symbol, Tuple};

/// Outcome of [`containment_oracle`]. `contained` only means that no
/// counterexample was found; a witness is a dataset and an answer of `Q1`
/// that `Q2` misses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainmentVerdict {
    pub contained: bool,
    pub witness: Option<(Dataset, Fact)>,
}

fn answers(ev: &Evaluator, dataset: &Dataset, output: &Symbol) -> BTreeSet<(Option<i64>, Tuple)> {
    ev.saturate_unbounded(dataset).facts_of(output).into_iter().map(|f| (f.time, f.args)).collect()
}

/// Frozen canonical database of a conjunctive query whose times are ground.
fn canonical(cq: &FlatCq) -> Option<Dataset> {
    let obj = |t: &UObj| match t {
        UObj::Const(c) => c.clone(),
        UObj::Var(v) => Symbol::from(format!("__frozen{v}")),
    };
    let time = |t: Option<UTime>| match t {
        None => Some(None),
        Some(UTime::Point(p)) => Some(Some(p)),
        Some(UTime::Var(..)) => None,
    };
    let mut data = Dataset::new();
    for a in &cq.body {
        data.insert(Fact { pred: a.pred.clone(), args: a.args.iter().map(obj).collect(), time: time(a.time)? });
    }
    Some(data)
}

fn compare(
    e1: &Evaluator,
    e2: &Evaluator,
    q1: &Query,
    q2: &Query,
    data: &Dataset,
) -> Option<Fact> {
    let a2 = answers(e2, data, &q2.output);
    answers(e1, data, &q1.output)
        .into_iter()
        .find(|a| !a2.contains(a))
        .map(|(time, args)| Fact { pred: q1.output.clone(), args, time })
}

/// Searches for a dataset on which `Q1` has an answer that `Q2` lacks.
///
/// Every canonical database of the unfolding of `Q1` at the anchors in
/// `[0, 2m]` (`m` the larger program radius) is tried, followed by `trials`
/// random datasets over the EDB predicates of both queries, their constants
/// and two fresh objects. Both queries must be nonrecursive.
pub fn containment_oracle(q1: &Query, q2: &Query, trials: usize, seed: u64) -> Result<ContainmentVerdict, DecisionError> {
    for q in [q1, q2] {
        if !analyze(&q.program).is_nonrecursive {
            return Err(DecisionError::Recursive { output: q.output.clone() });
        }
    }
    let e1 = Evaluator::new(&q1.program)?;
    let e2 = Evaluator::new(&q2.program)?;
    let m = analyze(&q1.program).program_radius.max(analyze(&q2.program).program_radius) as i64;
    let points: BTreeSet<i64> = q1.program.time_points().union(&q2.program.time_points()).copied().collect();
    let lo = points.first().map_or(0, |&p| p.min(0) - m);
    let hi = points.last().map_or(2 * m, |&p| p.max(2 * m) + m);

    let mut witness = None;
    let anchors: Vec<Anchor> = if q1.is_temporal() {
        (lo..=hi).map(|t| Anchor::at(q1.output_object_arity(), Some(t))).collect()
    } else {
        vec![Anchor::at(q1.output_object_arity(), None)]
    };
    let u1 = Unfolder::new(&q1.program);
    for anchor in &anchors {
        for_each_cq(&u1, &q1.output, anchor, DEFAULT_UNFOLDING_CAP, &mut |cq| {
            let Some(data) = canonical(cq) else { return ControlFlow::Continue(()) };
            match compare(&e1, &e2, q1, q2, &data) {
                Some(f) => {
                    witness = Some((data, f));
                    ControlFlow::Break(())
                }
                None => ControlFlow::Continue(()),
            }
        })?;
        if witness.is_some() {
            return Ok(ContainmentVerdict { contained: false, witness });
        }
    }

    let edb: Vec<&PredicateSig> = q1
        .program
        .sigs
        .values()
        .chain(q2.program.sigs.values())
        .filter(|s| s.is_edb() && !q1.program.sigs.get(&s.name).is_some_and(|t| !t.is_edb()))
        .filter(|s| !q2.program.sigs.get(&s.name).is_some_and(|t| !t.is_edb()))
        .collect();
    let mut objects: Vec<Symbol> = q1.program.objects().union(&q2.program.objects()).cloned().collect();
    objects.push(Symbol::new("__fresh0"));
    objects.push(Symbol::new("__fresh1"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        if edb.is_empty() {
            break;
        }
        let n = rng.gen_range(1..=12);
        let mut data = Dataset::new();
        for _ in 0..n {
            let sig = edb[rng.gen_range(0..edb.len())];
            let args: Vec<&str> = (0..sig.object_arity()).map(|_| objects[rng.gen_range(0..objects.len())].as_str()).collect();
            data.insert(if sig.is_temporal() {
                Fact::temporal(sig.name.as_str(), &args, rng.gen_range(lo..=hi))
            } else {
                Fact::rigid(sig.name.as_str(), &args)
            });
        }
        if let Some(f) = compare(&e1, &e2, q1, q2, &data) {
            return Ok(ContainmentVerdict { contained: false, witness: Some((data, f)) });
        }
    }
    Ok(ContainmentVerdict { contained: true, witness: None })
}
