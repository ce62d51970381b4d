mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{random_dataset, random_query, rng, GenConfig};
use proptest::prelude::*;
use tdl_core::engine::evaluate_at;
use tdl_core::model::{analyze, normalize_dataset, normalize_rigid_atoms, segment};
use tdl_core::{Fact, Query, Symbol};

fn longest_path(edges: &BTreeSet<(Symbol, Symbol)>, pred: &Symbol, memo: &mut BTreeMap<Symbol, usize>) -> usize {
    if let Some(&n) = memo.get(pred) {
        return n;
    }
    let n = edges.iter().filter(|(h, _)| h == pred).map(|(_, b)| 1 + longest_path(edges, b, memo)).max().unwrap_or(0);
    memo.insert(pred.clone(), n);
    n
}

#[test]
fn rank_is_the_longest_dependency_path() {
    let mut r = rng(21);
    for _ in 0..20 {
        let q = random_query(&mut r, &GenConfig::default());
        let a = analyze(&q.program);
        let mut memo = BTreeMap::new();
        let mut program_rank = 0;
        for sig in q.program.sigs.values() {
            let expected = longest_path(&a.dependency_edges, &sig.name, &mut memo);
            assert_eq!(a.rank(&sig.name), Some(expected), "{}", sig.name);
            assert_eq!(expected == 0, !q.program.rules.iter().any(|r| r.head.pred == sig.name));
            program_rank = program_rank.max(expected);
        }
        assert_eq!(a.program_rank, Some(program_rank));
    }
}

#[test]
fn normalizing_rigid_atoms_preserves_answers() {
    let mut r = rng(22);
    let mut rigid_outputs = 0;
    for _ in 0..20 {
        let q = random_query(&mut r, &GenConfig::default());
        let d = random_dataset(&mut r, &q, 0..=5, 0.3);
        let n = normalize_rigid_atoms(&q);
        let nd = normalize_dataset(&d);
        for t in 0..=5 {
            assert_eq!(evaluate_at(&q, &d, t).unwrap(), evaluate_at(&n, &nd, t).unwrap());
        }
        // every rigid IDB predicate answers through its twin at time 0
        for sig in q.program.sigs.values().filter(|s| !s.is_temporal() && !s.is_edb()) {
            rigid_outputs += 1;
            let rq = Query { output: sig.name.clone(), program: q.program.clone() };
            let nq = normalize_rigid_atoms(&rq);
            assert_eq!(nq.output, tdl_core::model::rigid_twin_name(&sig.name));
            assert_eq!(evaluate_at(&rq, &d, 0).unwrap(), evaluate_at(&nq, &nd, 0).unwrap());
        }
    }
    assert!(rigid_outputs > 0);
}

fn facts_strategy() -> impl Strategy<Value = Vec<Fact>> {
    prop::collection::vec((0usize..3, prop::option::of(-3i64..6)), 0..12).prop_map(|v| {
        v.into_iter()
            .map(|(o, t)| {
                let obj = ["a", "b", "c"][o];
                match t {
                    Some(t) => Fact::temporal("E", &[obj], t),
                    None => Fact::rigid("R", &[obj, obj]),
                }
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn adding_a_rule_never_decreases_radius(seed in any::<u64>(), extra in any::<u64>()) {
        let mut r = rng(seed);
        let q = random_query(&mut r, &GenConfig::default());
        let other = random_query(&mut rng(extra), &GenConfig::default());
        let before = analyze(&q.program).program_radius;
        let mut p = q.program.clone();
        p.push(other.program.rules[0].clone());
        prop_assert!(analyze(&p).program_radius >= before);
    }

    #[test]
    fn segment_is_idempotent_and_antitone(facts in facts_strategy(), tau in -3i64..6, later in 0i64..4) {
        let d: tdl_core::Dataset = facts.into_iter().collect();
        let s = segment(&d, tau);
        prop_assert_eq!(segment(&s, tau), s.clone());
        let s2 = segment(&d, tau + later);
        prop_assert!(s2.iter().all(|f| s.contains(f)));
    }
}
