mod common;

use common::{malfunc, random_dataset, random_query, rng, shdn, GenConfig};
use rand::Rng;
use tdl_core::dtp::{critical_query, critical_update, decide_dtp_general, decide_dtp_nonrecursive, DtpInstance, FRESH_OBJECT};
use tdl_core::engine::evaluate_at;
use tdl_core::Query;

fn instances(seed: u64, n: usize, pick: &mut dyn FnMut(&mut rand_chacha::ChaCha8Rng) -> Query) -> Vec<DtpInstance> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let q = pick(&mut r);
            let t_in = r.gen_range(0..=4);
            let t_out = r.gen_range(0..=t_in);
            let d = random_dataset(&mut r, &q, 0..=t_in, 0.4);
            DtpInstance::new(q, d, t_in, t_out).unwrap()
        })
        .collect()
}

#[test]
fn deciders_agree_on_the_corpus() {
    let corpus = [shdn(), malfunc()];
    for i in instances(41, 60, &mut |r| corpus[r.gen_range(0..2)].clone()) {
        assert_eq!(decide_dtp_general(&i).unwrap(), decide_dtp_nonrecursive(&i).unwrap(), "{i:?}");
    }
}

#[test]
fn deciders_agree_on_random_queries() {
    for i in instances(42, 60, &mut |r| random_query(r, &GenConfig::default())) {
        assert_eq!(decide_dtp_general(&i).unwrap(), decide_dtp_nonrecursive(&i).unwrap(), "{i:?}");
    }
}

#[test]
fn fresh_object_never_answers_when_definitive() {
    let corpus = [shdn(), malfunc()];
    let mut positive = 0;
    for i in instances(43, 60, &mut |r| if r.gen_bool(0.5) { corpus[r.gen_range(0..2)].clone() } else { random_query(r, &GenConfig::default()) }) {
        if !decide_dtp_general(&i).unwrap() {
            continue;
        }
        positive += 1;
        let q = critical_query(&i);
        let answers = evaluate_at(&q, &i.history.union(&critical_update(&i)), i.t_out).unwrap();
        assert!(answers.iter().flatten().all(|o| o.as_str() != FRESH_OBJECT), "{i:?}");
    }
    assert!(positive > 10);
}
