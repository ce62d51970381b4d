mod common;

use common::{random_dataset, random_query, random_stream, rng, GenConfig};
use proptest::prelude::*;
use tdl_core::textio::{parse_dataset, parse_source, parse_stream, render_dataset, render_program, render_stream};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn programs_round_trip(seed in any::<u64>(), recursive in any::<bool>()) {
        let cfg = GenConfig { recursive, ..GenConfig::default() };
        let q = random_query(&mut rng(seed), &cfg);
        let text = render_program(&q.program, Some(&q.output));
        let back = parse_source(&text).unwrap();
        prop_assert_eq!(back.query.as_ref(), Some(&q.output));
        prop_assert_eq!(back.program, q.program);
    }

    #[test]
    fn datasets_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let q = random_query(&mut r, &GenConfig::default());
        let d = random_dataset(&mut r, &q, -2..=5, 0.3);
        prop_assert_eq!(parse_dataset(&render_dataset(&d), Some(&q.program)).unwrap(), d);
    }

    #[test]
    fn streams_round_trip(seed in any::<u64>(), last in 0i64..10) {
        let mut r = rng(seed);
        let q = random_query(&mut r, &GenConfig::default());
        let events = random_stream(&mut r, &q, last, 0.2);
        prop_assert_eq!(parse_stream(&render_stream(&events), Some(&q.program)).unwrap(), events);
    }
}
