//! Workloads for the benchmarks: the example queries and synthetic sensor
//! streams over them.

use tdl_core::textio::{parse_query, StreamEvent};
use tdl_core::{Dataset, Fact, Query};

pub const SHDN: &str = include_str!("../../../queries/shdn.tdl");
pub const MALFUNC: &str = include_str!("../../../queries/malfunc.tdl");
pub const ATRISK: &str = include_str!("../../../queries/atrisk.tdl");

pub fn query(source: &str) -> Query {
    parse_query(source).expect("bundled query parses")
}

/// Reading of unit `u` at tick `t`: mostly `high` in bursts, sometimes `na`.
fn reading(u: usize, t: i64) -> &'static str {
    match (u as i64 * 7 + t) % 11 {
        0 => "na",
        1..=5 => "high",
        _ => "low",
    }
}

/// One `Temp` reading per unit and tick over `ticks` ticks.
pub fn sensor_stream(units: usize, ticks: i64) -> Vec<StreamEvent> {
    (0..ticks)
        .map(|tick| StreamEvent {
            tick,
            facts: (0..units).map(|u| Fact::temporal("Temp", &[format!("u{u}").as_str(), reading(u, tick)], tick)).collect(),
        })
        .collect()
}

/// All facts of a stream in one dataset.
pub fn flatten(events: &[StreamEvent]) -> Dataset {
    events.iter().flat_map(|e| e.facts.iter().cloned()).collect()
}

/// `query` with a ring of `Near` facts over the units of a sensor stream.
pub fn with_ring(query: &Query, units: usize) -> Query {
    let mut q = query.clone();
    for u in 0..units {
        let (a, b) = (format!("u{u}"), format!("u{}", (u + 1) % units));
        q.program.push(Fact::rigid("Near", &[a.as_str(), b.as_str()]).to_rule());
    }
    q
}
