//! Random programs, datasets and streams shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdl_core::textio::{parse_query, StreamEvent};
use tdl_core::{Atom, Dataset, Fact, Program, Query, Rule, Symbol, Term, TimeTerm};

pub const SHDN: &str = include_str!("../../../../queries/shdn.tdl");
pub const MALFUNC: &str = include_str!("../../../../queries/malfunc.tdl");
pub const ATRISK: &str = include_str!("../../../../queries/atrisk.tdl");

pub fn shdn() -> Query {
    parse_query(SHDN).unwrap()
}

pub fn malfunc() -> Query {
    parse_query(MALFUNC).unwrap()
}

pub fn atrisk() -> Query {
    parse_query(ATRISK).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of generated programs.
#[derive(Clone, Debug)]
pub struct GenConfig {
    pub max_rules: usize,
    pub max_body: usize,
    pub max_offset: i64,
    pub recursive: bool,
    pub rigid: bool,
    /// Probability that an argument is the constant `c`.
    pub constant_rate: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_rules: 6, max_body: 2, max_offset: 1, recursive: false, rigid: true, constant_rate: 0.1 }
    }
}

impl GenConfig {
    /// Small nonrecursive connected programs for the decision procedures.
    pub fn small() -> Self {
        GenConfig { max_rules: 4, max_body: 2, max_offset: 1, recursive: false, rigid: true, constant_rate: 0.1 }
    }
}

#[derive(Clone, Debug)]
struct Pred {
    name: &'static str,
    arity: usize,
    temporal: bool,
}

const EDB: [Pred; 3] = [
    Pred { name: "E", arity: 1, temporal: true },
    Pred { name: "F", arity: 2, temporal: true },
    Pred { name: "R", arity: 2, temporal: false },
];
const IDB_NAMES: [&str; 6] = ["P1", "P2", "P3", "P4", "P5", "P6"];
const VARS: [&str; 3] = ["X", "Y", "Z"];

fn term(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Term {
    if rng.gen_bool(cfg.constant_rate) {
        Term::obj("c")
    } else {
        Term::var(VARS.choose(rng).unwrap())
    }
}

fn atom(rng: &mut ChaCha8Rng, cfg: &GenConfig, p: &Pred) -> Atom {
    let args = (0..p.arity).map(|_| term(rng, cfg)).collect();
    let time = p.temporal.then(|| TimeTerm::var_offset("T", rng.gen_range(-cfg.max_offset..=cfg.max_offset)));
    Atom { pred: Symbol::new(p.name), args, time }
}

/// A random valid query whose output is the last IDB predicate. Without
/// `recursive` the program is nonrecursive, connected and free of time points.
pub fn random_query(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Query {
    let n_rules = rng.gen_range(1..=cfg.max_rules);
    let n_idb = rng.gen_range(1..=n_rules.min(4));
    let mut idb: Vec<Pred> = (0..n_idb)
        .map(|i| Pred { name: IDB_NAMES[i], arity: rng.gen_range(1..=2), temporal: !(cfg.rigid && i + 1 < n_idb && rng.gen_bool(0.15)) })
        .collect();
    idb.last_mut().unwrap().temporal = true;
    let edb: Vec<Pred> = EDB.iter().filter(|p| cfg.rigid || p.temporal).cloned().collect();

    // every IDB predicate gets one rule, the rest go to random ones
    let mut heads: Vec<usize> = (0..n_idb).collect();
    while heads.len() < n_rules {
        heads.push(rng.gen_range(0..n_idb));
    }
    let mut rules = Vec::new();
    for h in heads {
        let head = &idb[h];
        let usable: Vec<Pred> = edb
            .iter()
            .cloned()
            .chain(idb.iter().enumerate().filter(|(j, _)| cfg.recursive || *j < h).map(|(_, p)| p.clone()))
            .filter(|p| head.temporal || !p.temporal)
            .collect();
        let temporal_usable: Vec<&Pred> = usable.iter().filter(|p| p.temporal).collect();
        let mut body = Vec::new();
        // a temporal head needs a temporal body atom carrying its time variable
        if head.temporal {
            let p = (*temporal_usable.choose(rng).unwrap()).clone();
            body.push(atom(rng, cfg, &p));
        }
        let extra = rng.gen_range(usize::from(!head.temporal)..=cfg.max_body - usize::from(head.temporal));
        for _ in 0..extra {
            let p = usable.choose(rng).unwrap().clone();
            body.push(atom(rng, cfg, &p));
        }
        let vars: Vec<&Symbol> = body.iter().flat_map(|a| a.object_vars()).collect();
        let args = (0..head.arity)
            .map(|_| match vars.choose(rng) {
                Some(v) if !rng.gen_bool(cfg.constant_rate) => Term::Var((*v).clone()),
                _ => Term::obj("c"),
            })
            .collect();
        let time = head.temporal.then(|| TimeTerm::var_offset("T", rng.gen_range(-cfg.max_offset..=cfg.max_offset)));
        rules.push(Rule::new(Atom { pred: Symbol::new(head.name), args, time }, body));
    }
    let query = Query::new(idb.last().unwrap().name, Program::new(rules));
    assert!(query.validate().is_ok(), "generator produced an invalid program: {}", query.validate());
    query
}

pub const OBJECTS: [&str; 3] = ["a", "b", "c"];

fn tuples(arity: usize) -> Vec<Vec<&'static str>> {
    let mut out = vec![vec![]];
    for _ in 0..arity {
        out = out.into_iter().flat_map(|t: Vec<&str>| OBJECTS.iter().map(move |o| [t.clone(), vec![*o]].concat())).collect();
    }
    out
}

/// Random EDB facts of `query` over [`OBJECTS`] at `times`.
pub fn random_dataset(rng: &mut ChaCha8Rng, query: &Query, times: std::ops::RangeInclusive<i64>, density: f64) -> Dataset {
    let mut d = Dataset::new();
    for sig in query.program.sigs.values().filter(|s| s.is_edb()) {
        for t in tuples(sig.object_arity()) {
            if sig.is_temporal() {
                for time in times.clone() {
                    if rng.gen_bool(density) {
                        d.insert(Fact::temporal(sig.name.as_str(), &t, time));
                    }
                }
            } else if rng.gen_bool(density) {
                d.insert(Fact::rigid(sig.name.as_str(), &t));
            }
        }
    }
    d
}

/// Splits the temporal facts of a dataset into one event per tick from 0 to
/// `last`. Streams carry no rigid facts.
pub fn to_events(data: &Dataset, last: i64) -> Vec<StreamEvent> {
    (0..=last)
        .map(|tick| StreamEvent { tick, facts: data.iter().filter(|f| f.time == Some(tick)).cloned().collect() })
        .collect()
}

/// A random stream over ticks `0..=last`.
pub fn random_stream(rng: &mut ChaCha8Rng, query: &Query, last: i64, density: f64) -> Vec<StreamEvent> {
    to_events(&random_dataset(rng, query, 0..=last, density), last)
}

/// `query` with the rigid facts of `data` added to its program.
pub fn with_rigid_facts(query: &Query, data: &Dataset) -> Query {
    let mut q = query.clone();
    for f in data.iter().filter(|f| f.time.is_none()) {
        q.program.push(f.to_rule());
    }
    q
}

/// The part of `data` at or before `t`, rigid facts included.
pub fn history_until(data: &Dataset, t: i64) -> Dataset {
    data.iter().filter(|f| f.time.is_none_or(|x| x <= t)).cloned().collect()
}

pub mod engine_checks;
pub mod replay;
pub mod suites;
