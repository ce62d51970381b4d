//! Exhaustive enumeration shared by the oracles.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use crate::error::DecisionError;
use crate::model::{analyze, Atom, Dataset, Fact, Program, Query, Symbol, Term};

/// Default bound on the number of candidate datasets an oracle may try.
pub const DEFAULT_ENUMERATION_CAP: usize = 5_000_000;

/// Verdict of a brute-force oracle, with the first counterexample found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleOutcome {
    pub holds: bool,
    pub witness: Option<Dataset>,
    /// Number of candidate datasets examined.
    pub checked: usize,
}

/// Calls `f` on every subset of `0..n` with at most `k` elements, by
/// increasing size and lexicographically within a size.
pub fn for_each_subset(
    n: usize,
    k: usize,
    cap: usize,
    f: &mut dyn FnMut(&[usize]) -> ControlFlow<()>,
) -> Result<usize, DecisionError> {
    let mut count = 0usize;
    for size in 0..=k.min(n) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            count += 1;
            if count > cap {
                return Err(DecisionError::EnumerationCap { cap });
            }
            if f(&idx).is_break() {
                return Ok(count);
            }
            // advance to the next combination
            let mut i = size;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if idx[i] < n - size + i {
                    idx[i] += 1;
                    for j in i + 1..size {
                        idx[j] = idx[j - 1] + 1;
                    }
                    i = usize::MAX;
                    break;
                }
            }
            if i != usize::MAX {
                break;
            }
        }
    }
    Ok(count)
}

fn matches_pattern(pattern: &[Term], tuple: &[Symbol]) -> bool {
    let mut bound: BTreeMap<&Symbol, &Symbol> = BTreeMap::new();
    pattern.iter().zip(tuple).all(|(p, o)| match p {
        Term::Obj(c) => c == o,
        Term::Var(v) => *bound.entry(v).or_insert(o) == o,
    })
}

fn tuples(domain: &[Symbol], arity: usize) -> Vec<Vec<Symbol>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                domain.iter().map(move |o| {
                    let mut t = t.clone();
                    t.push(o.clone());
                    t
                })
            })
            .collect();
    }
    out
}

/// Facts of `pred` over `domain` whose object tuple matches the arguments of
/// some body atom of `program`, at each of `times` for a temporal predicate
/// and once for a rigid one. Facts matching no body atom can never take part
/// in a derivation.
pub fn relevant_facts(program: &Program, pred: &Symbol, domain: &[Symbol], times: impl IntoIterator<Item = i64> + Clone) -> Vec<Fact> {
    let patterns: BTreeSet<Vec<Term>> = program
        .rules
        .iter()
        .flat_map(|r| r.body.iter())
        .filter(|a| &a.pred == pred)
        .map(|a: &Atom| a.args.clone())
        .collect();
    let Some(sig) = program.sig(pred) else { return Vec::new() };
    let mut out = Vec::new();
    for t in tuples(domain, sig.object_arity()) {
        if patterns.iter().any(|p| matches_pattern(p, &t)) {
            if sig.is_temporal() {
                for time in times.clone() {
                    out.push(Fact { pred: pred.clone(), args: t.clone(), time: Some(time) });
                }
            } else {
                out.push(Fact { pred: pred.clone(), args: t, time: None });
            }
        }
    }
    out
}

/// Largest number of temporal EDB leaves in a derivation of the output of a
/// nonrecursive query; `None` for recursive programs.
///
/// Queries are monotone, so if some update creates a new answer, the update
/// facts among the leaves of one derivation already do. Enumerating updates
/// up to this size is therefore exhaustive.
pub fn max_temporal_edb_leaves(query: &Query) -> Option<usize> {
    max_leaves(query, false)
}

/// Like [`max_temporal_edb_leaves`], counting rigid EDB leaves as well.
pub fn max_edb_leaves(query: &Query) -> Option<usize> {
    max_leaves(query, true)
}

fn max_leaves(query: &Query, rigid: bool) -> Option<usize> {
    if !analyze(&query.program).is_nonrecursive {
        return None;
    }
    fn leaves(program: &Program, pred: &Symbol, rigid: bool, memo: &mut BTreeMap<Symbol, usize>) -> usize {
        if let Some(&n) = memo.get(pred) {
            return n;
        }
        let n = program
            .rules_for(pred)
            .filter(|(_, r)| !r.is_fact())
            .map(|(_, r)| {
                r.body
                    .iter()
                    .map(|a| {
                        if program.is_edb(&a.pred) {
                            usize::from(rigid || a.is_temporal())
                        } else {
                            leaves(program, &a.pred, rigid, memo)
                        }
                    })
                    .sum::<usize>()
            })
            .max()
            .unwrap_or(0);
        memo.insert(pred.clone(), n);
        n
    }
    Some(leaves(&query.program, &query.output, rigid, &mut BTreeMap::new()))
}

/// For every temporal EDB predicate reachable from the output of a
/// nonrecursive query, the smallest and largest time of its leaves relative
/// to an output fact at time 0. `None` for recursive programs.
pub fn leaf_time_spans(query: &Query) -> Option<BTreeMap<Symbol, (i64, i64)>> {
    if !analyze(&query.program).is_nonrecursive {
        return None;
    }
    type Spans = BTreeMap<Symbol, (i64, i64)>;
    fn merge(into: &mut Spans, pred: &Symbol, lo: i64, hi: i64) {
        let e = into.entry(pred.clone()).or_insert((lo, hi));
        e.0 = e.0.min(lo);
        e.1 = e.1.max(hi);
    }
    fn spans(program: &Program, pred: &Symbol, memo: &mut BTreeMap<Symbol, Spans>) -> Spans {
        if let Some(s) = memo.get(pred) {
            return s.clone();
        }
        let mut out = Spans::new();
        for (_, rule) in program.rules_for(pred) {
            let Some(head) = rule.head.time.as_ref().map(|t| t.offset()) else { continue };
            for a in &rule.body {
                let Some(time) = &a.time else { continue };
                let rel = time.offset() - head;
                if program.is_edb(&a.pred) {
                    merge(&mut out, &a.pred, rel, rel);
                } else {
                    for (p, (lo, hi)) in spans(program, &a.pred, memo) {
                        merge(&mut out, &p, lo + rel, hi + rel);
                    }
                }
            }
        }
        memo.insert(pred.clone(), out.clone());
        out
    }
    Some(spans(&query.program, &query.output, &mut BTreeMap::new()))
}
