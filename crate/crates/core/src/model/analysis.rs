use std::collections::{BTreeMap, BTreeSet};

use super::{Program, Rule, Symbol};

/// Static facts about a program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramAnalysis {
    /// Rank of each predicate; `None` when the program is recursive.
    pub rank_of: Option<BTreeMap<Symbol, usize>>,
    pub program_rank: Option<usize>,
    pub max_rule_radius: u64,
    /// Number of rules times the maximum rule radius.
    pub program_radius: u64,
    pub is_nonrecursive: bool,
    pub is_connected: bool,
    pub has_time_points: bool,
    pub has_objects: bool,
    /// `(head, body)` pairs: the head predicate depends on the body predicate.
    pub dependency_edges: BTreeSet<(Symbol, Symbol)>,
}

impl ProgramAnalysis {
    pub fn rank(&self, pred: &Symbol) -> Option<usize> {
        self.rank_of.as_ref().map(|r| r.get(pred).copied().unwrap_or(0))
    }
}

/// Radius of a single rule: the largest offset gap between the head time
/// argument and a body time argument. Rules without a time variable have
/// radius zero.
pub fn rule_radius(rule: &Rule) -> u64 {
    if rule.time_vars().is_empty() {
        return 0;
    }
    let Some(head_time) = &rule.head.time else {
        return 0;
    };
    rule.body
        .iter()
        .filter_map(|a| a.time.as_ref())
        .map(|t| head_time.offset().abs_diff(t.offset()))
        .max()
        .unwrap_or(0)
}

fn is_connected_rule(rule: &Rule) -> bool {
    let vars = rule.time_vars();
    match vars.len() {
        0 => true,
        1 => {
            let v = vars.into_iter().next().expect("one variable");
            let in_body = rule.body.iter().any(|a| a.time_var() == Some(v));
            !in_body || rule.head.time_var() == Some(v)
        }
        _ => false,
    }
}

pub fn analyze(program: &Program) -> ProgramAnalysis {
    let mut preds: BTreeSet<Symbol> = BTreeSet::new();
    let mut heads: BTreeSet<Symbol> = BTreeSet::new();
    let mut edges: BTreeSet<(Symbol, Symbol)> = BTreeSet::new();
    for rule in &program.rules {
        heads.insert(rule.head.pred.clone());
        preds.insert(rule.head.pred.clone());
        for atom in &rule.body {
            preds.insert(atom.pred.clone());
            edges.insert((rule.head.pred.clone(), atom.pred.clone()));
        }
    }

    let rank_of = compute_ranks(&preds, &edges);
    let program_rank = rank_of.as_ref().map(|r| r.values().copied().max().unwrap_or(0));
    let max_rule_radius = program.rules.iter().map(rule_radius).max().unwrap_or(0);

    ProgramAnalysis {
        is_nonrecursive: rank_of.is_some(),
        rank_of,
        program_rank,
        max_rule_radius,
        program_radius: program.rules.len() as u64 * max_rule_radius,
        is_connected: program.rules.iter().all(is_connected_rule),
        has_time_points: program.rules.iter().any(|r| r.time_points().next().is_some()),
        has_objects: program.rules.iter().any(|r| r.atoms().any(|a| a.objects().next().is_some())),
        dependency_edges: edges,
    }
}

/// Longest-path ranks over the dependency graph, or `None` on a cycle.
fn compute_ranks(preds: &BTreeSet<Symbol>, edges: &BTreeSet<(Symbol, Symbol)>) -> Option<BTreeMap<Symbol, usize>> {
    let mut deps: BTreeMap<&Symbol, Vec<&Symbol>> = BTreeMap::new();
    for (h, b) in edges {
        deps.entry(h).or_default().push(b);
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done(usize),
    }

    fn visit<'a>(
        p: &'a Symbol,
        deps: &BTreeMap<&'a Symbol, Vec<&'a Symbol>>,
        marks: &mut BTreeMap<&'a Symbol, Mark>,
    ) -> Option<usize> {
        match marks.get(p) {
            Some(Mark::Done(r)) => return Some(*r),
            Some(Mark::Active) => return None,
            None => {}
        }
        marks.insert(p, Mark::Active);
        let mut rank = 0;
        if let Some(children) = deps.get(p) {
            for c in children {
                rank = rank.max(visit(c, deps, marks)? + 1);
            }
        }
        marks.insert(p, Mark::Done(rank));
        Some(rank)
    }

    let mut marks: BTreeMap<&Symbol, Mark> = BTreeMap::new();
    let mut ranks = BTreeMap::new();
    for p in preds {
        ranks.insert(p.clone(), visit(p, &deps, &mut marks)?);
    }
    Some(ranks)
}
