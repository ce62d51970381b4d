use std::collections::HashMap;

use super::eval::{join, Bindings, CTerm, CTime, Model, Relation, NO_TIME};
use crate::model::{Atom, Dataset, Fact, Program, Rule, Symbol, Term, TimeTerm};

/// A derivation: each node is labelled by a ground rule instance and has one
/// child per body atom, whose head is that atom. Leaves are facts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationTree {
    pub instance: Rule,
    /// Index of the program rule used, or `None` for a dataset fact.
    pub rule_index: Option<usize>,
    pub children: Vec<DerivationTree>,
}

impl DerivationTree {
    pub fn head(&self) -> &Atom {
        &self.instance.head
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(DerivationTree::depth).max().unwrap_or(0)
    }

    /// Facts labelling the leaves, left to right.
    pub fn leaves(&self) -> Vec<Fact> {
        if self.children.is_empty() {
            return self.instance.head.to_fact().into_iter().collect();
        }
        self.children.iter().flat_map(DerivationTree::leaves).collect()
    }
}

fn seed(rule: &super::eval::CRule, rel: &Relation, idx: u32) -> Option<Bindings> {
    let mut b = rule.fresh_bindings();
    let (args, time) = rel.tuple(idx);
    for (term, &val) in rule.head.args.iter().zip(args) {
        match *term {
            CTerm::Const(c) if c != val => return None,
            CTerm::Const(_) => {}
            CTerm::Var(v) => match b.objs[v] {
                Some(x) if x != val => return None,
                _ => b.objs[v] = Some(val),
            },
        }
    }
    match rule.head.time {
        CTime::Rigid if time != NO_TIME => return None,
        CTime::Point(p) if p != time => return None,
        CTime::Var(v, off) => b.times[v] = Some(time - off),
        _ => {}
    }
    Some(b)
}

/// Chosen rule instance: rule index, body facts and their tuple handles.
type Candidate = (usize, Vec<Fact>, Vec<(usize, u32)>);

pub(crate) fn derive(model: &Model, rel_index: usize, idx: u32) -> DerivationTree {
    let rel = &model.rels[rel_index];
    let fact = model.to_fact(rel, idx);
    let is_program_fact = || {
        let (args, time) = rel.tuple(idx);
        model.compiled.facts.iter().any(|(r, a, t)| *r == rel_index && a.as_slice() == args && *t == time)
    };
    if rel.is_data(idx) || is_program_fact() {
        return DerivationTree { instance: Rule::fact(fact.to_atom()), rule_index: None, children: Vec::new() };
    }
    let stamp = rel.stamp(idx);
    let mut best: Option<Candidate> = None;
    let heads = model.compiled.rules_by_head.get(&rel_index).map_or(&[][..], Vec::as_slice);
    for &ri in heads {
        let rule = &model.compiled.rules[ri];
        let Some(mut b) = seed(rule, rel, idx) else { continue };
        let ranges = |_: usize, r: &Relation| (0, r.mark(stamp));
        let mut found: Vec<Vec<(usize, u32)>> = Vec::new();
        let mut chosen = Vec::new();
        let order: Vec<usize> = (0..rule.body.len()).collect();
        let mut emit = |_: &Bindings, ch: &[u32]| {
            let picked: Vec<(usize, u32)> = order.iter().zip(ch).map(|(&pos, &i)| (rule.body[pos].rel, i)).collect();
            found.push(picked);
        };
        join(&model.rels, rule, &order, 0, &mut b, &ranges, &mut emit, &mut chosen);
        for picked in found {
            let facts: Vec<Fact> = picked.iter().map(|&(r, i)| model.to_fact(&model.rels[r], i)).collect();
            let better = match &best {
                None => true,
                Some((bi, bf, _)) => (rule.index, &facts) < (*bi, bf),
            };
            if better {
                best = Some((rule.index, facts, picked));
            }
        }
    }
    let (rule_index, body, picked) = best.expect("every derived fact has a rule instance with earlier body facts");
    let children = picked.iter().map(|&(r, i)| derive(model, r, i)).collect();
    DerivationTree {
        instance: Rule::new(fact.to_atom(), body.iter().map(Fact::to_atom).collect()),
        rule_index: Some(rule_index),
        children,
    }
}

fn match_atom(
    pattern: &Atom,
    ground: &Atom,
    objs: &mut HashMap<Symbol, Symbol>,
    times: &mut HashMap<Symbol, i64>,
) -> bool {
    if pattern.pred != ground.pred || pattern.args.len() != ground.args.len() {
        return false;
    }
    for (p, g) in pattern.args.iter().zip(&ground.args) {
        let Term::Obj(g) = g else { return false };
        match p {
            Term::Obj(o) if o != g => return false,
            Term::Obj(_) => {}
            Term::Var(v) => {
                if objs.entry(v.clone()).or_insert_with(|| g.clone()) != g {
                    return false;
                }
            }
        }
    }
    match (&pattern.time, &ground.time) {
        (None, None) => true,
        (Some(TimeTerm::Point(p)), Some(TimeTerm::Point(q))) => p == q,
        (Some(TimeTerm::Var { var, offset }), Some(TimeTerm::Point(q))) => *times.entry(var.clone()).or_insert(q - offset) == q - offset,
        _ => false,
    }
}

/// True when `instance` is a ground instance of `rule`.
pub fn is_instance_of(rule: &Rule, instance: &Rule) -> bool {
    if rule.body.len() != instance.body.len() {
        return false;
    }
    let mut objs = HashMap::new();
    let mut times = HashMap::new();
    rule.atoms().zip(instance.atoms()).all(|(p, g)| match_atom(p, g, &mut objs, &mut times))
}

/// Re-checks a derivation tree against `program ∪ dataset`: every node is a
/// ground instance of a rule or a dataset fact, and children match the body
/// atoms one to one.
pub fn check_derivation(program: &Program, dataset: &Dataset, tree: &DerivationTree) -> bool {
    if !tree.instance.atoms().all(Atom::is_ground) {
        return false;
    }
    let labelled_ok = if tree.instance.is_fact() {
        let in_data = tree.instance.head.to_fact().is_some_and(|f| dataset.contains(&f));
        in_data || program.rules.iter().any(|r| r.is_fact() && is_instance_of(r, &tree.instance))
    } else {
        match tree.rule_index {
            Some(i) => program.rules.get(i).is_some_and(|r| is_instance_of(r, &tree.instance)),
            None => program.rules.iter().any(|r| is_instance_of(r, &tree.instance)),
        }
    };
    labelled_ok
        && tree.children.len() == tree.instance.body.len()
        && tree.children.iter().zip(&tree.instance.body).all(|(c, b)| c.head() == b && check_derivation(program, dataset, c))
}
