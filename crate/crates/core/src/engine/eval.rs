//! Compiled rules and the fixpoint loop.
//!
//! Objects are interned to `u32`. Every relation keeps its tuples in
//! insertion order, so the tuples derived in iteration `k` form a contiguous
//! range; semi-naive evaluation then only needs per-iteration offsets.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use super::{Strategy, TimeWindow};
use crate::error::EngineError;
use crate::model::{Dataset, Fact, Program, Rule, Symbol, Term, TimeTerm, Tuple};

pub(crate) type Obj = u32;

/// Time value stored for rigid tuples.
pub(crate) const NO_TIME: i64 = i64::MIN;

#[derive(Clone, Debug, Default)]
pub(crate) struct Interner {
    ids: HashMap<Symbol, Obj>,
    names: Vec<Symbol>,
}

impl Interner {
    pub(crate) fn intern(&mut self, s: &Symbol) -> Obj {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as Obj;
        self.names.push(s.clone());
        self.ids.insert(s.clone(), id);
        id
    }

    pub(crate) fn get(&self, s: &Symbol) -> Option<Obj> {
        self.ids.get(s).copied()
    }

    pub(crate) fn name(&self, id: Obj) -> &Symbol {
        &self.names[id as usize]
    }
}

// ------------------------------------------------------------------------------------------------
// Relations
// ------------------------------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub(crate) struct Relation {
    pub(crate) pred: Symbol,
    stride: usize,
    args: Vec<Obj>,
    times: Vec<i64>,
    seen: HashMap<(Box<[Obj]>, i64), u32>,
    by_time: HashMap<i64, Vec<u32>>,
    by_time_first: HashMap<(i64, Obj), Vec<u32>>,
    /// `marks[k]` is the number of tuples present when iteration `k` started.
    marks: Vec<u32>,
    /// Tuples that came from the dataset rather than from a rule.
    data: Vec<bool>,
}

impl Relation {
    fn new(pred: Symbol, stride: usize) -> Self {
        Relation {
            pred,
            stride,
            args: Vec::new(),
            times: Vec::new(),
            seen: HashMap::new(),
            by_time: HashMap::new(),
            by_time_first: HashMap::new(),
            marks: vec![0],
            data: Vec::new(),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.times.len()
    }

    pub(crate) fn tuple(&self, idx: u32) -> (&[Obj], i64) {
        let i = idx as usize;
        (&self.args[i * self.stride..(i + 1) * self.stride], self.times[i])
    }

    pub(crate) fn is_data(&self, idx: u32) -> bool {
        self.data[idx as usize]
    }

    fn insert(&mut self, args: &[Obj], time: i64, data: bool) -> bool {
        if args.len() != self.stride {
            return false;
        }
        let key = (Box::<[Obj]>::from(args), time);
        if let Some(&idx) = self.seen.get(&key) {
            if data {
                self.data[idx as usize] = true;
            }
            return false;
        }
        let idx = self.times.len() as u32;
        self.seen.insert(key, idx);
        self.args.extend_from_slice(args);
        self.times.push(time);
        self.data.push(data);
        self.by_time.entry(time).or_default().push(idx);
        if let Some(&first) = args.first() {
            self.by_time_first.entry((time, first)).or_default().push(idx);
        }
        true
    }

    pub(crate) fn lookup(&self, args: &[Obj], time: i64) -> Option<u32> {
        self.seen.get(&(Box::<[Obj]>::from(args), time)).copied()
    }

    /// Iteration in which tuple `idx` was derived.
    pub(crate) fn stamp(&self, idx: u32) -> usize {
        self.marks.partition_point(|&m| m <= idx) - 1
    }

    pub(crate) fn mark(&self, k: usize) -> u32 {
        self.marks.get(k).copied().unwrap_or(self.len() as u32)
    }

    fn candidates(&self, time: Option<i64>, first: Option<Obj>) -> Candidates<'_> {
        match (time, first) {
            (Some(t), Some(f)) => Candidates::List(self.by_time_first.get(&(t, f)).map_or(&[][..], |v| v.as_slice())),
            (Some(t), None) => Candidates::List(self.by_time.get(&t).map_or(&[][..], |v| v.as_slice())),
            (None, _) => Candidates::All(self.len() as u32),
        }
    }
}

enum Candidates<'a> {
    List(&'a [u32]),
    All(u32),
}

// ------------------------------------------------------------------------------------------------
// Compiled rules
// ------------------------------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CTerm {
    Var(usize),
    Const(Obj),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CTime {
    Rigid,
    Point(i64),
    Var(usize, i64),
}

#[derive(Clone, Debug)]
pub(crate) struct CAtom {
    pub(crate) rel: usize,
    pub(crate) args: Vec<CTerm>,
    pub(crate) time: CTime,
}

#[derive(Clone, Debug)]
pub(crate) struct CRule {
    pub(crate) index: usize,
    pub(crate) head: CAtom,
    pub(crate) body: Vec<CAtom>,
    pub(crate) obj_vars: Vec<Symbol>,
    pub(crate) time_vars: Vec<Symbol>,
    /// Join order when body atom `i` is the delta atom.
    delta_plans: Vec<Vec<usize>>,
    naive_plan: Vec<usize>,
}

#[derive(Clone, Debug)]
pub(crate) struct Bindings {
    pub(crate) objs: Vec<Option<Obj>>,
    pub(crate) times: Vec<Option<i64>>,
}

impl CRule {
    pub(crate) fn fresh_bindings(&self) -> Bindings {
        Bindings { objs: vec![None; self.obj_vars.len()], times: vec![None; self.time_vars.len()] }
    }
}

fn plan(body: &[CAtom], first: Option<usize>) -> Vec<usize> {
    let mut bound_obj: BTreeSet<usize> = BTreeSet::new();
    let mut bound_time: BTreeSet<usize> = BTreeSet::new();
    let mut order = Vec::with_capacity(body.len());
    let mut remaining: Vec<usize> = (0..body.len()).collect();
    let take = |i: usize, order: &mut Vec<usize>, bo: &mut BTreeSet<usize>, bt: &mut BTreeSet<usize>| {
        order.push(i);
        for a in &body[i].args {
            if let CTerm::Var(v) = a {
                bo.insert(*v);
            }
        }
        if let CTime::Var(v, _) = body[i].time {
            bt.insert(v);
        }
    };
    if let Some(f) = first {
        remaining.retain(|&i| i != f);
        take(f, &mut order, &mut bound_obj, &mut bound_time);
    }
    while !remaining.is_empty() {
        let score = |i: usize| {
            let a = &body[i];
            let time_bound = match a.time {
                CTime::Rigid => 0,
                CTime::Point(_) => 2,
                CTime::Var(v, _) => 2 * usize::from(bound_time.contains(&v)),
            };
            let args_bound = a
                .args
                .iter()
                .filter(|t| match t {
                    CTerm::Const(_) => true,
                    CTerm::Var(v) => bound_obj.contains(v),
                })
                .count();
            time_bound + args_bound
        };
        let (pos, &best) = remaining.iter().enumerate().max_by_key(|(p, &i)| (score(i), std::cmp::Reverse(*p))).expect("non-empty");
        remaining.remove(pos);
        take(best, &mut order, &mut bound_obj, &mut bound_time);
    }
    order
}

// ------------------------------------------------------------------------------------------------
// Compiled programs and models
// ------------------------------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    pub(crate) interner: Interner,
    pub(crate) rel_ids: HashMap<Symbol, usize>,
    pub(crate) rel_template: Vec<(Symbol, usize)>,
    pub(crate) rules: Vec<CRule>,
    pub(crate) facts: Vec<(usize, Vec<Obj>, i64)>,
    /// Rules indexed by head relation.
    pub(crate) rules_by_head: HashMap<usize, Vec<usize>>,
}

fn rel_for(rel_ids: &mut HashMap<Symbol, usize>, template: &mut Vec<(Symbol, usize)>, pred: &Symbol, stride: usize) -> usize {
    if let Some(&r) = rel_ids.get(pred) {
        return r;
    }
    let id = template.len();
    template.push((pred.clone(), stride));
    rel_ids.insert(pred.clone(), id);
    id
}

impl Compiled {
    pub(crate) fn new(program: &Program) -> Result<Self, EngineError> {
        let mut interner = Interner::default();
        let mut rel_ids = HashMap::new();
        let mut template = Vec::new();
        let mut rules = Vec::new();
        let mut facts = Vec::new();
        for (index, rule) in program.rules.iter().enumerate() {
            if rule.is_fact() {
                if let Some(f) = rule.head.to_fact() {
                    let rel = rel_for(&mut rel_ids, &mut template, &f.pred, f.args.len());
                    let args = f.args.iter().map(|a| interner.intern(a)).collect();
                    facts.push((rel, args, f.time.unwrap_or(NO_TIME)));
                    continue;
                }
            }
            rules.push(compile_rule(index, rule, &mut interner, &mut rel_ids, &mut template)?);
        }
        let mut rules_by_head: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            rules_by_head.entry(r.head.rel).or_default().push(i);
        }
        Ok(Compiled { interner, rel_ids, rel_template: template, rules, facts, rules_by_head })
    }
}

fn compile_rule(
    index: usize,
    rule: &Rule,
    interner: &mut Interner,
    rel_ids: &mut HashMap<Symbol, usize>,
    template: &mut Vec<(Symbol, usize)>,
) -> Result<CRule, EngineError> {
    let mut obj_vars: Vec<Symbol> = Vec::new();
    let mut time_vars: Vec<Symbol> = Vec::new();
    let mut compile_atom = |a: &crate::model::Atom, obj_vars: &mut Vec<Symbol>, time_vars: &mut Vec<Symbol>| {
        let rel = rel_for(rel_ids, template, &a.pred, a.args.len());
        let args = a
            .args
            .iter()
            .map(|t| match t {
                Term::Obj(o) => CTerm::Const(interner.intern(o)),
                Term::Var(v) => CTerm::Var(position_or_push(obj_vars, v)),
            })
            .collect();
        let time = match &a.time {
            None => CTime::Rigid,
            Some(TimeTerm::Point(p)) => CTime::Point(*p),
            Some(TimeTerm::Var { var, offset }) => CTime::Var(position_or_push(time_vars, var), *offset),
        };
        CAtom { rel, args, time }
    };
    let body: Vec<CAtom> = rule.body.iter().map(|a| compile_atom(a, &mut obj_vars, &mut time_vars)).collect();
    let n_obj = obj_vars.len();
    let n_time = time_vars.len();
    let head = compile_atom(&rule.head, &mut obj_vars, &mut time_vars);
    if obj_vars.len() > n_obj {
        return Err(EngineError::UnboundHeadVariable { rule: index, var: obj_vars[n_obj].clone() });
    }
    if time_vars.len() > n_time {
        return Err(EngineError::UnboundHeadVariable { rule: index, var: time_vars[n_time].clone() });
    }
    let delta_plans = (0..body.len()).map(|i| plan(&body, Some(i))).collect();
    let naive_plan = plan(&body, None);
    Ok(CRule { index, head, body, obj_vars, time_vars, delta_plans, naive_plan })
}

fn position_or_push(vars: &mut Vec<Symbol>, v: &Symbol) -> usize {
    if let Some(p) = vars.iter().position(|x| x == v) {
        return p;
    }
    vars.push(v.clone());
    vars.len() - 1
}

/// The saturated set of facts of a program over a dataset.
#[derive(Clone, Debug)]
pub struct Model {
    pub(crate) compiled: Arc<Compiled>,
    pub(crate) rel_ids: HashMap<Symbol, usize>,
    pub(crate) interner: Interner,
    pub(crate) rels: Vec<Relation>,
    pub(crate) window: Option<TimeWindow>,
}

impl Model {
    pub(crate) fn rel(&self, pred: &Symbol) -> Option<&Relation> {
        self.rel_ids.get(pred).map(|&r| &self.rels[r])
    }

    pub(crate) fn to_fact(&self, rel: &Relation, idx: u32) -> Fact {
        let (args, time) = rel.tuple(idx);
        Fact {
            pred: rel.pred.clone(),
            args: args.iter().map(|&a| self.interner.name(a).clone()).collect(),
            time: (time != NO_TIME).then_some(time),
        }
    }

    pub(crate) fn locate(&self, fact: &Fact) -> Option<(usize, u32)> {
        let r = *self.rel_ids.get(&fact.pred)?;
        let args = fact.args.iter().map(|a| self.interner.get(a)).collect::<Option<Vec<_>>>()?;
        let idx = self.rels[r].lookup(&args, fact.time.unwrap_or(NO_TIME))?;
        Some((r, idx))
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.locate(fact).is_some()
    }

    /// Object tuples of `pred` holding at `time` (`None` for rigid predicates).
    pub fn tuples_at(&self, pred: &Symbol, time: Option<i64>) -> BTreeSet<Tuple> {
        let Some(rel) = self.rel(pred) else {
            return BTreeSet::new();
        };
        let t = time.unwrap_or(NO_TIME);
        let idxs: Vec<u32> = match rel.by_time.get(&t) {
            Some(v) => v.clone(),
            None => Vec::new(),
        };
        idxs.into_iter().map(|i| rel.tuple(i).0.iter().map(|&a| self.interner.name(a).clone()).collect()).collect()
    }

    /// All facts of the model, sorted.
    pub fn facts(&self) -> BTreeSet<Fact> {
        self.rels.iter().flat_map(|r| (0..r.len() as u32).map(move |i| self.to_fact(r, i))).collect()
    }

    /// Facts of `pred`, sorted.
    pub fn facts_of(&self, pred: &Symbol) -> BTreeSet<Fact> {
        self.rel(pred).map_or_else(BTreeSet::new, |r| (0..r.len() as u32).map(|i| self.to_fact(r, i)).collect())
    }

    /// Facts whose time lies in `[lo, hi]`, plus rigid facts.
    pub fn facts_in(&self, lo: i64, hi: i64) -> BTreeSet<Fact> {
        let mut out = BTreeSet::new();
        for r in &self.rels {
            for (&t, idxs) in &r.by_time {
                if t == NO_TIME || (lo..=hi).contains(&t) {
                    out.extend(idxs.iter().map(|&i| self.to_fact(r, i)));
                }
            }
        }
        out
    }

    /// Number of fixpoint iterations that produced new facts.
    pub fn iterations(&self) -> usize {
        self.rels.iter().map(|r| r.marks.len()).max().unwrap_or(1) - 1
    }

    pub fn window(&self) -> Option<TimeWindow> {
        self.window
    }
}

// ------------------------------------------------------------------------------------------------
// Joins
// ------------------------------------------------------------------------------------------------

/// Index range of usable tuples for each body atom position.
pub(crate) type Ranges<'a> = &'a dyn Fn(usize, &Relation) -> (u32, u32);

#[allow(clippy::too_many_arguments)]
pub(crate) fn join(
    rels: &[Relation],
    rule: &CRule,
    order: &[usize],
    step: usize,
    b: &mut Bindings,
    ranges: Ranges<'_>,
    out: &mut dyn FnMut(&Bindings, &[u32]),
    chosen: &mut Vec<u32>,
) {
    if step == order.len() {
        out(b, chosen);
        return;
    }
    let pos = order[step];
    let atom = &rule.body[pos];
    let rel = &rels[atom.rel];
    let (lo, hi) = ranges(pos, rel);
    if lo >= hi {
        return;
    }
    let time = match atom.time {
        CTime::Rigid => Some(NO_TIME),
        CTime::Point(p) => Some(p),
        CTime::Var(v, off) => b.times[v].map(|t| t + off),
    };
    let first = atom.args.first().and_then(|t| match t {
        CTerm::Const(c) => Some(*c),
        CTerm::Var(v) => b.objs[*v],
    });
    let mut visit = |idx: u32, b: &mut Bindings, chosen: &mut Vec<u32>| {
        if idx < lo || idx >= hi {
            return;
        }
        let (args, t) = rel.tuple(idx);
        let mut newly_obj: [usize; 16] = [usize::MAX; 16];
        let mut n_new = 0usize;
        let mut extra: Vec<usize> = Vec::new();
        let mut ok = true;
        for (term, &val) in atom.args.iter().zip(args) {
            match *term {
                CTerm::Const(c) => {
                    if c != val {
                        ok = false;
                        break;
                    }
                }
                CTerm::Var(v) => match b.objs[v] {
                    Some(x) if x != val => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        b.objs[v] = Some(val);
                        if n_new < 16 {
                            newly_obj[n_new] = v;
                            n_new += 1;
                        } else {
                            extra.push(v);
                        }
                    }
                },
            }
        }
        let mut new_time = None;
        if ok {
            match atom.time {
                CTime::Rigid => ok = t == NO_TIME,
                CTime::Point(p) => ok = t == p,
                CTime::Var(v, off) => match b.times[v] {
                    Some(x) => ok = x + off == t,
                    None if t == NO_TIME => ok = false,
                    None => {
                        b.times[v] = Some(t - off);
                        new_time = Some(v);
                    }
                },
            }
        }
        if ok {
            chosen.push(idx);
            join(rels, rule, order, step + 1, b, ranges, out, chosen);
            chosen.pop();
        }
        for &v in newly_obj.iter().take(n_new).chain(extra.iter()) {
            b.objs[v] = None;
        }
        if let Some(v) = new_time {
            b.times[v] = None;
        }
    };
    match rel.candidates(time, first) {
        Candidates::List(list) => {
            for &idx in list {
                visit(idx, b, chosen);
            }
        }
        Candidates::All(n) => {
            for idx in 0..n {
                visit(idx, b, chosen);
            }
        }
    }
}

pub(crate) fn head_tuple(rule: &CRule, b: &Bindings) -> (Vec<Obj>, i64) {
    let args = rule
        .head
        .args
        .iter()
        .map(|t| match *t {
            CTerm::Const(c) => c,
            CTerm::Var(v) => b.objs[v].expect("safe rule binds head variables"),
        })
        .collect();
    let time = match rule.head.time {
        CTime::Rigid => NO_TIME,
        CTime::Point(p) => p,
        CTime::Var(v, off) => b.times[v].expect("safe rule binds head time") + off,
    };
    (args, time)
}

// ------------------------------------------------------------------------------------------------
// Fixpoint
// ------------------------------------------------------------------------------------------------

impl Compiled {
    pub(crate) fn saturate(self: &Arc<Self>, dataset: &Dataset, window: Option<TimeWindow>, strategy: Strategy) -> Model {
        let mut interner = self.interner.clone();
        let mut rel_ids = self.rel_ids.clone();
        let mut template = self.rel_template.clone();
        let mut pending: Vec<(usize, Vec<Obj>, i64)> = Vec::with_capacity(dataset.len());
        for f in dataset {
            let rel = rel_for(&mut rel_ids, &mut template, &f.pred, f.args.len());
            let args = f.args.iter().map(|a| interner.intern(a)).collect();
            pending.push((rel, args, f.time.unwrap_or(NO_TIME)));
        }
        let mut rels: Vec<Relation> = template.iter().map(|(p, s)| Relation::new(p.clone(), *s)).collect();
        for (rel, args, time) in &pending {
            rels[*rel].insert(args, *time, true);
        }
        let in_window = |t: i64| t == NO_TIME || window.is_none_or(|w| w.lo <= t && t <= w.hi);
        for (rel, args, time) in &self.facts {
            rels[*rel].insert(args, *time, false);
        }

        let mut k = 1;
        loop {
            for r in rels.iter_mut() {
                let len = r.len() as u32;
                r.marks.push(len);
            }
            let mut new_facts: Vec<(usize, Vec<Obj>, i64)> = Vec::new();
            for rule in &self.rules {
                if rule.body.is_empty() {
                    continue;
                }
                let mut b = rule.fresh_bindings();
                let mut chosen = Vec::new();
                let mut emit = |b: &Bindings, _: &[u32]| {
                    let (args, time) = head_tuple(rule, b);
                    if in_window(time) {
                        new_facts.push((rule.head.rel, args, time));
                    }
                };
                match strategy {
                    Strategy::Naive => {
                        let ranges = |_: usize, r: &Relation| (0, r.mark(k));
                        join(&rels, rule, &rule.naive_plan, 0, &mut b, &ranges, &mut emit, &mut chosen);
                    }
                    Strategy::SemiNaive => {
                        for delta in 0..rule.body.len() {
                            let ranges = |pos: usize, r: &Relation| {
                                if pos == delta {
                                    (r.mark(k - 1), r.mark(k))
                                } else if pos < delta {
                                    (0, r.mark(k - 1))
                                } else {
                                    (0, r.mark(k))
                                }
                            };
                            join(&rels, rule, &rule.delta_plans[delta], 0, &mut b, &ranges, &mut emit, &mut chosen);
                        }
                    }
                }
            }
            let mut changed = false;
            for (rel, args, time) in new_facts {
                changed |= rels[rel].insert(&args, time, false);
            }
            if !changed {
                for r in rels.iter_mut() {
                    r.marks.pop();
                }
                break;
            }
            k += 1;
        }
        Model { compiled: Arc::clone(self), rel_ids, interner, rels, window }
    }
}
