//! Top-down unfolding over nonrecursive programs.
//!
//! Variables are small integers living in a [`Space`] with a trail, so that
//! the depth-first search can bind and unbind them cheaply. Frozen variables
//! behave like constants: they unify only with themselves or with unbound
//! variables.

use std::collections::HashMap;
use std::ops::ControlFlow;

use crate::model::{Atom, Program, Rule, Symbol, Term, TimeTerm};

pub(crate) type Var = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum UObj {
    Var(Var),
    Const(Symbol),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum UTime {
    Point(i64),
    Var(Var, i64),
}

impl UTime {
    fn shifted(self, by: i64) -> UTime {
        match self {
            UTime::Point(p) => UTime::Point(p + by),
            UTime::Var(v, o) => UTime::Var(v, o + by),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct UAtom {
    pub pred: Symbol,
    pub args: Vec<UObj>,
    pub time: Option<UTime>,
}

impl UAtom {
    fn renamed(&self, base: Var) -> UAtom {
        UAtom {
            pred: self.pred.clone(),
            args: self
                .args
                .iter()
                .map(|a| match a {
                    UObj::Var(v) => UObj::Var(v + base),
                    c => c.clone(),
                })
                .collect(),
            time: self.time.map(|t| match t {
                UTime::Var(v, o) => UTime::Var(v + base, o),
                p => p,
            }),
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        let objs = self.args.iter().filter_map(|a| match a {
            UObj::Var(v) => Some(*v),
            UObj::Const(_) => None,
        });
        let time = match self.time {
            Some(UTime::Var(v, _)) => Some(v),
            _ => None,
        };
        objs.chain(time)
    }
}

/// Interns variable names of one rule or anchor into consecutive ids.
#[derive(Default)]
pub(crate) struct Namer {
    pub ids: HashMap<Symbol, Var>,
}

impl Namer {
    pub fn id(&mut self, name: &Symbol) -> Var {
        let next = self.ids.len() as Var;
        *self.ids.entry(name.clone()).or_insert(next)
    }

    pub fn term(&mut self, t: &Term) -> UObj {
        match t {
            Term::Var(v) => UObj::Var(self.id(v)),
            Term::Obj(o) => UObj::Const(o.clone()),
        }
    }

    pub fn time(&mut self, t: &TimeTerm) -> UTime {
        match t {
            TimeTerm::Point(p) => UTime::Point(*p),
            TimeTerm::Var { var, offset } => UTime::Var(self.id(var), *offset),
        }
    }

    pub fn atom(&mut self, a: &Atom) -> UAtom {
        UAtom {
            pred: a.pred.clone(),
            args: a.args.iter().map(|t| self.term(t)).collect(),
            time: a.time.as_ref().map(|t| self.time(t)),
        }
    }
}

struct Template {
    head: UAtom,
    body: Vec<UAtom>,
    vars: Var,
}

impl Template {
    fn new(rule: &Rule) -> Self {
        let mut namer = Namer::default();
        let head = namer.atom(&rule.head);
        let body = rule.body.iter().map(|a| namer.atom(a)).collect();
        Template { head, body, vars: namer.ids.len() as Var }
    }
}

#[derive(Default)]
struct PredIndex {
    by_point: HashMap<i64, Vec<usize>>,
    other: Vec<usize>,
    all: Vec<usize>,
}

/// A program prepared for unfolding: rules indexed by head predicate and,
/// for ground head times, by time point.
pub(crate) struct Unfolder {
    templates: Vec<Template>,
    index: HashMap<Symbol, PredIndex>,
    edb: HashMap<Symbol, bool>,
}

impl Unfolder {
    pub fn new(program: &Program) -> Self {
        let templates: Vec<Template> = program.rules.iter().map(Template::new).collect();
        let mut index: HashMap<Symbol, PredIndex> = HashMap::new();
        for (i, t) in templates.iter().enumerate() {
            let entry = index.entry(t.head.pred.clone()).or_default();
            entry.all.push(i);
            match t.head.time {
                Some(UTime::Point(p)) => entry.by_point.entry(p).or_default().push(i),
                _ => entry.other.push(i),
            }
        }
        let edb = program.sigs.values().map(|s| (s.name.clone(), s.is_edb())).collect();
        Unfolder { templates, index, edb }
    }

    fn is_edb(&self, pred: &Symbol) -> bool {
        self.edb.get(pred).copied().unwrap_or(true)
    }

    fn count_candidates(&self, goal: &UAtom, space: &Space) -> usize {
        let Some(idx) = self.index.get(&goal.pred) else { return 0 };
        match goal.time.map(|t| space.resolve_time(t)) {
            Some(UTime::Point(p)) => idx.by_point.get(&p).map_or(0, Vec::len) + idx.other.len(),
            _ => idx.all.len(),
        }
    }

    fn candidates(&self, goal: &UAtom, space: &Space) -> Vec<usize> {
        let Some(idx) = self.index.get(&goal.pred) else { return Vec::new() };
        match goal.time.map(|t| space.resolve_time(t)) {
            Some(UTime::Point(p)) => {
                let mut out = idx.by_point.get(&p).cloned().unwrap_or_default();
                out.extend_from_slice(&idx.other);
                out
            }
            _ => idx.all.clone(),
        }
    }
}

/// Variable bindings with undo support.
#[derive(Clone, Debug, Default)]
pub(crate) struct Space {
    obj: Vec<Option<UObj>>,
    time: Vec<Option<UTime>>,
    frozen: Vec<bool>,
    trail: Vec<Var>,
}

#[derive(Clone, Copy)]
pub(crate) struct Mark {
    trail: usize,
    vars: usize,
}

impl Space {
    pub fn fresh(&mut self, n: Var) -> Var {
        self.alloc(n, false)
    }

    pub fn freeze(&mut self, n: Var) -> Var {
        self.alloc(n, true)
    }

    fn alloc(&mut self, n: Var, frozen: bool) -> Var {
        let base = self.obj.len() as Var;
        let new_len = self.obj.len() + n as usize;
        self.obj.resize(new_len, None);
        self.time.resize(new_len, None);
        self.frozen.resize(new_len, frozen);
        base
    }

    pub fn mark(&self) -> Mark {
        Mark { trail: self.trail.len(), vars: self.obj.len() }
    }

    pub fn undo(&mut self, mark: Mark) {
        for v in self.trail.drain(mark.trail..) {
            self.obj[v as usize] = None;
            self.time[v as usize] = None;
        }
        self.obj.truncate(mark.vars);
        self.time.truncate(mark.vars);
        self.frozen.truncate(mark.vars);
    }

    pub fn resolve_obj(&self, t: &UObj) -> UObj {
        let mut t = t.clone();
        while let UObj::Var(v) = t {
            match &self.obj[v as usize] {
                Some(next) => t = next.clone(),
                None => break,
            }
        }
        t
    }

    pub fn resolve_time(&self, t: UTime) -> UTime {
        let mut t = t;
        while let UTime::Var(v, o) = t {
            match self.time[v as usize] {
                Some(next) => t = next.shifted(o),
                None => break,
            }
        }
        t
    }

    pub fn resolve_atom(&self, a: &UAtom) -> UAtom {
        UAtom {
            pred: a.pred.clone(),
            args: a.args.iter().map(|t| self.resolve_obj(t)).collect(),
            time: a.time.map(|t| self.resolve_time(t)),
        }
    }

    fn free(&self, v: Var) -> bool {
        !self.frozen[v as usize]
    }

    fn unify_obj(&mut self, a: &UObj, b: &UObj) -> bool {
        let (a, b) = (self.resolve_obj(a), self.resolve_obj(b));
        if a == b {
            return true;
        }
        match (&a, &b) {
            (UObj::Var(v), _) if self.free(*v) => {
                self.obj[*v as usize] = Some(b);
                self.trail.push(*v);
                true
            }
            (_, UObj::Var(w)) if self.free(*w) => {
                self.obj[*w as usize] = Some(a);
                self.trail.push(*w);
                true
            }
            _ => false,
        }
    }

    fn bind_time(&mut self, v: Var, to: UTime) {
        self.time[v as usize] = Some(to);
        self.trail.push(v);
    }

    fn unify_time(&mut self, a: UTime, b: UTime) -> bool {
        let (a, b) = (self.resolve_time(a), self.resolve_time(b));
        match (a, b) {
            (UTime::Point(p), UTime::Point(q)) => p == q,
            (UTime::Var(v, o), UTime::Var(w, o2)) if v == w => o == o2,
            (UTime::Var(v, o), other) if self.free(v) => {
                self.bind_time(v, other.shifted(-o));
                true
            }
            (other, UTime::Var(w, o)) if self.free(w) => {
                self.bind_time(w, other.shifted(-o));
                true
            }
            _ => false,
        }
    }

    /// Unifies two atoms; on failure some bindings may remain, so callers
    /// undo to a mark taken beforehand.
    pub fn unify_atom(&mut self, a: &UAtom, b: &UAtom) -> bool {
        if a.pred != b.pred || a.args.len() != b.args.len() {
            return false;
        }
        for (x, y) in a.args.iter().zip(&b.args) {
            if !self.unify_obj(x, y) {
                return false;
            }
        }
        match (a.time, b.time) {
            (None, None) => true,
            (Some(s), Some(t)) => self.unify_time(s, t),
            _ => false,
        }
    }
}

const SUBSUMPTION_BUDGET: usize = 10_000;

/// The search ran into its budget of conjunctive queries or goals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct CapExceeded;

/// Depth-first unfolding of a goal list.
///
/// Without `facts`, EDB goals become leaves (or match embedded EDB facts) and
/// every maximal unfolding is reported with its leaves. With `facts`, the
/// search is resolution against the program plus those facts: every goal must
/// be resolved and a report means the initial goals are provable.
pub(crate) struct Search<'a> {
    unfolder: &'a Unfolder,
    pub space: Space,
    goals: Vec<UAtom>,
    leaves: Vec<UAtom>,
    facts: Option<&'a [UAtom]>,
    reported: usize,
    budget: usize,
    steps: usize,
    step_budget: usize,
}

impl<'a> Search<'a> {
    pub fn new(unfolder: &'a Unfolder, space: Space, cap: usize) -> Self {
        Search {
            unfolder,
            space,
            goals: Vec::new(),
            leaves: Vec::new(),
            facts: None,
            reported: 0,
            budget: cap,
            steps: 0,
            step_budget: cap.saturating_mul(1000),
        }
    }

    pub fn against(mut self, facts: &'a [UAtom]) -> Self {
        self.facts = Some(facts);
        self
    }

    pub fn run(
        &mut self,
        goal: UAtom,
        on_result: &mut dyn FnMut(&Space, &[UAtom]) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, CapExceeded> {
        self.goals.push(goal);
        let r = self.step(on_result);
        self.goals.clear();
        self.leaves.clear();
        r
    }

    fn step(&mut self, on_result: &mut dyn FnMut(&Space, &[UAtom]) -> ControlFlow<()>) -> Result<ControlFlow<()>, CapExceeded> {
        self.steps += 1;
        if self.steps > self.step_budget {
            return Err(CapExceeded);
        }
        let Some(i) = self.pick() else {
            self.reported += 1;
            if self.reported > self.budget {
                return Err(CapExceeded);
            }
            return Ok(on_result(&self.space, &self.leaves));
        };
        let goal = self.goals.remove(i);
        let depth = self.goals.len();
        let flow = if self.is_redundant(&goal) { self.step(on_result) } else { self.alternatives(&goal, depth, on_result) };
        self.goals.insert(i, goal);
        flow
    }

    /// Index of the pending goal with the fewest alternatives.
    fn pick(&self) -> Option<usize> {
        let cost = |g: &UAtom| match self.facts {
            Some(facts) => facts.iter().filter(|f| f.pred == g.pred).count() + self.unfolder.count_candidates(g, &self.space),
            None if self.unfolder.is_edb(&g.pred) => 0,
            None => self.unfolder.count_candidates(g, &self.space),
        };
        let mut best: Option<(usize, usize)> = None;
        for (i, g) in self.goals.iter().enumerate() {
            let c = cost(g);
            if best.is_none_or(|(_, b)| c < b) {
                best = Some((i, c));
                if c == 0 {
                    break;
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// A ground goal that already follows from the ground leaves collected
    /// so far. Every other way of unfolding it only adds body atoms, so the
    /// resulting disjuncts are subsumed and need not be produced.
    fn is_redundant(&mut self, goal: &UAtom) -> bool {
        if self.facts.is_some() {
            return false;
        }
        let g = self.space.resolve_atom(goal);
        if g.vars().next().is_some() {
            return false;
        }
        let ground: Vec<UAtom> =
            self.leaves.iter().map(|l| self.space.resolve_atom(l)).filter(|l| l.vars().next().is_none()).collect();
        if self.unfolder.is_edb(&g.pred) {
            return ground.contains(&g);
        }
        if self.unfolder.count_candidates(&g, &self.space) < 2 || ground.is_empty() {
            return false;
        }
        let mut found = false;
        let mut sub = Search::new(self.unfolder, Space::default(), SUBSUMPTION_BUDGET).against(&ground);
        let r = sub.run(g, &mut |_, _| {
            found = true;
            ControlFlow::Break(())
        });
        r.is_ok() && found
    }

    fn alternatives(
        &mut self,
        goal: &UAtom,
        depth: usize,
        on_result: &mut dyn FnMut(&Space, &[UAtom]) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, CapExceeded> {
        match self.facts {
            Some(facts) => {
                for fact in facts.iter().filter(|f| f.pred == goal.pred) {
                    let mark = self.space.mark();
                    let ok = self.space.unify_atom(goal, fact);
                    let flow = if ok { self.step(on_result)? } else { ControlFlow::Continue(()) };
                    self.space.undo(mark);
                    if flow.is_break() {
                        return Ok(flow);
                    }
                }
            }
            None if self.unfolder.is_edb(&goal.pred) => {
                self.leaves.push(goal.clone());
                let flow = self.step(on_result)?;
                self.leaves.pop();
                if flow.is_break() {
                    return Ok(flow);
                }
            }
            None => {}
        }
        for ti in self.unfolder.candidates(goal, &self.space) {
            let t = &self.unfolder.templates[ti];
            let mark = self.space.mark();
            let base = self.space.fresh(t.vars);
            let flow = if self.space.unify_atom(goal, &t.head.renamed(base)) {
                for b in t.body.iter().rev() {
                    self.goals.push(b.renamed(base));
                }
                let flow = self.step(on_result)?;
                self.goals.truncate(depth);
                flow
            } else {
                ControlFlow::Continue(())
            };
            self.space.undo(mark);
            if flow.is_break() {
                return Ok(flow);
            }
        }
        Ok(ControlFlow::Continue(()))
    }
}

/// A resolved conjunctive query with variables renumbered `0..vars` in order
/// of first occurrence (head first) and a sorted, duplicate-free body.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct FlatCq {
    pub head: UAtom,
    pub body: Vec<UAtom>,
    pub vars: Var,
}

impl FlatCq {
    pub fn capture(space: &Space, head: &UAtom, leaves: &[UAtom]) -> FlatCq {
        let head = space.resolve_atom(head);
        let mut body: Vec<UAtom> = leaves.iter().map(|l| space.resolve_atom(l)).collect();
        body.sort();
        body.dedup();
        let mut map: HashMap<Var, Var> = HashMap::new();
        for v in head.vars().chain(body.iter().flat_map(UAtom::vars)) {
            let next = map.len() as Var;
            map.entry(v).or_insert(next);
        }
        let rename = |a: &UAtom| {
            let mut a = a.clone();
            for t in &mut a.args {
                if let UObj::Var(v) = t {
                    *v = map[v];
                }
            }
            if let Some(UTime::Var(v, _)) = &mut a.time {
                *v = map[v];
            }
            a
        };
        let head = rename(&head);
        let mut body: Vec<UAtom> = body.iter().map(rename).collect();
        body.sort();
        body.dedup();
        FlatCq { head, body, vars: map.len() as Var }
    }
}
