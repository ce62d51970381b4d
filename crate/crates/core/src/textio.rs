//! Text formats: programs, datasets, stream files and answer records.
//!
//! Programs are sequences of `.`-terminated statements:
//!
//! ```text
//! % comment
//! @pred Temp/3 edb temporal.
//! @var x, y.
//! @query Shdn.
//! Temp(x, high, t) -> Flag(x, t).
//! Flag(x, t) & Flag(x, t+1) -> Cool(x, t+1).
//! Near(a, b).
//! ```
//!
//! In object positions an identifier is a variable when it starts with an
//! uppercase letter or `_`, or when it is listed by `@var`; everything else
//! (including integers) is an object. Any identifier in a time position is a
//! time variable. A predicate is temporal when declared so, when one of its
//! atoms ends in an integer or `v+k`/`v-k`, or when it ends in an identifier
//! that is a time variable elsewhere in the same rule.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use crate::error::ParseError;
use crate::model::{Atom, Dataset, Fact, Origin, PredicateSig, Program, Query, Rule, Shape, Symbol, Term, TimeTerm, Tuple};

// ------------------------------------------------------------------------------------------------
// Lexer
// ------------------------------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    And,
    Plus,
    Minus,
    Slash,
    At,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(i) => format!("`{i}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::And => "`&`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Slash => "`/`".into(),
        Tok::At => "`@`".into(),
    }
}

fn lex(text: &str, line_offset: usize) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1 + line_offset;
        let chars: Vec<char> = line.chars().collect();
        let mut j = 0;
        while j < chars.len() {
            let c = chars[j];
            let col = j + 1;
            let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: line_no, col });
            match c {
                '%' => break,
                c if c.is_whitespace() => j += 1,
                '(' => {
                    push(&mut out, Tok::LParen);
                    j += 1
                }
                ')' => {
                    push(&mut out, Tok::RParen);
                    j += 1
                }
                ',' => {
                    push(&mut out, Tok::Comma);
                    j += 1
                }
                '.' => {
                    push(&mut out, Tok::Dot);
                    j += 1
                }
                '&' | '∧' => {
                    push(&mut out, Tok::And);
                    j += 1
                }
                '→' => {
                    push(&mut out, Tok::Arrow);
                    j += 1
                }
                '+' => {
                    push(&mut out, Tok::Plus);
                    j += 1
                }
                '/' => {
                    push(&mut out, Tok::Slash);
                    j += 1
                }
                '@' => {
                    push(&mut out, Tok::At);
                    j += 1
                }
                '-' if chars.get(j + 1) == Some(&'>') => {
                    push(&mut out, Tok::Arrow);
                    j += 2
                }
                '-' => {
                    push(&mut out, Tok::Minus);
                    j += 1
                }
                c if c.is_ascii_digit() => {
                    let start = j;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    let s: String = chars[start..j].iter().collect();
                    let v = s.parse::<i64>().map_err(|_| ParseError::new(line_no, col, format!("integer {s} out of range")))?;
                    push(&mut out, Tok::Int(v));
                }
                c if c.is_alphabetic() || c == '_' => {
                    let start = j;
                    while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                        j += 1;
                    }
                    push(&mut out, Tok::Ident(chars[start..j].iter().collect()));
                }
                other => return Err(ParseError::new(line_no, col, format!("unexpected character `{other}`"))),
            }
        }
    }
    Ok(out)
}

// ------------------------------------------------------------------------------------------------
// Raw syntax
// ------------------------------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum RawArg {
    Ident(String),
    Int(i64),
    Offset(String, i64),
}

#[derive(Clone, Debug)]
struct RawAtom {
    pred: String,
    line: usize,
    col: usize,
    args: Vec<(RawArg, usize, usize)>,
}

#[derive(Clone, Debug)]
struct RawRule {
    head: RawAtom,
    body: Vec<RawAtom>,
}

#[derive(Clone, Debug)]
struct Decl {
    name: String,
    arity: usize,
    origin: Option<Origin>,
    shape: Option<Shape>,
    line: usize,
    col: usize,
}

#[derive(Default)]
struct RawSource {
    rules: Vec<RawRule>,
    decls: Vec<Decl>,
    vars: BTreeSet<String>,
    query: Option<(String, usize, usize)>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map_or(self.end, |t| (t.line, t.col))
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (l, c) = self.here();
        Err(ParseError::new(l, c, msg))
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.tok == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => {
                let msg = format!("expected {}, found {}", describe(&want), describe(&t.tok));
                self.err(msg)
            }
            None => self.err(format!("expected {}, found end of input", describe(&want))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize, usize), ParseError> {
        match self.peek() {
            Some(Token { tok: Tok::Ident(s), line, col }) => {
                let r = (s.clone(), *line, *col);
                self.pos += 1;
                Ok(r)
            }
            Some(t) => {
                let msg = format!("expected {what}, found {}", describe(&t.tok));
                self.err(msg)
            }
            None => self.err(format!("expected {what}, found end of input")),
        }
    }

    fn at(&self, tok: &Tok) -> bool {
        self.peek().is_some_and(|t| &t.tok == tok)
    }

    fn source(mut self) -> Result<RawSource, ParseError> {
        let mut src = RawSource::default();
        while self.peek().is_some() {
            if self.at(&Tok::At) {
                self.pos += 1;
                self.directive(&mut src)?;
            } else {
                src.rules.push(self.rule()?);
            }
        }
        Ok(src)
    }

    fn directive(&mut self, src: &mut RawSource) -> Result<(), ParseError> {
        let (kw, line, col) = self.ident("directive name")?;
        match kw.as_str() {
            "pred" => {
                let (name, l, c) = self.ident("predicate name")?;
                self.expect(Tok::Slash)?;
                let arity = match self.next() {
                    Some(Token { tok: Tok::Int(n), .. }) if n >= 0 => n as usize,
                    _ => {
                        self.pos -= 1;
                        return self.err("expected arity");
                    }
                };
                let mut decl = Decl { name, arity, origin: None, shape: None, line: l, col: c };
                while !self.at(&Tok::Dot) {
                    let (flag, fl, fc) = self.ident("`edb`, `idb`, `rigid` or `temporal`")?;
                    match flag.as_str() {
                        "edb" => decl.origin = Some(Origin::Edb),
                        "idb" => decl.origin = Some(Origin::Idb),
                        "rigid" => decl.shape = Some(Shape::Rigid),
                        "temporal" => decl.shape = Some(Shape::Temporal),
                        other => return Err(ParseError::new(fl, fc, format!("unknown predicate attribute `{other}`"))),
                    }
                }
                self.expect(Tok::Dot)?;
                src.decls.push(decl);
            }
            "query" => {
                let q = self.ident("output predicate")?;
                self.expect(Tok::Dot)?;
                src.query = Some(q);
            }
            "var" => {
                loop {
                    let (v, _, _) = self.ident("variable name")?;
                    src.vars.insert(v);
                    if self.at(&Tok::Comma) {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                self.expect(Tok::Dot)?;
            }
            other => return Err(ParseError::new(line, col, format!("unknown directive `@{other}`"))),
        }
        Ok(())
    }

    fn rule(&mut self) -> Result<RawRule, ParseError> {
        let mut atoms = vec![self.atom()?];
        while self.at(&Tok::Comma) || self.at(&Tok::And) {
            self.pos += 1;
            atoms.push(self.atom()?);
        }
        if self.at(&Tok::Arrow) {
            self.pos += 1;
            let head = self.atom()?;
            self.expect(Tok::Dot)?;
            Ok(RawRule { head, body: atoms })
        } else {
            if atoms.len() > 1 {
                return self.err("expected `->` after a conjunction");
            }
            self.expect(Tok::Dot)?;
            Ok(RawRule { head: atoms.pop().expect("one atom"), body: Vec::new() })
        }
    }

    fn atom(&mut self) -> Result<RawAtom, ParseError> {
        let (pred, line, col) = self.ident("predicate name")?;
        let mut args = Vec::new();
        if self.at(&Tok::LParen) {
            self.pos += 1;
            if self.at(&Tok::RParen) {
                self.pos += 1;
            } else {
                loop {
                    args.push(self.arg()?);
                    if self.at(&Tok::Comma) {
                        self.pos += 1;
                    } else {
                        self.expect(Tok::RParen)?;
                        break;
                    }
                }
            }
        }
        Ok(RawAtom { pred, line, col, args })
    }

    fn arg(&mut self) -> Result<(RawArg, usize, usize), ParseError> {
        let (line, col) = self.here();
        match self.next().map(|t| t.tok) {
            Some(Tok::Int(i)) => Ok((RawArg::Int(i), line, col)),
            Some(Tok::Minus) => match self.next().map(|t| t.tok) {
                Some(Tok::Int(i)) => Ok((RawArg::Int(-i), line, col)),
                _ => {
                    self.pos -= 1;
                    self.err("expected integer after `-`")
                }
            },
            Some(Tok::Ident(name)) => {
                let sign = if self.at(&Tok::Plus) {
                    1
                } else if self.at(&Tok::Minus) {
                    -1
                } else {
                    return Ok((RawArg::Ident(name), line, col));
                };
                self.pos += 1;
                match self.next().map(|t| t.tok) {
                    Some(Tok::Int(k)) => Ok((RawArg::Offset(name, sign * k), line, col)),
                    _ => {
                        self.pos -= 1;
                        self.err("expected integer offset")
                    }
                }
            }
            Some(other) => {
                self.pos -= 1;
                self.err(format!("expected a term, found {}", describe(&other)))
            }
            None => self.err("expected a term, found end of input"),
        }
    }
}

fn parse_raw(text: &str, line_offset: usize) -> Result<RawSource, ParseError> {
    let toks = lex(text, line_offset)?;
    let lines = text.lines().count() + line_offset;
    let last_col = text.lines().last().map_or(1, |l| l.chars().count() + 1);
    Parser { toks, pos: 0, end: (lines.max(1), last_col) }.source()
}

// ------------------------------------------------------------------------------------------------
// Resolution of raw syntax into the model
// ------------------------------------------------------------------------------------------------

/// A parsed program file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Source {
    pub program: Program,
    pub query: Option<Symbol>,
}

impl Source {
    /// The query selected by `@query`, or by `output` when given.
    pub fn into_query(self, output: Option<&str>) -> Result<Query, ParseError> {
        let output = match (output, self.query) {
            (Some(o), _) => Symbol::new(o),
            (None, Some(q)) => q,
            (None, None) => return Err(ParseError::new(1, 1, "no output predicate: add `@query Name.`")),
        };
        Ok(Query { output, program: self.program })
    }
}

fn is_variable_name(name: &str, vars: &BTreeSet<String>) -> bool {
    name.starts_with(|c: char| c.is_uppercase() || c == '_') || vars.contains(name)
}

fn arity_check(arities: &mut BTreeMap<String, usize>, atom: &RawAtom) -> Result<(), ParseError> {
    match arities.get(&atom.pred) {
        Some(&n) if n != atom.args.len() => Err(ParseError::new(
            atom.line,
            atom.col,
            format!("predicate {} used with {} arguments, earlier with {n}", atom.pred, atom.args.len()),
        )),
        _ => {
            arities.insert(atom.pred.clone(), atom.args.len());
            Ok(())
        }
    }
}

/// `t`, `t1`, `t'` and similar in the last argument mark a predicate as temporal.
fn is_time_var_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some('t' | 'T')) && chars.all(|c| c.is_ascii_digit() || c == '\'')
}

fn resolve(src: RawSource) -> Result<Source, ParseError> {
    let mut declared: BTreeMap<String, Decl> = BTreeMap::new();
    for d in &src.decls {
        if declared.insert(d.name.clone(), d.clone()).is_some() {
            return Err(ParseError::new(d.line, d.col, format!("predicate {} declared twice", d.name)));
        }
    }

    let mut arities = BTreeMap::new();
    for r in &src.rules {
        for a in std::iter::once(&r.head).chain(&r.body) {
            arity_check(&mut arities, a)?;
        }
    }

    // Temporal predicates by fixpoint over syntactic evidence.
    let mut temporal: BTreeSet<String> =
        declared.values().filter(|d| d.shape == Some(Shape::Temporal)).map(|d| d.name.clone()).collect();
    let rigid_declared = |p: &str| declared.get(p).is_some_and(|d| d.shape == Some(Shape::Rigid));
    for r in &src.rules {
        for a in std::iter::once(&r.head).chain(&r.body) {
            if let Some((last, l, c)) = a.args.last() {
                match last {
                    RawArg::Offset(..) if rigid_declared(&a.pred) => {
                        return Err(ParseError::new(*l, *c, format!("rigid predicate {} has a time term", a.pred)))
                    }
                    RawArg::Offset(..) => {
                        temporal.insert(a.pred.clone());
                    }
                    RawArg::Int(_) if !rigid_declared(&a.pred) => {
                        temporal.insert(a.pred.clone());
                    }
                    RawArg::Ident(v) if is_time_var_name(v) && !rigid_declared(&a.pred) => {
                        temporal.insert(a.pred.clone());
                    }
                    _ => {}
                }
            }
        }
    }
    loop {
        let mut changed = false;
        for r in &src.rules {
            let atoms: Vec<&RawAtom> = std::iter::once(&r.head).chain(&r.body).collect();
            let time_vars: BTreeSet<&str> = atoms
                .iter()
                .filter(|a| temporal.contains(&a.pred))
                .filter_map(|a| match a.args.last() {
                    Some((RawArg::Ident(v), _, _)) | Some((RawArg::Offset(v, _), _, _)) => Some(v.as_str()),
                    _ => None,
                })
                .collect();
            for a in &atoms {
                if temporal.contains(&a.pred) || rigid_declared(&a.pred) {
                    continue;
                }
                if let Some((RawArg::Ident(v), _, _)) = a.args.last() {
                    if time_vars.contains(v.as_str()) {
                        temporal.insert(a.pred.clone());
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let object_term = |arg: &RawArg, l: usize, c: usize| -> Result<Term, ParseError> {
        match arg {
            RawArg::Ident(name) if is_variable_name(name, &src.vars) => Ok(Term::Var(Symbol::new(name))),
            RawArg::Ident(name) => Ok(Term::Obj(Symbol::new(name))),
            RawArg::Int(i) => Ok(Term::Obj(Symbol::from(i.to_string()))),
            RawArg::Offset(..) => Err(ParseError::new(l, c, "time term in an object position")),
        }
    };
    let convert = |a: &RawAtom| -> Result<Atom, ParseError> {
        if temporal.contains(&a.pred) {
            let Some(((last, l, c), rest)) = a.args.split_last() else {
                return Err(ParseError::new(a.line, a.col, format!("temporal predicate {} needs a time argument", a.pred)));
            };
            let time = match last {
                RawArg::Int(i) => TimeTerm::Point(*i),
                RawArg::Ident(v) => TimeTerm::var(v),
                RawArg::Offset(v, k) => TimeTerm::var_offset(v, *k),
            };
            let _ = (l, c);
            let args = rest.iter().map(|(arg, l, c)| object_term(arg, *l, *c)).collect::<Result<_, _>>()?;
            Ok(Atom { pred: Symbol::new(&a.pred), args, time: Some(time) })
        } else {
            let args = a.args.iter().map(|(arg, l, c)| object_term(arg, *l, *c)).collect::<Result<_, _>>()?;
            Ok(Atom { pred: Symbol::new(&a.pred), args, time: None })
        }
    };

    let mut rules = Vec::with_capacity(src.rules.len());
    for r in &src.rules {
        let head = convert(&r.head)?;
        let body = r.body.iter().map(convert).collect::<Result<Vec<_>, _>>()?;
        rules.push(Rule { head, body });
    }

    let idb: BTreeSet<&str> = src.rules.iter().filter(|r| !r.body.is_empty()).map(|r| r.head.pred.as_str()).collect();
    let sigs = declared.values().map(|d| {
        let shape = d.shape.unwrap_or(if temporal.contains(&d.name) { Shape::Temporal } else { Shape::Rigid });
        let origin = d.origin.unwrap_or(if idb.contains(d.name.as_str()) { Origin::Idb } else { Origin::Edb });
        PredicateSig { name: Symbol::new(&d.name), arity: d.arity, shape, origin }
    });
    let program = Program::with_sigs(rules, sigs);
    Ok(Source { program, query: src.query.map(|(q, _, _)| Symbol::from(q)) })
}

/// Parses a program file, keeping the `@query` selection.
pub fn parse_source(text: &str) -> Result<Source, ParseError> {
    resolve(parse_raw(text, 0)?)
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    Ok(parse_source(text)?.program)
}

/// Parses a program file that selects its output with `@query`.
pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    parse_source(text)?.into_query(None)
}

fn dataset_from_raw(src: RawSource, program: Option<&Program>) -> Result<Vec<(Fact, usize, usize)>, ParseError> {
    if let Some((_, l, c)) = src.query {
        return Err(ParseError::new(l, c, "`@query` is not allowed in data"));
    }
    let declared: BTreeMap<String, Decl> = src.decls.iter().map(|d| (d.name.clone(), d.clone())).collect();
    let mut arities = BTreeMap::new();
    let mut out = Vec::new();
    for r in src.rules {
        let a = r.head;
        if !r.body.is_empty() {
            return Err(ParseError::new(a.line, a.col, "data may only contain facts"));
        }
        arity_check(&mut arities, &a)?;
        let shape = declared
            .get(&a.pred)
            .and_then(|d| d.shape)
            .or_else(|| program.and_then(|p| p.sig(&Symbol::new(&a.pred))).map(|s| s.shape))
            .unwrap_or(if matches!(a.args.last(), Some((RawArg::Int(_), _, _))) { Shape::Temporal } else { Shape::Rigid });
        let mut args = Vec::with_capacity(a.args.len());
        let mut time = None;
        let n = a.args.len();
        for (i, (arg, l, c)) in a.args.iter().enumerate() {
            let is_time = shape == Shape::Temporal && i + 1 == n;
            match (arg, is_time) {
                (RawArg::Int(t), true) => time = Some(*t),
                (_, true) => return Err(ParseError::new(*l, *c, "expected an integer time point")),
                (RawArg::Ident(s), false) if !is_variable_name(s, &BTreeSet::new()) => args.push(Symbol::new(s)),
                (RawArg::Int(v), false) => args.push(Symbol::from(v.to_string())),
                _ => return Err(ParseError::new(*l, *c, "facts must be ground")),
            }
        }
        if shape == Shape::Temporal && time.is_none() {
            return Err(ParseError::new(a.line, a.col, format!("temporal predicate {} needs a time argument", a.pred)));
        }
        out.push((Fact { pred: Symbol::new(&a.pred), args, time }, a.line, a.col));
    }
    Ok(out)
}

/// Parses a file of facts. Predicate shapes come from `@pred` lines in the
/// file, then from `program`, then from whether the last argument is an
/// integer.
pub fn parse_dataset(text: &str, program: Option<&Program>) -> Result<Dataset, ParseError> {
    Ok(dataset_from_raw(parse_raw(text, 0)?, program)?.into_iter().map(|(f, _, _)| f).collect())
}

// ------------------------------------------------------------------------------------------------
// Streams
// ------------------------------------------------------------------------------------------------

/// Facts arriving at one tick.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StreamEvent {
    pub tick: i64,
    pub facts: Dataset,
}

/// Incremental reader of `#tick τ` blocks. An event is produced once the
/// following header (or the end of input) has been read.
pub struct StreamReader<'p, R> {
    input: R,
    program: Option<&'p Program>,
    line_no: usize,
    pending: Option<(i64, usize)>,
    block: String,
    block_start: usize,
    previous: Option<i64>,
    done: bool,
}

impl<'p, R: BufRead> StreamReader<'p, R> {
    pub fn new(input: R, program: Option<&'p Program>) -> Self {
        StreamReader { input, program, line_no: 0, pending: None, block: String::new(), block_start: 0, previous: None, done: false }
    }

    fn finish_block(&mut self) -> Result<Option<StreamEvent>, ParseError> {
        let Some((tick, header_line)) = self.pending.take() else {
            return Ok(None);
        };
        let text = std::mem::take(&mut self.block);
        let facts = dataset_from_raw(parse_raw(&text, self.block_start)?, self.program)?;
        let mut dataset = Dataset::new();
        for (fact, l, c) in facts {
            if let Some(sig) = self.program.and_then(|p| p.sig(&fact.pred)) {
                if !sig.is_edb() {
                    return Err(ParseError::new(l, c, format!("{} is an IDB predicate; streams carry EDB facts only", fact.pred)));
                }
            }
            match fact.time {
                None => return Err(ParseError::new(l, c, format!("rigid fact {fact} in a stream"))),
                Some(t) if t != tick => {
                    return Err(ParseError::new(l, c, format!("fact {fact} does not hold at tick {tick}")));
                }
                Some(_) => {}
            }
            dataset.insert(fact);
        }
        let _ = header_line;
        Ok(Some(StreamEvent { tick, facts: dataset }))
    }

    fn read_event(&mut self) -> Result<Option<StreamEvent>, ParseError> {
        let mut line = String::new();
        loop {
            if self.done {
                return Ok(None);
            }
            line.clear();
            let n = self
                .input
                .read_line(&mut line)
                .map_err(|e| ParseError::new(self.line_no + 1, 1, format!("read error: {e}")))?;
            if n == 0 {
                self.done = true;
                return self.finish_block();
            }
            self.line_no += 1;
            let trimmed = line.trim();
            if let Some(rest) = trimmed.strip_prefix("#tick") {
                let col = line.find("#tick").unwrap_or(0) + 6;
                let tick: i64 = rest
                    .split('%')
                    .next()
                    .unwrap_or("")
                    .trim()
                    .parse()
                    .map_err(|_| ParseError::new(self.line_no, col, "expected an integer after `#tick`"))?;
                if let Some(prev) = self.previous {
                    if tick <= prev {
                        return Err(ParseError::new(
                            self.line_no,
                            col,
                            format!("tick {tick} does not increase on previous tick {prev}"),
                        ));
                    }
                }
                self.previous = Some(tick);
                let event = self.finish_block()?;
                self.pending = Some((tick, self.line_no));
                self.block_start = self.line_no;
                if event.is_some() {
                    return Ok(event);
                }
            } else {
                let content = trimmed.split('%').next().unwrap_or("").trim();
                if self.pending.is_none() {
                    if !content.is_empty() {
                        return Err(ParseError::new(self.line_no, 1, "facts before the first `#tick` header"));
                    }
                    continue;
                }
                self.block.push_str(&line);
                if !line.ends_with('\n') {
                    self.block.push('\n');
                }
            }
        }
    }
}

impl<R: BufRead> Iterator for StreamReader<'_, R> {
    type Item = Result<StreamEvent, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.read_event() {
            Ok(Some(e)) => Some(Ok(e)),
            Ok(None) => None,
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Parses a whole stream file.
pub fn parse_stream(text: &str, program: Option<&Program>) -> Result<Vec<StreamEvent>, ParseError> {
    StreamReader::new(text.as_bytes(), program).collect()
}

// ------------------------------------------------------------------------------------------------
// Rendering
// ------------------------------------------------------------------------------------------------

fn render_sig(sig: &PredicateSig) -> String {
    let origin = if sig.is_edb() { "edb" } else { "idb" };
    let shape = if sig.is_temporal() { "temporal" } else { "rigid" };
    format!("@pred {}/{} {origin} {shape}.", sig.name, sig.arity)
}

/// Renders a program so that [`parse_source`] reads it back unchanged.
pub fn render_program(program: &Program, query: Option<&Symbol>) -> String {
    let mut out = String::new();
    for sig in program.sigs.values() {
        out.push_str(&render_sig(sig));
        out.push('\n');
    }
    let lower_vars: BTreeSet<&Symbol> = program
        .rules
        .iter()
        .flat_map(|r| r.atoms().flat_map(|a| a.object_vars()))
        .filter(|v| !is_variable_name(v.as_str(), &BTreeSet::new()))
        .collect();
    if !lower_vars.is_empty() {
        let names: Vec<&str> = lower_vars.iter().map(|v| v.as_str()).collect();
        out.push_str(&format!("@var {}.\n", names.join(", ")));
    }
    if let Some(q) = query {
        out.push_str(&format!("@query {q}.\n"));
    }
    for rule in &program.rules {
        out.push_str(&rule.to_string());
        out.push('\n');
    }
    out
}

fn dataset_sigs(dataset: &Dataset) -> BTreeMap<&Symbol, (usize, bool)> {
    dataset.iter().map(|f| (&f.pred, (f.args.len() + usize::from(f.is_temporal()), f.is_temporal()))).collect()
}

/// Renders a dataset with shape declarations so that it parses back exactly.
pub fn render_dataset(dataset: &Dataset) -> String {
    let mut out = String::new();
    for (pred, (arity, temporal)) in dataset_sigs(dataset) {
        let shape = if temporal { "temporal" } else { "rigid" };
        out.push_str(&format!("@pred {pred}/{arity} edb {shape}.\n"));
    }
    for f in dataset {
        out.push_str(&format!("{f}.\n"));
    }
    out
}

pub fn render_stream(events: &[StreamEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&format!("#tick {}\n", e.tick));
        for f in &e.facts {
            out.push_str(&format!("{f}.\n"));
        }
    }
    out
}

#[derive(serde::Serialize)]
struct AnswerRecord<'a> {
    t_out: i64,
    pred: &'a str,
    tuple: Vec<&'a str>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    empty: bool,
}

fn record(rec: &AnswerRecord<'_>) -> String {
    serde_json::to_string(rec).expect("answer records always serialize")
}

/// One NDJSON record per answer tuple, in tuple order. An empty answer set
/// renders as no lines.
pub fn render_answers<'a>(pred: &Symbol, t_out: i64, answers: impl IntoIterator<Item = &'a Tuple>) -> Vec<String> {
    let mut tuples: Vec<&Tuple> = answers.into_iter().collect();
    tuples.sort();
    tuples.dedup();
    tuples
        .into_iter()
        .map(|t| {
            let tuple = t.iter().map(Symbol::as_str).collect();
            record(&AnswerRecord { t_out, pred: pred.as_str(), tuple, empty: false })
        })
        .collect()
}

/// Record announcing that the answers at `t_out` are definitive and empty.
pub fn render_empty(pred: &Symbol, t_out: i64) -> String {
    record(&AnswerRecord { t_out, pred: pred.as_str(), tuple: Vec::new(), empty: true })
}
