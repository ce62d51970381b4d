use crate::error::DecisionError;
use crate::model::{analyze, Atom, ProgramAnalysis, Origin, PredicateSig, Program, Query, Rule, Shape, Symbol, Term, TimeTerm};

/// Name of the output introduced by [`temporal_grounding`].
pub fn grounded_output_name(output: &Symbol) -> Symbol {
    Symbol::from(format!("{output}__g"))
}

/// Checks that a query is nonrecursive, connected and free of time points.
pub(crate) fn require_plain(query: &Query) -> Result<ProgramAnalysis, DecisionError> {
    let analysis = analyze(&query.program);
    let output = query.output.clone();
    if !analysis.is_nonrecursive {
        return Err(DecisionError::Recursive { output });
    }
    if !analysis.is_connected {
        return Err(DecisionError::Disconnected { output });
    }
    if analysis.has_time_points {
        return Err(DecisionError::HasTimePoints { output });
    }
    Ok(analysis)
}

/// Rules with a rigid head. In a connected program without time points their
/// bodies are rigid as well, so these rules define every rigid predicate.
pub fn rigid_subquery(query: &Query) -> Query {
    let rules = query.program.rules.iter().filter(|r| !r.head.is_temporal()).cloned().collect();
    let sigs = query.program.sigs.values().filter(|s| !s.is_temporal()).cloned();
    Query { output: query.output.clone(), program: Program::with_sigs(rules, sigs) }
}

fn ground_rule(rule: &Rule, lo: i64, hi: i64, out: &mut Vec<Rule>) {
    let offsets: Vec<i64> = rule.atoms().filter_map(|a| a.time.as_ref()).map(TimeTerm::offset).collect();
    if rule.time_vars().is_empty() {
        out.push(rule.clone());
        return;
    }
    let min = offsets.iter().copied().min().unwrap_or(0);
    let max = offsets.iter().copied().max().unwrap_or(0);
    for tau in (lo - min)..=(hi - max) {
        out.push(rule.map_times(|t| match t {
            TimeTerm::Var { offset, .. } => TimeTerm::Point(tau + offset),
            p => p.clone(),
        }));
    }
}

/// Grounds every rule on the time points `[0, 2m]` and adds
/// `G(x̄, m) -> G'(x̄, m)` for the output `G`; the result has output `G'`.
///
/// For a rigid output only the rigid part of the program matters and is
/// returned unchanged.
pub fn temporal_grounding(query: &Query, m: u64) -> Result<Query, DecisionError> {
    require_plain(query)?;
    if !query.is_temporal() {
        return Ok(rigid_subquery(query));
    }
    let m = m as i64;
    let mut rules = Vec::new();
    for rule in &query.program.rules {
        ground_rule(rule, 0, 2 * m, &mut rules);
    }
    let arity = query.output_object_arity();
    let vars: Vec<Term> = (0..arity).map(|i| Term::var(&format!("__x{i}"))).collect();
    let out = grounded_output_name(&query.output);
    rules.push(Rule::new(
        Atom { pred: out.clone(), args: vars.clone(), time: Some(TimeTerm::Point(m)) },
        vec![Atom { pred: query.output.clone(), args: vars, time: Some(TimeTerm::Point(m)) }],
    ));
    let mut sigs: Vec<PredicateSig> = query.program.sigs.values().cloned().collect();
    sigs.push(PredicateSig { name: out.clone(), arity: arity + 1, shape: Shape::Temporal, origin: Origin::Idb });
    Ok(Query { output: out, program: Program::with_sigs(rules, sigs) })
}
