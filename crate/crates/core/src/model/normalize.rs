use super::{Atom, Dataset, Fact, PredicateSig, Program, Query, Rule, Shape, Symbol, TimeTerm};

/// Name of the temporal twin that replaces a rigid predicate.
pub fn rigid_twin_name(pred: &Symbol) -> Symbol {
    Symbol::from(format!("{pred}__t"))
}

fn normalize_atom(atom: &Atom, program: &Program) -> Atom {
    if atom.is_temporal() || program.is_temporal(&atom.pred) {
        return atom.clone();
    }
    Atom { pred: rigid_twin_name(&atom.pred), args: atom.args.clone(), time: Some(TimeTerm::Point(0)) }
}

/// Replaces every rigid predicate `P` of the query by a temporal twin whose
/// atoms carry the time point 0. A rigid output predicate is renamed too, so
/// its answers appear at time 0.
pub fn normalize_rigid_atoms(query: &Query) -> Query {
    let program = &query.program;
    let rules = program
        .rules
        .iter()
        .map(|r| Rule { head: normalize_atom(&r.head, program), body: r.body.iter().map(|a| normalize_atom(a, program)).collect() })
        .collect();
    let sigs = program.sigs.values().map(|s| match s.shape {
        Shape::Temporal => s.clone(),
        Shape::Rigid => PredicateSig { name: rigid_twin_name(&s.name), arity: s.arity + 1, shape: Shape::Temporal, origin: s.origin },
    });
    let output = if program.is_temporal(&query.output) || program.sig(&query.output).is_none() {
        query.output.clone()
    } else {
        rigid_twin_name(&query.output)
    };
    Query { output, program: Program::with_sigs(rules, sigs) }
}

/// Maps every rigid fact `P(c̄)` to `P__t(c̄, 0)`.
pub fn normalize_dataset(dataset: &Dataset) -> Dataset {
    dataset
        .iter()
        .map(|f| match f.time {
            Some(_) => f.clone(),
            None => Fact { pred: rigid_twin_name(&f.pred), args: f.args.clone(), time: Some(0) },
        })
        .collect()
}
