use std::collections::BTreeSet;
use std::fmt;

use super::{Origin, Program, Query, Rule, Shape, Symbol};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidationKind {
    UndeclaredPredicate { pred: Symbol },
    ArityMismatch { pred: Symbol, expected: usize, found: usize },
    SortMismatch { pred: Symbol, expected: Shape },
    EmptyTemporalSignature { pred: Symbol },
    EdbHead { pred: Symbol },
    Unsafe { var: Symbol },
    VariableSortConflict { var: Symbol },
    ReservedName { name: Symbol },
    UnknownOutput { pred: Symbol },
    OutputNotIdb { pred: Symbol },
}

/// A single violated constraint. `rule` is the index of the offending rule,
/// when the violation is local to one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationError {
    pub rule: Option<usize>,
    pub kind: ValidationKind,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(i) = self.rule {
            write!(f, "rule {}: ", i + 1)?;
        }
        match &self.kind {
            ValidationKind::UndeclaredPredicate { pred } => write!(f, "predicate {pred} has no signature"),
            ValidationKind::ArityMismatch { pred, expected, found } => {
                write!(f, "predicate {pred} expects {expected} arguments, found {found}")
            }
            ValidationKind::SortMismatch { pred, expected: Shape::Temporal } => {
                write!(f, "predicate {pred} is temporal but the atom has no time argument")
            }
            ValidationKind::SortMismatch { pred, expected: Shape::Rigid } => {
                write!(f, "predicate {pred} is rigid but the atom has a time argument")
            }
            ValidationKind::EmptyTemporalSignature { pred } => {
                write!(f, "temporal predicate {pred} needs at least the time position")
            }
            ValidationKind::EdbHead { pred } => write!(f, "EDB predicate {pred} heads a rule with a non-empty body"),
            ValidationKind::Unsafe { var } => write!(f, "head variable {var} does not occur in the body"),
            ValidationKind::VariableSortConflict { var } => {
                write!(f, "variable {var} is used both as an object and as a time variable")
            }
            ValidationKind::ReservedName { name } => write!(f, "name {name} uses the reserved prefix `__`"),
            ValidationKind::UnknownOutput { pred } => write!(f, "output predicate {pred} does not occur in the program"),
            ValidationKind::OutputNotIdb { pred } => write!(f, "output predicate {pred} is not IDB"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<ValidationError>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Checks a user program: structure plus the reserved-name rule.
pub fn validate(program: &Program) -> ValidationReport {
    let mut report = validate_structure(program);
    let mut seen = BTreeSet::new();
    for (i, rule) in program.rules.iter().enumerate() {
        for atom in rule.atoms() {
            let names = std::iter::once(&atom.pred)
                .chain(atom.args.iter().map(|t| match t {
                    super::Term::Var(s) | super::Term::Obj(s) => s,
                }))
                .chain(atom.time_var());
            for name in names {
                if name.is_reserved() && seen.insert(name.clone()) {
                    report.errors.push(ValidationError { rule: Some(i), kind: ValidationKind::ReservedName { name: name.clone() } });
                }
            }
        }
    }
    report
}

/// Checks sorts, arities, safety and head origins. Names introduced by the
/// decision procedures are allowed.
pub fn validate_structure(program: &Program) -> ValidationReport {
    let mut errors = Vec::new();
    for sig in program.sigs.values() {
        if sig.shape == Shape::Temporal && sig.arity == 0 {
            errors.push(ValidationError { rule: None, kind: ValidationKind::EmptyTemporalSignature { pred: sig.name.clone() } });
        }
    }
    for (i, rule) in program.rules.iter().enumerate() {
        check_rule(program, i, rule, &mut errors);
    }
    ValidationReport { errors }
}

fn check_rule(program: &Program, index: usize, rule: &Rule, errors: &mut Vec<ValidationError>) {
    let mut push = |kind| errors.push(ValidationError { rule: Some(index), kind });
    for atom in rule.atoms() {
        let Some(sig) = program.sig(&atom.pred) else {
            push(ValidationKind::UndeclaredPredicate { pred: atom.pred.clone() });
            continue;
        };
        let expected = if atom.is_temporal() { Shape::Temporal } else { Shape::Rigid };
        if expected != sig.shape {
            push(ValidationKind::SortMismatch { pred: atom.pred.clone(), expected: sig.shape });
        } else if atom.arity() != sig.arity {
            push(ValidationKind::ArityMismatch { pred: atom.pred.clone(), expected: sig.arity, found: atom.arity() });
        }
    }
    if !rule.is_fact() && program.sig(&rule.head.pred).is_some_and(|s| s.origin == Origin::Edb) {
        push(ValidationKind::EdbHead { pred: rule.head.pred.clone() });
    }

    let body_objects: BTreeSet<&Symbol> = rule.body.iter().flat_map(|a| a.object_vars()).collect();
    let body_times: BTreeSet<&Symbol> = rule.body.iter().filter_map(|a| a.time_var()).collect();
    let mut reported = BTreeSet::new();
    for v in rule.head.object_vars() {
        if !body_objects.contains(v) && reported.insert(v) {
            push(ValidationKind::Unsafe { var: v.clone() });
        }
    }
    if let Some(v) = rule.head.time_var() {
        if !body_times.contains(v) && reported.insert(v) {
            push(ValidationKind::Unsafe { var: v.clone() });
        }
    }

    let objects: BTreeSet<&Symbol> = rule.atoms().flat_map(|a| a.object_vars()).collect();
    let times: BTreeSet<&Symbol> = rule.atoms().filter_map(|a| a.time_var()).collect();
    for v in objects.intersection(&times) {
        push(ValidationKind::VariableSortConflict { var: (*v).clone() });
    }
}

impl Query {
    /// Validates the program and checks that the output is an IDB predicate
    /// of the program.
    pub fn validate(&self) -> ValidationReport {
        let mut report = validate(&self.program);
        self.check_output(&mut report);
        report
    }

    pub fn validate_structure(&self) -> ValidationReport {
        let mut report = validate_structure(&self.program);
        self.check_output(&mut report);
        report
    }

    fn check_output(&self, report: &mut ValidationReport) {
        match self.program.sig(&self.output) {
            None => report.errors.push(ValidationError { rule: None, kind: ValidationKind::UnknownOutput { pred: self.output.clone() } }),
            Some(sig) if sig.origin != Origin::Idb => {
                report.errors.push(ValidationError { rule: None, kind: ValidationKind::OutputNotIdb { pred: self.output.clone() } })
            }
            Some(_) => {}
        }
    }
}
