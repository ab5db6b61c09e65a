//! Static validation: range restriction, built-in orderability, arity
//! consistency. Returns diagnostics instead of failing fast so a caller can
//! report every problem at once.

use std::collections::HashSet;
use std::fmt;

use super::ast::{Literal, Program, Rule, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    /// A head variable is not bound by any positive body atom or binding
    /// built-in.
    RangeRestriction,
    /// No admissible placement binds a built-in's inputs.
    UnorderableBuiltin,
    /// A rule body contains no relation atom.
    NoRelationAtom,
    /// An atom's term count disagrees with the relation's arity.
    ArityMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub rule: Option<u32>,
    pub relation: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rule {
            Some(id) => write!(f, "rule {}: {}", id, self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn term_vars<'a>(t: &'a Term, out: &mut Vec<&'a str>) {
    if let Term::Var(v) = t {
        out.push(v);
    }
}

/// Variables a built-in needs bound before it can run.
fn builtin_inputs(lit: &Literal) -> Vec<&str> {
    let mut vars = Vec::new();
    match lit {
        Literal::Cmp { lhs, rhs, .. } => {
            term_vars(lhs, &mut vars);
            term_vars(rhs, &mut vars);
        }
        Literal::Bind { lhs, rhs, .. } => {
            term_vars(lhs, &mut vars);
            term_vars(rhs, &mut vars);
        }
        Literal::Atom(_) => {}
    }
    vars
}

fn render_builtin(p: &Program, lit: &Literal) -> String {
    let term = |t: &Term| match t {
        Term::Var(v) => v.clone(),
        Term::Const(c) => p.pool.display(*c),
    };
    match lit {
        Literal::Cmp { op, lhs, rhs } => format!("{} {} {}", term(lhs), op.symbol(), term(rhs)),
        Literal::Bind { target, op, lhs, rhs } => {
            format!("{} = {} {} {}", target, term(lhs), op.symbol(), term(rhs))
        }
        Literal::Atom(_) => unreachable!("not a built-in"),
    }
}

/// Simulates evaluating the rule body with relation atoms in textual order
/// and built-ins floated to their earliest admissible slot. Returns the set
/// of variables bound at the end plus the built-ins that never became
/// placeable.
pub(crate) fn admissible_placement<'a>(rule: &'a Rule) -> (HashSet<&'a str>, Vec<usize>) {
    let mut bound: HashSet<&str> = HashSet::new();
    let mut pending: Vec<usize> = rule
        .body
        .iter()
        .enumerate()
        .filter(|(_, l)| !matches!(l, Literal::Atom(_)))
        .map(|(i, _)| i)
        .collect();

    let place_ready = |bound: &mut HashSet<&'a str>, pending: &mut Vec<usize>| loop {
        let mut progressed = false;
        pending.retain(|&i| {
            let lit = &rule.body[i];
            if builtin_inputs(lit).iter().all(|v| bound.contains(v)) {
                if let Literal::Bind { target, .. } = lit {
                    bound.insert(target);
                }
                progressed = true;
                false
            } else {
                true
            }
        });
        if !progressed {
            break;
        }
    };

    for lit in &rule.body {
        place_ready(&mut bound, &mut pending);
        if let Literal::Atom(atom) = lit {
            for t in &atom.terms {
                if let Term::Var(v) = t {
                    bound.insert(v);
                }
            }
        }
    }
    place_ready(&mut bound, &mut pending);
    (bound, pending)
}

/// Checks every rule; an empty result means the program is evaluable.
pub fn validate(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for rule in &p.rules {
        let head_rel = p.relation_name(rule.head.rel).to_string();
        if rule.head.terms.len() != p.arity(rule.head.rel) {
            out.push(Diagnostic {
                kind: DiagnosticKind::ArityMismatch,
                rule: Some(rule.id),
                relation: Some(head_rel.clone()),
                message: format!(
                    "head of `{}` has {} terms but the relation has arity {}",
                    head_rel,
                    rule.head.terms.len(),
                    p.arity(rule.head.rel)
                ),
            });
        }
        for atom in rule.body.iter().filter_map(|l| l.as_atom()) {
            if atom.terms.len() != p.arity(atom.rel) {
                out.push(Diagnostic {
                    kind: DiagnosticKind::ArityMismatch,
                    rule: Some(rule.id),
                    relation: Some(p.relation_name(atom.rel).to_string()),
                    message: format!(
                        "atom `{}` has {} terms but the relation has arity {}",
                        p.relation_name(atom.rel),
                        atom.terms.len(),
                        p.arity(atom.rel)
                    ),
                });
            }
        }
        if !rule.body.iter().any(|l| matches!(l, Literal::Atom(_))) {
            out.push(Diagnostic {
                kind: DiagnosticKind::NoRelationAtom,
                rule: Some(rule.id),
                relation: Some(head_rel.clone()),
                message: format!("rule for `{head_rel}` has no relation atom in its body"),
            });
            continue;
        }

        let (bound, unplaced) = admissible_placement(rule);
        for i in unplaced {
            out.push(Diagnostic {
                kind: DiagnosticKind::UnorderableBuiltin,
                rule: Some(rule.id),
                relation: Some(head_rel.clone()),
                message: format!(
                    "built-in `{}` has inputs that no admissible order can bind",
                    render_builtin(p, &rule.body[i])
                ),
            });
        }
        for t in &rule.head.terms {
            if let Term::Var(v) = t {
                if !bound.contains(v.as_str()) {
                    out.push(Diagnostic {
                        kind: DiagnosticKind::RangeRestriction,
                        rule: Some(rule.id),
                        relation: Some(head_rel.clone()),
                        message: format!(
                            "head variable `{v}` of `{head_rel}` is not bound by the body"
                        ),
                    });
                }
            }
        }
    }
    out
}
