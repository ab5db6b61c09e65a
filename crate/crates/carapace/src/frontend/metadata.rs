//! Per-rule shape analysis: where variables and constants sit in each body
//! atom, which positions repeat a variable, and how the head projects out of
//! the body.

use super::ast::{ConstId, Program, Rule, Term};

/// Positional shape of one body relation atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomShape {
    /// `(position, variable name)` for every variable occurrence.
    pub vars: Vec<(usize, String)>,
    /// `(position, constant)` pairs, the seeds for filter pushdown.
    pub consts: Vec<(usize, ConstId)>,
    /// `(later position, earlier position)` pairs where the same variable
    /// occurs twice within this atom.
    pub repeats: Vec<(usize, usize)>,
}

impl AtomShape {
    pub fn analyze(terms: &[Term]) -> Self {
        let mut vars = Vec::new();
        let mut consts = Vec::new();
        let mut repeats = Vec::new();
        for (pos, term) in terms.iter().enumerate() {
            match term {
                Term::Const(c) => consts.push((pos, *c)),
                Term::Var(name) => {
                    if let Some(&(first, _)) =
                        vars.iter().find(|(_, n): &&(usize, String)| n == name)
                    {
                        repeats.push((pos, first));
                    } else {
                        vars.push((pos, name.clone()));
                    }
                }
            }
        }
        Self { vars, consts, repeats }
    }
}

/// Where one head term comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HeadSource {
    /// A constant in the head.
    Const(ConstId),
    /// First binding occurrence in body relation atom `atom` at `pos`
    /// (indices over the rule's relation atoms in textual order).
    Atom { atom: usize, pos: usize },
    /// Bound only by a binding built-in; resolved by name at plan time.
    Var(String),
}

/// Shape metadata for one rule: per-atom positions plus the head projection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleMetadata {
    /// One entry per body relation atom, in textual order.
    pub atoms: Vec<AtomShape>,
    /// One entry per head term.
    pub head: Vec<HeadSource>,
}

impl RuleMetadata {
    pub fn analyze(_program: &Program, rule: &Rule) -> Self {
        let atom_terms: Vec<&[Term]> = rule
            .body
            .iter()
            .filter_map(|l| l.as_atom().map(|a| a.terms.as_slice()))
            .collect();
        let atoms: Vec<AtomShape> = atom_terms.iter().map(|t| AtomShape::analyze(t)).collect();
        let head = rule
            .head
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => HeadSource::Const(*c),
                Term::Var(name) => {
                    for (ai, shape) in atoms.iter().enumerate() {
                        if let Some(&(pos, _)) = shape.vars.iter().find(|(_, n)| n == name) {
                            return HeadSource::Atom { atom: ai, pos };
                        }
                    }
                    HeadSource::Var(name.clone())
                }
            })
            .collect();
        Self { atoms, head }
    }
}
