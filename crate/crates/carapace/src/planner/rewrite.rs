//! Static rewrites applied to the rule AST before lowering.
//!
//! Implemented rewrites: alias elimination (a relation defined by a single
//! rule whose body is one atom over the same distinct variables in the same
//! order is inlined into its consumers and dropped) and constant-filter
//! pushdown (constants in body atoms become scan filters; the recording
//! happens structurally when descriptors are built, see
//! [`super::lower`]).

use crate::frontend::{Literal, Program, RelId};

/// Returns the body relation an alias rule forwards to, if `rel` is an
/// alias: exactly one rule, body is a single atom, head and body terms are
/// the same distinct variables in the same order.
fn alias_target(p: &Program, rel: RelId) -> Option<RelId> {
    let mut rules = p.rules_for(rel);
    let rule = rules.next()?;
    if rules.next().is_some() {
        return None;
    }
    if rule.body.len() != 1 {
        return None;
    }
    let Literal::Atom(body) = &rule.body[0] else {
        return None;
    };
    if body.rel == rel {
        return None;
    }
    if rule.head.terms.len() != body.terms.len() {
        return None;
    }
    let mut seen = std::collections::HashSet::new();
    for (h, b) in rule.head.terms.iter().zip(&body.terms) {
        match (h.as_var(), b.as_var()) {
            (Some(hv), Some(bv)) if hv == bv && seen.insert(hv) => {}
            _ => return None,
        }
    }
    Some(body.rel)
}

/// Applies the static rewrites, preserving the program's fixpoint. An alias
/// with at least one consumer is inlined into all of them and, being unused
/// afterwards, loses its defining rule; consumer-less aliases are program
/// outputs and stay as written.
pub fn rewrite(p: &Program) -> Program {
    let mut out = p.clone();
    loop {
        let alias = out.relation_ids().find_map(|rel| {
            let target = alias_target(&out, rel)?;
            let alias_rule_id = out.rules_for(rel).next().unwrap().id;
            let consumed = out.rules.iter().any(|r| {
                r.id != alias_rule_id
                    && r.body
                        .iter()
                        .filter_map(|l| l.as_atom())
                        .any(|a| a.rel == rel)
            });
            consumed.then_some((rel, target, alias_rule_id))
        });
        let Some((alias_rel, target, alias_rule_id)) = alias else {
            break;
        };
        // Inline every consumer occurrence. The alias maps positionally, so
        // the occurrence's terms carry over unchanged.
        for rule in &mut out.rules {
            if rule.id == alias_rule_id {
                continue;
            }
            for lit in &mut rule.body {
                if let Literal::Atom(a) = lit {
                    if a.rel == alias_rel {
                        a.rel = target;
                    }
                }
            }
        }
        out.rules.retain(|r| r.id != alias_rule_id);
    }
    out
}
