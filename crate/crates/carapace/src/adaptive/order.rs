//! Runtime join-order selection: sort body literals by live cardinality and
//! selectivity, then repair the order to admissibility. The same machinery
//! pre-sorts rule bodies ahead of time from whatever is known before
//! execution (rule shapes alone, or rule shapes plus initial fact counts).

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::{Literal, Program, RelId, RelKind, Term};
use crate::planner::{is_admissible, CqArg, CqDescriptor, CqLiteral, IrOp, NodeId};
use crate::storage::CardinalitySnapshot;

use super::{PresortMode, SortPolicy};

/// Sort key of one body literal at a candidate position.
///
/// Cardinality is the exact live count of the literal's view (built-ins: 0).
/// Selectivity is `1 - bound/arity` where bound counts constant positions,
/// repeated-variable positions, and positions whose variable is bound by
/// literals placed earlier in the order under construction: a fully constant
/// atom scores 0, an all-distinct-free-variable atom scores 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderKey {
    pub cardinality: usize,
    pub selectivity: f64,
}

impl OrderKey {
    fn by(self, policy: SortPolicy) -> (f64, f64) {
        match policy {
            SortPolicy::CardinalityThenSelectivity => (self.cardinality as f64, self.selectivity),
            SortPolicy::SelectivityThenCardinality => (self.selectivity, self.cardinality as f64),
            SortPolicy::None => (0.0, 0.0),
        }
    }
}

/// Key of one literal with boundness taken from the variables bound so far.
/// Evaluating selectivity against the order being built (rather than the old
/// permutation) keeps the score honest: an atom only counts a position as
/// bound if something actually placed before it binds that variable.
pub fn literal_key(
    lit: &CqLiteral,
    bound: &BTreeSet<u16>,
    snap: &CardinalitySnapshot,
) -> OrderKey {
    match lit {
        CqLiteral::Atom {
            rel,
            view,
            vars,
            const_filters,
            self_eqs,
        } => {
            let arity = vars.len();
            let mut bound_positions = const_filters.len() + self_eqs.len();
            for (pos, v) in vars.iter().enumerate() {
                let Some(v) = v else { continue };
                // Repeated positions are already counted via self_eqs.
                if vars[..pos].contains(&Some(*v)) {
                    continue;
                }
                if bound.contains(v) {
                    bound_positions += 1;
                }
            }
            let selectivity = if arity == 0 {
                0.0
            } else {
                1.0 - bound_positions as f64 / arity as f64
            };
            OrderKey {
                cardinality: snap.count(*rel, *view).unwrap_or(0),
                selectivity,
            }
        }
        CqLiteral::Cmp { .. } | CqLiteral::Bind { .. } => OrderKey {
            cardinality: 0,
            selectivity: 0.0,
        },
    }
}

/// Greedy admissibility repair over literal indices in `preferred` order:
/// each slot takes the earliest preferred literal whose binding inputs are
/// available, deferring the rest without disturbing their relative order.
pub fn repair_order(literals: &[CqLiteral], preferred: &[usize]) -> Vec<usize> {
    repair(literals, preferred)
}

fn repair(literals: &[CqLiteral], preferred: &[usize]) -> Vec<usize> {
    let mut remaining: Vec<usize> = preferred.to_vec();
    let mut result = Vec::with_capacity(remaining.len());
    let mut bound: BTreeSet<u16> = BTreeSet::new();
    let arg_ok = |a: &CqArg, bound: &BTreeSet<u16>| match a {
        CqArg::Var(v) => bound.contains(v),
        CqArg::Const(_) => true,
    };
    while !remaining.is_empty() {
        let pos = remaining.iter().position(|&i| match &literals[i] {
            CqLiteral::Atom { .. } => true,
            CqLiteral::Cmp { lhs, rhs, .. } | CqLiteral::Bind { lhs, rhs, .. } => {
                arg_ok(lhs, &bound) && arg_ok(rhs, &bound)
            }
        });
        let pos = pos.expect("validated body always admits an order");
        let idx = remaining.remove(pos);
        match &literals[idx] {
            CqLiteral::Atom { vars, .. } => {
                for v in vars.iter().flatten() {
                    bound.insert(*v);
                }
            }
            CqLiteral::Bind { target, .. } => {
                bound.insert(*target);
            }
            CqLiteral::Cmp { .. } => {}
        }
        result.push(idx);
    }
    result
}

/// Computes a new admissible permutation for one conjunctive query from a
/// cardinality snapshot.
///
/// Each slot takes the admissible literal with the smallest key, ties broken
/// by textual position, with selectivity evaluated against the variables the
/// chosen prefix actually binds. This performs the stable
/// cardinality/selectivity sort and the admissibility repair in one pass:
/// all-equal keys return the identity permutation, literals whose binding
/// inputs are unavailable are deferred without disturbing their relative
/// order, and built-ins (cardinality 0) land at their earliest admissible
/// slot. `SortPolicy::None` returns the current permutation unchanged.
pub fn order(d: &CqDescriptor, snap: &CardinalitySnapshot, policy: SortPolicy) -> Vec<usize> {
    if policy == SortPolicy::None {
        return d.permutation.clone();
    }
    let arg_ok = |a: &CqArg, bound: &BTreeSet<u16>| match a {
        CqArg::Var(v) => bound.contains(v),
        CqArg::Const(_) => true,
    };
    let mut remaining: Vec<usize> = (0..d.literals.len()).collect();
    let mut bound: BTreeSet<u16> = BTreeSet::new();
    let mut perm = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let next = remaining
            .iter()
            .enumerate()
            .filter(|(_, &i)| match &d.literals[i] {
                CqLiteral::Atom { .. } => true,
                CqLiteral::Cmp { lhs, rhs, .. } | CqLiteral::Bind { lhs, rhs, .. } => {
                    arg_ok(lhs, &bound) && arg_ok(rhs, &bound)
                }
            })
            .min_by(|(_, &a), (_, &b)| {
                let ka = literal_key(&d.literals[a], &bound, snap).by(policy);
                let kb = literal_key(&d.literals[b], &bound, snap).by(policy);
                ka.partial_cmp(&kb)
                    .expect("order keys are finite")
                    .then(a.cmp(&b))
            })
            .map(|(slot, _)| slot)
            .expect("validated body always admits an order");
        let idx = remaining.remove(next);
        match &d.literals[idx] {
            CqLiteral::Atom { vars, .. } => {
                for v in vars.iter().flatten() {
                    bound.insert(*v);
                }
            }
            CqLiteral::Bind { target, .. } => {
                bound.insert(*target);
            }
            CqLiteral::Cmp { .. } => {}
        }
        perm.push(idx);
    }
    debug_assert!(is_admissible(&d.literals, &perm));
    perm
}

/// New permutations for every conjunctive query under `node`.
pub fn plan_orders(
    node: &IrOp,
    snap: &CardinalitySnapshot,
    policy: SortPolicy,
) -> BTreeMap<NodeId, Vec<usize>> {
    let mut orders = BTreeMap::new();
    node.walk(&mut |op| {
        if let IrOp::Cq { id, descriptor } = op {
            orders.insert(*id, order(descriptor, snap, policy));
        }
    });
    orders
}

/// Ahead-of-time body pre-sort applied to the rule AST before lowering.
///
/// `RulesOnly` orders by selectivity alone; `FactsAndRules` orders by
/// initial EDB cardinality first (rule-derived relations count 0 at this
/// stage) and selectivity second. Both are stable and admissibility-repaired
/// the same way the runtime sort is, so an already-sorted body comes back
/// unchanged.
pub fn presort(
    p: &Program,
    edb_counts: Option<&BTreeMap<RelId, usize>>,
    mode: PresortMode,
) -> Program {
    if mode == PresortMode::Off {
        return p.clone();
    }
    let mut out = p.clone();
    for rule in &mut out.rules {
        let body = &rule.body;
        // Selectivity under textual order.
        let mut bound: BTreeSet<&str> = BTreeSet::new();
        let mut keys: Vec<(f64, f64)> = Vec::with_capacity(body.len());
        for lit in body {
            match lit {
                Literal::Atom(atom) => {
                    let arity = atom.terms.len();
                    let mut bound_positions = 0usize;
                    let mut seen: BTreeSet<&str> = BTreeSet::new();
                    for term in &atom.terms {
                        match term {
                            Term::Const(_) => bound_positions += 1,
                            Term::Var(v) => {
                                if !seen.insert(v) || bound.contains(v.as_str()) {
                                    bound_positions += 1;
                                }
                            }
                        }
                    }
                    let sel = if arity == 0 {
                        0.0
                    } else {
                        1.0 - bound_positions as f64 / arity as f64
                    };
                    let card = match (mode, p.kind(atom.rel)) {
                        (PresortMode::FactsAndRules, RelKind::Edb) => edb_counts
                            .and_then(|c| c.get(&atom.rel).copied())
                            .unwrap_or_else(|| {
                                p.facts.get(&atom.rel).map(|f| f.len()).unwrap_or(0)
                            }),
                        _ => 0,
                    };
                    let key = match mode {
                        PresortMode::RulesOnly => (sel, 0.0),
                        _ => (card as f64, sel),
                    };
                    keys.push(key);
                    for term in &atom.terms {
                        if let Term::Var(v) = term {
                            bound.insert(v);
                        }
                    }
                }
                Literal::Cmp { .. } => keys.push((0.0, 0.0)),
                Literal::Bind { target, .. } => {
                    keys.push((0.0, 0.0));
                    bound.insert(target);
                }
            }
        }
        let mut indices: Vec<usize> = (0..body.len()).collect();
        indices.sort_by(|&a, &b| keys[a].partial_cmp(&keys[b]).expect("finite keys"));
        let perm = repair_ast(body, &indices);
        rule.body = perm.iter().map(|&i| body[i].clone()).collect();
    }
    out
}

/// Admissibility repair over AST literals (mirror of `repair`).
fn repair_ast(body: &[Literal], preferred: &[usize]) -> Vec<usize> {
    let mut remaining: Vec<usize> = preferred.to_vec();
    let mut result = Vec::with_capacity(remaining.len());
    let mut bound: BTreeSet<&str> = BTreeSet::new();
    let term_ok = |t: &Term, bound: &BTreeSet<&str>| match t {
        Term::Var(v) => bound.contains(v.as_str()),
        Term::Const(_) => true,
    };
    while !remaining.is_empty() {
        let pos = remaining
            .iter()
            .position(|&i| match &body[i] {
                Literal::Atom(_) => true,
                Literal::Cmp { lhs, rhs, .. } | Literal::Bind { lhs, rhs, .. } => {
                    term_ok(lhs, &bound) && term_ok(rhs, &bound)
                }
            })
            .expect("validated body always admits an order");
        let idx = remaining.remove(pos);
        match &body[idx] {
            Literal::Atom(atom) => {
                for t in &atom.terms {
                    if let Term::Var(v) = t {
                        bound.insert(v);
                    }
                }
            }
            Literal::Bind { target, .. } => {
                bound.insert(target);
            }
            Literal::Cmp { .. } => {}
        }
        result.push(idx);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{build_precedence, parse};
    use crate::planner::lower_semi_naive;
    use crate::storage::ViewSel;

    fn descriptor(src: &str, rule_id: u32) -> (Program, CqDescriptor) {
        let p = parse(src).unwrap();
        let g = build_precedence(&p);
        let ir = lower_semi_naive(&p, &g);
        let d = ir
            .descriptors()
            .into_iter()
            .find(|d| d.rule_id == rule_id)
            .unwrap()
            .clone();
        (p, d)
    }

    fn snap_of(p: &Program, entries: &[(&str, ViewSel, usize)]) -> CardinalitySnapshot {
        let mut s = CardinalitySnapshot::default();
        for &(name, view, n) in entries {
            s.counts.insert((p.relation_named(name).unwrap(), view), n);
        }
        s
    }

    #[test]
    fn ascending_cardinality_sort() {
        let (p, d) = descriptor("out(x,y,z) :- a(x), b(y), c(z).", 0);
        let snap = snap_of(
            &p,
            &[
                ("a", ViewSel::Edb, 1000),
                ("b", ViewSel::Edb, 3),
                ("c", ViewSel::Edb, 50),
            ],
        );
        let perm = order(&d, &snap, SortPolicy::CardinalityThenSelectivity);
        assert_eq!(perm, vec![1, 2, 0]); // b, c, a
    }

    #[test]
    fn equal_keys_preserve_textual_order() {
        let (p, d) = descriptor("out(x,y) :- a(x), b(y).", 0);
        let snap = snap_of(&p, &[("a", ViewSel::Edb, 5), ("b", ViewSel::Edb, 5)]);
        let perm = order(&d, &snap, SortPolicy::CardinalityThenSelectivity);
        assert_eq!(perm, vec![0, 1]);
    }

    #[test]
    fn builtin_deferred_to_earliest_admissible_slot() {
        // B is tiny, the built-in needs x and y which only A binds; the sort
        // puts the built-in first (cardinality 0) and repair defers it past A.
        let (p, d) = descriptor("out(z) :- b(w), a(x, y), z = x + y.", 0);
        let snap = snap_of(&p, &[("b", ViewSel::Edb, 3), ("a", ViewSel::Edb, 1000)]);
        let perm = order(&d, &snap, SortPolicy::CardinalityThenSelectivity);
        assert_eq!(perm, vec![0, 1, 2]); // b, a, then the binding
        assert!(is_admissible(&d.literals, &perm));
    }

    #[test]
    fn policy_none_returns_current_permutation() {
        let (p, mut d) = descriptor("out(x,y) :- a(x), b(y).", 0);
        d.permutation = vec![1, 0];
        let snap = snap_of(&p, &[("a", ViewSel::Edb, 1), ("b", ViewSel::Edb, 2)]);
        assert_eq!(order(&d, &snap, SortPolicy::None), vec![1, 0]);
    }

    #[test]
    fn stability_law_identity_on_all_equal_keys() {
        let (p, d) = descriptor("out(x,y,z) :- a(x), b(y), c(z).", 0);
        let snap = snap_of(
            &p,
            &[
                ("a", ViewSel::Edb, 9),
                ("b", ViewSel::Edb, 9),
                ("c", ViewSel::Edb, 9),
            ],
        );
        let perm = order(&d, &snap, SortPolicy::CardinalityThenSelectivity);
        assert_eq!(perm, vec![0, 1, 2]);
    }

    #[test]
    fn selectivity_breaks_cardinality_ties() {
        // Same counts; `filt(x, x)` has a repeated variable, so its
        // selectivity is lower and it sorts first.
        let (p, d) = descriptor("out(x,y) :- wide(x, y), filt(x, x).", 0);
        let snap = snap_of(
            &p,
            &[("wide", ViewSel::Edb, 10), ("filt", ViewSel::Edb, 10)],
        );
        let perm = order(&d, &snap, SortPolicy::CardinalityThenSelectivity);
        assert_eq!(perm, vec![1, 0]);
    }

    #[test]
    fn recursive_tc_query_with_tied_cardinalities_keeps_textual_order() {
        // Snapshot after the seeding pass of the 3-chain: edge = 3, path
        // delta = 3. Cardinalities tie, and at the first slot neither atom
        // has a bound position (y only binds once one of them is placed),
        // so selectivity ties too and the textual order survives.
        let (p, d) = descriptor(
            "path(x,y) :- edge(x,y).\npath(x,z) :- edge(x,y), path(y,z).",
            1,
        );
        let snap = snap_of(
            &p,
            &[
                ("edge", ViewSel::Edb, 3),
                ("path", ViewSel::KnownDelta, 3),
                ("path", ViewSel::KnownDerived, 3),
            ],
        );
        let perm = order(&d, &snap, SortPolicy::CardinalityThenSelectivity);
        assert_eq!(perm, vec![0, 1]);
    }

    #[test]
    fn bound_aware_selectivity_prevents_cross_product_front_running() {
        // A semi-join guard whose variable is bound by a *later* binding
        // built-in must not be pulled to the front: at slot 0 the binding
        // has not run, so the guard's selectivity is an honest 1.0 and the
        // textual order (which stays connected) wins the ties.
        let (p, d) = descriptor(
            "composite(m) :- num(a), num(b), a >= 2, b >= 2, m = a * b, num(m).",
            0,
        );
        let snap = snap_of(&p, &[("num", ViewSel::Edb, 299)]);
        let perm = order(&d, &snap, SortPolicy::CardinalityThenSelectivity);
        // num(a), a >= 2, num(b), b >= 2, m = a * b, num(m).
        assert_eq!(perm, vec![0, 2, 1, 3, 4, 5]);
    }

    #[test]
    fn presort_rules_only_orders_by_selectivity() {
        let p = parse("p(x) :- big(x,y,z), small(x).").unwrap();
        // Under textual order `small`'s one position is bound by `big`, so
        // its selectivity is 0 against big's 1; the sorted body leads with it.
        let sorted = presort(&p, None, PresortMode::RulesOnly);
        let body = &sorted.rules[0].body;
        let first = body[0].as_atom().unwrap();
        assert_eq!(sorted.relation_name(first.rel), "small");
    }

    #[test]
    fn presort_facts_and_rules_orders_by_initial_cardinality() {
        let p = parse("p(x) :- big(x,y), small(x).").unwrap();
        let mut counts = BTreeMap::new();
        counts.insert(p.relation_named("big").unwrap(), 1000);
        counts.insert(p.relation_named("small").unwrap(), 3);
        let sorted = presort(&p, Some(&counts), PresortMode::FactsAndRules);
        let first = sorted.rules[0].body[0].as_atom().unwrap();
        assert_eq!(sorted.relation_name(first.rel), "small");
    }

    #[test]
    fn presort_of_already_sorted_body_is_identity() {
        let p = parse("p(x) :- small(x), big(x,y).").unwrap();
        let mut counts = BTreeMap::new();
        counts.insert(p.relation_named("big").unwrap(), 1000);
        counts.insert(p.relation_named("small").unwrap(), 3);
        let sorted = presort(&p, Some(&counts), PresortMode::FactsAndRules);
        assert_eq!(sorted.rules, p.rules);
    }

    #[test]
    fn presort_keeps_idb_atoms_at_cardinality_zero() {
        let p = parse("r(x,y) :- e(x,y).\nr(x,z) :- r(y,z), e(x,y).").unwrap();
        let mut counts = BTreeMap::new();
        counts.insert(p.relation_named("e").unwrap(), 500);
        let sorted = presort(&p, Some(&counts), PresortMode::FactsAndRules);
        // The recursive atom counts 0, so it stays ahead of the edge scan.
        let body = &sorted.rules[1].body;
        assert_eq!(
            sorted.relation_name(body[0].as_atom().unwrap().rel),
            "r"
        );
    }
}
