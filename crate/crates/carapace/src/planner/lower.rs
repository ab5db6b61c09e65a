//! Semi-naive and naive lowering of validated rules into [`IrOp`] trees.
//!
//! Semi-naive partial evaluation unrolls the for-each-relation loop
//! explicitly: a recursive rule becomes one conjunctive query per recursive
//! body atom, with that atom reading the KnownDelta view and every other
//! same-stratum atom reading KnownDerived. The naive lowering shares all of
//! this machinery and differs only in view selection (everything reads full
//! derived views, one query per rule), which is what makes it a useful
//! oracle.

use std::collections::{BTreeSet, HashMap};

use crate::frontend::{
    Literal, PrecedenceGraph, Program, RelId, RelKind, Rule, Term,
};
use crate::storage::ViewSel;

use super::ir::{CqArg, CqDescriptor, CqLiteral, HeadArg, IrOp, NodeId};

struct IdGen(u32);

impl IdGen {
    fn next(&mut self) -> NodeId {
        let id = NodeId(self.0);
        self.0 += 1;
        id
    }
}

/// True iff executing `literals` in `perm` order binds every built-in's
/// inputs before it runs. The standalone check behind the planner's and
/// optimizer's admissibility guarantees.
pub fn is_admissible(literals: &[CqLiteral], perm: &[usize]) -> bool {
    if perm.len() != literals.len() {
        return false;
    }
    let mut seen = vec![false; literals.len()];
    let mut bound: BTreeSet<u16> = BTreeSet::new();
    let arg_ok = |a: &CqArg, bound: &BTreeSet<u16>| match a {
        CqArg::Var(v) => bound.contains(v),
        CqArg::Const(_) => true,
    };
    for &i in perm {
        if i >= literals.len() || seen[i] {
            return false;
        }
        seen[i] = true;
        match &literals[i] {
            CqLiteral::Atom { vars, .. } => {
                for v in vars.iter().flatten() {
                    bound.insert(*v);
                }
            }
            CqLiteral::Cmp { lhs, rhs, .. } => {
                if !arg_ok(lhs, &bound) || !arg_ok(rhs, &bound) {
                    return false;
                }
            }
            CqLiteral::Bind { target, lhs, rhs, .. } => {
                if !arg_ok(lhs, &bound) || !arg_ok(rhs, &bound) {
                    return false;
                }
                bound.insert(*target);
            }
        }
    }
    true
}

/// Textual body order with built-ins floated to their earliest admissible
/// slot. When the textual order is already admissible this is the identity.
pub fn initial_permutation(literals: &[CqLiteral]) -> Vec<usize> {
    let mut result = Vec::with_capacity(literals.len());
    let mut bound: BTreeSet<u16> = BTreeSet::new();
    let mut pending: Vec<usize> = Vec::new();

    let ready = |lit: &CqLiteral, bound: &BTreeSet<u16>| -> bool {
        let arg_ok = |a: &CqArg| match a {
            CqArg::Var(v) => bound.contains(v),
            CqArg::Const(_) => true,
        };
        match lit {
            CqLiteral::Atom { .. } => true,
            CqLiteral::Cmp { lhs, rhs, .. } | CqLiteral::Bind { lhs, rhs, .. } => {
                arg_ok(lhs) && arg_ok(rhs)
            }
        }
    };

    let flush = |result: &mut Vec<usize>, bound: &mut BTreeSet<u16>, pending: &mut Vec<usize>| {
        loop {
            let mut progressed = false;
            pending.retain(|&i| {
                if ready(&literals[i], bound) {
                    if let CqLiteral::Bind { target, .. } = &literals[i] {
                        bound.insert(*target);
                    }
                    result.push(i);
                    progressed = true;
                    false
                } else {
                    true
                }
            });
            if !progressed {
                break;
            }
        }
    };

    for (i, lit) in literals.iter().enumerate() {
        match lit {
            CqLiteral::Atom { vars, .. } => {
                flush(&mut result, &mut bound, &mut pending);
                result.push(i);
                for v in vars.iter().flatten() {
                    bound.insert(*v);
                }
            }
            _ => {
                if ready(lit, &bound) {
                    if let CqLiteral::Bind { target, .. } = lit {
                        bound.insert(*target);
                    }
                    result.push(i);
                } else {
                    pending.push(i);
                }
            }
        }
    }
    flush(&mut result, &mut bound, &mut pending);
    debug_assert!(
        pending.is_empty(),
        "unorderable built-in survived validation"
    );
    result.extend(pending);
    result
}

/// Builds the descriptor for one conjunctive body variant of `rule`.
/// `delta_atom` selects which body relation atom (by atom index) reads the
/// KnownDelta view; same-stratum atoms otherwise read KnownDerived.
fn build_descriptor(
    p: &Program,
    rule: &Rule,
    stratum_rels: &BTreeSet<RelId>,
    delta_atom: Option<usize>,
) -> CqDescriptor {
    let mut var_ids: HashMap<String, u16> = HashMap::new();
    let mut var_names: Vec<String> = Vec::new();
    let intern = |name: &str, var_ids: &mut HashMap<String, u16>, var_names: &mut Vec<String>| {
        if let Some(&id) = var_ids.get(name) {
            return id;
        }
        let id = var_names.len() as u16;
        var_names.push(name.to_string());
        var_ids.insert(name.to_string(), id);
        id
    };

    let mut literals = Vec::with_capacity(rule.body.len());
    let mut atom_index = 0usize;
    for lit in &rule.body {
        match lit {
            Literal::Atom(atom) => {
                let view = match p.kind(atom.rel) {
                    RelKind::Edb => ViewSel::Edb,
                    RelKind::Idb => {
                        if delta_atom == Some(atom_index) && stratum_rels.contains(&atom.rel) {
                            ViewSel::KnownDelta
                        } else {
                            ViewSel::KnownDerived
                        }
                    }
                };
                let mut vars: Vec<Option<u16>> = Vec::with_capacity(atom.terms.len());
                let mut const_filters = Vec::new();
                let mut self_eqs = Vec::new();
                let mut first_pos: HashMap<u16, usize> = HashMap::new();
                for (pos, term) in atom.terms.iter().enumerate() {
                    match term {
                        Term::Const(c) => {
                            const_filters.push((pos, *c));
                            vars.push(None);
                        }
                        Term::Var(name) => {
                            let v = intern(name, &mut var_ids, &mut var_names);
                            if let Some(&first) = first_pos.get(&v) {
                                self_eqs.push((pos, first));
                            } else {
                                first_pos.insert(v, pos);
                            }
                            vars.push(Some(v));
                        }
                    }
                }
                literals.push(CqLiteral::Atom {
                    rel: atom.rel,
                    view,
                    vars,
                    const_filters,
                    self_eqs,
                });
                atom_index += 1;
            }
            Literal::Cmp { op, lhs, rhs } => {
                let mut arg = |t: &Term| match t {
                    Term::Var(name) => CqArg::Var(intern(name, &mut var_ids, &mut var_names)),
                    Term::Const(c) => CqArg::Const(*c),
                };
                literals.push(CqLiteral::Cmp {
                    op: *op,
                    lhs: arg(lhs),
                    rhs: arg(rhs),
                });
            }
            Literal::Bind { target, op, lhs, rhs } => {
                let lhs = match lhs {
                    Term::Var(name) => CqArg::Var(intern(name, &mut var_ids, &mut var_names)),
                    Term::Const(c) => CqArg::Const(*c),
                };
                let rhs = match rhs {
                    Term::Var(name) => CqArg::Var(intern(name, &mut var_ids, &mut var_names)),
                    Term::Const(c) => CqArg::Const(*c),
                };
                let target = intern(target, &mut var_ids, &mut var_names);
                literals.push(CqLiteral::Bind {
                    target,
                    op: *op,
                    lhs,
                    rhs,
                });
            }
        }
    }

    let head = rule
        .head
        .terms
        .iter()
        .map(|t| match t {
            Term::Const(c) => HeadArg::Const(*c),
            Term::Var(name) => HeadArg::Var(intern(name, &mut var_ids, &mut var_names)),
        })
        .collect();

    let permutation = initial_permutation(&literals);
    debug_assert!(is_admissible(&literals, &permutation));
    CqDescriptor {
        rule_id: rule.id,
        target: rule.head.rel,
        delta_index: delta_atom,
        literals,
        permutation,
        head,
        var_names,
    }
}

/// Atom indices (over the rule's relation atoms) that reference a relation
/// of the given stratum.
fn recursive_atom_indices(rule: &Rule, stratum_rels: &BTreeSet<RelId>) -> Vec<usize> {
    rule.body
        .iter()
        .filter_map(|l| l.as_atom())
        .enumerate()
        .filter(|(_, a)| stratum_rels.contains(&a.rel))
        .map(|(i, _)| i)
        .collect()
}

fn rule_union(
    ids: &mut IdGen,
    p: &Program,
    rule: &Rule,
    stratum_rels: &BTreeSet<RelId>,
    deltas: &[Option<usize>],
) -> IrOp {
    let union_id = ids.next();
    let children = deltas
        .iter()
        .map(|&delta| {
            let insert_id = ids.next();
            let cq_id = ids.next();
            IrOp::InsertDelta {
                id: insert_id,
                target: rule.head.rel,
                source: Box::new(IrOp::Cq {
                    id: cq_id,
                    descriptor: build_descriptor(p, rule, stratum_rels, delta),
                }),
            }
        })
        .collect();
    IrOp::RuleUnion {
        id: union_id,
        target: rule.head.rel,
        children,
    }
}

fn lower(p: &Program, g: &PrecedenceGraph, semi_naive: bool) -> IrOp {
    let mut ids = IdGen(0);
    let root_id = ids.next();
    let mut children = Vec::new();
    for rel in p.edb_relations() {
        children.push(IrOp::EdbLoad {
            id: ids.next(),
            rel,
        });
    }

    for (si, stratum) in g.strata.iter().enumerate() {
        let stratum_rels: BTreeSet<RelId> = stratum.relations.iter().copied().collect();
        let rules: Vec<&Rule> = stratum
            .rules
            .iter()
            .map(|&id| p.rules.iter().find(|r| r.id == id).expect("rule id"))
            .collect();
        let (recursive, base): (Vec<&Rule>, Vec<&Rule>) = rules
            .iter()
            .partition(|r| !recursive_atom_indices(r, &stratum_rels).is_empty());

        if !base.is_empty() {
            let seq_id = ids.next();
            let mut seq: Vec<IrOp> = base
                .iter()
                .map(|r| rule_union(&mut ids, p, r, &stratum_rels, &[None]))
                .collect();
            seq.push(IrOp::SwapClear {
                id: ids.next(),
                stratum: si,
                relations: stratum.relations.clone(),
            });
            children.push(IrOp::IterationSeq {
                id: seq_id,
                stratum: si,
                children: seq,
            });
        }

        if !recursive.is_empty() {
            let loop_id = ids.next();
            let seq_id = ids.next();
            let mut seq: Vec<IrOp> = recursive
                .iter()
                .map(|r| {
                    let deltas: Vec<Option<usize>> = if semi_naive {
                        recursive_atom_indices(r, &stratum_rels)
                            .into_iter()
                            .map(Some)
                            .collect()
                    } else {
                        vec![None]
                    };
                    rule_union(&mut ids, p, r, &stratum_rels, &deltas)
                })
                .collect();
            seq.push(IrOp::SwapClear {
                id: ids.next(),
                stratum: si,
                relations: stratum.relations.clone(),
            });
            children.push(IrOp::DoWhile {
                id: loop_id,
                watched: stratum.relations.clone(),
                body: Box::new(IrOp::IterationSeq {
                    id: seq_id,
                    stratum: si,
                    children: seq,
                }),
            });
        }
    }

    IrOp::ProgramRoot {
        id: root_id,
        children,
    }
}

/// Production lowering: delta-split conjunctive queries per recursive atom.
pub fn lower_semi_naive(p: &Program, g: &PrecedenceGraph) -> IrOp {
    lower(p, g, true)
}

/// Oracle lowering: identical structure, but every conjunctive query reads
/// full derived views and each recursive rule stays a single query.
pub fn lower_naive(p: &Program, g: &PrecedenceGraph) -> IrOp {
    lower(p, g, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{build_precedence, parse};
    use crate::planner::ir::print_ir;

    fn lower_src(src: &str, semi: bool) -> (Program, IrOp) {
        let p = parse(src).unwrap();
        let g = build_precedence(&p);
        let ir = if semi {
            lower_semi_naive(&p, &g)
        } else {
            lower_naive(&p, &g)
        };
        (p, ir)
    }

    fn count_nodes(ir: &IrOp, pred: impl Fn(&IrOp) -> bool) -> usize {
        let mut n = 0;
        ir.walk(&mut |op| {
            if pred(op) {
                n += 1;
            }
        });
        n
    }

    const TC: &str = "path(x,y) :- edge(x,y).\npath(x,z) :- edge(x,y), path(y,z).";

    #[test]
    fn transitive_closure_has_one_loop_and_base_outside() {
        let (_, ir) = lower_src(TC, true);
        assert_eq!(count_nodes(&ir, |op| matches!(op, IrOp::DoWhile { .. })), 1);
        let IrOp::ProgramRoot { children, .. } = &ir else { panic!() };
        // edb-load, prologue pass (base rule), loop.
        assert_eq!(children.len(), 3);
        assert!(matches!(children[0], IrOp::EdbLoad { .. }));
        assert!(matches!(children[1], IrOp::IterationSeq { .. }));
        let IrOp::DoWhile { body, .. } = &children[2] else { panic!() };
        let descriptors = body.descriptors();
        assert_eq!(descriptors.len(), 1);
        assert_eq!(descriptors[0].delta_index, Some(1));
        let views: Vec<ViewSel> = descriptors[0]
            .literals
            .iter()
            .filter_map(|l| match l {
                CqLiteral::Atom { view, .. } => Some(*view),
                _ => None,
            })
            .collect();
        assert_eq!(views, vec![ViewSel::Edb, ViewSel::KnownDelta]);
    }

    #[test]
    fn doubly_recursive_rule_gets_one_cq_per_recursive_atom() {
        let (_, ir) = lower_src("r(x,y) :- e(x,y).\nr(x,z) :- r(x,y), r(y,z).", true);
        let descriptors: Vec<_> = ir
            .descriptors()
            .into_iter()
            .filter(|d| d.rule_id == 1)
            .collect();
        assert_eq!(descriptors.len(), 2);
        assert_eq!(descriptors[0].delta_index, Some(0));
        assert_eq!(descriptors[1].delta_index, Some(1));
        for (i, d) in descriptors.iter().enumerate() {
            let views: Vec<ViewSel> = d
                .literals
                .iter()
                .filter_map(|l| match l {
                    CqLiteral::Atom { view, .. } => Some(*view),
                    _ => None,
                })
                .collect();
            let mut want = vec![ViewSel::KnownDerived; 2];
            want[i] = ViewSel::KnownDelta;
            assert_eq!(views, want);
        }
    }

    #[test]
    fn non_recursive_program_has_no_loop() {
        let (_, ir) = lower_src("p(x) :- e(x).", true);
        assert_eq!(count_nodes(&ir, |op| matches!(op, IrOp::DoWhile { .. })), 0);
        assert_eq!(count_nodes(&ir, |op| matches!(op, IrOp::Cq { .. })), 1);
    }

    #[test]
    fn naive_lowering_never_reads_delta_views() {
        let (_, ir) = lower_src("r(x,y) :- e(x,y).\nr(x,z) :- r(x,y), r(y,z).", false);
        for d in ir.descriptors() {
            assert_eq!(d.delta_index, None);
            for lit in &d.literals {
                if let CqLiteral::Atom { view, .. } = lit {
                    assert_ne!(*view, ViewSel::KnownDelta);
                }
            }
        }
        // One CQ per rule, no delta copies.
        assert_eq!(count_nodes(&ir, |op| matches!(op, IrOp::Cq { .. })), 2);
        assert_eq!(count_nodes(&ir, |op| matches!(op, IrOp::DoWhile { .. })), 1);
    }

    #[test]
    fn builtins_move_to_earliest_admissible_slot() {
        let (_, ir) = lower_src("p(w) :- w = z * 2, z = x + 1, q(x).", true);
        let d = &ir.descriptors()[0];
        assert_eq!(d.permutation, vec![2, 1, 0]);
        assert!(is_admissible(&d.literals, &d.permutation));
    }

    #[test]
    fn admissible_textual_order_is_kept_identity() {
        let (_, ir) = lower_src("p(n) :- q(x), n = x + 1, n <= 10.", true);
        let d = &ir.descriptors()[0];
        assert_eq!(d.permutation, vec![0, 1, 2]);
    }

    #[test]
    fn constant_filters_are_pushed_into_scans() {
        let (p, ir) = lower_src("p(x) :- q(x, \"c\").", true);
        let d = &ir.descriptors()[0];
        let CqLiteral::Atom { const_filters, .. } = &d.literals[0] else { panic!() };
        assert_eq!(const_filters.len(), 1);
        assert_eq!(const_filters[0].0, 1);
        assert_eq!(p.pool.display(const_filters[0].1), "\"c\"");
    }

    #[test]
    fn golden_ir_print_for_transitive_closure() {
        let (p, ir) = lower_src(TC, true);
        let expected = "\
program-root
  edb-load edge
  iteration-seq stratum=0
    rule-union path
      insert-delta path
        cq rule=0 delta=- perm=[0] body=[edge:edb]
    swap-clear [path]
  do-while watch=[path]
    iteration-seq stratum=0
      rule-union path
        insert-delta path
          cq rule=1 delta=1 perm=[0,1] body=[edge:edb, path:known-delta]
      swap-clear [path]
";
        assert_eq!(print_ir(&p, &ir), expected);
    }
}
