//! The two plan-production backends.
//!
//! `regen_ir` rebuilds an IR subtree with new permutations; the interpreter
//! then walks the new tree, so the cost is bounded by sorting and
//! rearranging the subqueries. `compile_pipeline` goes one step further and
//! stitches the subtree into precompiled operator pipelines (scan, filtered
//! scan, hash-join step, built-in filter, binding built-in, project, insert)
//! that run with no tree traversal at all. Artifacts never capture storage;
//! they receive the execution context at call time, which is what lets a
//! plan built on the worker thread run against post-swap views.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::frontend::RelId;
use crate::interp::{compile_plan, execute_plan, note_swap, CqPlan, ExecContext};
use crate::planner::{IrOp, NodeId};
use crate::storage::StorageLayer;

use super::CompileScope;

/// Result of running an artifact slice: done, or paused at the next child
/// boundary (a safe point) so the caller can poll for newer plans or re-check
/// freshness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Completed,
    Paused(usize),
}

/// Interpreter continuation handed to snippet artifacts.
pub type Continuation<S> = fn(&IrOp, &mut ExecContext<S>);

/// A stitched, callable plan for one IR node.
pub struct CompiledNode<S: StorageLayer> {
    pub node: NodeId,
    pub generation: u64,
    #[allow(clippy::type_complexity)]
    run: Box<dyn Fn(&mut ExecContext<S>, usize) -> RunOutcome + Send + Sync>,
}

impl<S: StorageLayer> CompiledNode<S> {
    /// Executes the artifact starting at child index `start` (0 for a whole
    /// node). Snippet artifacts pause after every child.
    pub fn run(&self, ctx: &mut ExecContext<S>, start: usize) -> RunOutcome {
        (self.run)(ctx, start)
    }
}

/// An executable plan produced by a backend.
#[derive(Clone)]
pub enum Artifact<S: StorageLayer> {
    /// A regenerated subtree for the interpreter.
    RegeneratedIr(Arc<IrOp>),
    /// A stitched pipeline.
    Pipeline(Arc<CompiledNode<S>>),
}

/// Rebuilds `node` with CQ permutations replaced according to `orders`
/// (keyed by CQ node id). Structure and node ids are preserved and the
/// original tree is left untouched; regenerating with the same orders is
/// idempotent.
pub fn regen_ir(node: &IrOp, orders: &BTreeMap<NodeId, Vec<usize>>) -> IrOp {
    match node {
        IrOp::Cq { id, descriptor } => {
            let mut descriptor = descriptor.clone();
            if let Some(perm) = orders.get(id) {
                descriptor.permutation = perm.clone();
            }
            IrOp::Cq {
                id: *id,
                descriptor,
            }
        }
        IrOp::ProgramRoot { id, children } => IrOp::ProgramRoot {
            id: *id,
            children: children.iter().map(|c| regen_ir(c, orders)).collect(),
        },
        IrOp::IterationSeq {
            id,
            stratum,
            children,
        } => IrOp::IterationSeq {
            id: *id,
            stratum: *stratum,
            children: children.iter().map(|c| regen_ir(c, orders)).collect(),
        },
        IrOp::RuleUnion { id, target, children } => IrOp::RuleUnion {
            id: *id,
            target: *target,
            children: children.iter().map(|c| regen_ir(c, orders)).collect(),
        },
        IrOp::DoWhile { id, watched, body } => IrOp::DoWhile {
            id: *id,
            watched: watched.clone(),
            body: Box::new(regen_ir(body, orders)),
        },
        IrOp::InsertDelta { id, target, source } => IrOp::InsertDelta {
            id: *id,
            target: *target,
            source: Box::new(regen_ir(source, orders)),
        },
        IrOp::EdbLoad { .. } | IrOp::SwapClear { .. } => node.clone(),
    }
}

/// One precompiled pipeline element.
enum PipelineItem {
    Cq { node: NodeId, plan: CqPlan },
    Swap { stratum: usize, relations: Vec<RelId> },
}

fn run_item<S: StorageLayer>(item: &PipelineItem, ctx: &mut ExecContext<S>) {
    match item {
        PipelineItem::Cq { node, plan } => {
            let run = execute_plan(plan, &mut ctx.storage, &mut ctx.pool);
            ctx.stats.compiled_cq_evals += 1;
            ctx.stats.probes_total += run.probes;
            *ctx.stats.probes_per_node.entry(*node).or_insert(0) += run.probes;
            ctx.stats.inserted_total += run.inserted;
        }
        PipelineItem::Swap { stratum, relations } => {
            ctx.storage.swap_and_clear(relations);
            note_swap(ctx, *stratum, relations);
        }
    }
}

/// Flattens a subtree into pipeline items, grouped by direct child of the
/// compiled node so execution can resume at a child boundary.
fn flatten_groups(node: &IrOp) -> Vec<Vec<PipelineItem>> {
    match node {
        IrOp::Cq { .. } => vec![flatten_items(node)],
        IrOp::IterationSeq { children, .. } | IrOp::RuleUnion { children, .. } => {
            children.iter().map(flatten_items).collect()
        }
        other => vec![flatten_items(other)],
    }
}

fn flatten_items(node: &IrOp) -> Vec<PipelineItem> {
    let mut items = Vec::new();
    node.walk(&mut |op| match op {
        IrOp::Cq { id, descriptor } => items.push(PipelineItem::Cq {
            node: *id,
            plan: compile_plan(descriptor),
        }),
        IrOp::SwapClear {
            stratum, relations, ..
        } => items.push(PipelineItem::Swap {
            stratum: *stratum,
            relations: relations.clone(),
        }),
        _ => {}
    });
    items
}

/// Compiles `node` into a stitched pipeline artifact.
///
/// `Full` scope compiles the node and its whole subtree into one callable
/// that touches storage directly, with no tree traversal. `Snippet` scope
/// compiles only the node's own sequencing and defers each child back to the
/// interpreter through `continuation`, pausing at every child boundary.
pub fn compile_pipeline<S: StorageLayer>(
    node: &IrOp,
    orders: &BTreeMap<NodeId, Vec<usize>>,
    scope: CompileScope,
    generation: u64,
    continuation: Continuation<S>,
) -> CompiledNode<S> {
    let reordered = regen_ir(node, orders);
    let node_id = node.id();
    match scope {
        CompileScope::Full => {
            let groups = flatten_groups(&reordered);
            CompiledNode {
                node: node_id,
                generation,
                run: Box::new(move |ctx, start| {
                    for group in &groups[start.min(groups.len())..] {
                        for item in group {
                            run_item(item, ctx);
                        }
                    }
                    RunOutcome::Completed
                }),
            }
        }
        CompileScope::Snippet => {
            let tree = Arc::new(reordered);
            CompiledNode {
                node: node_id,
                generation,
                run: Box::new(move |ctx, start| match tree.as_ref() {
                    IrOp::IterationSeq { children, .. } | IrOp::RuleUnion { children, .. } => {
                        if start >= children.len() {
                            return RunOutcome::Completed;
                        }
                        continuation(&children[start], ctx);
                        if start + 1 == children.len() {
                            RunOutcome::Completed
                        } else {
                            RunOutcome::Paused(start + 1)
                        }
                    }
                    // A leaf query has no children to defer; snippet and
                    // full coincide.
                    IrOp::Cq { id, descriptor } => {
                        let plan = compile_plan(descriptor);
                        run_item(
                            &PipelineItem::Cq {
                                node: *id,
                                plan,
                            },
                            ctx,
                        );
                        RunOutcome::Completed
                    }
                    other => {
                        continuation(other, ctx);
                        RunOutcome::Completed
                    }
                }),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{build_precedence, parse};
    use crate::planner::lower_semi_naive;

    fn tc_ir() -> (crate::frontend::Program, IrOp) {
        let p = parse("path(x,y) :- edge(x,y).\npath(x,z) :- edge(x,y), path(y,z).").unwrap();
        let g = build_precedence(&p);
        let ir = lower_semi_naive(&p, &g);
        (p, ir)
    }

    #[test]
    fn regen_with_empty_orders_is_structurally_equal() {
        let (_, ir) = tc_ir();
        let out = regen_ir(&ir, &BTreeMap::new());
        assert_eq!(ir, out);
    }

    #[test]
    fn regen_replaces_only_the_targeted_permutation() {
        let (_, ir) = tc_ir();
        let cq_id = {
            let mut found = None;
            ir.walk(&mut |op| {
                if let IrOp::Cq { id, descriptor } = op {
                    if descriptor.rule_id == 1 {
                        found = Some(*id);
                    }
                }
            });
            found.unwrap()
        };
        let mut orders = BTreeMap::new();
        orders.insert(cq_id, vec![1, 0]);
        let out = regen_ir(&ir, &orders);
        assert_ne!(ir, out);
        let mut seen = 0;
        out.walk(&mut |op| {
            if let IrOp::Cq { id, descriptor } = op {
                if *id == cq_id {
                    assert_eq!(descriptor.permutation, vec![1, 0]);
                    seen += 1;
                } else {
                    assert_eq!(descriptor.permutation, vec![0]);
                }
            }
        });
        assert_eq!(seen, 1);
        // Ids and shape are preserved.
        assert_eq!(ir.id(), out.id());
    }

    #[test]
    fn regen_is_idempotent() {
        let (_, ir) = tc_ir();
        let mut orders = BTreeMap::new();
        ir.walk(&mut |op| {
            if let IrOp::Cq { id, descriptor } = op {
                if descriptor.rule_id == 1 {
                    orders.insert(*id, vec![1, 0]);
                }
            }
        });
        let once = regen_ir(&ir, &orders);
        let twice = regen_ir(&once, &orders);
        assert_eq!(once, twice);
    }
}
