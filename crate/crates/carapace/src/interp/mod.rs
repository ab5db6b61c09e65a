//! Tree-walking evaluation of the IR: the baseline execution mode and the
//! fallback the JIT modes defer to between safe points.

mod plan;

pub use plan::{collect_rows, compile_plan, execute_plan, ColSrc, CqPlan, CqRun, PlanStep};

use std::collections::BTreeMap;

use crate::adaptive::{Granularity, JitRuntime};
use crate::frontend::{ConstPool, Program, RelId, RelKind};
use crate::planner::{CqDescriptor, IrOp, NodeId};
use crate::storage::{CardinalitySnapshot, StorageLayer, ViewSel};

/// One replanning event, as recorded in the stats report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplanEvent {
    pub node: NodeId,
    /// Global swap count when the event fired.
    pub at_iteration: u64,
    pub generation: u64,
    /// False for an asynchronous submission that has not (yet) been adopted.
    pub adopted: bool,
}

/// Per-iteration cardinality record: derived-view sizes of the relations
/// swapped at that safe point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationCard {
    pub stratum: usize,
    /// 1-based iteration index within the stratum.
    pub iteration: u64,
    pub cards: Vec<(RelId, usize)>,
}

/// Counters and logs accumulated over one evaluation.
#[derive(Debug, Default, Clone)]
pub struct ExecStats {
    /// Swap safe points executed, per stratum. The per-stratum count is the
    /// stratum's iteration count (its seeding pass included).
    pub iterations_per_stratum: BTreeMap<usize, u64>,
    /// Wall clock spent evaluating each stratum's top-level nodes.
    pub stratum_wall: BTreeMap<usize, std::time::Duration>,
    /// Total swap safe points executed.
    pub total_swaps: u64,
    pub cardinality_log: Vec<IterationCard>,
    /// Hash-join probe lookups, total and per CQ node.
    pub probes_total: u64,
    pub probes_per_node: BTreeMap<NodeId, u64>,
    pub inserted_total: u64,
    /// Conjunctive queries evaluated by the tree-walking interpreter.
    pub interp_cq_evals: u64,
    /// Conjunctive queries evaluated through a stitched pipeline artifact.
    pub compiled_cq_evals: u64,
    /// Plan computations initiated (synchronous recomputes plus asynchronous
    /// submissions).
    pub replans: u64,
    pub replan_events: Vec<ReplanEvent>,
    /// Snapshot history per optimized node.
    pub snapshot_history: BTreeMap<NodeId, Vec<CardinalitySnapshot>>,
}

impl ExecStats {
    pub fn iterations_for_stratum(&self, stratum: usize) -> u64 {
        self.iterations_per_stratum.get(&stratum).copied().unwrap_or(0)
    }

    pub fn adopted_generations(&self, node: NodeId) -> Vec<u64> {
        self.replan_events
            .iter()
            .filter(|e| e.node == node && e.adopted)
            .map(|e| e.generation)
            .collect()
    }
}

/// Everything one evaluation thread owns: the storage layer, a private copy
/// of the constant pool (binding built-ins intern fresh values at run time),
/// accumulated stats, and the optional JIT runtime.
pub struct ExecContext<S: StorageLayer> {
    pub storage: S,
    pub pool: ConstPool,
    pub stats: ExecStats,
    pub jit: Option<JitRuntime<S>>,
}

impl<S: StorageLayer> ExecContext<S> {
    pub fn new(storage: S, pool: ConstPool) -> Self {
        Self {
            storage,
            pool,
            stats: ExecStats::default(),
            jit: None,
        }
    }

    pub fn with_jit(storage: S, pool: ConstPool, jit: JitRuntime<S>) -> Self {
        Self {
            storage,
            pool,
            stats: ExecStats::default(),
            jit: Some(jit),
        }
    }
}

/// Registers the program's relations and loads EDB facts into storage.
pub fn init_storage<S: StorageLayer>(program: &Program, storage: &mut S) {
    for rel in program.relation_ids() {
        storage.register(rel, program.arity(rel), program.kind(rel));
    }
    for (&rel, tuples) in &program.facts {
        debug_assert_eq!(program.kind(rel), RelKind::Edb);
        for t in tuples {
            storage.insert_edb(rel, t.clone());
        }
    }
}

/// Evaluates one conjunctive query under its current permutation and returns
/// the number of genuinely new tuples.
pub fn eval_cq<S: StorageLayer>(
    d: &CqDescriptor,
    node: NodeId,
    ctx: &mut ExecContext<S>,
) -> u64 {
    let plan = compile_plan(d);
    let run = execute_plan(&plan, &mut ctx.storage, &mut ctx.pool);
    ctx.stats.interp_cq_evals += 1;
    ctx.stats.probes_total += run.probes;
    *ctx.stats.probes_per_node.entry(node).or_insert(0) += run.probes;
    ctx.stats.inserted_total += run.inserted;
    run.inserted
}

/// Records a swap safe point in the stats.
pub(crate) fn note_swap<S: StorageLayer>(
    ctx: &mut ExecContext<S>,
    stratum: usize,
    relations: &[RelId],
) {
    ctx.stats.total_swaps += 1;
    let iter = ctx
        .stats
        .iterations_per_stratum
        .entry(stratum)
        .and_modify(|n| *n += 1)
        .or_insert(1);
    let cards = relations
        .iter()
        .map(|&r| (r, ctx.storage.cardinality(r, ViewSel::KnownDerived)))
        .collect();
    let iteration = *iter;
    ctx.stats.cardinality_log.push(IterationCard {
        stratum,
        iteration,
        cards,
    });
}

/// Stratum a program-root child evaluates, if any.
fn top_level_stratum(op: &IrOp) -> Option<usize> {
    match op {
        IrOp::IterationSeq { stratum, .. } => Some(*stratum),
        IrOp::DoWhile { body, .. } => top_level_stratum(body),
        _ => None,
    }
}

/// Is `op` a safe-point node of the configured re-optimization granularity?
fn is_dispatch_site<S: StorageLayer>(op: &IrOp, ctx: &ExecContext<S>) -> bool {
    let Some(jit) = &ctx.jit else { return false };
    matches!(
        (op, jit.config.granularity),
        (IrOp::IterationSeq { .. }, Granularity::Iteration)
            | (IrOp::RuleUnion { .. }, Granularity::Rule)
            | (IrOp::Cq { .. }, Granularity::Cq)
    )
}

/// Executes a node, handing granularity-matching nodes to the adaptive
/// runtime when one is configured. This is the interpreter's entry point for
/// both pure interpretation and JIT modes.
pub fn exec_node<S: StorageLayer>(op: &IrOp, ctx: &mut ExecContext<S>) {
    if is_dispatch_site(op, ctx) {
        crate::adaptive::jit_dispatch(op, ctx);
        return;
    }
    exec_node_plain(op, ctx);
}

/// Executes a node without consulting the adaptive runtime at this level
/// (children still get their own dispatch checks).
pub(crate) fn exec_node_plain<S: StorageLayer>(op: &IrOp, ctx: &mut ExecContext<S>) {
    match op {
        IrOp::ProgramRoot { children, .. } => {
            for c in children {
                let stratum = top_level_stratum(c);
                let started = std::time::Instant::now();
                exec_node(c, ctx);
                if let Some(stratum) = stratum {
                    *ctx.stats
                        .stratum_wall
                        .entry(stratum)
                        .or_default() += started.elapsed();
                }
            }
        }
        IrOp::EdbLoad { rel, .. } => {
            // Facts were loaded by `init_storage`; this op pins the relation
            // as registered before any stratum runs.
            debug_assert!(ctx.storage.registered().contains(rel));
        }
        IrOp::DoWhile { watched, body, .. } => loop {
            exec_node(body, ctx);
            if !ctx.storage.diff_nonempty(watched) {
                break;
            }
        },
        IrOp::IterationSeq { children, .. } => {
            for c in children {
                exec_node(c, ctx);
            }
        }
        IrOp::SwapClear {
            stratum, relations, ..
        } => {
            ctx.storage.swap_and_clear(relations);
            note_swap(ctx, *stratum, relations);
        }
        IrOp::RuleUnion { children, .. } => {
            for c in children {
                exec_node(c, ctx);
            }
        }
        IrOp::InsertDelta { source, .. } => {
            exec_node(source, ctx);
        }
        IrOp::Cq { id, descriptor } => {
            eval_cq(descriptor, *id, ctx);
        }
    }
}

/// Runs a lowered program to fixpoint: every recursive stratum's loop exits
/// with an empty delta, leaving the Derived stores holding the program's
/// minimal model.
pub fn interpret<S: StorageLayer>(op: &IrOp, ctx: &mut ExecContext<S>) {
    exec_node(op, ctx);
}
