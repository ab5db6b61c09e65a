//! Safe-point plan switching.
//!
//! Blocking mode computes a new plan synchronously whenever the freshness
//! gate opens, then executes it. Asynchronous mode submits the replan to a
//! single worker thread and keeps interpreting the current plan; at every
//! subsequent safe point for that node the evaluation thread polls the plan
//! slot and, if a plan is ready, adopts it so execution continues from the
//! exact child boundary the interpreter reached. All shared state is the
//! immutable snapshot flowing to the worker and the slot flowing back.

use std::sync::mpsc::{Receiver, Sender};
use std::sync::{Arc, Mutex};

use log::{debug, warn};

use crate::interp::{eval_cq, exec_node, ExecContext, ReplanEvent};
use crate::planner::{IrOp, NodeId};
use crate::storage::{CardinalitySnapshot, StorageLayer};

use super::backend::{compile_pipeline, regen_ir, Artifact, RunOutcome};
use super::fresh::{fresh, snapshot_for_node};
use super::order::plan_orders;
use super::{Backend, CompileScope, JitConfig, SyncMode};

/// Single-writer single-reader cell carrying one finished plan from the
/// worker to the evaluation thread. The mutex guarantees the reader observes
/// either the complete artifact or nothing.
pub struct PlanSlot<S: StorageLayer> {
    cell: Mutex<Option<PublishedPlan<S>>>,
}

impl<S: StorageLayer> PlanSlot<S> {
    pub fn new() -> Self {
        Self {
            cell: Mutex::new(None),
        }
    }

    pub fn publish(&self, plan: PublishedPlan<S>) {
        *self.cell.lock().expect("slot") = Some(plan);
    }

    pub fn take(&self) -> Option<PublishedPlan<S>> {
        self.cell.lock().expect("slot").take()
    }

    pub fn is_ready(&self) -> bool {
        self.cell.lock().expect("slot").is_some()
    }
}

impl<S: StorageLayer> Default for PlanSlot<S> {
    fn default() -> Self {
        Self::new()
    }
}

/// A complete plan as published by the worker: generation-stamped artifact
/// plus the reordered tree it was derived from.
pub struct PublishedPlan<S: StorageLayer> {
    pub node: NodeId,
    pub generation: u64,
    pub tree: Arc<IrOp>,
    pub artifact: Artifact<S>,
}

pub(crate) struct ReplanRequest<S: StorageLayer> {
    node: NodeId,
    generation: u64,
    tree: Arc<IrOp>,
    snapshot: CardinalitySnapshot,
    config: JitConfig,
    slot: Arc<PlanSlot<S>>,
}

pub(crate) struct WorkerHandle<S: StorageLayer> {
    tx: Sender<ReplanRequest<S>>,
}

/// Builds the artifact for a node from an already-reordered tree.
fn build_artifact<S: StorageLayer>(
    backend: Backend,
    scope: CompileScope,
    tree: &Arc<IrOp>,
    generation: u64,
) -> Artifact<S> {
    match backend {
        Backend::IrGen => Artifact::RegeneratedIr(tree.clone()),
        Backend::Pipeline => Artifact::Pipeline(Arc::new(compile_pipeline(
            tree,
            &Default::default(),
            scope,
            generation,
            exec_node::<S>,
        ))),
    }
}

fn worker_loop<S: StorageLayer + 'static>(rx: Receiver<ReplanRequest<S>>) {
    while let Ok(req) = rx.recv() {
        if let Some(delay) = req.config.async_compile_delay {
            std::thread::sleep(delay);
        }
        let orders = plan_orders(&req.tree, &req.snapshot, req.config.sort_policy);
        let tree = Arc::new(regen_ir(&req.tree, &orders));
        let artifact = build_artifact(req.config.backend, req.config.scope, &tree, req.generation);
        debug!(
            "worker: plan ready for node {:?} generation {}",
            req.node, req.generation
        );
        req.slot.publish(PublishedPlan {
            node: req.node,
            generation: req.generation,
            tree,
            artifact,
        });
    }
}

fn ensure_worker<S: StorageLayer + 'static>(
    jit: &mut super::JitRuntime<S>,
) -> Option<&WorkerHandle<S>> {
    if jit.worker.is_none() && !jit.worker_failed {
        let (tx, rx) = std::sync::mpsc::channel::<ReplanRequest<S>>();
        let spawned = std::thread::Builder::new()
            .name("carapace-replan".to_string())
            .spawn(move || worker_loop(rx));
        match spawned {
            Ok(_detached) => jit.worker = Some(WorkerHandle { tx }),
            Err(e) => {
                warn!("replan worker failed to start, staying interpreted: {e}");
                jit.worker_failed = true;
            }
        }
    }
    jit.worker.as_ref()
}

/// What the entry bookkeeping decided the execution phase should run.
enum CurrentPlan<S: StorageLayer> {
    Interpret(Arc<IrOp>),
    Compiled(Arc<super::backend::CompiledNode<S>>),
}

fn current_plan<S: StorageLayer>(
    jit: &mut super::JitRuntime<S>,
    op: &IrOp,
) -> CurrentPlan<S> {
    let state = jit.state_for(op);
    match &state.artifact {
        Some(Artifact::Pipeline(c)) => CurrentPlan::Compiled(c.clone()),
        Some(Artifact::RegeneratedIr(t)) => CurrentPlan::Interpret(t.clone()),
        None => CurrentPlan::Interpret(state.current_tree.clone()),
    }
}

/// Synchronously computes and adopts a new plan for `op`.
fn blocking_replan<S: StorageLayer>(
    ctx: &mut ExecContext<S>,
    op: &IrOp,
    snap: CardinalitySnapshot,
) {
    let at_iteration = ctx.stats.total_swaps;
    let jit = ctx.jit.as_mut().expect("dispatch requires jit");
    let config = jit.config.clone();
    let state = jit.state_for(op);
    let generation = state.next_generation;
    state.next_generation += 1;
    let orders = plan_orders(&state.current_tree, &snap, config.sort_policy);
    let tree = Arc::new(regen_ir(&state.current_tree, &orders));
    let artifact = build_artifact(config.backend, config.scope, &tree, generation);
    state.current_tree = tree;
    state.artifact = Some(artifact);
    state.latest_adopted = generation;
    state.prev_snapshot = Some(snap);
    ctx.stats.replans += 1;
    ctx.stats.replan_events.push(ReplanEvent {
        node: op.id(),
        at_iteration,
        generation,
        adopted: true,
    });
}

/// Polls the node's slot and adopts a ready plan unless it is stale
/// (generation not newer than the latest adopted one).
fn poll_and_adopt<S: StorageLayer>(ctx: &mut ExecContext<S>, op: &IrOp) {
    let at_iteration = ctx.stats.total_swaps;
    let jit = ctx.jit.as_mut().expect("dispatch requires jit");
    let state = jit.state_for(op);
    let Some(published) = state.slot.take() else {
        return;
    };
    state.in_flight = false;
    if published.generation <= state.latest_adopted {
        debug!(
            "discarding stale plan for node {:?}: generation {} <= {}",
            op.id(),
            published.generation,
            state.latest_adopted
        );
        return;
    }
    debug_assert_eq!(published.node, op.id());
    state.latest_adopted = published.generation;
    state.current_tree = published.tree.clone();
    state.artifact = Some(published.artifact);
    ctx.stats.replan_events.push(ReplanEvent {
        node: op.id(),
        at_iteration,
        generation: published.generation,
        adopted: true,
    });
}

/// Submits a replan request if the node is fresh and nothing is in flight.
fn maybe_submit<S: StorageLayer + 'static>(
    ctx: &mut ExecContext<S>,
    op: &IrOp,
    snap: &CardinalitySnapshot,
) {
    let at_iteration = ctx.stats.total_swaps;
    let jit = ctx.jit.as_mut().expect("dispatch requires jit");
    let config = jit.config.clone();
    {
        let state = jit.state_for(op);
        if state.in_flight {
            return;
        }
        let gate_open = state
            .prev_snapshot
            .as_ref()
            .is_none_or(|prev| fresh(prev, snap, config.freshness_threshold));
        if !gate_open {
            return;
        }
    }
    if ensure_worker(jit).is_none() {
        return;
    }
    let state = jit.state_for(op);
    let generation = state.next_generation;
    state.next_generation += 1;
    state.in_flight = true;
    state.prev_snapshot = Some(snap.clone());
    let request = ReplanRequest {
        node: op.id(),
        generation,
        tree: state.current_tree.clone(),
        snapshot: snap.clone(),
        config,
        slot: state.slot.clone(),
    };
    let tx = jit.worker.as_ref().expect("worker").tx.clone();
    if tx.send(request).is_err() {
        warn!("replan worker is gone; node {:?} stays interpreted", op.id());
        jit.worker_failed = true;
        let state = jit.state_for(op);
        state.in_flight = false;
        return;
    }
    ctx.stats.replans += 1;
    ctx.stats.replan_events.push(ReplanEvent {
        node: op.id(),
        at_iteration,
        generation,
        adopted: false,
    });
}

/// Runs one slice of the node under interpretation. With `step` set, runs a
/// single child and pauses (so async polling gets a safe point per child);
/// otherwise runs everything from `start`.
fn run_interpreted<S: StorageLayer>(
    tree: &IrOp,
    ctx: &mut ExecContext<S>,
    start: usize,
    step: bool,
) -> RunOutcome {
    match tree {
        IrOp::Cq { id, descriptor } => {
            debug_assert_eq!(start, 0);
            eval_cq(descriptor, *id, ctx);
            RunOutcome::Completed
        }
        IrOp::IterationSeq { children, .. } | IrOp::RuleUnion { children, .. } => {
            if start >= children.len() {
                return RunOutcome::Completed;
            }
            if step {
                exec_node(&children[start], ctx);
                if start + 1 == children.len() {
                    RunOutcome::Completed
                } else {
                    RunOutcome::Paused(start + 1)
                }
            } else {
                for c in &children[start..] {
                    exec_node(c, ctx);
                }
                RunOutcome::Completed
            }
        }
        other => {
            exec_node(other, ctx);
            RunOutcome::Completed
        }
    }
}

/// Executes a safe-point node under the adaptive runtime: take a snapshot,
/// decide whether to (re)plan through the freshness gate, produce the
/// artifact blocking or asynchronously, and run the node — adopting
/// asynchronous plans only at child-boundary safe points, with in-flight
/// results already in storage kept as they are.
pub fn jit_dispatch<S: StorageLayer + 'static>(op: &IrOp, ctx: &mut ExecContext<S>) {
    let config = ctx.jit.as_ref().expect("dispatch requires jit").config.clone();
    let granularity = config.granularity;

    // Entry safe point: snapshot and plan.
    let snap = snapshot_for_node(&ctx.storage, op, granularity, ctx.stats.total_swaps);
    ctx.stats
        .snapshot_history
        .entry(op.id())
        .or_default()
        .push(snap.clone());
    match config.sync {
        SyncMode::Blocking => {
            let need = {
                let jit = ctx.jit.as_mut().unwrap();
                let threshold = config.freshness_threshold;
                let state = jit.state_for(op);
                state
                    .prev_snapshot
                    .as_ref()
                    .is_none_or(|prev| fresh(prev, &snap, threshold))
            };
            if need {
                blocking_replan(ctx, op, snap);
            }
        }
        SyncMode::Async => {
            poll_and_adopt(ctx, op);
            maybe_submit(ctx, op, &snap);
        }
    }

    // Execution, pausing at child boundaries when the mode needs them:
    // asynchronous adoption polls, and per-child freshness re-checks in
    // snippet scope.
    let stepwise = config.sync == SyncMode::Async;
    let mut start = 0usize;
    loop {
        let plan = current_plan(ctx.jit.as_mut().unwrap(), op);
        let outcome = match plan {
            CurrentPlan::Compiled(c) => c.run(ctx, start),
            CurrentPlan::Interpret(tree) => run_interpreted(&tree, ctx, start, stepwise),
        };
        match outcome {
            RunOutcome::Completed => break,
            RunOutcome::Paused(next) => {
                start = next;
                match config.sync {
                    SyncMode::Async => {
                        poll_and_adopt(ctx, op);
                        if config.scope == CompileScope::Snippet {
                            let snap = snapshot_for_node(
                                &ctx.storage,
                                op,
                                granularity,
                                ctx.stats.total_swaps,
                            );
                            maybe_submit(ctx, op, &snap);
                        }
                    }
                    SyncMode::Blocking => {
                        if config.scope == CompileScope::Snippet {
                            // Deoptimization check between children: state
                            // lives entirely in the relational layer, so a
                            // fresh plan can take over mid-node.
                            let snap = snapshot_for_node(
                                &ctx.storage,
                                op,
                                granularity,
                                ctx.stats.total_swaps,
                            );
                            let need = {
                                let jit = ctx.jit.as_mut().unwrap();
                                let threshold = config.freshness_threshold;
                                let state = jit.state_for(op);
                                state
                                    .prev_snapshot
                                    .as_ref()
                                    .is_none_or(|prev| fresh(prev, &snap, threshold))
                            };
                            if need {
                                blocking_replan(ctx, op, snap);
                            }
                        }
                    }
                }
            }
        }
    }
}
