//! The runtime optimizer: cardinality snapshots at safe points, a freshness
//! gate, join reordering, and two ways of turning a new plan into something
//! executable — regenerated IR for the interpreter, or stitched pipelines of
//! precompiled operators — handed over blocking or asynchronously.

mod backend;
mod dispatch;
mod fresh;
mod order;

pub use backend::{
    compile_pipeline, regen_ir, Artifact, CompiledNode, Continuation, RunOutcome,
};
pub use dispatch::{jit_dispatch, PlanSlot, PublishedPlan};
pub use fresh::{fresh, snapshot, snapshot_for_node};
pub use order::{literal_key, order, plan_orders, presort, repair_order, OrderKey};

use std::collections::HashMap;
use std::sync::Arc;

use crate::planner::{IrOp, NodeId};
use crate::storage::{CardinalitySnapshot, StorageLayer};

/// IR level at which re-optimization is applied: once per semi-naive
/// iteration, per rule union, or per conjunctive query (most accurate delta
/// cardinalities, most frequent).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Iteration,
    Rule,
    Cq,
}

impl Granularity {
    pub fn label(self) -> &'static str {
        match self {
            Granularity::Iteration => "iteration",
            Granularity::Rule => "rule",
            Granularity::Cq => "cq",
        }
    }
}

/// How a new plan becomes executable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Regenerate the IR subtree with new permutations and re-interpret it.
    IrGen,
    /// Stitch precompiled operator pipelines; no tree traversal at run time.
    Pipeline,
}

impl Backend {
    pub fn label(self) -> &'static str {
        match self {
            Backend::IrGen => "irgen",
            Backend::Pipeline => "pipeline",
        }
    }
}

/// Whether plan production blocks evaluation or runs on the worker thread
/// while interpretation continues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncMode {
    Blocking,
    Async,
}

impl SyncMode {
    pub fn label(self) -> &'static str {
        match self {
            SyncMode::Blocking => "blocking",
            SyncMode::Async => "async",
        }
    }
}

/// Compile a node with its whole subtree, or only the node's own logic with
/// interpreter continuations for the children.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompileScope {
    Full,
    Snippet,
}

impl CompileScope {
    pub fn label(self) -> &'static str {
        match self {
            CompileScope::Full => "full",
            CompileScope::Snippet => "snippet",
        }
    }
}

/// Key priority for the runtime sort.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortPolicy {
    CardinalityThenSelectivity,
    SelectivityThenCardinality,
    /// Keep the current permutation.
    None,
}

impl SortPolicy {
    pub fn label(self) -> &'static str {
        match self {
            SortPolicy::CardinalityThenSelectivity => "card",
            SortPolicy::SelectivityThenCardinality => "sel",
            SortPolicy::None => "none",
        }
    }
}

/// Ahead-of-time body pre-sorting applied before lowering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresortMode {
    Off,
    /// Selectivity only; no fact cardinalities consulted.
    RulesOnly,
    /// Initial EDB cardinality first, selectivity second.
    FactsAndRules,
}

impl PresortMode {
    pub fn label(self) -> &'static str {
        match self {
            PresortMode::Off => "off",
            PresortMode::RulesOnly => "rules",
            PresortMode::FactsAndRules => "facts-rules",
        }
    }
}

/// Full JIT configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct JitConfig {
    pub granularity: Granularity,
    pub backend: Backend,
    pub sync: SyncMode,
    pub scope: CompileScope,
    /// Freshness threshold θ. `f64::INFINITY` disables the test entirely
    /// (only first visits replan); `0.0` makes any cardinality change fresh.
    pub freshness_threshold: f64,
    pub sort_policy: SortPolicy,
    pub presort: PresortMode,
    /// Artificial delay injected before the worker computes a plan. Test and
    /// benchmark hook for asynchronous handoff.
    pub async_compile_delay: Option<std::time::Duration>,
}

impl Default for JitConfig {
    fn default() -> Self {
        Self {
            granularity: Granularity::Cq,
            backend: Backend::IrGen,
            sync: SyncMode::Blocking,
            scope: CompileScope::Full,
            freshness_threshold: 0.25,
            sort_policy: SortPolicy::CardinalityThenSelectivity,
            presort: PresortMode::Off,
            async_compile_delay: None,
        }
    }
}

impl JitConfig {
    /// Rejects configurations the backends cannot honor.
    pub fn check(&self) -> Result<(), String> {
        if self.scope == CompileScope::Snippet && self.backend != Backend::Pipeline {
            return Err("snippet scope requires the pipeline backend".to_string());
        }
        if self.freshness_threshold.is_nan() || self.freshness_threshold < 0.0 {
            return Err("freshness threshold must be a non-negative number or inf".to_string());
        }
        Ok(())
    }
}

/// Per-optimized-node bookkeeping.
pub(crate) struct NodeState<S: StorageLayer> {
    /// Subtree with the most recently adopted permutations applied; starts
    /// as the original lowering.
    pub current_tree: Arc<IrOp>,
    /// Snapshot behind the last plan computation (the freshness baseline).
    pub prev_snapshot: Option<CardinalitySnapshot>,
    pub artifact: Option<Artifact<S>>,
    pub next_generation: u64,
    pub latest_adopted: u64,
    pub in_flight: bool,
    pub slot: Arc<PlanSlot<S>>,
}

impl<S: StorageLayer> NodeState<S> {
    fn new(original: Arc<IrOp>) -> Self {
        Self {
            current_tree: original,
            prev_snapshot: None,
            artifact: None,
            next_generation: 1,
            latest_adopted: 0,
            in_flight: false,
            slot: Arc::new(PlanSlot::new()),
        }
    }
}

/// The adaptive runtime attached to an evaluation context in JIT mode.
pub struct JitRuntime<S: StorageLayer> {
    pub config: JitConfig,
    pub(crate) nodes: HashMap<NodeId, NodeState<S>>,
    pub(crate) worker: Option<dispatch::WorkerHandle<S>>,
    pub(crate) worker_failed: bool,
}

impl<S: StorageLayer> JitRuntime<S> {
    pub fn new(config: JitConfig) -> Self {
        Self {
            config,
            nodes: HashMap::new(),
            worker: None,
            worker_failed: false,
        }
    }

    pub(crate) fn state_for(&mut self, op: &IrOp) -> &mut NodeState<S> {
        self.nodes
            .entry(op.id())
            .or_insert_with(|| NodeState::new(Arc::new(op.clone())))
    }

    /// Number of distinct nodes the runtime has optimized.
    pub fn optimized_node_count(&self) -> usize {
        self.nodes.len()
    }
}
