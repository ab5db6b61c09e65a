//! Compilation of a [`CqDescriptor`] plus permutation into a flat join plan,
//! and the push-based executor that streams rows through it.
//!
//! The pipeline is left-deep: the first atom is scanned with its filters
//! pushed down, every further atom becomes a hash-join step probing an index
//! built over that atom's view, comparison built-ins become filters, binding
//! built-ins append a computed column, and surviving rows are projected onto
//! the head and inserted. No state escapes a run except through the storage
//! layer.

use std::collections::HashMap;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::frontend::{ArithOp, CmpOp, ConstId, ConstPool, RelId, Tuple};
use crate::planner::{CqArg, CqDescriptor, CqLiteral, HeadArg};
use crate::storage::{Filter, StorageLayer, ViewSel};

/// Value source inside a pipeline row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColSrc {
    Col(usize),
    Const(ConstId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanStep {
    /// First pipeline stage: enumerate a view under pushed-down filters.
    Scan {
        rel: RelId,
        view: ViewSel,
        filters: Vec<Filter>,
    },
    /// Probe an index over `(rel, view)` keyed by `keys` (row column, atom
    /// position); matching tuples are concatenated onto the row.
    Probe {
        rel: RelId,
        view: ViewSel,
        keys: Vec<(usize, usize)>,
        filters: Vec<Filter>,
    },
    /// Comparison built-in as a row filter.
    Filter { op: CmpOp, lhs: ColSrc, rhs: ColSrc },
    /// Binding built-in: computes `lhs op rhs`. With `check` unset the value
    /// is appended as a new column; with `check` set the target variable was
    /// already bound and the computed value must equal that column.
    Compute {
        op: ArithOp,
        lhs: ColSrc,
        rhs: ColSrc,
        check: Option<usize>,
    },
}

/// A compiled conjunctive query: steps in execution order plus the head
/// projection.
#[derive(Debug, Clone, PartialEq)]
pub struct CqPlan {
    pub target: RelId,
    pub steps: Vec<PlanStep>,
    pub head: Vec<ColSrc>,
}

/// Lowers a descriptor's current permutation into a runnable [`CqPlan`].
/// The permutation must be admissible (the planner and optimizer both
/// guarantee this).
pub fn compile_plan(d: &CqDescriptor) -> CqPlan {
    let mut var_col: HashMap<u16, usize> = HashMap::new();
    let mut width = 0usize;
    let mut steps = Vec::with_capacity(d.permutation.len());

    let resolve = |arg: CqArg, var_col: &HashMap<u16, usize>| -> ColSrc {
        match arg {
            CqArg::Const(c) => ColSrc::Const(c),
            CqArg::Var(v) => ColSrc::Col(
                *var_col
                    .get(&v)
                    .expect("admissible permutation binds built-in inputs"),
            ),
        }
    };

    for (step_no, &lit_idx) in d.permutation.iter().enumerate() {
        match &d.literals[lit_idx] {
            CqLiteral::Atom {
                rel,
                view,
                vars,
                const_filters,
                self_eqs,
            } => {
                let mut filters: Vec<Filter> = const_filters
                    .iter()
                    .map(|&(pos, c)| Filter::ConstEq(pos, c))
                    .collect();
                filters.extend(self_eqs.iter().map(|&(a, b)| Filter::ColEq(a, b)));
                let mut keys = Vec::new();
                for (pos, v) in vars.iter().enumerate() {
                    let Some(v) = v else { continue };
                    match var_col.get(v) {
                        Some(&col) => {
                            // Join only on the first occurrence inside this
                            // atom; repeats are covered by ColEq filters.
                            if !vars[..pos].contains(&Some(*v)) {
                                keys.push((col, pos));
                            }
                        }
                        None => {
                            if !vars[..pos].contains(&Some(*v)) {
                                var_col.insert(*v, width + pos);
                            }
                        }
                    }
                }
                if step_no == 0 {
                    debug_assert!(keys.is_empty());
                    steps.push(PlanStep::Scan {
                        rel: *rel,
                        view: *view,
                        filters,
                    });
                } else {
                    steps.push(PlanStep::Probe {
                        rel: *rel,
                        view: *view,
                        keys,
                        filters,
                    });
                }
                width += vars.len();
            }
            CqLiteral::Cmp { op, lhs, rhs } => {
                steps.push(PlanStep::Filter {
                    op: *op,
                    lhs: resolve(*lhs, &var_col),
                    rhs: resolve(*rhs, &var_col),
                });
            }
            CqLiteral::Bind { target, op, lhs, rhs } => {
                let lhs = resolve(*lhs, &var_col);
                let rhs = resolve(*rhs, &var_col);
                match var_col.get(target) {
                    Some(&col) => steps.push(PlanStep::Compute {
                        op: *op,
                        lhs,
                        rhs,
                        check: Some(col),
                    }),
                    None => {
                        var_col.insert(*target, width);
                        width += 1;
                        steps.push(PlanStep::Compute {
                            op: *op,
                            lhs,
                            rhs,
                            check: None,
                        });
                    }
                }
            }
        }
    }

    let head = d
        .head
        .iter()
        .map(|h| match h {
            HeadArg::Const(c) => ColSrc::Const(*c),
            HeadArg::Var(v) => ColSrc::Col(
                *var_col
                    .get(v)
                    .expect("validated rule binds every head variable"),
            ),
        })
        .collect();

    CqPlan {
        target: d.target,
        steps,
        head,
    }
}

/// Counters coming out of one pipeline run.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CqRun {
    /// Tuples that were genuinely new to the target relation.
    pub inserted: u64,
    /// Hash-join index lookups performed (the cost proxy the runtime
    /// optimizer is judged on).
    pub probes: u64,
}

type ViewIndex<'a> = FxHashMap<Tuple, SmallVec<[&'a Tuple; 2]>>;

fn build_index<'a, S: StorageLayer>(
    storage: &'a S,
    rel: RelId,
    view: ViewSel,
    keys: &[(usize, usize)],
    filters: &[Filter],
) -> ViewIndex<'a> {
    let mut index = ViewIndex::default();
    for t in storage.view(rel, view) {
        if filters.iter().all(|f| f.matches(t)) {
            let key: Tuple = keys.iter().map(|&(_, pos)| t[pos]).collect();
            index.entry(key).or_default().push(t);
        }
    }
    index
}

fn value(row: &[ConstId], src: ColSrc) -> ConstId {
    match src {
        ColSrc::Col(i) => row[i],
        ColSrc::Const(c) => c,
    }
}

fn cmp_holds(pool: &ConstPool, op: CmpOp, a: ConstId, b: ConstId) -> bool {
    match op {
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
        _ => {
            let ord = pool.compare(a, b);
            match op {
                CmpOp::Lt => ord.is_lt(),
                CmpOp::Le => ord.is_le(),
                CmpOp::Gt => ord.is_gt(),
                CmpOp::Ge => ord.is_ge(),
                CmpOp::Eq | CmpOp::Ne => unreachable!(),
            }
        }
    }
}

fn walk(
    plan: &CqPlan,
    indexes: &[ViewIndex<'_>],
    pool: &mut ConstPool,
    row: &mut Vec<ConstId>,
    depth: usize,
    out: &mut Vec<Tuple>,
    probes: &mut u64,
) {
    if depth == plan.steps.len() {
        out.push(plan.head.iter().map(|&src| value(row, src)).collect());
        return;
    }
    match &plan.steps[depth] {
        PlanStep::Scan { .. } => unreachable!("scan handled by the driver"),
        PlanStep::Probe { keys, .. } => {
            let key: Tuple = keys.iter().map(|&(col, _)| row[col]).collect();
            *probes += 1;
            let Some(matches) = indexes[depth].get(&key) else {
                return;
            };
            let base = row.len();
            for m in matches {
                row.extend(m.iter().copied());
                walk(plan, indexes, pool, row, depth + 1, out, probes);
                row.truncate(base);
            }
        }
        PlanStep::Filter { op, lhs, rhs } => {
            if cmp_holds(pool, *op, value(row, *lhs), value(row, *rhs)) {
                walk(plan, indexes, pool, row, depth + 1, out, probes);
            }
        }
        PlanStep::Compute { op, lhs, rhs, check } => {
            let (a, b) = (value(row, *lhs), value(row, *rhs));
            let (Some(a), Some(b)) = (pool.as_int(a), pool.as_int(b)) else {
                return; // non-integer operand: the binding produces nothing
            };
            let Some(result) = op.apply(a, b) else {
                return; // overflow: no binding
            };
            let id = pool.intern_int(result);
            match check {
                Some(col) => {
                    if row[*col] == id {
                        walk(plan, indexes, pool, row, depth + 1, out, probes);
                    }
                }
                None => {
                    row.push(id);
                    walk(plan, indexes, pool, row, depth + 1, out, probes);
                    row.pop();
                }
            }
        }
    }
}

/// Streams every row of the pipeline and collects the projected head tuples.
/// Probe indexes are only built once the scan produces its first surviving
/// row, so a query whose delta is empty touches no other relation.
fn stream_rows<S: StorageLayer>(
    plan: &CqPlan,
    storage: &S,
    pool: &mut ConstPool,
) -> (Vec<Tuple>, u64) {
    let PlanStep::Scan { rel, view, filters } = &plan.steps[0] else {
        panic!("plan must start with a scan");
    };
    let mut out = Vec::new();
    let mut probes = 0u64;
    let mut indexes: Vec<ViewIndex<'_>> = Vec::new();
    let mut row: Vec<ConstId> = Vec::with_capacity(16);
    for t in storage.view(*rel, *view) {
        if filters.iter().all(|f| f.matches(t)) {
            if indexes.is_empty() {
                indexes = plan
                    .steps
                    .iter()
                    .map(|s| match s {
                        PlanStep::Probe {
                            rel,
                            view,
                            keys,
                            filters,
                        } => build_index(storage, *rel, *view, keys, filters),
                        _ => ViewIndex::default(),
                    })
                    .collect();
            }
            row.extend(t.iter().copied());
            walk(plan, &indexes, pool, &mut row, 1, &mut out, &mut probes);
            row.clear();
        }
    }
    (out, probes)
}

/// Runs a compiled plan against the storage layer: streams rows through the
/// steps, projects the head, and inserts into the target's New views.
/// Returns insert and probe counters.
pub fn execute_plan<S: StorageLayer>(
    plan: &CqPlan,
    storage: &mut S,
    pool: &mut ConstPool,
) -> CqRun {
    let (rows, probes) = stream_rows(plan, storage, pool);
    let inserted = storage.insert_batch(plan.target, rows);
    CqRun { inserted, probes }
}

/// Convenience used by tests: the set of head tuples a descriptor produces,
/// without touching the target relation.
pub fn collect_rows<S: StorageLayer>(
    d: &CqDescriptor,
    storage: &S,
    pool: &mut ConstPool,
) -> Vec<Tuple> {
    stream_rows(&compile_plan(d), storage, pool).0
}
