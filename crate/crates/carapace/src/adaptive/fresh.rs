//! Cardinality snapshots and the freshness gate that suppresses replanning
//! until relation cardinalities have changed materially relative to each
//! other.

use crate::planner::IrOp;
use crate::storage::{CardinalitySnapshot, StorageLayer, ViewSel};

use super::Granularity;

/// Captures exact counts for a list of `(relation, view)` pairs.
///
/// At `Iteration` granularity only derived-database counts are recorded
/// (delta views are mapped to their derived relation), mirroring the coarser
/// information available at the top of the loop. At `Rule` and `Cq`
/// granularity the actual delta counts are recorded as well.
pub fn snapshot<S: StorageLayer>(
    storage: &S,
    views: &[(crate::frontend::RelId, ViewSel)],
    granularity: Granularity,
    iteration: u64,
) -> CardinalitySnapshot {
    let mut snap = CardinalitySnapshot {
        iteration,
        ..Default::default()
    };
    for &(rel, view) in views {
        let derived_view = match view {
            ViewSel::Edb => ViewSel::Edb,
            _ => ViewSel::KnownDerived,
        };
        snap.counts
            .insert((rel, derived_view), storage.cardinality(rel, derived_view));
        if granularity != Granularity::Iteration && view != derived_view {
            snap.counts.insert((rel, view), storage.cardinality(rel, view));
        }
    }
    snap
}

/// Snapshot of everything a node's subtree reads.
pub fn snapshot_for_node<S: StorageLayer>(
    storage: &S,
    node: &IrOp,
    granularity: Granularity,
    iteration: u64,
) -> CardinalitySnapshot {
    snapshot(storage, &node.referenced_views(), granularity, iteration)
}

/// The freshness test: true when replanning is worth considering.
///
/// Two clauses: (a) the cardinality-order permutation of the snapshotted
/// views differs between `prev` and `cur`, or (b) some view's relative change
/// `|cur - prev| / max(prev, 1)` exceeds θ. A θ of infinity disables the
/// test entirely so only first visits plan; θ = 0 makes any change fresh.
pub fn fresh(prev: &CardinalitySnapshot, cur: &CardinalitySnapshot, theta: f64) -> bool {
    if theta.is_infinite() {
        return false;
    }
    let keys: std::collections::BTreeSet<_> =
        prev.counts.keys().chain(cur.counts.keys()).collect();

    // Clause (a): rank inversion.
    let rank = |snap: &CardinalitySnapshot| {
        let mut entries: Vec<_> = keys
            .iter()
            .map(|&&k| (snap.counts.get(&k).copied().unwrap_or(0), k))
            .collect();
        entries.sort_by_key(|&(count, k)| (count, k));
        entries.into_iter().map(|(_, k)| k).collect::<Vec<_>>()
    };
    if rank(prev) != rank(cur) {
        return true;
    }

    // Clause (b): relative change above θ.
    keys.iter().any(|&&k| {
        let p = prev.counts.get(&k).copied().unwrap_or(0);
        let c = cur.counts.get(&k).copied().unwrap_or(0);
        let change = p.abs_diff(c) as f64 / (p.max(1)) as f64;
        change > theta
    })
}
