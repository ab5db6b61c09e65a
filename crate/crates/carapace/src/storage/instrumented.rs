//! A wrapping store that checks the relational layer's contracts while a
//! query runs: quadrant discipline (Known views frozen between safe points,
//! New views never read by evaluation), delta soundness after each swap, and
//! derived-set monotonicity.

use std::collections::HashMap;

use crate::frontend::{RelId, RelKind, Tuple};

use super::{HashStorage, StorageLayer, TupleSet, ViewSel};

/// Delegating store that records contract violations instead of panicking,
/// so a test can run a whole query and then assert `violations()` is empty.
#[derive(Debug, Default)]
pub struct InstrumentedStore {
    inner: HashStorage,
    /// KnownDerived/KnownDelta sizes as of the last safe point.
    known_sizes: HashMap<RelId, (usize, usize)>,
    /// Derived contents as of the previous swap, for the delta law.
    prev_derived: HashMap<RelId, TupleSet>,
    violations: Vec<String>,
    swaps: u64,
}

impl InstrumentedStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    pub fn swap_count(&self) -> u64 {
        self.swaps
    }

    fn check_known_frozen(&mut self, rel: RelId) {
        if self.inner.kind(rel) != RelKind::Idb {
            return;
        }
        if let Some(&(kd, kdelta)) = self.known_sizes.get(&rel) {
            let now_kd = self.inner.cardinality(rel, ViewSel::KnownDerived);
            let now_delta = self.inner.cardinality(rel, ViewSel::KnownDelta);
            if (now_kd, now_delta) != (kd, kdelta) {
                self.violations.push(format!(
                    "Known views of {rel:?} changed between safe points: \
                     derived {kd}->{now_kd}, delta {kdelta}->{now_delta}"
                ));
            }
        }
    }

    fn record_known_sizes(&mut self) {
        self.known_sizes.clear();
        for rel in self.inner.registered() {
            if self.inner.kind(rel) == RelKind::Idb {
                self.known_sizes.insert(
                    rel,
                    (
                        self.inner.cardinality(rel, ViewSel::KnownDerived),
                        self.inner.cardinality(rel, ViewSel::KnownDelta),
                    ),
                );
            }
        }
    }
}

impl StorageLayer for InstrumentedStore {
    fn register(&mut self, rel: RelId, arity: usize, kind: RelKind) {
        self.inner.register(rel, arity, kind);
        if kind == RelKind::Idb {
            self.prev_derived.entry(rel).or_default();
        }
    }

    fn arity(&self, rel: RelId) -> usize {
        self.inner.arity(rel)
    }

    fn kind(&self, rel: RelId) -> RelKind {
        self.inner.kind(rel)
    }

    fn registered(&self) -> Vec<RelId> {
        self.inner.registered()
    }

    fn insert_edb(&mut self, rel: RelId, t: Tuple) -> bool {
        self.inner.insert_edb(rel, t)
    }

    fn insert(&mut self, rel: RelId, t: Tuple) -> bool {
        self.check_known_frozen(rel);
        self.inner.insert(rel, t)
    }

    fn swap_and_clear(&mut self, rels: &[RelId]) {
        self.swaps += 1;
        for &rel in rels {
            let before = self.prev_derived.get(&rel).cloned().unwrap_or_default();
            let before_len = before.len();
            self.inner.swap_and_clear(std::slice::from_ref(&rel));
            let after: TupleSet = self.inner.view(rel, ViewSel::KnownDerived).clone();
            let delta: TupleSet = self.inner.view(rel, ViewSel::KnownDelta).clone();
            let expected: TupleSet = after.difference(&before).cloned().collect();
            if delta != expected {
                self.violations.push(format!(
                    "delta law broken for {rel:?} at swap {}: |delta|={} but |derived \\ prev|={}",
                    self.swaps,
                    delta.len(),
                    expected.len()
                ));
            }
            if after.len() < before_len {
                self.violations
                    .push(format!("derived set of {rel:?} shrank at swap {}", self.swaps));
            }
            self.prev_derived.insert(rel, after);
        }
        self.record_known_sizes();
    }

    fn diff_nonempty(&self, rels: &[RelId]) -> bool {
        self.inner.diff_nonempty(rels)
    }

    fn cardinality(&self, rel: RelId, view: ViewSel) -> usize {
        self.inner.cardinality(rel, view)
    }

    fn view(&self, rel: RelId, view: ViewSel) -> &TupleSet {
        self.inner.view(rel, view)
    }
}
