//! Pluggable relational layer.
//!
//! Every rule-derived relation is held as four tuple sets: Derived (all facts
//! discovered so far) and Delta (only the previous iteration's new facts),
//! each split into Known (read by subquery evaluation) and New (written by
//! it). The split is what makes every operator boundary a safe point: between
//! two safe points the Known views are frozen and only the New views grow.
//! `swap_and_clear` publishes the New side at end of iteration and
//! `diff_nonempty` decides loop termination.
//!
//! [`HashStorage`] is the default in-memory implementation;
//! [`InstrumentedStore`] wraps any store and checks the quadrant discipline,
//! delta soundness, and monotonicity as the evaluation runs.

mod hash_store;
mod instrumented;

pub use hash_store::HashStorage;
pub use instrumented::InstrumentedStore;

use crate::frontend::{ConstId, RelId, RelKind, Tuple};

/// Backing set type for every view. FxHash keeps tuple hashing cheap and,
/// being unseeded, makes iteration order reproducible across runs.
pub type TupleSet = rustc_hash::FxHashSet<Tuple>;

/// Which of a relation's tuple sets an operation addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViewSel {
    /// The single immutable set of an input relation.
    Edb,
    KnownDerived,
    KnownDelta,
    NewDerived,
    NewDelta,
}

impl ViewSel {
    pub fn label(self) -> &'static str {
        match self {
            ViewSel::Edb => "edb",
            ViewSel::KnownDerived => "known-derived",
            ViewSel::KnownDelta => "known-delta",
            ViewSel::NewDerived => "new-derived",
            ViewSel::NewDelta => "new-delta",
        }
    }
}

/// A scan filter: either a column pinned to a constant or two columns that
/// must agree (a repeated variable).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Filter {
    ConstEq(usize, ConstId),
    ColEq(usize, usize),
}

impl Filter {
    pub fn matches(&self, t: &Tuple) -> bool {
        match *self {
            Filter::ConstEq(col, c) => t[col] == c,
            Filter::ColEq(a, b) => t[a] == t[b],
        }
    }
}

/// Exact relation cardinalities captured at a safe point. Input to the
/// runtime ordering policy and the freshness test.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CardinalitySnapshot {
    /// Number of swap safe points executed before this snapshot was taken.
    pub iteration: u64,
    pub counts: std::collections::BTreeMap<(RelId, ViewSel), usize>,
}

impl CardinalitySnapshot {
    /// Count for `(rel, view)`, falling back from a delta view to the
    /// derived view when the snapshot was taken at a granularity that only
    /// records derived-database counts.
    pub fn count(&self, rel: RelId, view: ViewSel) -> Option<usize> {
        if let Some(&n) = self.counts.get(&(rel, view)) {
            return Some(n);
        }
        match view {
            ViewSel::KnownDelta | ViewSel::NewDelta => {
                self.counts.get(&(rel, ViewSel::KnownDerived)).copied()
            }
            ViewSel::KnownDerived | ViewSel::NewDerived => {
                self.counts.get(&(rel, ViewSel::Edb)).copied()
            }
            ViewSel::Edb => None,
        }
    }
}

static EMPTY_SET: std::sync::LazyLock<TupleSet> = std::sync::LazyLock::new(TupleSet::default);

/// An always-empty tuple set, used as the delta view of static relations.
pub fn empty_view() -> &'static TupleSet {
    &EMPTY_SET
}

/// The relational layer contract. Evaluation owns exactly one store and
/// drives it from a single thread of control. (`'static` because plan
/// artifacts typed over the store may outlive a borrow by sitting in the
/// worker's hand-off slot.)
pub trait StorageLayer: 'static {
    /// Declares a relation before any tuples flow. Idempotent.
    fn register(&mut self, rel: RelId, arity: usize, kind: RelKind);

    fn arity(&self, rel: RelId) -> usize;

    fn kind(&self, rel: RelId) -> RelKind;

    fn registered(&self) -> Vec<RelId>;

    /// Adds a fact to an input relation's single set.
    fn insert_edb(&mut self, rel: RelId, t: Tuple) -> bool;

    /// Inserts into the New views of a derived relation. Returns true iff
    /// the tuple was genuinely new, i.e. absent from everything derived so
    /// far (Known ∪ New Derived). On true the tuple lands in both NewDerived
    /// and NewDelta.
    fn insert(&mut self, rel: RelId, t: Tuple) -> bool;

    /// Bulk [`Self::insert`]; returns how many tuples were genuinely new.
    /// Implementations may resolve the relation once for the whole batch.
    fn insert_batch(&mut self, rel: RelId, tuples: Vec<Tuple>) -> u64 {
        let mut inserted = 0;
        for t in tuples {
            if self.insert(rel, t) {
                inserted += 1;
            }
        }
        inserted
    }

    /// End-of-iteration safe point: per relation, NewDerived folds into
    /// KnownDerived, NewDelta becomes KnownDelta, and the New side resets.
    fn swap_and_clear(&mut self, rels: &[RelId]);

    /// True iff any listed relation's KnownDelta is non-empty. Valid at the
    /// safe point straight after `swap_and_clear`.
    fn diff_nonempty(&self, rels: &[RelId]) -> bool;

    /// Exact tuple count of a view.
    fn cardinality(&self, rel: RelId, view: ViewSel) -> usize;

    /// Zero-copy access to a materialized view's backing set. `NewDerived`
    /// is virtual (KnownDerived ∪ NewDelta) and is served by [`Self::select`]
    /// instead; asking for it here panics.
    fn view(&self, rel: RelId, view: ViewSel) -> &TupleSet;

    /// All tuples of a view satisfying every filter, each exactly once, in
    /// unspecified order.
    fn select(&self, rel: RelId, view: ViewSel, filters: &[Filter]) -> Vec<Tuple> {
        let pick = |set: &TupleSet| -> Vec<Tuple> {
            set.iter()
                .filter(|t| filters.iter().all(|f| f.matches(t)))
                .cloned()
                .collect()
        };
        if view == ViewSel::NewDerived && self.kind(rel) == RelKind::Idb {
            let mut out = pick(self.view(rel, ViewSel::KnownDerived));
            out.extend(pick(self.view(rel, ViewSel::NewDelta)));
            out
        } else {
            pick(self.view(rel, view))
        }
    }

    /// Hash join of a bound tuple stream against a stored view. `keys` pairs
    /// a column of the left stream with a column of the right view; zero key
    /// pairs degenerate to the cross product. Output tuples are the left
    /// tuple concatenated with the matching right tuple. Set semantics are
    /// deferred to head projection and insert.
    fn join(
        &self,
        left: &[Tuple],
        right: (RelId, ViewSel),
        keys: &[(usize, usize)],
    ) -> Vec<Tuple> {
        let rows = self.select(right.0, right.1, &[]);
        let mut index: rustc_hash::FxHashMap<Tuple, Vec<&Tuple>> = Default::default();
        for t in &rows {
            let key: Tuple = keys.iter().map(|&(_, rc)| t[rc]).collect();
            index.entry(key).or_default().push(t);
        }
        let mut out = Vec::new();
        for l in left {
            let key: Tuple = keys.iter().map(|&(lc, _)| l[lc]).collect();
            if let Some(matches) = index.get(&key) {
                for r in matches {
                    let mut row = l.clone();
                    row.extend(r.iter().copied());
                    out.push(row);
                }
            }
        }
        out
    }
}

/// Projects each tuple of a stream onto the given column indices.
pub fn project(stream: &[Tuple], indices: &[usize]) -> Vec<Tuple> {
    stream
        .iter()
        .map(|t| indices.iter().map(|&i| t[i]).collect())
        .collect()
}

/// Set union of several tuple streams.
pub fn union(streams: &[Vec<Tuple>]) -> Vec<Tuple> {
    let mut seen = TupleSet::default();
    let mut out = Vec::new();
    for s in streams {
        for t in s {
            if seen.insert(t.clone()) {
                out.push(t.clone());
            }
        }
    }
    out
}
