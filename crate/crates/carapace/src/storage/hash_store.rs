//! Default in-memory store: hash sets of interned-constant tuples, no
//! indexes beyond the join-time hash tables evaluation builds per subquery.

use std::collections::HashMap;

use crate::frontend::{RelId, RelKind, Tuple};

use super::{empty_view, StorageLayer, TupleSet, ViewSel};

#[derive(Debug, Clone, Copy)]
struct RelMeta {
    arity: usize,
    kind: RelKind,
}

/// Quadrant store backed by `HashSet<Tuple>`.
///
/// NewDerived is not materialized: the duplicate check on insert runs against
/// KnownDerived ∪ NewDelta, which is the same set, so swap only has to fold
/// the delta in rather than copy whole relations.
#[derive(Debug, Default, Clone)]
pub struct HashStorage {
    info: HashMap<RelId, RelMeta>,
    edb: HashMap<RelId, TupleSet>,
    known_derived: HashMap<RelId, TupleSet>,
    known_delta: HashMap<RelId, TupleSet>,
    new_delta: HashMap<RelId, TupleSet>,
}

impl HashStorage {
    pub fn new() -> Self {
        Self::default()
    }

    fn meta(&self, rel: RelId) -> RelMeta {
        *self
            .info
            .get(&rel)
            .unwrap_or_else(|| panic!("relation {rel:?} not registered"))
    }
}

impl StorageLayer for HashStorage {
    fn register(&mut self, rel: RelId, arity: usize, kind: RelKind) {
        self.info.insert(rel, RelMeta { arity, kind });
        match kind {
            RelKind::Edb => {
                self.edb.entry(rel).or_default();
            }
            RelKind::Idb => {
                self.known_derived.entry(rel).or_default();
                self.known_delta.entry(rel).or_default();
                self.new_delta.entry(rel).or_default();
            }
        }
    }

    fn arity(&self, rel: RelId) -> usize {
        self.meta(rel).arity
    }

    fn kind(&self, rel: RelId) -> RelKind {
        self.meta(rel).kind
    }

    fn registered(&self) -> Vec<RelId> {
        let mut rels: Vec<RelId> = self.info.keys().copied().collect();
        rels.sort();
        rels
    }

    fn insert_edb(&mut self, rel: RelId, t: Tuple) -> bool {
        debug_assert_eq!(t.len(), self.arity(rel), "arity mismatch on insert");
        debug_assert_eq!(self.kind(rel), RelKind::Edb);
        self.edb.get_mut(&rel).expect("registered").insert(t)
    }

    fn insert(&mut self, rel: RelId, t: Tuple) -> bool {
        debug_assert_eq!(t.len(), self.arity(rel), "arity mismatch on insert");
        debug_assert_eq!(self.kind(rel), RelKind::Idb);
        if self.known_derived[&rel].contains(&t) {
            return false;
        }
        self.new_delta.get_mut(&rel).expect("registered").insert(t)
    }

    fn insert_batch(&mut self, rel: RelId, tuples: Vec<Tuple>) -> u64 {
        debug_assert_eq!(self.kind(rel), RelKind::Idb);
        let arity = self.arity(rel);
        let derived = &self.known_derived[&rel];
        let delta = self.new_delta.get_mut(&rel).expect("registered");
        let mut inserted = 0;
        for t in tuples {
            debug_assert_eq!(t.len(), arity, "arity mismatch on insert");
            if !derived.contains(&t) && delta.insert(t) {
                inserted += 1;
            }
        }
        inserted
    }

    fn swap_and_clear(&mut self, rels: &[RelId]) {
        for &rel in rels {
            debug_assert_eq!(self.kind(rel), RelKind::Idb);
            let fresh = std::mem::take(self.new_delta.get_mut(&rel).expect("registered"));
            let derived = self.known_derived.get_mut(&rel).expect("registered");
            for t in &fresh {
                derived.insert(t.clone());
            }
            *self.known_delta.get_mut(&rel).expect("registered") = fresh;
        }
    }

    fn diff_nonempty(&self, rels: &[RelId]) -> bool {
        rels.iter().any(|rel| !self.known_delta[rel].is_empty())
    }

    fn cardinality(&self, rel: RelId, view: ViewSel) -> usize {
        match (self.kind(rel), view) {
            (RelKind::Idb, ViewSel::NewDerived) => {
                self.known_derived[&rel].len() + self.new_delta[&rel].len()
            }
            _ => self.view(rel, view).len(),
        }
    }

    fn view(&self, rel: RelId, view: ViewSel) -> &TupleSet {
        match self.kind(rel) {
            RelKind::Edb => match view {
                // A static relation is its own derived database and has no
                // delta.
                ViewSel::Edb | ViewSel::KnownDerived | ViewSel::NewDerived => &self.edb[&rel],
                ViewSel::KnownDelta | ViewSel::NewDelta => empty_view(),
            },
            RelKind::Idb => match view {
                ViewSel::KnownDerived => &self.known_derived[&rel],
                ViewSel::KnownDelta => &self.known_delta[&rel],
                ViewSel::NewDelta => &self.new_delta[&rel],
                ViewSel::NewDerived => {
                    panic!("NewDerived is virtual; use select() or cardinality()")
                }
                ViewSel::Edb => panic!("derived relation has no EDB view"),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ConstId;

    fn t(vals: &[u32]) -> Tuple {
        vals.iter().map(|&v| ConstId(v)).collect()
    }

    fn idb_store() -> (HashStorage, RelId) {
        let mut s = HashStorage::new();
        let r = RelId(0);
        s.register(r, 2, RelKind::Idb);
        (s, r)
    }

    #[test]
    fn insert_new_tuple_grows_both_new_views() {
        let (mut s, r) = idb_store();
        assert!(s.insert(r, t(&[1, 2])));
        assert_eq!(s.cardinality(r, ViewSel::NewDelta), 1);
        assert_eq!(s.cardinality(r, ViewSel::NewDerived), 1);
        assert_eq!(s.cardinality(r, ViewSel::KnownDerived), 0);
    }

    #[test]
    fn reinsert_is_suppressed() {
        let (mut s, r) = idb_store();
        assert!(s.insert(r, t(&[1, 2])));
        assert!(!s.insert(r, t(&[1, 2])));
        assert_eq!(s.cardinality(r, ViewSel::NewDelta), 1);
    }

    #[test]
    fn insert_of_previously_derived_tuple_is_not_new() {
        let (mut s, r) = idb_store();
        s.insert(r, t(&[1, 2]));
        s.swap_and_clear(&[r]);
        assert!(!s.insert(r, t(&[1, 2])));
        assert_eq!(s.cardinality(r, ViewSel::NewDelta), 0);
    }

    #[test]
    fn swap_publishes_delta() {
        let (mut s, r) = idb_store();
        s.insert(r, t(&[1, 2]));
        s.swap_and_clear(&[r]);
        assert_eq!(s.cardinality(r, ViewSel::KnownDelta), 1);
        assert_eq!(s.cardinality(r, ViewSel::NewDelta), 0);
        assert_eq!(s.cardinality(r, ViewSel::KnownDerived), 1);
    }

    #[test]
    fn swap_after_empty_iteration_clears_delta() {
        let (mut s, r) = idb_store();
        s.insert(r, t(&[1, 2]));
        s.swap_and_clear(&[r]);
        s.swap_and_clear(&[r]);
        assert_eq!(s.cardinality(r, ViewSel::KnownDelta), 0);
        assert!(!s.diff_nonempty(&[r]));
    }

    #[test]
    fn delta_holds_only_previous_iteration_facts() {
        let (mut s, r) = idb_store();
        s.insert(r, t(&[1, 2]));
        s.swap_and_clear(&[r]);
        s.insert(r, t(&[3, 4]));
        s.swap_and_clear(&[r]);
        assert!(s.view(r, ViewSel::KnownDelta).contains(&t(&[3, 4])));
        assert!(!s.view(r, ViewSel::KnownDelta).contains(&t(&[1, 2])));
        assert_eq!(s.cardinality(r, ViewSel::KnownDerived), 2);
    }

    #[test]
    fn diff_sees_any_nonempty_delta() {
        let (mut s, r) = idb_store();
        let r2 = RelId(1);
        s.register(r2, 1, RelKind::Idb);
        s.insert(r2, t(&[9]));
        s.swap_and_clear(&[r, r2]);
        assert!(s.diff_nonempty(&[r, r2]));
        assert!(!s.diff_nonempty(&[r]));
    }

    #[test]
    fn duplicate_inserts_collapse_to_one() {
        let (mut s, r) = idb_store();
        for _ in 0..5 {
            s.insert(r, t(&[1, 2]));
        }
        assert_eq!(s.cardinality(r, ViewSel::NewDelta), 1);
    }
}
