//! Randomized-corpus checks of the central planner property: semi-naive and
//! naive lowerings compute identical derived sets. The acceptance suite runs
//! the full 200-program version; this is the fast everyday slice, plus the
//! instrumented-store contract checks.

use carapace::corpus::{gen_corpus, is_recursive, CorpusLimits};
use carapace::engine::{
    evaluate_into, evaluate_naive_oracle, evaluate_program, prepare, EvalOptions,
};
use carapace::storage::{InstrumentedStore, StorageLayer, ViewSel};

#[test]
fn semi_naive_matches_naive_oracle_on_corpus_slice() {
    for bundle in gen_corpus(2024, 40, CorpusLimits::default()) {
        let p = bundle.to_program().unwrap();
        let semi = evaluate_program(&p, &EvalOptions::interpreted()).unwrap();
        let naive = evaluate_naive_oracle(&p).unwrap();
        assert_eq!(
            semi.canonical_idb(),
            naive.canonical_idb(),
            "bundle {} diverged from the oracle:\n{}",
            bundle.name,
            bundle.program
        );
    }
}

#[test]
fn corpus_slice_has_recursive_share() {
    let bundles = gen_corpus(2024, 40, CorpusLimits::default());
    let recursive = bundles.iter().filter(|b| is_recursive(b)).count();
    assert!(recursive * 2 >= bundles.len());
}

#[test]
fn instrumented_store_sees_no_contract_violations() {
    for bundle in gen_corpus(777, 15, CorpusLimits::default()) {
        let p = bundle.to_program().unwrap();
        let prepared = prepare(&p, carapace::adaptive::PresortMode::Off, false).unwrap();
        let (ctx, _) =
            evaluate_into(&prepared, InstrumentedStore::new(), &EvalOptions::interpreted())
                .unwrap();
        assert!(
            ctx.storage.violations().is_empty(),
            "bundle {}: {:?}",
            bundle.name,
            ctx.storage.violations()
        );
        assert_eq!(ctx.storage.swap_count(), ctx.stats.total_swaps);
    }
}

#[test]
fn delta_coverage_is_exact_across_the_corpus() {
    // In every rule union of a recursive rule, the delta-reading copies are
    // exactly one per recursive body atom: none missing, none duplicated.
    use carapace::frontend::{build_precedence, RelId};
    use carapace::planner::{lower_semi_naive, rewrite, IrOp};
    use std::collections::BTreeSet;

    for bundle in gen_corpus(31337, 25, CorpusLimits::default()) {
        let p = bundle.to_program().unwrap();
        let rewritten = rewrite(&p);
        let graph = build_precedence(&rewritten);
        let ir = lower_semi_naive(&rewritten, &graph);
        ir.walk(&mut |op| {
            let IrOp::RuleUnion { children, .. } = op else { return };
            let descriptors: Vec<_> = children
                .iter()
                .flat_map(|c| c.descriptors())
                .collect();
            let rule_id = descriptors[0].rule_id;
            let rule = rewritten.rules.iter().find(|r| r.id == rule_id).unwrap();
            let stratum = graph
                .strata
                .iter()
                .find(|s| s.relations.contains(&rule.head.rel))
                .unwrap();
            let member: BTreeSet<RelId> = stratum.relations.iter().copied().collect();
            let recursive_atoms: BTreeSet<usize> = rule
                .body
                .iter()
                .filter_map(|l| l.as_atom())
                .enumerate()
                .filter(|(_, a)| member.contains(&a.rel))
                .map(|(i, _)| i)
                .collect();
            let deltas: Vec<Option<usize>> =
                descriptors.iter().map(|d| d.delta_index).collect();
            if recursive_atoms.is_empty() {
                assert_eq!(deltas, vec![None], "bundle {}", bundle.name);
            } else {
                let got: BTreeSet<usize> = deltas.iter().map(|d| d.unwrap()).collect();
                assert_eq!(got, recursive_atoms, "bundle {}", bundle.name);
                assert_eq!(deltas.len(), recursive_atoms.len(), "no duplicates");
            }
        });
    }
}

#[test]
fn monotone_growth_and_dupe_freedom_hold_under_jit() {
    for bundle in gen_corpus(555, 10, CorpusLimits::default()) {
        let p = bundle.to_program().unwrap();
        let prepared = prepare(&p, carapace::adaptive::PresortMode::Off, false).unwrap();
        let (ctx, _) = evaluate_into(
            &prepared,
            InstrumentedStore::new(),
            &EvalOptions::jit_default(),
        )
        .unwrap();
        assert!(
            ctx.storage.violations().is_empty(),
            "bundle {}: {:?}",
            bundle.name,
            ctx.storage.violations()
        );
        // Derived views are sets: per-iteration logs never decrease.
        for rel in prepared.program.idb_relations() {
            let mut last = 0;
            for entry in &ctx.stats.cardinality_log {
                for &(r, n) in &entry.cards {
                    if r == rel {
                        assert!(n >= last);
                        last = n;
                    }
                }
            }
            assert_eq!(last, ctx.storage.cardinality(rel, ViewSel::KnownDerived));
        }
    }
}
