//! Ahead-of-time body pre-sorting, with and without fact cardinalities.
//!
//! `RulesOnly` sees rule shapes alone and orders by selectivity;
//! `FactsAndRules` also knows the initial fact counts and orders by
//! cardinality first. Either can feed the online optimizer, which then
//! starts from a better order and fixes the rest at run time.
//!
//! ```bash
//! cargo run --example presort
//! ```

use std::collections::BTreeMap;

use carapace::adaptive::{presort, PresortMode};
use carapace::engine::{evaluate_program, EvalOptions};
use carapace::frontend::parse;

const SRC: &str = r#"
    hit(name) :- big_log(id, name, code), allowed(code), watch(name).

    watch("alice").
    watch("mallory").
"#;

fn rule_order(q: &carapace::Program) -> Vec<String> {
    q.rules[0]
        .body
        .iter()
        .filter_map(|l| l.as_atom())
        .map(|a| q.relation_name(a.rel).to_string())
        .collect()
}

fn main() {
    let mut p = parse(SRC).expect("parses");
    // Pretend loaded fact files gave these sizes.
    let mut counts = BTreeMap::new();
    counts.insert(p.relation_named("big_log").unwrap(), 500_000);
    counts.insert(p.relation_named("allowed").unwrap(), 40);
    counts.insert(p.relation_named("watch").unwrap(), 2);

    println!("textual order       -> {:?}", rule_order(&p));
    let rules_only = presort(&p, None, PresortMode::RulesOnly);
    println!("rules-only presort  -> {:?}", rule_order(&rules_only));
    let facts_rules = presort(&p, Some(&counts), PresortMode::FactsAndRules);
    println!("facts+rules presort -> {:?}", rule_order(&facts_rules));

    // End to end: the engine applies presort itself when asked.
    let allowed = p.relation_named("allowed").unwrap();
    for code in [1i64, 2] {
        let tuple = [p.pool.intern_int(code)].into_iter().collect();
        p.add_fact(allowed, tuple);
    }
    let out = evaluate_program(
        &p,
        &EvalOptions::jit_default().with_presort(PresortMode::FactsAndRules),
    )
    .unwrap();
    println!(
        "\nevaluated with presort + online reordering: {} result tuples",
        out.relation_len("hit").unwrap()
    );
}
