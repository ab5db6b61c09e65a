//! Re-optimization granularity and what each level can see.
//!
//! At iteration granularity the optimizer replans once per semi-naive pass
//! using derived-database counts only. At rule and conjunctive-query
//! granularity it also sees the exact delta cardinalities, at the price of
//! more frequent safe-point checks. The freshness threshold θ gates how
//! often any of them actually replan.
//!
//! ```bash
//! cargo run --example granularities
//! ```

use carapace::adaptive::{Granularity, JitConfig};
use carapace::engine::{evaluate_source, EvalOptions, Mode};

const SRC: &str = r#"
    path(x, y) :- edge(x, y).
    path(x, z) :- edge(x, y), path(y, z).
    edge("a", "b"). edge("b", "c"). edge("c", "d").
"#;

fn main() {
    for granularity in [Granularity::Iteration, Granularity::Rule, Granularity::Cq] {
        for theta in [0.0, 0.25, f64::INFINITY] {
            let opts = EvalOptions {
                mode: Mode::Jit,
                jit: JitConfig {
                    granularity,
                    freshness_threshold: theta,
                    ..JitConfig::default()
                },
            };
            let out = evaluate_source(SRC, &opts).expect("valid program");
            println!(
                "granularity={:<10} θ={:<5} replans={:<3} optimized-nodes={}",
                granularity.label(),
                if theta.is_infinite() { "inf".into() } else { theta.to_string() },
                out.stats.replans,
                out.stats.snapshot_history.len(),
            );
        }
    }

    // Show one snapshot history: the recursive query's view of the world.
    let opts = EvalOptions {
        mode: Mode::Jit,
        jit: JitConfig {
            granularity: Granularity::Cq,
            freshness_threshold: 0.0,
            ..JitConfig::default()
        },
    };
    let out = evaluate_source(SRC, &opts).unwrap();
    println!("\nper-visit snapshots of the most-watched node:");
    let (node, snaps) = out
        .stats
        .snapshot_history
        .iter()
        .max_by_key(|(_, snaps)| snaps.len())
        .unwrap();
    for snap in snaps {
        let counts: Vec<String> = snap
            .counts
            .iter()
            .map(|((rel, view), n)| format!("r{}:{}={n}", rel.0, view.label()))
            .collect();
        println!("  n{} @iter {}: {}", node.0, snap.iteration, counts.join("  "));
    }
}
