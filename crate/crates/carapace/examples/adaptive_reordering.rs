//! Runtime join-order optimization on an adversarially ordered query.
//!
//! The adversarial transitive closure puts the growing recursive relation
//! first in the rule body, then an unrelated guard, then the edge scan.
//! Interpretation executes that order as written; the JIT re-sorts the join
//! by live cardinalities at every conjunctive-query safe point.
//!
//! ```bash
//! cargo run --release --example adaptive_reordering
//! ```

use carapace::bench::{suite_inputs, BenchScale, Suite};
use carapace::engine::{evaluate_program, EvalOptions};

fn main() {
    let scale = BenchScale {
        tc_nodes: 600,
        tc_edges: 1800,
        ..BenchScale::default()
    };
    let inputs = suite_inputs(Suite::TcAdversarial, 42, &scale);
    println!("query:\n{}", inputs.program);
    let program = inputs.to_program().expect("suite parses");

    let interp = evaluate_program(&program, &EvalOptions::interpreted()).unwrap();
    let jit = evaluate_program(&program, &EvalOptions::jit_default()).unwrap();
    assert_eq!(
        interp.relation_len("path"),
        jit.relation_len("path"),
        "both modes must agree"
    );

    println!(
        "paths derived: {}  (graph: {} nodes, {} edges)",
        interp.relation_len("path").unwrap(),
        scale.tc_nodes,
        scale.tc_edges
    );
    println!(
        "interpreted, adversarial order : {:>10.1} ms, {:>12} join probes",
        interp.eval_time.as_secs_f64() * 1e3,
        interp.stats.probes_total
    );
    println!(
        "jit, reordered at runtime      : {:>10.1} ms, {:>12} join probes, {} replans",
        jit.eval_time.as_secs_f64() * 1e3,
        jit.stats.probes_total,
        jit.stats.replans
    );
    println!(
        "speedup: x{:.1}",
        interp.eval_time.as_secs_f64() / jit.eval_time.as_secs_f64()
    );

    println!("\nreplan log (node, iteration, generation):");
    for e in jit.stats.replan_events.iter().take(8) {
        println!(
            "  n{:<4} iter {:<3} gen {}{}",
            e.node.0,
            e.at_iteration,
            e.generation,
            if e.adopted { "" } else { " (pending)" }
        );
    }
    if jit.stats.replan_events.len() > 8 {
        println!("  ... {} more", jit.stats.replan_events.len() - 8);
    }
}
