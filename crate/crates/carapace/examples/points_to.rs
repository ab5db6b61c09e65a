//! Andersen-style points-to analysis over generated program facts, the
//! classic shape of a program-analysis Datalog workload: two mutually
//! recursive relations and multi-atom rules worth reordering.
//!
//! ```bash
//! cargo run --example points_to
//! ```

use carapace::bench::{suite_inputs, BenchScale, Suite};
use carapace::engine::{evaluate_program, EvalOptions};

fn main() {
    let scale = BenchScale {
        pt_vars: 120,
        pt_objs: 30,
        pt_addr: 90,
        pt_copy: 150,
        pt_load: 60,
        pt_store: 60,
        ..BenchScale::default()
    };
    let inputs = suite_inputs(Suite::PointsTo, 7, &scale);
    println!("rules:\n{}", inputs.program);

    let program = inputs.to_program().unwrap();
    let interp = evaluate_program(&program, &EvalOptions::interpreted()).unwrap();
    let jit = evaluate_program(&program, &EvalOptions::jit_default()).unwrap();
    assert_eq!(interp.canonical_idb(), jit.canonical_idb());

    println!(
        "pt: {} tuples, heap: {} tuples, {} iterations",
        interp.relation_len("pt").unwrap(),
        interp.relation_len("heap").unwrap(),
        interp.stats.total_swaps
    );
    println!(
        "interp {:.2} ms / jit {:.2} ms (probes {} / {})",
        interp.eval_time.as_secs_f64() * 1e3,
        jit.eval_time.as_secs_f64() * 1e3,
        interp.stats.probes_total,
        jit.stats.probes_total
    );

    println!("\nsample of what v0..v4 may point to:");
    for line in interp
        .relation_lines("pt")
        .unwrap()
        .iter()
        .filter(|l| {
            l.split('\t').next().is_some_and(|v| {
                matches!(v, "v0" | "v1" | "v2" | "v3" | "v4")
            })
        })
        .take(12)
    {
        println!("  {}", line.replace('\t', " -> "));
    }
}
