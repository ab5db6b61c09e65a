//! The smallest possible tour: parse a program, evaluate it, read results.
//!
//! ```bash
//! cargo run --example transitive_closure
//! ```

use carapace::engine::{evaluate_source, EvalOptions};

fn main() {
    let src = r#"
        // Which nodes can reach which?
        path(x, y) :- edge(x, y).
        path(x, z) :- edge(x, y), path(y, z).

        edge("a", "b").
        edge("b", "c").
        edge("c", "d").
        edge("d", "b").
    "#;

    let out = evaluate_source(src, &EvalOptions::interpreted()).expect("valid program");

    println!("derived {} path tuples:", out.relation_len("path").unwrap());
    for line in out.relation_lines("path").unwrap() {
        println!("  {}", line.replace('\t', " -> "));
    }
    println!(
        "\nfixpoint after {} iterations ({} tuples inserted, {} queries evaluated)",
        out.stats.total_swaps, out.stats.inserted_total, out.stats.interp_cq_evals
    );
}
