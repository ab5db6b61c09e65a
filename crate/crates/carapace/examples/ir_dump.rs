//! Dump the imperative plan tree a program lowers to, in both lowerings.
//!
//! Semi-naive lowering splits each recursive rule into one conjunctive query
//! per recursive atom (that atom reading the KnownDelta view); the naive
//! oracle keeps one query per rule over full derived views. Pass a file path
//! to dump your own program.
//!
//! ```bash
//! cargo run --example ir_dump [program.dl]
//! ```

use carapace::frontend::{build_precedence, parse};
use carapace::planner::{lower_naive, lower_semi_naive, print_ir, rewrite};

const DEFAULT: &str = r#"
    path(x, y) :- edge(x, y).
    path(x, z) :- edge(x, y), path(y, z).
    reachable_from_a(y) :- path("a", y).
"#;

fn main() {
    let src = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path).expect("readable program file"),
        None => DEFAULT.to_string(),
    };
    let program = parse(&src).expect("program parses");
    let diags = carapace::frontend::validate(&program);
    if !diags.is_empty() {
        for d in diags {
            eprintln!("error: {d}");
        }
        std::process::exit(1);
    }
    let rewritten = rewrite(&program);
    let graph = build_precedence(&rewritten);

    println!("strata (dependencies first):");
    for (i, stratum) in graph.strata.iter().enumerate() {
        let names: Vec<&str> = stratum
            .relations
            .iter()
            .map(|&r| rewritten.relation_name(r))
            .collect();
        println!(
            "  {i}: {{{}}}{}",
            names.join(", "),
            if stratum.recursive { " (recursive)" } else { "" }
        );
    }

    println!("\nsemi-naive lowering:");
    print!("{}", print_ir(&rewritten, &lower_semi_naive(&rewritten, &graph)));
    println!("\nnaive oracle lowering:");
    print!("{}", print_ir(&rewritten, &lower_naive(&rewritten, &graph)));
}
