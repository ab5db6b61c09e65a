//! Run the built-in benchmark suites under a few engine configurations and
//! print median wall-clock with speedup against the interpreted baseline.
//!
//! ```bash
//! cargo run --release --example bench                  # all suites
//! cargo run --release --example bench tc ackermann    # a subset
//! ```

use carapace::adaptive::{Backend, JitConfig, SyncMode};
use carapace::bench::{render_table, run_suites, BenchScale, Suite};
use carapace::engine::{EvalOptions, Mode};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let suites: Vec<Suite> = if args.is_empty() {
        Suite::all().to_vec()
    } else {
        args.iter()
            .map(|name| Suite::from_name(name).unwrap_or_else(|| {
                eprintln!("unknown suite `{name}`; known suites:");
                for s in Suite::all() {
                    eprintln!("  {}", s.name());
                }
                std::process::exit(1);
            }))
            .collect()
    };

    let configs = vec![
        ("interp".to_string(), EvalOptions::interpreted()),
        ("jit-irgen-blocking".to_string(), EvalOptions::jit_default()),
        (
            "jit-pipeline-blocking".to_string(),
            EvalOptions {
                mode: Mode::Jit,
                jit: JitConfig {
                    backend: Backend::Pipeline,
                    ..JitConfig::default()
                },
            },
        ),
        (
            "jit-irgen-async".to_string(),
            EvalOptions {
                mode: Mode::Jit,
                jit: JitConfig {
                    sync: SyncMode::Async,
                    ..JitConfig::default()
                },
            },
        ),
    ];

    let scale = BenchScale::default();
    println!(
        "graph {}x{} edges, seed 42, warmup 1, reps 5 (medians)\n",
        scale.tc_nodes, scale.tc_edges
    );
    let rows = run_suites(&suites, &configs, 1, 5, 42, &scale).expect("suites run");
    print!("{}", render_table(&rows));
}
