//! Asynchronous plan hand-off.
//!
//! In async mode the evaluation thread never waits: it submits a replan
//! request to the single worker thread and keeps interpreting the current
//! plan. At every subsequent safe point for that node it polls the plan
//! slot; a ready plan is adopted mid-node so execution continues from the
//! exact child boundary the interpreter reached. If the worker is slower
//! than the whole query, the plan is simply never used.
//!
//! ```bash
//! cargo run --example async_handoff
//! ```

use std::time::Duration;

use carapace::adaptive::{Granularity, JitConfig, SyncMode};
use carapace::engine::{evaluate_source, EvalOptions, Mode};

fn chain(n: usize) -> String {
    let mut src = String::from(
        "reach(x, y) :- link(x, y).\nreach(x, z) :- link(x, y), reach(y, z).\n",
    );
    for i in 0..n {
        src.push_str(&format!("link({}, {}).\n", i, i + 1));
    }
    src
}

fn run(label: &str, delay: Option<Duration>) {
    let src = chain(60);
    let opts = EvalOptions {
        mode: Mode::Jit,
        jit: JitConfig {
            sync: SyncMode::Async,
            granularity: Granularity::Cq,
            freshness_threshold: 0.0,
            async_compile_delay: delay,
            ..JitConfig::default()
        },
    };
    let out = evaluate_source(&src, &opts).expect("valid program");
    let submitted = out.stats.replan_events.iter().filter(|e| !e.adopted).count();
    let adopted = out.stats.replan_events.iter().filter(|e| e.adopted).count();
    println!(
        "{label:<26} reach={:<5} wall={:>8.2} ms  submitted={submitted:<3} adopted={adopted}",
        out.relation_len("reach").unwrap(),
        out.eval_time.as_secs_f64() * 1e3,
    );
}

fn main() {
    run("worker instant", Some(Duration::ZERO));
    run("worker 1 ms behind", Some(Duration::from_millis(1)));
    // Slower than the entire run: evaluation completes interpreted and the
    // compiled plan is discarded unread.
    run("worker far too slow", Some(Duration::from_secs(5)));
    println!("\nresults are identical in all three runs; only who executes them differs.");
}
