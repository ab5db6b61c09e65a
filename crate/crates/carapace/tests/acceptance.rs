//! The acceptance suite: one checked criterion per run aspect, executed
//! sequentially inside a single test so wall-clock measurements do not fight
//! each other, printing one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Duration;

use carapace::adaptive::{
    Backend, CompileScope, Granularity, JitConfig, PresortMode, SortPolicy, SyncMode,
};
use carapace::bench::{suite_inputs, BenchScale, Suite};
use carapace::corpus::{gen_corpus, CorpusLimits};
use carapace::engine::{
    evaluate_into, evaluate_naive_oracle, evaluate_program, prepare, EvalOptions, Mode,
};
use carapace::frontend::parse;
use carapace::io::{attach_facts, parse_fact_rows, read_facts_dir, write_facts_file, FactRows};
use carapace::planner::IrOp;
use carapace::storage::InstrumentedStore;

type CountSpec = &'static [(&'static str, usize)];
type Criterion = fn() -> Result<String, String>;

fn jit(mutate: impl FnOnce(&mut JitConfig)) -> EvalOptions {
    let mut cfg = JitConfig::default();
    mutate(&mut cfg);
    EvalOptions {
        mode: Mode::Jit,
        jit: cfg,
    }
}

fn median_eval(p: &carapace::Program, opts: &EvalOptions, reps: usize) -> Duration {
    let mut times: Vec<Duration> = (0..reps)
        .map(|_| evaluate_program(p, opts).unwrap().eval_time)
        .collect();
    times.sort();
    times[times.len() / 2]
}

/// Criterion 1: for 200 seeded corpus programs, semi-naive evaluation and
/// the naive fixpoint oracle derive exactly equal relation contents.
fn criterion_1() -> Result<String, String> {
    let bundles = gen_corpus(0xACCE55, 200, CorpusLimits::default());
    for bundle in &bundles {
        let p = bundle.to_program().map_err(|e| e.to_string())?;
        let semi = evaluate_program(&p, &EvalOptions::interpreted()).map_err(|e| e.to_string())?;
        let naive = evaluate_naive_oracle(&p).map_err(|e| e.to_string())?;
        if semi.canonical_idb() != naive.canonical_idb() {
            return Err(format!(
                "bundle {} diverged from the naive oracle:\n{}",
                bundle.name, bundle.program
            ));
        }
    }
    Ok(format!("{} programs, exact set equality", bundles.len()))
}

/// Criterion 2: every configuration in the matrix computes the same derived
/// sets as pure interpretation, for 25 corpus programs.
fn criterion_2() -> Result<String, String> {
    let bundles = gen_corpus(0xCAFE, 25, CorpusLimits::default());
    let granularities = [Granularity::Iteration, Granularity::Rule, Granularity::Cq];
    let thetas = [0.0, 0.25, f64::INFINITY];
    let delays = [None, Some(0u64), Some(1), Some(10)];
    let backend_scopes = [
        (Backend::IrGen, CompileScope::Full),
        (Backend::Pipeline, CompileScope::Full),
        (Backend::Pipeline, CompileScope::Snippet),
    ];
    let mut runs = 0usize;
    for bundle in &bundles {
        let p = bundle.to_program().map_err(|e| e.to_string())?;
        let baseline = evaluate_program(&p, &EvalOptions::interpreted())
            .map_err(|e| e.to_string())?
            .canonical_idb();
        for &(backend, scope) in &backend_scopes {
            for &granularity in &granularities {
                for &theta in &thetas {
                    for &delay in &delays {
                        let opts = jit(|c| {
                            c.backend = backend;
                            c.scope = scope;
                            c.granularity = granularity;
                            c.freshness_threshold = theta;
                            match delay {
                                None => c.sync = SyncMode::Blocking,
                                Some(ms) => {
                                    c.sync = SyncMode::Async;
                                    c.async_compile_delay =
                                        Some(Duration::from_millis(ms));
                                }
                            }
                        });
                        let out =
                            evaluate_program(&p, &opts).map_err(|e| e.to_string())?;
                        runs += 1;
                        if out.canonical_idb() != baseline {
                            return Err(format!(
                                "bundle {} diverged under {backend:?}/{granularity:?}/{scope:?}/θ={theta}/delay={delay:?}",
                                bundle.name
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{runs} configuration runs identical to interpretation"))
}

/// Criterion 3: on the adversarially ordered transitive closure over a
/// seeded random graph (2,000 nodes, 6,000 edges), the default JIT is at
/// least 3x faster than interpretation and performs strictly fewer join
/// probes.
fn criterion_3() -> Result<String, String> {
    let scale = BenchScale {
        tc_nodes: 2000,
        tc_edges: 6000,
        ..BenchScale::default()
    };
    let inputs = suite_inputs(Suite::TcAdversarial, 42, &scale);
    let p = inputs.to_program().map_err(|e| e.to_string())?;
    let interp = evaluate_program(&p, &EvalOptions::interpreted()).map_err(|e| e.to_string())?;
    let jit_out = evaluate_program(&p, &EvalOptions::jit_default()).map_err(|e| e.to_string())?;
    if interp.relation_len("path") != jit_out.relation_len("path") {
        return Err("result sizes diverged".into());
    }
    let (iw, jw) = (interp.eval_time, jit_out.eval_time);
    let ratio = iw.as_secs_f64() / jw.as_secs_f64();
    if jw.as_secs_f64() > iw.as_secs_f64() / 3.0 {
        return Err(format!(
            "jit {jw:?} exceeds a third of interp {iw:?} (ratio {ratio:.2})"
        ));
    }
    let (ip, jp) = (interp.stats.probes_total, jit_out.stats.probes_total);
    if jp >= ip {
        return Err(format!("jit probes {jp} not strictly below interp probes {ip}"));
    }
    Ok(format!(
        "wall {:.2}s vs {:.2}s (x{ratio:.2}), probes {ip} vs {jp}",
        iw.as_secs_f64(),
        jw.as_secs_f64()
    ))
}

/// Criterion 4: on hand-ordered transitive closure and points-to, the
/// blocking default JIT never exceeds 3x the interpreted wall clock.
fn criterion_4() -> Result<String, String> {
    let mut details = Vec::new();
    for suite in [Suite::Tc, Suite::PointsTo] {
        let inputs = suite_inputs(suite, 42, &BenchScale::default());
        let p = inputs.to_program().map_err(|e| e.to_string())?;
        let interp = median_eval(&p, &EvalOptions::interpreted(), 3);
        let jit_t = median_eval(&p, &EvalOptions::jit_default(), 3);
        let ratio = jit_t.as_secs_f64() / interp.as_secs_f64();
        if ratio > 3.0 {
            return Err(format!(
                "{}: jit {jit_t:?} is {ratio:.2}x interp {interp:?} (limit 3x)",
                suite.name()
            ));
        }
        details.push(format!("{} x{ratio:.2}", suite.name()));
    }
    Ok(details.join(", "))
}

/// Criterion 5: freshness laws. θ=∞ bounds replans by the number of distinct
/// optimized nodes; θ=0 blocking at iteration granularity on the 3-chain
/// replans on every pass, which the hand trace fixes at 4.
fn criterion_5() -> Result<String, String> {
    const CHAIN: &str = "\
        path(x,y) :- edge(x,y).\n\
        path(x,z) :- edge(x,y), path(y,z).\n\
        edge(\"a\",\"b\"). edge(\"b\",\"c\"). edge(\"c\",\"d\").";
    let p = parse(CHAIN).map_err(|e| e.to_string())?;
    for granularity in [Granularity::Iteration, Granularity::Rule, Granularity::Cq] {
        let opts = jit(|c| {
            c.granularity = granularity;
            c.freshness_threshold = f64::INFINITY;
        });
        let prepared = prepare(&p, PresortMode::Off, false).map_err(|e| e.to_string())?;
        let (ctx, _) =
            evaluate_into(&prepared, carapace::storage::HashStorage::new(), &opts)
                .map_err(|e| e.to_string())?;
        let nodes = ctx.jit.as_ref().unwrap().optimized_node_count() as u64;
        if ctx.stats.replans > nodes {
            return Err(format!(
                "θ=∞ at {granularity:?}: {} replans for {nodes} nodes",
                ctx.stats.replans
            ));
        }
    }
    let opts = jit(|c| {
        c.granularity = Granularity::Iteration;
        c.freshness_threshold = 0.0;
    });
    let out = evaluate_program(&p, &opts).map_err(|e| e.to_string())?;
    if out.stats.replans != 4 {
        return Err(format!(
            "θ=0 iteration granularity on the 3-chain: {} replans, expected 4",
            out.stats.replans
        ));
    }
    Ok("θ=∞ bounded by node count; θ=0 chain trace = 4 replans".into())
}

/// Criterion 6: after each swap, the published delta equals exactly the new
/// derived tuples (derived-now minus derived-before), verified by the
/// instrumented store over 25 corpus programs.
fn criterion_6() -> Result<String, String> {
    let bundles = gen_corpus(0xDE17A, 25, CorpusLimits::default());
    let mut swaps = 0;
    for bundle in &bundles {
        let p = bundle.to_program().map_err(|e| e.to_string())?;
        let prepared = prepare(&p, PresortMode::Off, false).map_err(|e| e.to_string())?;
        let (ctx, _) = evaluate_into(&prepared, InstrumentedStore::new(), &EvalOptions::interpreted())
            .map_err(|e| e.to_string())?;
        if !ctx.storage.violations().is_empty() {
            return Err(format!(
                "bundle {}: {:?}",
                bundle.name,
                ctx.storage.violations()
            ));
        }
        swaps += ctx.storage.swap_count();
    }
    Ok(format!(
        "{} programs, {swaps} swaps, no delta-law violations",
        bundles.len()
    ))
}

/// Criterion 7: pre-sorting is the identity on already-sorted bodies, and
/// combining ahead-of-time pre-sorting with online reordering is within 20%
/// of online-only on the adversarial transitive closure.
fn criterion_7() -> Result<String, String> {
    // Bodies already in the order the respective key would pick come back
    // unchanged (strictly ascending keys, and all-equal keys held in place
    // by sort stability).
    let mut checked = 0;
    let identity_cases: [(&str, PresortMode, CountSpec); 4] = [
        // Selectivity 0 (all-constant atom) before selectivity 1.
        ("p(x) :- anchor(\"k\"), e(x).", PresortMode::RulesOnly, &[]),
        // Equal selectivities everywhere: stability keeps textual order.
        ("q(x, y) :- a(x), b(y).", PresortMode::RulesOnly, &[]),
        // Ascending initial cardinality.
        (
            "p(x) :- small(x), big(x, y).",
            PresortMode::FactsAndRules,
            &[("small", 3), ("big", 1000)],
        ),
        // Cardinality tie broken by ascending selectivity.
        (
            "p(x) :- same(x, x), wide(x, y).",
            PresortMode::FactsAndRules,
            &[("same", 50), ("wide", 50)],
        ),
    ];
    for (src, mode, count_spec) in identity_cases {
        let p = parse(src).map_err(|e| e.to_string())?;
        let counts: BTreeMap<_, _> = count_spec
            .iter()
            .map(|&(name, n)| (p.relation_named(name).unwrap(), n))
            .collect();
        let sorted = carapace::adaptive::presort(&p, Some(&counts), mode);
        if sorted.rules != p.rules {
            return Err(format!("presort changed an already-sorted body: {src}"));
        }
        checked += 1;
    }
    // Pre-sorting any benchmark or corpus program keeps it valid and keeps
    // every body a permutation of itself.
    let mut programs: Vec<carapace::Program> = Vec::new();
    for suite in Suite::all() {
        let inputs = suite_inputs(suite, 7, &BenchScale::default());
        programs.push(inputs.to_program().map_err(|e| e.to_string())?);
    }
    for bundle in gen_corpus(0x9047, 10, CorpusLimits::default()) {
        programs.push(bundle.to_program().map_err(|e| e.to_string())?);
    }
    for p in &programs {
        for mode in [PresortMode::RulesOnly, PresortMode::FactsAndRules] {
            let counts: BTreeMap<_, _> = p
                .facts
                .iter()
                .map(|(&rel, tuples)| (rel, tuples.len()))
                .collect();
            let sorted = carapace::adaptive::presort(p, Some(&counts), mode);
            if !carapace::frontend::validate(&sorted).is_empty() {
                return Err(format!("presort produced an invalid program ({mode:?})"));
            }
            for (a, b) in p.rules.iter().zip(&sorted.rules) {
                if a.body.len() != b.body.len() {
                    return Err("presort dropped or duplicated a literal".into());
                }
            }
            checked += 1;
        }
    }

    // Non-inferiority of presort + online against online-only. The two
    // configurations are measured interleaved so background load drifts
    // against both equally.
    let scale = BenchScale {
        tc_nodes: 1000,
        tc_edges: 3000,
        ..BenchScale::default()
    };
    let inputs = suite_inputs(Suite::TcAdversarial, 42, &scale);
    let p = inputs.to_program().map_err(|e| e.to_string())?;
    let online_opts = EvalOptions::jit_default();
    let combined_opts = EvalOptions::jit_default().with_presort(PresortMode::FactsAndRules);
    let mut online_times = Vec::new();
    let mut combined_times = Vec::new();
    for _ in 0..5 {
        online_times.push(
            evaluate_program(&p, &online_opts)
                .map_err(|e| e.to_string())?
                .eval_time,
        );
        combined_times.push(
            evaluate_program(&p, &combined_opts)
                .map_err(|e| e.to_string())?
                .eval_time,
        );
    }
    online_times.sort();
    combined_times.sort();
    let online = online_times[online_times.len() / 2];
    let combined = combined_times[combined_times.len() / 2];
    let ratio = combined.as_secs_f64() / online.as_secs_f64();
    if ratio > 1.2 {
        return Err(format!(
            "presort+online {combined:?} is {ratio:.2}x online-only {online:?} (limit 1.2x)"
        ));
    }
    Ok(format!(
        "{checked} identity/validity checks; presort+online at {ratio:.2}x of online-only"
    ))
}

/// Criterion 8: fact files round-trip bit-exactly modulo line order, and
/// identical runs produce byte-identical result files.
fn criterion_8() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rows = vec![
        vec!["10".to_string(), "b c".to_string()],
        vec!["-3".to_string(), "a".to_string()],
        vec!["7".to_string(), "7z".to_string()],
    ];
    write_facts_file(dir.path(), "edge", &rows).map_err(|e| e.to_string())?;
    let read = read_facts_dir(dir.path()).map_err(|e| e.to_string())?;
    let mut original = rows.clone();
    let mut reread = read["edge"].clone();
    original.sort();
    reread.sort();
    if original != reread {
        return Err("fact rows changed across write/read".into());
    }

    let run_csv = |facts: &FactRows| -> Result<Vec<String>, String> {
        let mut p = parse("copy(x, y) :- edge(x, y).").map_err(|e| e.to_string())?;
        attach_facts(&mut p, facts).map_err(|e| e.to_string())?;
        let out = evaluate_program(&p, &EvalOptions::jit_default()).map_err(|e| e.to_string())?;
        Ok(out.relation_lines("copy").unwrap())
    };
    let a = run_csv(&read)?;
    let b = run_csv(&read)?;
    if a != b {
        return Err("identical runs produced different result lines".into());
    }
    let mut want: Vec<String> = rows.iter().map(|r| r.join("\t")).collect();
    want.sort();
    if a != want {
        return Err(format!("round-trip altered content: {a:?} vs {want:?}"));
    }
    // Render and re-split to close the loop at the byte level.
    let rendered = carapace::io::render_fact_rows(&rows);
    if parse_fact_rows(&rendered) != rows {
        return Err("render/parse of fact rows not bit-exact".into());
    }
    Ok("write/read/evaluate round trip exact; reruns byte-identical".into())
}

/// Criterion 9: with a worker delay longer than the whole run, asynchronous
/// mode completes promptly with results equal to interpretation; the plan
/// may simply never be used.
fn criterion_9() -> Result<String, String> {
    const CHAIN: &str = "\
        path(x,y) :- edge(x,y).\n\
        path(x,z) :- edge(x,y), path(y,z).\n\
        edge(1,2). edge(2,3). edge(3,4). edge(4,5). edge(5,6).";
    let p = parse(CHAIN).map_err(|e| e.to_string())?;
    let baseline = evaluate_program(&p, &EvalOptions::interpreted()).map_err(|e| e.to_string())?;
    let opts = jit(|c| {
        c.sync = SyncMode::Async;
        c.granularity = Granularity::Cq;
        c.freshness_threshold = 0.0;
        c.sort_policy = SortPolicy::CardinalityThenSelectivity;
        c.async_compile_delay = Some(Duration::from_secs(2));
    });
    let started = std::time::Instant::now();
    let out = evaluate_program(&p, &opts).map_err(|e| e.to_string())?;
    let wall = started.elapsed();
    if wall > Duration::from_secs(1) {
        return Err(format!("run blocked on the worker: {wall:?}"));
    }
    if out.canonical_idb() != baseline.canonical_idb() {
        return Err("async run diverged from interpretation".into());
    }
    if out.stats.replan_events.iter().any(|e| e.adopted) {
        return Err("a plan delayed past the run was somehow adopted".into());
    }
    Ok(format!("completed in {wall:?} with identical results"))
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, Criterion)> = vec![
        ("oracle equivalence", criterion_1),
        ("configuration-matrix equivalence", criterion_2),
        ("adversarial speedup", criterion_3),
        ("degradation bound", criterion_4),
        ("freshness laws", criterion_5),
        ("semi-naive delta law", criterion_6),
        ("presort laws", criterion_7),
        ("tsv interface", criterion_8),
        ("async liveness and safety", criterion_9),
    ];
    let mut failures = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        match catch_unwind(AssertUnwindSafe(run)) {
            Ok(Ok(detail)) => println!("criterion {n} ({name}): PASS — {detail}"),
            Ok(Err(msg)) => {
                println!("criterion {n} ({name}): FAIL — {msg}");
                failures.push(format!("criterion {n} ({name}): {msg}"));
            }
            Err(panic) => {
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                println!("criterion {n} ({name}): FAIL — panicked: {msg}");
                failures.push(format!("criterion {n} ({name}): panicked: {msg}"));
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria:\n{}", failures.join("\n"));
}

// The tree the planner builds for the chain is stable; keep a cheap guard so
// criterion 5's hand-traced expectations stay anchored to the real structure.
#[test]
fn chain_lowering_shape_backs_the_hand_trace() {
    let p = parse(
        "path(x,y) :- edge(x,y).\npath(x,z) :- edge(x,y), path(y,z).\nedge(1,2). edge(2,3). edge(3,4).",
    )
    .unwrap();
    let prepared = prepare(&p, PresortMode::Off, false).unwrap();
    let mut iteration_seqs = 0;
    prepared.ir.walk(&mut |op| {
        if matches!(op, IrOp::IterationSeq { .. }) {
            iteration_seqs += 1;
        }
    });
    // One seeding pass plus one loop body: the two optimized nodes behind
    // the θ=∞ bound and the 1 + 3 visits behind the θ=0 count of 4.
    assert_eq!(iteration_seqs, 2);
}
