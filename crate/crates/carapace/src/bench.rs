//! Built-in benchmark suites: checked-in query programs plus seeded fact
//! generators, and a small runner that reports median wall-clock per
//! configuration with speedup against the interpreted baseline.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{evaluate_program, EngineError, EvalOptions, EvalOutput};
use crate::frontend::{parse, Program};
use crate::io::{attach_facts, FactRows};

/// The shipped query suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Tc,
    TcAdversarial,
    PointsTo,
    Ackermann,
    Fibonacci,
    Primes,
    Equal,
    Cba,
}

impl Suite {
    pub fn all() -> [Suite; 8] {
        [
            Suite::Tc,
            Suite::TcAdversarial,
            Suite::PointsTo,
            Suite::Ackermann,
            Suite::Fibonacci,
            Suite::Primes,
            Suite::Equal,
            Suite::Cba,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Tc => "tc",
            Suite::TcAdversarial => "tc-adversarial",
            Suite::PointsTo => "points-to",
            Suite::Ackermann => "ackermann",
            Suite::Fibonacci => "fibonacci",
            Suite::Primes => "primes",
            Suite::Equal => "equal",
            Suite::Cba => "cba",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::all().into_iter().find(|s| s.name() == name)
    }

    pub fn source(self) -> &'static str {
        match self {
            Suite::Tc => include_str!("../suites/tc.dl"),
            Suite::TcAdversarial => include_str!("../suites/tc_adversarial.dl"),
            Suite::PointsTo => include_str!("../suites/points_to.dl"),
            Suite::Ackermann => include_str!("../suites/ackermann.dl"),
            Suite::Fibonacci => include_str!("../suites/fibonacci.dl"),
            Suite::Primes => include_str!("../suites/primes.dl"),
            Suite::Equal => include_str!("../suites/equal.dl"),
            Suite::Cba => include_str!("../suites/cba.dl"),
        }
    }
}

/// Input-size knobs, defaulting to desk scale.
#[derive(Debug, Clone)]
pub struct BenchScale {
    pub tc_nodes: usize,
    pub tc_edges: usize,
    /// Guard-relation size for the adversarial transitive closure.
    pub edge_labels: usize,
    pub pt_vars: usize,
    pub pt_objs: usize,
    pub pt_addr: usize,
    pub pt_copy: usize,
    pub pt_load: usize,
    pub pt_store: usize,
    pub ack_m: i64,
    pub ack_n: i64,
    pub fib_n: i64,
    pub primes_max: i64,
    pub equal_elems: usize,
    pub equal_seeds: usize,
    pub cba_exprs: usize,
}

impl Default for BenchScale {
    fn default() -> Self {
        Self {
            tc_nodes: 300,
            tc_edges: 900,
            edge_labels: 160,
            pt_vars: 200,
            pt_objs: 40,
            pt_addr: 150,
            pt_copy: 250,
            pt_load: 100,
            pt_store: 100,
            ack_m: 3,
            ack_n: 3,
            fib_n: 24,
            primes_max: 300,
            equal_elems: 100,
            equal_seeds: 35,
            cba_exprs: 80,
        }
    }
}

/// A ready-to-run query: program text plus generated fact rows.
#[derive(Debug, Clone)]
pub struct BenchInputs {
    pub program: String,
    pub facts: FactRows,
}

impl BenchInputs {
    pub fn to_program(&self) -> Result<Program, EngineError> {
        let mut p = parse(&self.program)?;
        attach_facts(&mut p, &self.facts).expect("generated facts are arity-consistent");
        Ok(p)
    }
}

/// Distinct random directed edges without self-loops.
fn random_graph(rng: &mut ChaCha8Rng, nodes: usize, edges: usize) -> Vec<(usize, usize)> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(edges);
    while out.len() < edges {
        let u = rng.random_range(0..nodes);
        let v = rng.random_range(0..nodes);
        if u != v && seen.insert((u, v)) {
            out.push((u, v));
        }
    }
    out
}

/// Builds the fact set for a suite, deterministically from `seed`.
pub fn suite_inputs(suite: Suite, seed: u64, scale: &BenchScale) -> BenchInputs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut facts = FactRows::new();
    match suite {
        Suite::Tc => {
            let rows = random_graph(&mut rng, scale.tc_nodes, scale.tc_edges)
                .into_iter()
                .map(|(u, v)| vec![u.to_string(), v.to_string()])
                .collect();
            facts.insert("edge".to_string(), rows);
        }
        Suite::TcAdversarial => {
            // Same shape of graph as `tc`; each edge gets one label class
            // and every class is allowed, so the guard filters nothing.
            let labels = scale.edge_labels.max(1);
            let rows = random_graph(&mut rng, scale.tc_nodes, scale.tc_edges)
                .into_iter()
                .map(|(u, v)| {
                    let c = rng.random_range(0..labels);
                    vec![u.to_string(), v.to_string(), c.to_string()]
                })
                .collect();
            facts.insert("edge".to_string(), rows);
            facts.insert(
                "label".to_string(),
                (0..labels).map(|c| vec![c.to_string()]).collect(),
            );
        }
        Suite::PointsTo => {
            let var = |i: usize| format!("v{i}");
            let obj = |i: usize| format!("h{i}");
            let mut addr = Vec::new();
            for _ in 0..scale.pt_addr {
                addr.push(vec![
                    var(rng.random_range(0..scale.pt_vars)),
                    obj(rng.random_range(0..scale.pt_objs)),
                ]);
            }
            let mut pair = |n: usize| {
                let mut rows = Vec::new();
                for _ in 0..n {
                    rows.push(vec![
                        var(rng.random_range(0..scale.pt_vars)),
                        var(rng.random_range(0..scale.pt_vars)),
                    ]);
                }
                rows
            };
            facts.insert("copy".to_string(), pair(scale.pt_copy));
            facts.insert("load".to_string(), pair(scale.pt_load));
            facts.insert("store".to_string(), pair(scale.pt_store));
            facts.insert("addr".to_string(), addr);
        }
        Suite::Ackermann => {
            facts.insert(
                "goal".to_string(),
                vec![vec![scale.ack_m.to_string(), scale.ack_n.to_string()]],
            );
        }
        Suite::Fibonacci => {
            facts.insert("goal".to_string(), vec![vec![scale.fib_n.to_string()]]);
        }
        Suite::Primes => {
            facts.insert(
                "num".to_string(),
                (2..=scale.primes_max).map(|n| vec![n.to_string()]).collect(),
            );
        }
        Suite::Equal => {
            facts.insert(
                "elem".to_string(),
                (0..scale.equal_elems).map(|n| vec![n.to_string()]).collect(),
            );
            let rows = (0..scale.equal_seeds)
                .map(|_| {
                    vec![
                        rng.random_range(0..scale.equal_elems).to_string(),
                        rng.random_range(0..scale.equal_elems).to_string(),
                    ]
                })
                .collect();
            facts.insert("seed".to_string(), rows);
        }
        Suite::Cba => {
            // Random expression graph: a third lambdas, a third applications,
            // a third variable references.
            let n = scale.cba_exprs.max(6);
            let mut lam = Vec::new();
            let mut param = Vec::new();
            let mut body = Vec::new();
            let mut app = Vec::new();
            let mut varref = Vec::new();
            let lam_count = n / 3;
            for l in 0..lam_count {
                lam.push(vec![format!("e{l}"), format!("l{l}")]);
                param.push(vec![format!("l{l}"), format!("p{l}")]);
                body.push(vec![format!("l{l}"), format!("e{}", rng.random_range(0..n))]);
            }
            for e in lam_count..(2 * n / 3) {
                app.push(vec![
                    format!("e{e}"),
                    format!("e{}", rng.random_range(0..n)),
                    format!("e{}", rng.random_range(0..n)),
                ]);
            }
            for e in (2 * n / 3)..n {
                varref.push(vec![
                    format!("e{e}"),
                    format!("p{}", rng.random_range(0..lam_count)),
                ]);
            }
            facts.insert("lam".to_string(), lam);
            facts.insert("param".to_string(), param);
            facts.insert("body".to_string(), body);
            facts.insert("app".to_string(), app);
            facts.insert("varref".to_string(), varref);
        }
    }
    BenchInputs {
        program: suite.source().to_string(),
        facts,
    }
}

/// One measured configuration on one suite.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub suite: &'static str,
    pub config: String,
    pub median: Duration,
    /// Interpreted-baseline median over this configuration's median.
    pub speedup_vs_interp: f64,
    pub result_tuples: usize,
}

fn median(mut times: Vec<Duration>) -> Duration {
    times.sort();
    times[times.len() / 2]
}

/// Runs each suite under each configuration (`warmup` unmeasured runs, then
/// `reps` measured), checks result agreement across configurations, and
/// reports speedup against the first configuration labeled `interp`.
pub fn run_suites(
    suites: &[Suite],
    configs: &[(String, EvalOptions)],
    warmup: usize,
    reps: usize,
    seed: u64,
    scale: &BenchScale,
) -> Result<Vec<BenchRow>, EngineError> {
    let mut rows = Vec::new();
    for &suite in suites {
        let inputs = suite_inputs(suite, seed, scale);
        let program = inputs.to_program()?;
        let mut baseline: Option<Duration> = None;
        let mut reference: Option<BTreeMap<String, std::collections::BTreeSet<Vec<crate::frontend::ConstValue>>>> =
            None;
        for (label, opts) in configs {
            let mut times = Vec::with_capacity(reps);
            let mut last: Option<EvalOutput> = None;
            for _ in 0..warmup {
                let _ = evaluate_program(&program, opts)?;
            }
            for _ in 0..reps.max(1) {
                let out = evaluate_program(&program, opts)?;
                times.push(out.eval_time);
                last = Some(out);
            }
            let out = last.expect("at least one rep");
            let canon = out.canonical_idb();
            match &reference {
                None => reference = Some(canon),
                Some(r) => assert_eq!(
                    r,
                    &canon,
                    "configuration `{label}` disagrees on suite {}",
                    suite.name()
                ),
            }
            let med = median(times);
            if baseline.is_none() && label.starts_with("interp") {
                baseline = Some(med);
            }
            let speedup = baseline
                .map(|b| b.as_secs_f64() / med.as_secs_f64().max(1e-9))
                .unwrap_or(1.0);
            let result_tuples = out.relation_counts().iter().map(|(_, n)| n).sum();
            rows.push(BenchRow {
                suite: suite.name(),
                config: label.clone(),
                median: med,
                speedup_vs_interp: speedup,
                result_tuples,
            });
        }
    }
    Ok(rows)
}

/// Plain-text table of benchmark rows.
pub fn render_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<16} {:<24} {:>12} {:>10} {:>10}",
        "suite", "config", "median_ms", "speedup", "tuples"
    )
    .unwrap();
    for r in rows {
        writeln!(
            out,
            "{:<16} {:<24} {:>12.3} {:>10.2} {:>10}",
            r.suite,
            r.config,
            r.median.as_secs_f64() * 1e3,
            r.speedup_vs_interp,
            r.result_tuples
        )
        .unwrap();
    }
    out
}
