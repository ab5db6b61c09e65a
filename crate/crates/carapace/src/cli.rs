//! Command-line front door: flag parsing, fact loading, execution, result
//! and stats output. The `carapace` binary is a thin wrapper around
//! [`run`]; everything here is library code so the exit paths stay testable.
//!
//! Exit codes: 0 success, 1 usage/validation/configuration problems,
//! 2 I/O failures.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;
use log::warn;

use crate::adaptive::{
    Backend, CompileScope, Granularity, JitConfig, PresortMode, SortPolicy, SyncMode,
};
use crate::engine::{self, EngineError, EvalOptions, Mode};
use crate::io;
use crate::stats::StatsReport;

/// Bottom-up Datalog engine with adaptive runtime join-order optimization.
#[derive(Debug, Parser)]
#[command(name = "carapace", disable_help_subcommand = true)]
pub struct Cli {
    /// Program file in the engine's Datalog dialect.
    #[arg(long, value_name = "FILE")]
    pub program: PathBuf,
    /// Directory of `<relation>.facts` files (tab-separated).
    #[arg(long, value_name = "DIR")]
    pub facts: Option<PathBuf>,
    /// Output directory for `<relation>.csv` results.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Execution mode.
    #[arg(long, default_value = "interp", value_parser = ["interp", "jit"])]
    pub mode: String,
    /// JIT backend (`lambda-alias` maps to `pipeline`; `quotes` and
    /// `bytecode` are reserved names without an implementation here).
    #[arg(long, value_parser = ["irgen", "pipeline", "lambda-alias", "quotes", "bytecode"])]
    pub backend: Option<String>,
    /// Re-optimization granularity.
    #[arg(long, value_parser = ["iteration", "rule", "cq"])]
    pub granularity: Option<String>,
    /// Compile the whole subtree or only the node with continuations.
    #[arg(long, value_parser = ["full", "snippet"])]
    pub scope: Option<String>,
    /// Wait for plans or keep interpreting until they are ready.
    #[arg(long, value_parser = ["blocking", "async"])]
    pub sync: Option<String>,
    /// Freshness threshold θ (non-negative float, or `inf` to disable).
    #[arg(long, value_name = "FLOAT|inf")]
    pub freshness: Option<String>,
    /// Online sort policy.
    #[arg(long, value_parser = ["card", "sel", "none"])]
    pub sort: Option<String>,
    /// Ahead-of-time body pre-sorting (usable in both modes).
    #[arg(long, default_value = "off", value_parser = ["off", "rules", "facts-rules"])]
    pub presort: String,
    /// Seed echoed into the stats report (used by generators).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stats report output path.
    #[arg(long, value_name = "FILE")]
    pub stats: Option<PathBuf>,
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub program: PathBuf,
    pub facts: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mode: Mode,
    pub jit: JitConfig,
    pub seed: u64,
    pub stats: Option<PathBuf>,
}

fn parse_freshness(s: &str) -> Result<f64, String> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("invalid freshness threshold `{s}`"))?;
    if v.is_nan() || v < 0.0 {
        return Err(format!("freshness threshold must be >= 0, got `{s}`"));
    }
    Ok(v)
}

impl Cli {
    /// Resolves flags into a [`RunConfig`], enforcing that reserved backends
    /// are rejected and JIT-only flags are not mixed into interpreted runs.
    pub fn into_config(self) -> Result<RunConfig, String> {
        let mode = match self.mode.as_str() {
            "interp" => Mode::Interp,
            "jit" => Mode::Jit,
            other => return Err(format!("unknown mode `{other}`")),
        };
        if mode == Mode::Interp {
            let jit_only: [(&str, bool); 6] = [
                ("--backend", self.backend.is_some()),
                ("--granularity", self.granularity.is_some()),
                ("--scope", self.scope.is_some()),
                ("--sync", self.sync.is_some()),
                ("--freshness", self.freshness.is_some()),
                ("--sort", self.sort.is_some()),
            ];
            if let Some((flag, _)) = jit_only.iter().find(|(_, set)| *set) {
                return Err(format!("{flag} requires --mode jit"));
            }
        }
        let mut jit = JitConfig::default();
        if let Some(b) = &self.backend {
            jit.backend = match b.as_str() {
                "irgen" => Backend::IrGen,
                "pipeline" | "lambda-alias" => Backend::Pipeline,
                "quotes" | "bytecode" => {
                    return Err(format!("backend `{b}` is unsupported on this build"))
                }
                other => return Err(format!("unknown backend `{other}`")),
            };
        }
        if let Some(g) = &self.granularity {
            jit.granularity = match g.as_str() {
                "iteration" => Granularity::Iteration,
                "rule" => Granularity::Rule,
                "cq" => Granularity::Cq,
                other => return Err(format!("unknown granularity `{other}`")),
            };
        }
        if let Some(s) = &self.scope {
            jit.scope = match s.as_str() {
                "full" => CompileScope::Full,
                "snippet" => CompileScope::Snippet,
                other => return Err(format!("unknown scope `{other}`")),
            };
        }
        if let Some(s) = &self.sync {
            jit.sync = match s.as_str() {
                "blocking" => SyncMode::Blocking,
                "async" => SyncMode::Async,
                other => return Err(format!("unknown sync mode `{other}`")),
            };
        }
        if let Some(f) = &self.freshness {
            jit.freshness_threshold = parse_freshness(f)?;
        }
        if let Some(s) = &self.sort {
            jit.sort_policy = match s.as_str() {
                "card" => SortPolicy::CardinalityThenSelectivity,
                "sel" => SortPolicy::SelectivityThenCardinality,
                "none" => SortPolicy::None,
                other => return Err(format!("unknown sort policy `{other}`")),
            };
        }
        jit.presort = match self.presort.as_str() {
            "off" => PresortMode::Off,
            "rules" => PresortMode::RulesOnly,
            "facts-rules" => PresortMode::FactsAndRules,
            other => return Err(format!("unknown presort mode `{other}`")),
        };
        jit.check()?;
        Ok(RunConfig {
            program: self.program,
            facts: self.facts,
            out: self.out,
            mode,
            jit,
            seed: self.seed,
            stats: self.stats,
        })
    }
}

impl RunConfig {
    /// The configuration echo embedded in the stats report.
    pub fn echo(&self) -> Vec<(String, String)> {
        let threshold = if self.jit.freshness_threshold.is_infinite() {
            "inf".to_string()
        } else {
            format!("{}", self.jit.freshness_threshold)
        };
        vec![
            ("program".into(), self.program.display().to_string()),
            (
                "facts".into(),
                self.facts
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "-".into()),
            ),
            (
                "out".into(),
                self.out
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "-".into()),
            ),
            ("mode".into(), self.mode.label().into()),
            ("backend".into(), self.jit.backend.label().into()),
            ("granularity".into(), self.jit.granularity.label().into()),
            ("scope".into(), self.jit.scope.label().into()),
            ("sync".into(), self.jit.sync.label().into()),
            ("freshness".into(), threshold),
            ("sort".into(), self.jit.sort_policy.label().into()),
            ("presort".into(), self.jit.presort.label().into()),
            ("seed".into(), self.seed.to_string()),
        ]
    }

    /// Rebuilds an equivalent configuration from a stats-report echo.
    pub fn from_echo(echo: &BTreeMap<String, String>) -> Result<RunConfig, String> {
        let get = |k: &str| {
            echo.get(k)
                .cloned()
                .ok_or_else(|| format!("echo is missing `{k}`"))
        };
        let opt_path = |v: String| if v == "-" { None } else { Some(PathBuf::from(v)) };
        let jit = JitConfig {
            backend: match get("backend")?.as_str() {
                "irgen" => Backend::IrGen,
                "pipeline" => Backend::Pipeline,
                other => return Err(format!("unknown backend `{other}`")),
            },
            granularity: match get("granularity")?.as_str() {
                "iteration" => Granularity::Iteration,
                "rule" => Granularity::Rule,
                "cq" => Granularity::Cq,
                other => return Err(format!("unknown granularity `{other}`")),
            },
            scope: match get("scope")?.as_str() {
                "full" => CompileScope::Full,
                "snippet" => CompileScope::Snippet,
                other => return Err(format!("unknown scope `{other}`")),
            },
            sync: match get("sync")?.as_str() {
                "blocking" => SyncMode::Blocking,
                "async" => SyncMode::Async,
                other => return Err(format!("unknown sync `{other}`")),
            },
            freshness_threshold: parse_freshness(&get("freshness")?)?,
            sort_policy: match get("sort")?.as_str() {
                "card" => SortPolicy::CardinalityThenSelectivity,
                "sel" => SortPolicy::SelectivityThenCardinality,
                "none" => SortPolicy::None,
                other => return Err(format!("unknown sort `{other}`")),
            },
            presort: match get("presort")?.as_str() {
                "off" => PresortMode::Off,
                "rules" => PresortMode::RulesOnly,
                "facts-rules" => PresortMode::FactsAndRules,
                other => return Err(format!("unknown presort `{other}`")),
            },
            async_compile_delay: None,
        };
        Ok(RunConfig {
            program: PathBuf::from(get("program")?),
            facts: opt_path(get("facts")?),
            out: opt_path(get("out")?),
            mode: match get("mode")?.as_str() {
                "interp" => Mode::Interp,
                "jit" => Mode::Jit,
                other => return Err(format!("unknown mode `{other}`")),
            },
            jit,
            seed: get("seed")?
                .parse()
                .map_err(|_| "bad seed in echo".to_string())?,
            stats: None,
        })
    }
}

/// Executes a resolved run. Returns the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let started = Instant::now();
    let source = match std::fs::read_to_string(&cfg.program) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cfg.program.display());
            return 2;
        }
    };
    let mut program = match crate::frontend::parse(&source) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {}: {e}", cfg.program.display());
            return 1;
        }
    };
    if let Some(dir) = &cfg.facts {
        let rows = match io::read_facts_dir(dir) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: cannot read facts from {}: {e}", dir.display());
                return 2;
            }
        };
        if let Err(e) = io::attach_facts(&mut program, &rows) {
            eprintln!("error: {e}");
            return 1;
        }
    }
    for rel in program.edb_relations() {
        let referenced = program
            .rules
            .iter()
            .any(|r| r.body.iter().filter_map(|l| l.as_atom()).any(|a| a.rel == rel));
        if referenced && !program.facts.contains_key(&rel) {
            warn!(
                "no facts for input relation `{}`; treating it as empty",
                program.relation_name(rel)
            );
        }
    }

    let opts = EvalOptions {
        mode: cfg.mode,
        jit: cfg.jit.clone(),
    };
    let out = match engine::evaluate_program(&program, &opts) {
        Ok(out) => out,
        Err(EngineError::Diagnostics(diags)) => {
            for d in &diags {
                eprintln!("error: {d}");
            }
            return 1;
        }
        Err(EngineError::Config(msg)) => {
            eprintln!("error: {msg}");
            return 1;
        }
        Err(EngineError::Parse(e)) => {
            eprintln!("error: {e}");
            return 1;
        }
    };

    if let Some(dir) = &cfg.out {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("error: cannot create {}: {e}", dir.display());
            return 2;
        }
        if let Err(e) = out.write_csvs(dir) {
            eprintln!("error: cannot write results to {}: {e}", dir.display());
            return 2;
        }
    }

    let report = StatsReport {
        config: cfg.echo(),
        stats: &out.stats,
        eval_time: out.eval_time,
        total_time: started.elapsed(),
        relation_counts: out.relation_counts(),
    }
    .render();
    if let Some(path) = &cfg.stats {
        if let Err(e) = std::fs::write(path, &report) {
            eprintln!("error: cannot write stats to {}: {e}", path.display());
            return 2;
        }
    } else {
        print!("{report}");
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_cli(args: &[&str]) -> Result<RunConfig, String> {
        let mut full = vec!["carapace"];
        full.extend_from_slice(args);
        Cli::try_parse_from(full)
            .map_err(|e| e.to_string())
            .and_then(Cli::into_config)
    }

    #[test]
    fn defaults_are_interpreted_mode() {
        let cfg = parse_cli(&["--program", "p.dl"]).unwrap();
        assert_eq!(cfg.mode, Mode::Interp);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn reserved_backends_error_with_the_documented_message() {
        let err = parse_cli(&["--program", "p.dl", "--mode", "jit", "--backend", "quotes"])
            .unwrap_err();
        assert!(err.contains("unsupported on this build"), "{err}");
        let err = parse_cli(&["--program", "p.dl", "--mode", "jit", "--backend", "bytecode"])
            .unwrap_err();
        assert!(err.contains("unsupported on this build"), "{err}");
    }

    #[test]
    fn lambda_alias_maps_to_pipeline() {
        let cfg = parse_cli(&[
            "--program", "p.dl", "--mode", "jit", "--backend", "lambda-alias",
        ])
        .unwrap();
        assert_eq!(cfg.jit.backend, Backend::Pipeline);
    }

    #[test]
    fn jit_flags_rejected_in_interp_mode() {
        let err = parse_cli(&["--program", "p.dl", "--granularity", "cq"]).unwrap_err();
        assert!(err.contains("requires --mode jit"), "{err}");
    }

    #[test]
    fn presort_is_allowed_in_interp_mode() {
        let cfg = parse_cli(&["--program", "p.dl", "--presort", "facts-rules"]).unwrap();
        assert_eq!(cfg.jit.presort, PresortMode::FactsAndRules);
    }

    #[test]
    fn freshness_accepts_inf_and_rejects_negatives() {
        let cfg = parse_cli(&[
            "--program", "p.dl", "--mode", "jit", "--freshness", "inf",
        ])
        .unwrap();
        assert!(cfg.jit.freshness_threshold.is_infinite());
        assert!(parse_cli(&["--program", "p.dl", "--mode", "jit", "--freshness", "-1"]).is_err());
    }

    #[test]
    fn unknown_granularity_value_is_a_usage_error() {
        assert!(parse_cli(&["--program", "p.dl", "--mode", "jit", "--granularity", "foo"]).is_err());
    }

    #[test]
    fn config_echo_round_trips() {
        let cfg = parse_cli(&[
            "--program",
            "q.dl",
            "--facts",
            "facts",
            "--mode",
            "jit",
            "--backend",
            "pipeline",
            "--granularity",
            "rule",
            "--scope",
            "snippet",
            "--sync",
            "async",
            "--freshness",
            "0.5",
            "--sort",
            "sel",
            "--presort",
            "rules",
            "--seed",
            "99",
        ])
        .unwrap();
        let echo: BTreeMap<String, String> = cfg.echo().into_iter().collect();
        let back = RunConfig::from_echo(&echo).unwrap();
        assert_eq!(back.mode, cfg.mode);
        assert_eq!(back.seed, cfg.seed);
        assert_eq!(back.jit.backend, cfg.jit.backend);
        assert_eq!(back.jit.granularity, cfg.jit.granularity);
        assert_eq!(back.jit.scope, cfg.jit.scope);
        assert_eq!(back.jit.sync, cfg.jit.sync);
        assert_eq!(back.jit.freshness_threshold, cfg.jit.freshness_threshold);
        assert_eq!(back.jit.sort_policy, cfg.jit.sort_policy);
        assert_eq!(back.jit.presort, cfg.jit.presort);
        assert_eq!(back.program, cfg.program);
        assert_eq!(back.facts, cfg.facts);
    }
}
