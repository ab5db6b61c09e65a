//! End-to-end orchestration: validate, rewrite, pre-sort, stratify, lower,
//! and run a program against a storage layer, interpreted or JIT-optimized.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::adaptive::{presort, JitConfig, JitRuntime, PresortMode};
use crate::frontend::{
    build_precedence, parse, validate, ConstValue, Diagnostic, ParseError, Program, RelId,
    RelKind,
};
use crate::interp::{init_storage, interpret, ExecContext, ExecStats};
use crate::planner::{lower_naive, lower_semi_naive, rewrite, IrOp};
use crate::storage::{HashStorage, StorageLayer, ViewSel};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("program has {} validation problem(s)", .0.len())]
    Diagnostics(Vec<Diagnostic>),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Execution mode of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Interp,
    Jit,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Interp => "interp",
            Mode::Jit => "jit",
        }
    }
}

/// How to evaluate a program. Pre-sorting applies in both modes (it is an
/// ahead-of-time rewrite); the rest of the JIT configuration only matters in
/// [`Mode::Jit`].
#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub mode: Mode,
    pub jit: JitConfig,
}

impl EvalOptions {
    pub fn interpreted() -> Self {
        Self {
            mode: Mode::Interp,
            jit: JitConfig::default(),
        }
    }

    pub fn jit(config: JitConfig) -> Self {
        Self {
            mode: Mode::Jit,
            jit: config,
        }
    }

    pub fn jit_default() -> Self {
        Self::jit(JitConfig::default())
    }

    pub fn with_presort(mut self, mode: PresortMode) -> Self {
        self.jit.presort = mode;
        self
    }
}

/// Prepared, lowered form of a program, reusable across runs.
pub struct Prepared {
    pub program: Program,
    pub ir: IrOp,
}

/// Validates, rewrites, optionally pre-sorts, and lowers a program.
/// `naive` selects the oracle lowering instead of the semi-naive one.
pub fn prepare(p: &Program, presort_mode: PresortMode, naive: bool) -> Result<Prepared, EngineError> {
    let diags = validate(p);
    if !diags.is_empty() {
        return Err(EngineError::Diagnostics(diags));
    }
    let rewritten = rewrite(p);
    let counts: BTreeMap<RelId, usize> = rewritten
        .facts
        .iter()
        .map(|(&rel, tuples)| (rel, tuples.len()))
        .collect();
    let sorted = presort(&rewritten, Some(&counts), presort_mode);
    let graph = build_precedence(&sorted);
    let ir = if naive {
        lower_naive(&sorted, &graph)
    } else {
        lower_semi_naive(&sorted, &graph)
    };
    Ok(Prepared {
        program: sorted,
        ir,
    })
}

/// Runs a prepared program on a caller-supplied storage layer and hands the
/// finished context back for inspection. This is the instrumentation entry
/// point; [`evaluate_program`] wraps it for the common case.
pub fn evaluate_into<S: StorageLayer>(
    prepared: &Prepared,
    mut storage: S,
    opts: &EvalOptions,
) -> Result<(ExecContext<S>, Duration), EngineError> {
    opts.jit.check().map_err(EngineError::Config)?;
    init_storage(&prepared.program, &mut storage);
    let mut ctx = match opts.mode {
        Mode::Interp => ExecContext::new(storage, prepared.program.pool.clone()),
        Mode::Jit => ExecContext::with_jit(
            storage,
            prepared.program.pool.clone(),
            JitRuntime::new(opts.jit.clone()),
        ),
    };
    let started = Instant::now();
    interpret(&prepared.ir, &mut ctx);
    let eval_time = started.elapsed();
    Ok((ctx, eval_time))
}

/// Result of a run: final stats plus read access to every derived relation.
#[derive(Debug)]
pub struct EvalOutput {
    pub stats: ExecStats,
    pub eval_time: Duration,
    storage: HashStorage,
    pool: crate::frontend::ConstPool,
    relations: Vec<(String, RelId, RelKind)>,
}

impl EvalOutput {
    fn rel_id(&self, name: &str) -> Option<(RelId, RelKind)> {
        self.relations
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|&(_, id, kind)| (id, kind))
    }

    /// Names of rule-derived relations, in declaration order.
    pub fn idb_names(&self) -> Vec<&str> {
        self.relations
            .iter()
            .filter(|(_, _, k)| *k == RelKind::Idb)
            .map(|(n, _, _)| n.as_str())
            .collect()
    }

    pub fn relation_len(&self, name: &str) -> Option<usize> {
        let (rel, kind) = self.rel_id(name)?;
        let view = match kind {
            RelKind::Edb => ViewSel::Edb,
            RelKind::Idb => ViewSel::KnownDerived,
        };
        Some(self.storage.cardinality(rel, view))
    }

    /// Tab-joined, lexicographically sorted lines of a relation, the same
    /// shape the CSV writer emits.
    pub fn relation_lines(&self, name: &str) -> Option<Vec<String>> {
        let (rel, kind) = self.rel_id(name)?;
        let view = match kind {
            RelKind::Edb => ViewSel::Edb,
            RelKind::Idb => ViewSel::KnownDerived,
        };
        let mut lines: Vec<String> = self
            .storage
            .view(rel, view)
            .iter()
            .map(|t| {
                t.iter()
                    .map(|&c| self.pool.display_tsv(c))
                    .collect::<Vec<_>>()
                    .join("\t")
            })
            .collect();
        lines.sort();
        Some(lines)
    }

    /// Value-resolved contents of every derived relation, for comparing runs
    /// that may not share a constant pool.
    pub fn canonical_idb(&self) -> BTreeMap<String, BTreeSet<Vec<ConstValue>>> {
        let mut out = BTreeMap::new();
        for (name, rel, kind) in &self.relations {
            if *kind != RelKind::Idb {
                continue;
            }
            let set: BTreeSet<Vec<ConstValue>> = self
                .storage
                .view(*rel, ViewSel::KnownDerived)
                .iter()
                .map(|t| t.iter().map(|&c| self.pool.value(c).clone()).collect())
                .collect();
            out.insert(name.clone(), set);
        }
        out
    }

    /// Per-relation tuple counts for the stats report.
    pub fn relation_counts(&self) -> Vec<(String, usize)> {
        self.relations
            .iter()
            .filter(|(_, _, k)| *k == RelKind::Idb)
            .map(|(n, rel, _)| {
                (
                    n.clone(),
                    self.storage.cardinality(*rel, ViewSel::KnownDerived),
                )
            })
            .collect()
    }

    /// Writes `<relation>.csv` (tab-separated, sorted) for every derived
    /// relation into `dir`; returns the written paths.
    pub fn write_csvs(&self, dir: &std::path::Path) -> std::io::Result<Vec<std::path::PathBuf>> {
        let mut written = Vec::new();
        for (name, _, kind) in &self.relations {
            if *kind != RelKind::Idb {
                continue;
            }
            let lines = self.relation_lines(name).expect("known relation");
            let path = dir.join(format!("{name}.csv"));
            let mut body = lines.join("\n");
            if !body.is_empty() {
                body.push('\n');
            }
            std::fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Evaluates a program (already parsed) under the given options.
pub fn evaluate_program(p: &Program, opts: &EvalOptions) -> Result<EvalOutput, EngineError> {
    let prepared = prepare(p, opts.jit.presort, false)?;
    let (ctx, eval_time) = evaluate_into(&prepared, HashStorage::new(), opts)?;
    Ok(finish(&prepared.program, ctx, eval_time))
}

/// Runs the naive-evaluation oracle: same rewrites, naive lowering, pure
/// interpretation.
pub fn evaluate_naive_oracle(p: &Program) -> Result<EvalOutput, EngineError> {
    let opts = EvalOptions::interpreted();
    let prepared = prepare(p, PresortMode::Off, true)?;
    let (ctx, eval_time) = evaluate_into(&prepared, HashStorage::new(), &opts)?;
    Ok(finish(&prepared.program, ctx, eval_time))
}

/// Parses and evaluates a source text.
pub fn evaluate_source(src: &str, opts: &EvalOptions) -> Result<EvalOutput, EngineError> {
    let p = parse(src)?;
    evaluate_program(&p, opts)
}

pub(crate) fn finish(
    program: &Program,
    ctx: ExecContext<HashStorage>,
    eval_time: Duration,
) -> EvalOutput {
    let relations = program
        .relation_ids()
        .map(|rel| {
            (
                program.relation_name(rel).to_string(),
                rel,
                program.kind(rel),
            )
        })
        .collect();
    EvalOutput {
        stats: ctx.stats,
        eval_time,
        storage: ctx.storage,
        pool: ctx.pool,
        relations,
    }
}
