//! Seeded random program generator: small positive-Datalog programs (plus
//! comparison built-ins) with fact sets, used by the oracle-equivalence and
//! configuration-matrix test suites. Generation is deterministic per seed;
//! every bundle validates cleanly; at least every second bundle contains a
//! recursive rule. Binding built-ins are deliberately excluded so every
//! generated program has a finite fixpoint.

use std::fmt::Write as _;
use std::path::Path;

use rand::prelude::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::EngineError;
use crate::frontend::{parse, validate, Program};
use crate::io::{attach_facts, FactRows};

/// Upper bounds on generated program size.
#[derive(Debug, Clone, Copy)]
pub struct CorpusLimits {
    pub max_arity: usize,
    pub max_relations: usize,
    pub max_rules: usize,
    pub max_facts: usize,
}

impl Default for CorpusLimits {
    fn default() -> Self {
        Self {
            max_arity: 3,
            max_relations: 6,
            max_rules: 8,
            max_facts: 40,
        }
    }
}

/// One generated program with its fact files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub name: String,
    /// Rule text in the engine dialect.
    pub program: String,
    /// Fact rows per input relation, `.facts`-file shaped.
    pub facts: FactRows,
}

impl Bundle {
    /// Parses the rules and attaches the fact rows.
    pub fn to_program(&self) -> Result<Program, EngineError> {
        let mut p = parse(&self.program)?;
        attach_facts(&mut p, &self.facts).expect("generated facts are arity-consistent");
        Ok(p)
    }

    /// Writes `program.dl` plus one `.facts` file per relation into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("program.dl"), &self.program)?;
        for (rel, rows) in &self.facts {
            crate::io::write_facts_file(dir, rel, rows)?;
        }
        Ok(())
    }
}

const VARS: [&str; 6] = ["x", "y", "z", "u", "v", "w"];
const STRINGS: [&str; 3] = ["a", "b", "c"];

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    limits: CorpusLimits,
}

impl Gen<'_> {
    fn constant(&mut self) -> String {
        if self.rng.random_bool(0.8) {
            self.rng.random_range(0..10i64).to_string()
        } else {
            format!("\"{}\"", STRINGS.choose(self.rng).unwrap())
        }
    }

    fn fact_field(&mut self) -> String {
        if self.rng.random_bool(0.8) {
            self.rng.random_range(0..10i64).to_string()
        } else {
            STRINGS.choose(self.rng).unwrap().to_string()
        }
    }

    /// Emits one rule for `head`. `force_recursive` guarantees a body atom
    /// over the head relation itself.
    fn rule(
        &mut self,
        head: &str,
        head_arity: usize,
        edb: &[(String, usize)],
        idb: &[(String, usize)],
        force_recursive: bool,
    ) -> String {
        let n_atoms = self.rng.random_range(1..=3usize);
        let mut atoms: Vec<(String, usize)> = Vec::new();
        for i in 0..n_atoms {
            let pick_idb = !idb.is_empty() && self.rng.random_bool(0.4);
            let (rel, arity) = if force_recursive && i == 0 {
                let arity = idb
                    .iter()
                    .find(|(n, _)| n == head)
                    .map(|&(_, a)| a)
                    .unwrap_or(head_arity);
                (head.to_string(), arity)
            } else if pick_idb {
                idb.choose(self.rng).unwrap().clone()
            } else {
                edb.choose(self.rng).unwrap().clone()
            };
            atoms.push((rel, arity));
        }

        // Fill positions: mostly variables, occasionally constants, but
        // guarantee at least one variable to bind the head from.
        let mut bound: Vec<&str> = Vec::new();
        let mut body: Vec<String> = Vec::new();
        for (i, (rel, arity)) in atoms.iter().enumerate() {
            let mut terms = Vec::new();
            for pos in 0..*arity {
                if (i == 0 && pos == 0) || self.rng.random_bool(0.8) {
                    let v = VARS.choose(self.rng).unwrap();
                    if !bound.contains(v) {
                        bound.push(v);
                    }
                    terms.push(v.to_string());
                } else {
                    terms.push(self.constant());
                }
            }
            body.push(format!("{rel}({})", terms.join(", ")));
        }

        // Occasional comparison filter over two bound variables.
        if bound.len() >= 2 && self.rng.random_bool(0.3) {
            let a = *bound.choose(self.rng).unwrap();
            let mut b = *bound.choose(self.rng).unwrap();
            if a == b {
                b = bound[(bound.iter().position(|&v| v == a).unwrap() + 1) % bound.len()];
            }
            let op = *["!=", "<=", "<"].choose(self.rng).unwrap();
            body.push(format!("{a} {op} {b}"));
        }

        let head_terms: Vec<String> = (0..head_arity)
            .map(|_| {
                if self.rng.random_bool(0.9) {
                    bound.choose(self.rng).unwrap().to_string()
                } else {
                    self.constant()
                }
            })
            .collect();
        format!("{head}({}) :- {}.", head_terms.join(", "), body.join(", "))
    }
}

/// Generates `count` bundles deterministically from `seed`.
///
/// Panics if a generated program fails validation; the construction binds
/// every head variable from body atoms, so that would be a generator bug.
pub fn gen_corpus(seed: u64, count: usize, limits: CorpusLimits) -> Vec<Bundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bundles = Vec::with_capacity(count);
    for i in 0..count {
        let mut g = Gen {
            rng: &mut rng,
            limits,
        };
        let n_edb = g.rng.random_range(1..=2usize);
        let n_idb = g
            .rng
            .random_range(1..=3usize)
            .min(g.limits.max_relations.saturating_sub(n_edb));
        let edb: Vec<(String, usize)> = (0..n_edb)
            .map(|k| (format!("e{k}"), g.rng.random_range(1..=g.limits.max_arity)))
            .collect();
        let idb: Vec<(String, usize)> = (0..n_idb)
            .map(|k| (format!("r{k}"), g.rng.random_range(1..=g.limits.max_arity)))
            .collect();

        let force_recursion = i % 2 == 0;
        let mut rules: Vec<String> = Vec::new();
        for (k, (head, head_arity)) in idb.iter().enumerate() {
            let n_rules = if force_recursion && k == 0 {
                2
            } else {
                g.rng.random_range(1..=2usize)
            };
            for r in 0..n_rules {
                if rules.len() >= g.limits.max_rules {
                    break;
                }
                // The forced-recursive relation gets a guaranteed EDB base
                // rule first, then a self-referencing rule.
                let recursive = force_recursion && k == 0 && r == 1;
                let body_idb: &[(String, usize)] = if force_recursion && k == 0 && r == 0 {
                    &[]
                } else {
                    &idb
                };
                rules.push(g.rule(head, *head_arity, &edb, body_idb, recursive));
            }
        }

        let mut facts = FactRows::new();
        let mut budget = g.limits.max_facts;
        for (rel, arity) in &edb {
            let n = g.rng.random_range(1..=8usize).min(budget);
            budget -= n;
            let rows: Vec<Vec<String>> = (0..n)
                .map(|_| (0..*arity).map(|_| g.fact_field()).collect())
                .collect();
            facts.insert(rel.clone(), rows);
        }

        let mut program = String::new();
        for rule in &rules {
            writeln!(program, "{rule}").unwrap();
        }
        let bundle = Bundle {
            name: format!("c{seed}_{i:03}"),
            program,
            facts,
        };
        let p = bundle.to_program().expect("generated program parses");
        let diags = validate(&p);
        assert!(
            diags.is_empty(),
            "generator produced invalid program {}: {:?}\n{}",
            bundle.name,
            diags,
            bundle.program
        );
        bundles.push(bundle);
    }
    bundles
}

/// True when the bundle's program has at least one recursive stratum.
pub fn is_recursive(bundle: &Bundle) -> bool {
    let p = bundle.to_program().expect("bundle parses");
    crate::frontend::build_precedence(&p)
        .strata
        .iter()
        .any(|s| s.recursive)
}
