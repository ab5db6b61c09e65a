//! Soufflé-convention fact ingestion and result output: one `<relation>.facts`
//! file per input relation, tab-separated, one tuple per line; results go to
//! `<relation>.csv` in the same shape, lexicographically sorted.
//!
//! Field typing: a field that parses as a signed 64-bit integer is an
//! integer constant, anything else is a string (stored raw, no quoting).
//! Strings containing tabs or newlines are not representable in this format.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use crate::frontend::{Program, Tuple};

/// Raw rows per relation name, exactly as read from disk.
pub type FactRows = BTreeMap<String, Vec<Vec<String>>>;

/// Reads every `*.facts` file in `dir`. The file stem is the relation name;
/// an empty file is an empty relation.
pub fn read_facts_dir(dir: &Path) -> io::Result<FactRows> {
    let mut out = FactRows::new();
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("facts") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let text = fs::read_to_string(&path)?;
        out.insert(stem.to_string(), parse_fact_rows(&text));
    }
    Ok(out)
}

/// Splits tab-separated fact-file content into rows.
pub fn parse_fact_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

/// Errors surfaced while binding fact rows to program relations.
#[derive(Debug, thiserror::Error)]
pub enum FactsError {
    #[error("facts for `{relation}`: row {row} has {found} fields, relation has arity {expected}")]
    Arity {
        relation: String,
        row: usize,
        expected: usize,
        found: usize,
    },
}

/// Interns fact rows into the program. Relations unknown to the program are
/// created (arity from the first row). Facts landing on rule-defined
/// relations are legal; normalization reroutes them through a synthetic
/// input relation. Returns the names that were attached.
pub fn attach_facts(p: &mut Program, rows: &FactRows) -> Result<Vec<String>, FactsError> {
    let mut attached = Vec::new();
    for (name, tuples) in rows {
        let Some(first) = tuples.first() else {
            // Empty file: make sure the relation exists so scans see an
            // empty input rather than an unknown name.
            if p.relation_named(name).is_none() {
                let _ = p.ensure_relation(name, 0);
            }
            attached.push(name.clone());
            continue;
        };
        let arity = match p.relation_named(name) {
            Some(rel) => p.arity(rel),
            None => first.len(),
        };
        let rel = p
            .ensure_relation(name, arity)
            .map_err(|(expected, found)| FactsError::Arity {
                relation: name.clone(),
                row: 0,
                expected,
                found,
            })?;
        for (i, row) in tuples.iter().enumerate() {
            if row.len() != arity {
                return Err(FactsError::Arity {
                    relation: name.clone(),
                    row: i + 1,
                    expected: arity,
                    found: row.len(),
                });
            }
            let tuple: Tuple = row
                .iter()
                .map(|field| match field.parse::<i64>() {
                    Ok(v) => p.pool.intern_int(v),
                    Err(_) => p.pool.intern_str(field),
                })
                .collect();
            p.add_fact(rel, tuple);
        }
        attached.push(name.clone());
    }
    p.normalize();
    p.canonicalize_pool();
    Ok(attached)
}

/// Writes rows as a `.facts` file body (unsorted, caller's order).
pub fn render_fact_rows(rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

/// Writes one relation's fact rows to `dir/<name>.facts`.
pub fn write_facts_file(dir: &Path, name: &str, rows: &[Vec<String>]) -> io::Result<()> {
    fs::write(dir.join(format!("{name}.facts")), render_fact_rows(rows))
}
