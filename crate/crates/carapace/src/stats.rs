//! The machine-readable run report: key-value and table sections, stable
//! enough for golden tests. Timing keys (`*_ms`) are the only
//! nondeterministic fields.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use crate::interp::ExecStats;
use crate::planner::NodeId;

/// Everything the report needs, assembled by the caller.
pub struct StatsReport<'a> {
    /// Configuration echo, rendered as `key = value` lines in order.
    pub config: Vec<(String, String)>,
    pub stats: &'a ExecStats,
    pub eval_time: Duration,
    pub total_time: Duration,
    /// Derived relation names with final tuple counts.
    pub relation_counts: Vec<(String, usize)>,
}

fn node_label(n: NodeId) -> String {
    format!("n{}", n.0)
}

impl StatsReport<'_> {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let s = self.stats;
        out.push_str("[config]\n");
        for (k, v) in &self.config {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out.push_str("\n[summary]\n");
        writeln!(out, "strata = {}", s.iterations_per_stratum.len()).unwrap();
        writeln!(out, "iterations_total = {}", s.total_swaps).unwrap();
        for (stratum, iters) in &s.iterations_per_stratum {
            writeln!(out, "iterations_stratum_{stratum} = {iters}").unwrap();
        }
        writeln!(out, "replans = {}", s.replans).unwrap();
        writeln!(out, "probes_total = {}", s.probes_total).unwrap();
        writeln!(out, "inserted_total = {}", s.inserted_total).unwrap();
        writeln!(out, "interp_cq_evals = {}", s.interp_cq_evals).unwrap();
        writeln!(out, "compiled_cq_evals = {}", s.compiled_cq_evals).unwrap();
        writeln!(out, "eval_wall_ms = {:.3}", self.eval_time.as_secs_f64() * 1e3).unwrap();
        writeln!(out, "total_wall_ms = {:.3}", self.total_time.as_secs_f64() * 1e3).unwrap();
        for (stratum, wall) in &s.stratum_wall {
            writeln!(
                out,
                "wall_stratum_{stratum}_ms = {:.3}",
                wall.as_secs_f64() * 1e3
            )
            .unwrap();
        }

        out.push_str("\n[relations]\nrelation\ttuples\n");
        for (name, count) in &self.relation_counts {
            writeln!(out, "{name}\t{count}").unwrap();
        }

        out.push_str("\n[iterations]\nstratum\titeration\trelation\tderived\n");
        for entry in &s.cardinality_log {
            for &(rel, count) in &entry.cards {
                writeln!(
                    out,
                    "{}\t{}\tr{}\t{}",
                    entry.stratum, entry.iteration, rel.0, count
                )
                .unwrap();
            }
        }

        out.push_str("\n[replans]\nnode\titeration\tgeneration\tadopted\n");
        for e in &s.replan_events {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                node_label(e.node),
                e.at_iteration,
                e.generation,
                e.adopted
            )
            .unwrap();
        }

        out.push_str("\n[probes]\nnode\tprobes\n");
        for (&node, &probes) in &s.probes_per_node {
            writeln!(out, "{}\t{}", node_label(node), probes).unwrap();
        }

        out.push_str("\n[snapshots]\nnode\titeration\trelation_view\tcount\n");
        for (&node, snaps) in &s.snapshot_history {
            for snap in snaps {
                for (&(rel, view), &count) in &snap.counts {
                    writeln!(
                        out,
                        "{}\t{}\tr{}:{}\t{}",
                        node_label(node),
                        snap.iteration,
                        rel.0,
                        view.label(),
                        count
                    )
                    .unwrap();
                }
            }
        }
        out
    }
}

/// Parses the `[config]` section back out of a rendered report, for the echo
/// round-trip check.
pub fn parse_config_echo(report: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut in_config = false;
    for line in report.lines() {
        if line.trim() == "[config]" {
            in_config = true;
            continue;
        }
        if in_config {
            if line.starts_with('[') || line.trim().is_empty() {
                break;
            }
            if let Some((k, v)) = line.split_once(" = ") {
                out.insert(k.to_string(), v.to_string());
            }
        }
    }
    out
}

/// Strips nondeterministic fields (timings) so two reports from identical
/// runs compare equal.
pub fn strip_timings(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.contains("_ms = "))
        .collect::<Vec<_>>()
        .join("\n")
}
