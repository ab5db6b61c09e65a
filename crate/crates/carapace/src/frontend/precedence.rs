//! Relation precedence graph and evaluation strata.
//!
//! Strata are the strongly-connected components of the rule dependency graph
//! over IDB relations, ordered so every stratum's dependencies are computed
//! before it. Mutually recursive relations share a stratum.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::graph::DiGraph;

use super::ast::{Program, RelId, RelKind};

/// One unit of fixpoint evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratum {
    /// IDB relations computed together, sorted by id.
    pub relations: Vec<RelId>,
    /// Rule ids whose head lives in this stratum, in textual order.
    pub rules: Vec<u32>,
    /// True when the stratum needs a fixpoint loop (mutual recursion or a
    /// self-dependent rule).
    pub recursive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecedenceGraph {
    /// head relation -> body relations it reads (IDB and EDB alike).
    pub dependencies: BTreeMap<RelId, BTreeSet<RelId>>,
    /// Strata in evaluation order: dependencies first.
    pub strata: Vec<Stratum>,
}

impl PrecedenceGraph {
    /// Index of the stratum computing `rel`, if it is an IDB relation.
    pub fn stratum_of(&self, rel: RelId) -> Option<usize> {
        self.strata.iter().position(|s| s.relations.contains(&rel))
    }
}

pub fn build_precedence(p: &Program) -> PrecedenceGraph {
    let mut dependencies: BTreeMap<RelId, BTreeSet<RelId>> = BTreeMap::new();
    for rule in &p.rules {
        let entry = dependencies.entry(rule.head.rel).or_default();
        for atom in rule.body.iter().filter_map(|l| l.as_atom()) {
            entry.insert(atom.rel);
        }
    }

    let idb = p.idb_relations();
    let mut graph: DiGraph<RelId, ()> = DiGraph::new();
    let mut node_of = HashMap::new();
    for &rel in &idb {
        node_of.insert(rel, graph.add_node(rel));
    }
    for (&head, bodies) in &dependencies {
        for &body in bodies {
            if p.kind(body) == RelKind::Idb {
                graph.add_edge(node_of[&head], node_of[&body], ());
            }
        }
    }

    // tarjan_scc returns components in reverse topological order of the
    // condensation; with edges pointing head -> body that is dependencies
    // first, exactly the evaluation order we need.
    let sccs = petgraph::algo::tarjan_scc(&graph);
    let strata: Vec<Stratum> = sccs
        .into_iter()
        .map(|component| {
            let mut relations: Vec<RelId> = component.iter().map(|&n| graph[n]).collect();
            relations.sort();
            let member: BTreeSet<RelId> = relations.iter().copied().collect();
            let rules: Vec<u32> = p
                .rules
                .iter()
                .filter(|r| member.contains(&r.head.rel))
                .map(|r| r.id)
                .collect();
            let recursive = relations.len() > 1
                || p.rules.iter().any(|r| {
                    member.contains(&r.head.rel)
                        && r.body
                            .iter()
                            .filter_map(|l| l.as_atom())
                            .any(|a| member.contains(&a.rel))
                });
            Stratum {
                relations,
                rules,
                recursive,
            }
        })
        .collect();

    PrecedenceGraph {
        dependencies,
        strata,
    }
}
