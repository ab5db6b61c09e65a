//! The imperative intermediate representation. Trees are immutable after
//! construction; the adaptive layer produces modified copies instead of
//! mutating in place, so a tree can always be re-executed or compared.

use crate::frontend::{ArithOp, CmpOp, ConstId, Program, RelId};
use crate::storage::ViewSel;

/// Stable identity of an IR node within one lowered tree. Regenerated trees
/// keep the ids of the nodes they replace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

/// Argument of a built-in inside a conjunctive query: a rule variable
/// (interned per rule) or a constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqArg {
    Var(u16),
    Const(ConstId),
}

/// One literal of a conjunctive query, in the rule's textual order.
#[derive(Debug, Clone, PartialEq)]
pub enum CqLiteral {
    Atom {
        rel: RelId,
        view: ViewSel,
        /// Variable id per position; `None` where a constant sits.
        vars: Vec<Option<u16>>,
        /// Pushed-down constant filters: `(position, constant)`.
        const_filters: Vec<(usize, ConstId)>,
        /// Repeated-variable filters within this atom: `(later, earlier)`.
        self_eqs: Vec<(usize, usize)>,
    },
    Cmp {
        op: CmpOp,
        lhs: CqArg,
        rhs: CqArg,
    },
    Bind {
        target: u16,
        op: ArithOp,
        lhs: CqArg,
        rhs: CqArg,
    },
}

impl CqLiteral {
    pub fn is_atom(&self) -> bool {
        matches!(self, CqLiteral::Atom { .. })
    }
}

/// Where one head column of the produced tuples comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadArg {
    Var(u16),
    Const(ConstId),
}

/// The content of one select-project-join node: everything needed to run one
/// conjunctive body variant of a rule, under any admissible literal order.
#[derive(Debug, Clone, PartialEq)]
pub struct CqDescriptor {
    pub rule_id: u32,
    /// Head relation the produced tuples are inserted into.
    pub target: RelId,
    /// Which body relation atom (by atom index) reads the Delta view; `None`
    /// for naive and non-recursive queries.
    pub delta_index: Option<usize>,
    /// Body literals in textual order.
    pub literals: Vec<CqLiteral>,
    /// Current execution order: a bijection on `literals`, admissible with
    /// respect to built-in binding.
    pub permutation: Vec<usize>,
    /// Head projection.
    pub head: Vec<HeadArg>,
    /// Variable id -> source name, for diagnostics and printing.
    pub var_names: Vec<String>,
}

impl CqDescriptor {
    /// Indices (into `literals`) of the relation atoms, textual order.
    pub fn atom_literal_indices(&self) -> Vec<usize> {
        self.literals
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_atom())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Imperative query-plan tree.
#[derive(Debug, Clone, PartialEq)]
pub enum IrOp {
    /// Whole program: EDB loads, then per-stratum evaluation in order.
    ProgramRoot { id: NodeId, children: Vec<IrOp> },
    /// Brings an input relation online in the storage layer.
    EdbLoad { id: NodeId, rel: RelId },
    /// Fixpoint loop over one recursive stratum; exits when no watched
    /// relation produced a delta.
    DoWhile {
        id: NodeId,
        watched: Vec<RelId>,
        body: Box<IrOp>,
    },
    /// One evaluation pass: rule unions then the closing swap.
    IterationSeq {
        id: NodeId,
        stratum: usize,
        children: Vec<IrOp>,
    },
    /// Publishes New views into Known views for the listed relations.
    SwapClear {
        id: NodeId,
        stratum: usize,
        relations: Vec<RelId>,
    },
    /// Union of conjunctive queries deriving one rule's head relation.
    RuleUnion {
        id: NodeId,
        target: RelId,
        children: Vec<IrOp>,
    },
    /// Routes one conjunctive query's output tuples into the target's New
    /// views.
    InsertDelta {
        id: NodeId,
        target: RelId,
        source: Box<IrOp>,
    },
    /// A single select-project-join pipeline.
    Cq { id: NodeId, descriptor: CqDescriptor },
}

impl IrOp {
    pub fn id(&self) -> NodeId {
        match self {
            IrOp::ProgramRoot { id, .. }
            | IrOp::EdbLoad { id, .. }
            | IrOp::DoWhile { id, .. }
            | IrOp::IterationSeq { id, .. }
            | IrOp::SwapClear { id, .. }
            | IrOp::RuleUnion { id, .. }
            | IrOp::InsertDelta { id, .. }
            | IrOp::Cq { id, .. } => *id,
        }
    }

    /// Collects every CQ descriptor in the subtree, depth-first.
    pub fn descriptors(&self) -> Vec<&CqDescriptor> {
        let mut out = Vec::new();
        self.walk(&mut |op| {
            if let IrOp::Cq { descriptor, .. } = op {
                out.push(descriptor);
            }
        });
        out
    }

    /// Relations referenced by atoms in the subtree, with the views they are
    /// read through.
    pub fn referenced_views(&self) -> Vec<(RelId, ViewSel)> {
        let mut out = Vec::new();
        for d in self.descriptors() {
            for lit in &d.literals {
                if let CqLiteral::Atom { rel, view, .. } = lit {
                    if !out.contains(&(*rel, *view)) {
                        out.push((*rel, *view));
                    }
                }
            }
        }
        out
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a IrOp)) {
        f(self);
        match self {
            IrOp::ProgramRoot { children, .. }
            | IrOp::IterationSeq { children, .. }
            | IrOp::RuleUnion { children, .. } => {
                for c in children {
                    c.walk(f);
                }
            }
            IrOp::DoWhile { body, .. } => body.walk(f),
            IrOp::InsertDelta { source, .. } => source.walk(f),
            IrOp::EdbLoad { .. } | IrOp::SwapClear { .. } | IrOp::Cq { .. } => {}
        }
    }
}

fn fmt_node(p: &Program, op: &IrOp, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match op {
        IrOp::ProgramRoot { children, .. } => {
            out.push_str(&format!("{pad}program-root\n"));
            for c in children {
                fmt_node(p, c, depth + 1, out);
            }
        }
        IrOp::EdbLoad { rel, .. } => {
            out.push_str(&format!("{pad}edb-load {}\n", p.relation_name(*rel)));
        }
        IrOp::DoWhile { watched, body, .. } => {
            let names: Vec<&str> = watched.iter().map(|&r| p.relation_name(r)).collect();
            out.push_str(&format!("{pad}do-while watch=[{}]\n", names.join(",")));
            fmt_node(p, body, depth + 1, out);
        }
        IrOp::IterationSeq { stratum, children, .. } => {
            out.push_str(&format!("{pad}iteration-seq stratum={stratum}\n"));
            for c in children {
                fmt_node(p, c, depth + 1, out);
            }
        }
        IrOp::SwapClear { relations, .. } => {
            let names: Vec<&str> = relations.iter().map(|&r| p.relation_name(r)).collect();
            out.push_str(&format!("{pad}swap-clear [{}]\n", names.join(",")));
        }
        IrOp::RuleUnion { target, children, .. } => {
            out.push_str(&format!("{pad}rule-union {}\n", p.relation_name(*target)));
            for c in children {
                fmt_node(p, c, depth + 1, out);
            }
        }
        IrOp::InsertDelta { target, source, .. } => {
            out.push_str(&format!("{pad}insert-delta {}\n", p.relation_name(*target)));
            fmt_node(p, source, depth + 1, out);
        }
        IrOp::Cq { descriptor: d, .. } => {
            let delta = d
                .delta_index
                .map(|i| i.to_string())
                .unwrap_or_else(|| "-".to_string());
            let perm: Vec<String> = d.permutation.iter().map(|i| i.to_string()).collect();
            let lits: Vec<String> = d
                .literals
                .iter()
                .map(|l| match l {
                    CqLiteral::Atom { rel, view, .. } => {
                        format!("{}:{}", p.relation_name(*rel), view.label())
                    }
                    CqLiteral::Cmp { op, lhs, rhs } => {
                        format!("{} {} {}", fmt_arg(d, *lhs), op.symbol(), fmt_arg(d, *rhs))
                    }
                    CqLiteral::Bind { target, op, lhs, rhs } => format!(
                        "{} = {} {} {}",
                        d.var_names[*target as usize],
                        fmt_arg(d, *lhs),
                        op.symbol(),
                        fmt_arg(d, *rhs)
                    ),
                })
                .collect();
            out.push_str(&format!(
                "{pad}cq rule={} delta={} perm=[{}] body=[{}]\n",
                d.rule_id,
                delta,
                perm.join(","),
                lits.join(", ")
            ));
        }
    }
}

fn fmt_arg(d: &CqDescriptor, a: CqArg) -> String {
    match a {
        CqArg::Var(v) => d.var_names[v as usize].clone(),
        CqArg::Const(c) => format!("#{}", c.0),
    }
}

/// Renders the tree as indented text, one node per line, for golden tests
/// and the `ir_dump` example.
pub fn print_ir(p: &Program, op: &IrOp) -> String {
    let mut out = String::new();
    fmt_node(p, op, 0, &mut out);
    out
}
