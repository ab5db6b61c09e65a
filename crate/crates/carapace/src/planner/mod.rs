//! Lowering from validated rules to the imperative IR the engine executes:
//! static rewrites, semi-naive lowering (the production path), and naive
//! lowering (the correctness oracle, differing only in view selection).

mod ir;
mod lower;
mod rewrite;

pub use ir::{print_ir, CqArg, CqDescriptor, CqLiteral, HeadArg, IrOp, NodeId};
pub use lower::{initial_permutation, is_admissible, lower_naive, lower_semi_naive};
pub use rewrite::rewrite;
