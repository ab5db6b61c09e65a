//! Carapace is a bottom-up Datalog engine that evaluates recursive queries
//! with semi-naive fixpoint iteration over an imperative intermediate
//! representation, and re-optimizes join orders at runtime from live relation
//! cardinalities.
//!
//! The pipeline is: [`frontend`] parses and validates a textual Datalog
//! program and builds its relation precedence graph; [`planner`] lowers the
//! rules into an [`planner::IrOp`] tree of imperative operations;
//! [`interp`] walks that tree against a pluggable [`storage`] layer; and
//! [`adaptive`] watches relation cardinalities at safe points, reorders the
//! joins inside each conjunctive query, and hands new plans to the evaluation
//! thread either by regenerating IR or by stitching precompiled operator
//! pipelines, blocking or asynchronously.
//!
//! The quickest way in is [`engine::evaluate_source`]:
//!
//! ```
//! use carapace::engine::{self, EvalOptions};
//!
//! let src = r#"
//!     path(x, y) :- edge(x, y).
//!     path(x, z) :- edge(x, y), path(y, z).
//!     edge("a", "b").
//!     edge("b", "c").
//! "#;
//! let out = engine::evaluate_source(src, &EvalOptions::interpreted()).unwrap();
//! assert_eq!(out.relation_len("path"), Some(3));
//! ```
//!
//! Runnable walkthroughs for every major capability live in `examples/`;
//! the `carapace` binary exposes the same machinery as a command-line tool
//! over Soufflé-style `.facts` directories.

#![forbid(unsafe_code)]

pub mod adaptive;
pub mod bench;
pub mod cli;
pub mod corpus;
pub mod engine;
pub mod frontend;
pub mod interp;
pub mod io;
pub mod planner;
pub mod stats;
pub mod storage;

pub use engine::{EvalOptions, EvalOutput, Mode};
pub use frontend::{parse, validate, Diagnostic, Program};
