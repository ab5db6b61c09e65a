//! Textual Datalog frontend: abstract syntax, parser, validation, and the
//! relation precedence graph.
//!
//! The dialect is Soufflé-flavored: `head :- body.` clauses, facts as
//! all-constant atoms, optional `.decl` declarations (arity is otherwise
//! inferred from first use), `//` comments. Constants are signed 64-bit
//! integers or double-quoted strings; both are interned into a dense
//! [`ConstId`] space at parse time so every downstream tuple is a plain
//! integer vector.

mod ast;
mod metadata;
mod parser;
mod precedence;
mod validate;

pub use ast::{
    ArithOp, Atom, CmpOp, ConstId, ConstPool, ConstValue, Literal, Program, RelId, RelKind, Rule,
    Term, Tuple,
};
pub use metadata::{AtomShape, HeadSource, RuleMetadata};
pub use parser::{parse, ParseError};
pub use precedence::{build_precedence, PrecedenceGraph, Stratum};
pub use validate::{validate, Diagnostic, DiagnosticKind};
