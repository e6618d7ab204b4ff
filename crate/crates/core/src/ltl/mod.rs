//! LTL formulas, their concrete syntax, lasso-trace semantics, and the GR(1)
//! specification container.

mod formula;
mod parse;
mod semantics;
mod spec;

use thiserror::Error;

pub use formula::{format_formula, Formula};
pub use parse::parse_with;
pub use semantics::{eval_state, eval_trace, Valuation};
pub use spec::{
    parse_formula, valid_prop_name, validate_spec, GR1Spec, PropKind, PropTable, Proposition,
    ShapeViolation, Slot, SpecDump, SPEC_DUMP_VERSION,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtlError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("invalid proposition name `{0}`")]
    BadName(String),
    #[error("proposition `{0}` declared twice with different kinds")]
    DuplicateProposition(String),
    #[error("loopback {loopback} out of range for trace of length {len}")]
    BadLoopback { loopback: usize, len: usize },
    #[error("formula is not propositional: {0}")]
    NotPropositional(String),
    #[error("spec dump: {0}")]
    Format(String),
}
