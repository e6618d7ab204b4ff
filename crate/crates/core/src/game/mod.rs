//! Explicit-state GR(1) games: arena construction, realizability, strategy
//! and counterstrategy extraction, and controller simulation.

mod arena;
mod export;
pub mod lasso;
mod simulate;
mod solve;
mod strategy;

use thiserror::Error;

use crate::ltl::ShapeViolation;

pub use arena::{build_game, build_game_capped, Encoding, GameGraph, StepExpr, DEFAULT_MAX_PROPS};
pub use export::{counterstrategy_dot, counterstrategy_json, strategy_dot, strategy_json};
pub use simulate::{simulate, PlayStep, PlayTrace, ScriptedSensors, SensorPolicy};
pub use solve::{EnvSolution, SysSolution, UNRANKED};
pub use strategy::{
    check_realizability, check_realizability_capped, classify_unsynthesizable,
    cooperatively_satisfiable, env_assumptions_enforceable, env_assumptions_satisfiable, solve_game, CounterNode,
    CounterStrategy, Strategy, StrategyNode, SynthesisResult, Unsynthesizable, Verdict,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("too many propositions (cap {0})")]
    TooManyPropositions(usize),
    #[error("invalid specification: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidSpec(Vec<ShapeViolation>),
    #[error("env_init and sys_init have no common satisfying valuation")]
    NoInitialState,
    #[error("specification is realizable")]
    NotApplicable,
    #[error("environment move at step {0} violates env_safety")]
    IllegalEnvMove(usize),
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("unsupported formula shape: {0}")]
    Unsupported(String),
    #[error("internal solver error: {0}")]
    Internal(String),
}
