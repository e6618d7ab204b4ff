//! Grounding of parsed instructions to perceived objects and scope formulae.

mod eval;
mod features;
mod infer;
mod model;
mod symbols;
mod templates;

use thiserror::Error;

use crate::grammar::GrammarError;
use crate::ltl::GR1Spec;

pub use eval::{corpus_tasks, cross_validate, evaluate, EvalReport};
pub use features::{features, FeatureSet, FeatureTemplate, NodeView, BUNDLED_FEATURES, FEATURES_VERSION};
pub use infer::{
    aligned_objects, compose, ground_instruction, ground_subtree, ground_tree, leaf_candidates, prep_word_of, Discourse,
    GroundedObject, GroundingSet, InferConfig, Scorer, SentenceGrounding,
};
pub use model::{
    decode_example, gold_discourse, prepositions, train, AnnotatedExample, AnnotatedSentence, Corpus, Decoded,
    GroundingModel, TrainConfig, TrainOutput, BUNDLED_CORPUS, BUNDLED_MODEL, CORPUS_VERSION, MODEL_VERSION,
};
pub use symbols::{
    action_text, parse_action, symbol_space, world_objects, ObjectSym, ObjectType, ScopeSym, SpatialRelation,
    Sym, SymbolSpace, Verb, PRONOUN, SPATIAL_DELTA,
};
pub use templates::{make_scope, scope_sensors, scope_to_formulae, spec_from_scopes};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundingError {
    #[error("no formula template for {0}")]
    NoTemplate(String),
    #[error("scopes disagree on the constraints of {0}")]
    ConflictingScopes(String),
    #[error("instruction grounds to no goals")]
    NoGoals,
    #[error("no grounding for `{0}`")]
    NoGrounding(String),
    #[error("bad grounding symbol `{0}`")]
    BadSymbol(String),
    #[error("inconsistent annotation: {0}")]
    InconsistentAnnotation(String),
    #[error("features do not cover: {}", .0.join("; "))]
    CoverageGap(Vec<String>),
    #[error("parse: {0}")]
    Parse(GrammarError),
    #[error("{0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
    #[error("specification: {0}")]
    Spec(String),
}

/// The specification an instruction's grounding set describes.
pub fn grounding_set_to_spec(gs: &GroundingSet) -> Result<GR1Spec, GroundingError> {
    spec_from_scopes(&gs.scopes, gs.task)
}
