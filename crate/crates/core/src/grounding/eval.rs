use serde::Serialize;

use crate::grammar::Grammar;
use crate::world::Task;

use super::features::FeatureSet;
use super::infer::{aligned_objects, ground_instruction, ground_tree, GroundedObject, InferConfig};
use super::model::{decode_example, gold_discourse, train, Corpus, GroundingModel, TrainConfig};
use super::symbols::{action_text, Sym};
use super::GroundingError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub instructions: usize,
    /// Instructions whose inferred grounding set equals the annotation.
    pub recovered: usize,
    pub symbols: usize,
    pub symbols_correct: usize,
    /// Sentences where beam search and exhaustive search disagree.
    pub beam_disagreements: Vec<String>,
    pub misses: Vec<String>,
}

impl EvalReport {
    pub fn recovery(&self) -> f64 {
        if self.instructions == 0 {
            0.0
        } else {
            self.recovered as f64 / self.instructions as f64
        }
    }

    pub fn symbol_accuracy(&self) -> f64 {
        if self.symbols == 0 {
            0.0
        } else {
            self.symbols_correct as f64 / self.symbols as f64
        }
    }

    fn absorb(&mut self, other: EvalReport) {
        self.instructions += other.instructions;
        self.recovered += other.recovered;
        self.symbols += other.symbols;
        self.symbols_correct += other.symbols_correct;
        self.beam_disagreements.extend(other.beam_disagreements);
        self.misses.extend(other.misses);
    }
}

type Signature = (Vec<String>, Vec<(String, usize, usize, usize)>);

fn gold_signature(sentences: &[(crate::grammar::ParseTree, Vec<Sym>)]) -> Signature {
    let mut acts = Vec::new();
    let mut objs: Vec<GroundedObject> = Vec::new();
    for (si, (tree, gold)) in sentences.iter().enumerate() {
        if let Some(Sym::Scopes { actions, .. }) = gold.first() {
            for a in actions {
                let t = action_text(a);
                if !acts.contains(&t) {
                    acts.push(t);
                }
            }
        }
        objs.extend(aligned_objects(tree, gold, si));
    }
    acts.sort();
    (acts, objs.into_iter().map(|o| (o.id, o.sentence, o.span.0, o.span.1)).collect())
}

/// Ground every corpus instruction from raw text and compare with its annotation.
pub fn evaluate(
    corpus: &Corpus,
    grammar: &Grammar,
    model: &GroundingModel,
    cfg: &InferConfig,
) -> Result<EvalReport, GroundingError> {
    let mut r = EvalReport {
        instructions: 0,
        recovered: 0,
        symbols: 0,
        symbols_correct: 0,
        beam_disagreements: vec![],
        misses: vec![],
    };
    for ex in &corpus.examples {
        let d = decode_example(ex, grammar)?;
        let scorer = model.scorer(&d.space);
        r.instructions += 1;
        let want = gold_signature(&d.sentences);
        match ground_instruction(&ex.text, &d.world, grammar, &scorer, cfg) {
            Ok(gs) => {
                if gs.signature() == want {
                    r.recovered += 1;
                } else {
                    r.misses.push(format!("{}: got {}", ex.text, gs.signature().0.join("+")));
                }
            }
            Err(e) => r.misses.push(format!("{}: {e}", ex.text)),
        }
        for (si, (tree, gold)) in d.sentences.iter().enumerate() {
            let ctx = gold_discourse(&d, si);
            let beam = ground_tree(tree, &scorer, &ctx, Some(cfg.beam));
            let full = ground_tree(tree, &scorer, &ctx, None);
            if beam.as_ref().map(|b| &b.0) != full.as_ref().map(|f| &f.0) {
                r.beam_disagreements.push(format!("{} [sentence {si}]", ex.text));
            }
            r.symbols += gold.len();
            if let Some((syms, _)) = beam {
                r.symbols_correct += syms.iter().zip(gold).filter(|(a, b)| a == b).count();
            }
        }
    }
    Ok(r)
}

/// k-fold estimate: train on all folds but one, evaluate on the held-out fold.
/// Fold `i` holds examples whose index is `i` modulo `folds`.
pub fn cross_validate(
    corpus: &Corpus,
    grammar: &Grammar,
    features: &FeatureSet,
    train_cfg: &TrainConfig,
    infer_cfg: &InferConfig,
    folds: usize,
) -> Result<EvalReport, GroundingError> {
    let folds = folds.max(2);
    let mut total = EvalReport {
        instructions: 0,
        recovered: 0,
        symbols: 0,
        symbols_correct: 0,
        beam_disagreements: vec![],
        misses: vec![],
    };
    for f in 0..folds {
        let split = |keep: bool| Corpus {
            version: corpus.version,
            examples: corpus
                .examples
                .iter()
                .enumerate()
                .filter(|(i, _)| (i % folds == f) != keep)
                .map(|(_, e)| e.clone())
                .collect(),
        };
        let (train_set, test_set) = (split(true), split(false));
        if test_set.examples.is_empty() || train_set.examples.is_empty() {
            continue;
        }
        let model = train(&train_set, grammar, features, train_cfg)?.model;
        total.absorb(evaluate(&test_set, grammar, &model, infer_cfg)?);
    }
    Ok(total)
}

/// Tasks covered by a corpus.
pub fn corpus_tasks(corpus: &Corpus) -> Vec<Task> {
    let mut t: Vec<Task> = corpus.examples.iter().map(|e| e.task).collect();
    t.sort();
    t.dedup();
    t
}
