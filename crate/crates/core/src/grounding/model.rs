use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::grammar::{Grammar, ParseTree};
use crate::world::{load_world, Task, World};

use super::features::{features, FeatureSet, NodeView};
use super::infer::{compose, leaf_candidates, prep_word_of, Discourse, Scorer};
use super::symbols::{symbol_space, ObjectType, Sym, SymbolSpace};
use super::GroundingError;

pub const MODEL_VERSION: u32 = 1;
pub const CORPUS_VERSION: u32 = 1;
pub const BUNDLED_MODEL: &str = include_str!("../../data/grounding/model.json");
pub const BUNDLED_CORPUS: &str = include_str!("../../data/grounding/corpus.json");

/// Trained weights plus the feature templates they were trained with.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundingModel {
    pub features: FeatureSet,
    pub weights: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    features: Vec<String>,
    weights: BTreeMap<String, f64>,
}

impl GroundingModel {
    pub fn from_json(text: &str) -> Result<Self, GroundingError> {
        let f: ModelFile = serde_json::from_str(text).map_err(|e| GroundingError::Format(e.to_string()))?;
        if f.version != MODEL_VERSION {
            return Err(GroundingError::Format(format!("unsupported model version {}", f.version)));
        }
        if let Some((k, _)) = f.weights.iter().find(|(_, w)| !w.is_finite()) {
            return Err(GroundingError::Format(format!("weight `{k}` is not finite")));
        }
        let features = FeatureSet(f.features.iter().map(|s| s.parse()).collect::<Result<_, _>>()?);
        Ok(GroundingModel { features, weights: f.weights })
    }

    pub fn to_json(&self) -> String {
        let f = ModelFile {
            version: MODEL_VERSION,
            features: self.features.names().into_iter().map(String::from).collect(),
            weights: self.weights.clone(),
        };
        let mut s = serde_json::to_string_pretty(&f).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self, GroundingError> {
        let text = std::fs::read_to_string(path).map_err(|e| GroundingError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_MODEL).expect("bundled model is valid")
    }

    pub fn scorer<'a>(&'a self, space: &'a SymbolSpace) -> Scorer<'a> {
        Scorer { features: &self.features, weights: &self.weights, space }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedSentence {
    /// Bracketed parse.
    pub tree: String,
    /// Gold symbol per node, preorder.
    pub gold: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedExample {
    pub text: String,
    pub world: String,
    pub task: Task,
    pub sentences: Vec<AnnotatedSentence>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corpus {
    pub version: u32,
    pub examples: Vec<AnnotatedExample>,
}

impl Corpus {
    pub fn from_json(text: &str) -> Result<Self, GroundingError> {
        let c: Corpus = serde_json::from_str(text).map_err(|e| GroundingError::Format(e.to_string()))?;
        if c.version != CORPUS_VERSION {
            return Err(GroundingError::Format(format!("unsupported corpus version {}", c.version)));
        }
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("corpus serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self, GroundingError> {
        let text = std::fs::read_to_string(path).map_err(|e| GroundingError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_CORPUS).expect("bundled corpus is valid")
    }

    pub fn trees(&self) -> Result<Vec<ParseTree>, GroundingError> {
        self.examples
            .iter()
            .flat_map(|e| &e.sentences)
            .map(|s| ParseTree::from_bracketed(&s.tree).map_err(GroundingError::Parse))
            .collect()
    }
}

/// One example decoded against its world.
pub struct Decoded {
    pub world: World,
    pub space: SymbolSpace,
    pub sentences: Vec<(ParseTree, Vec<Sym>)>,
}

pub fn decode_example(ex: &AnnotatedExample, grammar: &Grammar) -> Result<Decoded, GroundingError> {
    let world = load_world(&ex.world).map_err(|e| GroundingError::Io(e.to_string()))?;
    let space = symbol_space(&world, ex.task, &prepositions(grammar));
    let mut sentences = Vec::new();
    for (si, s) in ex.sentences.iter().enumerate() {
        let tree = ParseTree::from_bracketed(&s.tree).map_err(GroundingError::Parse)?;
        let n = tree.preorder().len();
        if s.gold.len() != n {
            return Err(GroundingError::InconsistentAnnotation(format!(
                "{}: sentence {si} has {n} nodes but {} gold symbols",
                ex.text,
                s.gold.len()
            )));
        }
        let gold = s.gold.iter().map(|g| g.parse()).collect::<Result<Vec<Sym>, _>>()?;
        sentences.push((tree, gold));
    }
    Ok(Decoded { world, space, sentences })
}

/// Prepositions known to a grammar.
pub fn prepositions(g: &Grammar) -> Vec<String> {
    let set: BTreeSet<String> = g.lexical.iter().filter(|r| r.tag == "IN").map(|r| r.word.clone()).collect();
    set.into_iter().collect()
}

/// Discourse context before sentence `si`, from the gold annotation.
pub fn gold_discourse(d: &Decoded, si: usize) -> Discourse {
    let mut ctx = Discourse::default();
    for (tree, gold) in &d.sentences[..si] {
        let objs = super::infer::aligned_objects(tree, gold, 0);
        if let Some(c) = objs.iter().rev().find_map(|o| {
            d.space.object(&o.id).filter(|x| x.otype == ObjectType::Cube).and_then(|x| x.color)
        }) {
            ctx.antecedent = Some(c);
        }
    }
    ctx
}

/// One training factor: the candidates' feature lists and the gold index.
struct Factor {
    feats: Vec<Vec<usize>>,
    gold: usize,
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub l2: f64,
    pub steps: usize,
    pub step_size: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { l2: 0.01, steps: 200, step_size: 0.5 }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub model: GroundingModel,
    /// Factors where no feature separates the gold symbol from a rival.
    pub coverage_gaps: Vec<String>,
    pub final_objective: f64,
}

/// Maximize the per-node conditional log-likelihood (teacher-forced on the
/// gold child symbols), averaged over examples, minus an L2 penalty.
pub fn train(
    corpus: &Corpus,
    grammar: &Grammar,
    features_set: &FeatureSet,
    cfg: &TrainConfig,
) -> Result<TrainOutput, GroundingError> {
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut intern = |f: String| -> usize {
        if let Some(&i) = index.get(&f) {
            return i;
        }
        index.insert(f.clone(), names.len());
        names.push(f);
        names.len() - 1
    };
    let mut factors: Vec<Vec<Factor>> = Vec::new();
    let mut gaps = Vec::new();
    for ex in &corpus.examples {
        let d = decode_example(ex, grammar)?;
        let mut ex_factors = Vec::new();
        for (si, (tree, gold)) in d.sentences.iter().enumerate() {
            let ctx = gold_discourse(&d, si);
            let nodes = tree.preorder();
            let mut pos = BTreeMap::new();
            for (k, n) in nodes.iter().enumerate() {
                pos.insert(*n as *const ParseTree, k);
            }
            for (k, n) in nodes.iter().enumerate() {
                let (view, cands) = if n.is_leaf() {
                    (NodeView { tag: &n.tag, word: n.word.as_deref(), children: None }, leaf_candidates())
                } else {
                    let a = &gold[pos[&(&n.children[0] as *const ParseTree)]];
                    let b = &gold[pos[&(&n.children[1] as *const ParseTree)]];
                    (
                        NodeView { tag: &n.tag, word: None, children: Some((a, b)) },
                        compose(&d.space, &ctx, prep_word_of(n), a, b),
                    )
                };
                let Some(g) = cands.iter().position(|c| *c == gold[k]) else {
                    return Err(GroundingError::InconsistentAnnotation(format!(
                        "{}: sentence {si} node {k} ({}) gold `{}` is not a candidate",
                        ex.text, n.tag, gold[k]
                    )));
                };
                let feats: Vec<Vec<String>> = cands.iter().map(|c| features(features_set, &view, c, &d.space)).collect();
                for (ci, f) in feats.iter().enumerate() {
                    if ci != g && sorted(f) == sorted(&feats[g]) {
                        gaps.push(format!("{}: node {k} ({}) `{}` vs `{}`", ex.text, n.tag, gold[k], cands[ci]));
                    }
                }
                ex_factors.push(Factor {
                    feats: feats.into_iter().map(|fs| fs.into_iter().map(&mut intern).collect()).collect(),
                    gold: g,
                });
            }
        }
        factors.push(ex_factors);
    }
    if factors.is_empty() {
        return Err(GroundingError::CoverageGap(vec!["empty corpus: no factor is covered".into()]));
    }
    let n_ex = factors.len() as f64;
    let mut w = vec![0.0; names.len()];
    let objective = |w: &[f64], grad: Option<&mut Vec<f64>>| -> f64 {
        let mut obj = 0.0;
        let mut g = vec![0.0; w.len()];
        for ex in &factors {
            for f in ex {
                let scores: Vec<f64> = f.feats.iter().map(|fs| fs.iter().map(|&i| w[i]).sum()).collect();
                let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
                obj += scores[f.gold] - m - z.ln();
                for &i in &f.feats[f.gold] {
                    g[i] += 1.0;
                }
                for (fs, s) in f.feats.iter().zip(&scores) {
                    let p = (s - m).exp() / z;
                    for &i in fs {
                        g[i] -= p;
                    }
                }
            }
        }
        obj /= n_ex;
        let reg: f64 = w.iter().map(|x| x * x).sum::<f64>() * cfg.l2 / 2.0;
        if let Some(out) = grad {
            for i in 0..w.len() {
                out[i] = g[i] / n_ex - cfg.l2 * w[i];
            }
        }
        obj - reg
    };
    let mut grad = vec![0.0; w.len()];
    for _ in 0..cfg.steps {
        objective(&w, Some(&mut grad));
        for i in 0..w.len() {
            w[i] += cfg.step_size * grad[i];
        }
    }
    let final_objective = objective(&w, None);
    let weights = names.into_iter().zip(w).filter(|(_, x)| *x != 0.0).collect();
    gaps.sort();
    gaps.dedup();
    Ok(TrainOutput {
        model: GroundingModel { features: features_set.clone(), weights },
        coverage_gaps: gaps,
        final_objective,
    })
}

fn sorted(v: &[String]) -> Vec<&String> {
    let mut out: Vec<&String> = v.iter().collect();
    out.sort();
    out
}
