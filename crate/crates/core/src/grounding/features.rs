use std::str::FromStr;

use crate::world::{ActionType, Task};

use super::symbols::{ObjectType, Sym, SymbolSpace};
use super::GroundingError;

pub const FEATURES_VERSION: u32 = 1;
pub const BUNDLED_FEATURES: &str = include_str!("../../data/grounding/features.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureTemplate {
    Bias,
    Word,
    Rule,
    TypeMatch,
    ColorMatch,
    SpatialMatch,
    SameObject,
    RegionPrep,
    ActObject,
    ScopeArm,
    ConjArm,
    ScopePrep,
}

impl FeatureTemplate {
    pub const ALL: [FeatureTemplate; 12] = [
        FeatureTemplate::Bias,
        FeatureTemplate::Word,
        FeatureTemplate::Rule,
        FeatureTemplate::TypeMatch,
        FeatureTemplate::ColorMatch,
        FeatureTemplate::SpatialMatch,
        FeatureTemplate::SameObject,
        FeatureTemplate::RegionPrep,
        FeatureTemplate::ActObject,
        FeatureTemplate::ScopeArm,
        FeatureTemplate::ConjArm,
        FeatureTemplate::ScopePrep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureTemplate::Bias => "bias",
            FeatureTemplate::Word => "word",
            FeatureTemplate::Rule => "rule",
            FeatureTemplate::TypeMatch => "type_match",
            FeatureTemplate::ColorMatch => "color_match",
            FeatureTemplate::SpatialMatch => "spatial_match",
            FeatureTemplate::SameObject => "same_object",
            FeatureTemplate::RegionPrep => "region_prep",
            FeatureTemplate::ActObject => "act_object",
            FeatureTemplate::ScopeArm => "scope_arm",
            FeatureTemplate::ConjArm => "conj_arm",
            FeatureTemplate::ScopePrep => "scope_prep",
        }
    }
}

impl FromStr for FeatureTemplate {
    type Err = GroundingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureTemplate::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| GroundingError::Format(format!("unknown feature template `{s}`")))
    }
}

/// Enabled templates, in file order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureSet(pub Vec<FeatureTemplate>);

impl FeatureSet {
    pub fn parse(text: &str) -> Result<Self, GroundingError> {
        let mut version = None;
        let mut out = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(v) = line.strip_prefix("%version") {
                version = Some(v.trim().parse::<u32>().map_err(|_| GroundingError::Format(line.into()))?);
                continue;
            }
            let t: FeatureTemplate = line.parse()?;
            if !out.contains(&t) {
                out.push(t);
            }
        }
        match version {
            Some(FEATURES_VERSION) => Ok(FeatureSet(out)),
            Some(v) => Err(GroundingError::Format(format!("unsupported feature file version {v}"))),
            None => Err(GroundingError::Format("feature file lacks %version".into())),
        }
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_FEATURES).expect("bundled feature file is valid")
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.0.iter().map(|t| t.name()).collect()
    }

    pub fn has(&self, t: FeatureTemplate) -> bool {
        self.0.contains(&t)
    }
}

/// What a factor sees of its node: the tag, the word for leaves, the word
/// under a preposition child, and the child symbols for internal nodes.
#[derive(Clone, Copy, Debug)]
pub struct NodeView<'a> {
    pub tag: &'a str,
    pub word: Option<&'a str>,
    pub children: Option<(&'a Sym, &'a Sym)>,
}

fn how(view: &NodeView, cand: &Sym) -> &'static str {
    match view.children {
        None => "leaf",
        Some((a, _)) if a == cand => "left",
        Some((_, b)) if b == cand => "right",
        Some(_) => "new",
    }
}

fn target_type(space: &SymbolSpace, id: &str) -> &'static str {
    space.object(id).map_or("unknown", |o| o.otype.name())
}

/// Feature names fired by `cand` at a node.
pub fn features(set: &FeatureSet, view: &NodeView, cand: &Sym, space: &SymbolSpace) -> Vec<String> {
    let mut out = Vec::new();
    let kids: Vec<&Sym> = view.children.map_or(vec![], |(a, b)| vec![a, b]);
    for &t in &set.0 {
        match t {
            FeatureTemplate::Bias => out.push(format!("bias:{}:{}", view.tag, cand.kind())),
            FeatureTemplate::Word => {
                if let Some(w) = view.word {
                    out.push(format!("word:{w}:{cand}"));
                }
            }
            FeatureTemplate::Rule => {
                if let Some((a, b)) = view.children {
                    out.push(format!("rule:{}:{},{}:{}:{}", view.tag, a.kind(), b.kind(), cand.kind(), how(view, cand)));
                }
            }
            FeatureTemplate::TypeMatch | FeatureTemplate::ColorMatch | FeatureTemplate::SpatialMatch => {
                let Sym::Object(id) = cand else { continue };
                let Some(o) = space.object(id) else { continue };
                for k in &kids {
                    let agree = match (t, k) {
                        (FeatureTemplate::TypeMatch, Sym::Type(ty)) => o.otype == *ty,
                        (FeatureTemplate::ColorMatch, Sym::Color(c)) => o.color == Some(*c),
                        (FeatureTemplate::SpatialMatch, Sym::Spatial(r)) => o.satisfies(*r),
                        _ => continue,
                    };
                    out.push(format!("{}:{}", t.name(), if agree { "agree" } else { "conflict" }));
                }
            }
            FeatureTemplate::SameObject => {
                let id = match cand {
                    Sym::Object(id) => id,
                    Sym::Region { target, .. } => target,
                    Sym::Act { obj, .. } => obj,
                    Sym::Partial { obj, .. } => obj,
                    _ => continue,
                };
                for k in &kids {
                    if let Sym::Object(other) = k {
                        out.push(format!("same_object:{}:{}", cand.kind(), other == id));
                    }
                }
            }
            FeatureTemplate::RegionPrep => match cand {
                Sym::Region { prep, target } => out.push(format!("region:{prep}:{}", target_type(space, target))),
                Sym::Partial { prep, target, .. } => {
                    out.push(format!("partial:{prep}:{}", target_type(space, target)))
                }
                _ => {}
            },
            FeatureTemplate::ActObject => {
                if let Sym::Act { verb, obj } = cand {
                    let ty = if obj == super::PRONOUN { "pronoun" } else { target_type(space, obj) };
                    out.push(format!("act:{}:{ty}", verb.name()));
                }
            }
            FeatureTemplate::ScopeArm => {
                let Sym::Scopes { actions, .. } = cand else { continue };
                let gripper = kids.iter().find_map(|k| match k {
                    Sym::Region { target, .. } => space
                        .object(target)
                        .filter(|o| o.otype == ObjectType::Gripper)
                        .and_then(|o| o.side),
                    _ => None,
                });
                for a in actions.iter().filter(|a| a.kind == ActionType::PickUp) {
                    match gripper {
                        Some(side) => {
                            out.push(format!("arm_region:{}", if side == a.arm { "agree" } else { "conflict" }))
                        }
                        None => out.push(format!("arm_default:{}:{}", task_name(space.task), a.arm.name())),
                    }
                }
            }
            FeatureTemplate::ConjArm => {
                let Sym::Scopes { actions, .. } = cand else { continue };
                for k in &kids {
                    match k {
                        Sym::Scopes { actions: theirs, .. } if !theirs.iter().all(|a| actions.contains(a)) => {
                            out.push("conj_arm:drop".into())
                        }
                        Sym::Partial { .. } => {
                            if actions.iter().filter(|a| a.kind == ActionType::Place).count() < 2 {
                                out.push("conj_arm:drop".into())
                            }
                        }
                        _ => {}
                    }
                }
                let picks: Vec<_> = actions.iter().filter(|a| a.kind == ActionType::PickUp).collect();
                if picks.is_empty() {
                    continue;
                }
                for p in actions.iter().filter(|a| a.kind == ActionType::Place) {
                    let ok = picks.iter().any(|q| q.arm == p.arm);
                    out.push(format!("conj_arm:{}", if ok { "consistent" } else { "conflict" }));
                }
            }
            FeatureTemplate::ScopePrep => {
                let Sym::Scopes { verb, actions } = cand else { continue };
                let prep = kids.iter().find_map(|k| match k {
                    Sym::Region { prep, target } | Sym::Partial { prep, target, .. } => {
                        Some(format!("{prep}:{}", target_type(space, target)))
                    }
                    _ => None,
                });
                out.push(format!("scope:{}:{}:{}", verb.name(), prep.unwrap_or_else(|| "-".into()), actions.len()));
            }
        }
    }
    out
}

fn task_name(t: Task) -> &'static str {
    t.name()
}
