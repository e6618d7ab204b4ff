//! Yes/no questions for mined assumptions, phrased with the user's own words
//! for the objects involved.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::{GroundingSet, ObjectType};
use crate::miner::AssumptionCandidate;
use crate::world::{SensorSym, SensorType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("no question template for {0} with polarity {1}")]
    NoTemplate(String, bool),
    #[error("`{0}` is not a sensor proposition")]
    UnknownProposition(String),
    #[error("template file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
}

pub const TEMPLATES_VERSION: u32 = 1;
pub const BUNDLED_TEMPLATES: &str = include_str!("../data/prompter/templates.txt");

fn type_key(t: SensorType) -> &'static str {
    match t {
        SensorType::ObservedCube => "observed_cube",
        SensorType::BinClear => "bin_clear",
        SensorType::UnderStack => "understack",
    }
}

fn type_from_key(k: &str) -> Option<SensorType> {
    [SensorType::ObservedCube, SensorType::BinClear, SensorType::UnderStack].into_iter().find(|t| type_key(*t) == k)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplates {
    pub fragments: BTreeMap<(SensorType, bool), String>,
    pub joiner: String,
}

impl PromptTemplates {
    /// Line format: `%version 1`, `%joiner WORD`, then
    /// `SENSOR_TYPE +|- fragment with {ref}`. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let err = |line: usize, msg: &str| PromptError::Format { line, msg: msg.to_string() };
        let mut version = None;
        let mut joiner = None;
        let mut fragments = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let n = i + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(v) = line.strip_prefix("%version") {
                let v: u32 = v.trim().parse().map_err(|_| err(n, "bad version"))?;
                if v != TEMPLATES_VERSION {
                    return Err(err(n, &format!("unsupported version {v}")));
                }
                version = Some(v);
                continue;
            }
            if let Some(j) = line.strip_prefix("%joiner") {
                joiner = Some(j.trim().to_string());
                continue;
            }
            let mut parts = line.splitn(3, char::is_whitespace);
            let (Some(kind), Some(sign), Some(frag)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err(n, "expected `TYPE +|- fragment`"));
            };
            let kind = type_from_key(kind).ok_or_else(|| err(n, &format!("unknown sensor type `{kind}`")))?;
            let positive = match sign {
                "+" => true,
                "-" => false,
                _ => return Err(err(n, "polarity must be + or -")),
            };
            let frag = frag.trim();
            if !frag.contains("{ref}") && kind != SensorType::UnderStack {
                return Err(err(n, "fragment has no {ref} slot"));
            }
            if frag.ends_with(['?', '.', '!']) {
                return Err(err(n, "fragment must not end with punctuation"));
            }
            if fragments.insert((kind, positive), frag.to_string()).is_some() {
                return Err(err(n, "duplicate template"));
            }
        }
        if version.is_none() {
            return Err(err(0, "missing %version"));
        }
        Ok(PromptTemplates { fragments, joiner: joiner.unwrap_or_else(|| "and".into()) })
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TEMPLATES).expect("bundled templates are valid")
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path).map_err(|e| PromptError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Where a phrase came from: sentence index and token span, or none for the
/// canonical fallback.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    pub prop: String,
    pub phrase: String,
    pub source: Option<(usize, usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prompt {
    pub text: String,
    pub candidate: AssumptionCandidate,
    pub references: Vec<Reference>,
}

fn canonical(s: &SensorSym) -> String {
    match (s.color, s.side) {
        (Some(c), _) => format!("the {} cube", c.name()),
        (None, Some(side)) => format!("the {} bin", side.name()),
        _ => "the object".into(),
    }
}

/// The user's words for the object a sensor proposition is about.
pub fn referring_phrase(prop: &str, gs: &GroundingSet) -> Result<Reference, PromptError> {
    let s = SensorSym::from_prop(prop).ok_or_else(|| PromptError::UnknownProposition(prop.to_string()))?;
    let denotes = |id: &str| {
        gs.referents.iter().any(|o| {
            o.id == id
                && match s.kind {
                    SensorType::ObservedCube | SensorType::UnderStack => {
                        o.otype == ObjectType::Cube && o.color == s.color
                    }
                    SensorType::BinClear => o.otype == ObjectType::Bin && o.side == s.side,
                }
        })
    };
    let earliest = gs.objects.iter().filter(|o| denotes(&o.id)).min_by_key(|o| (o.sentence, o.span.0));
    Ok(match earliest {
        Some(o) => Reference {
            prop: prop.to_string(),
            phrase: o.phrase.clone(),
            source: Some((o.sentence, o.span.0, o.span.1)),
        },
        None => Reference { prop: prop.to_string(), phrase: canonical(&s), source: None },
    })
}

fn type_order(t: SensorType) -> u8 {
    match t {
        SensorType::ObservedCube => 0,
        SensorType::UnderStack => 1,
        SensorType::BinClear => 2,
    }
}

/// One question covering every literal of the candidate: cube questions
/// first, then bins, ties by proposition name.
pub fn render_prompt(c: &AssumptionCandidate, gs: &GroundingSet, t: &PromptTemplates) -> Result<Prompt, PromptError> {
    let mut fragments = Vec::new();
    let mut references = Vec::new();
    let mut lits: Vec<_> = c.literals().iter().collect();
    lits.sort_by_key(|l| (SensorSym::from_prop(&l.prop).map(|s| type_order(s.kind)), l.prop.clone()));
    for lit in lits {
        let s = SensorSym::from_prop(&lit.prop).ok_or_else(|| PromptError::UnknownProposition(lit.prop.clone()))?;
        let frag = t
            .fragments
            .get(&(s.kind, lit.positive))
            .ok_or_else(|| PromptError::NoTemplate(type_key(s.kind).to_string(), lit.positive))?;
        let r = referring_phrase(&lit.prop, gs)?;
        fragments.push(frag.replace("{ref}", &r.phrase));
        references.push(r);
    }
    let joined = fragments.join(&format!(" {} ", t.joiner));
    let mut chars = joined.chars();
    let text = match chars.next() {
        Some(first) => format!("{}{}?", first.to_uppercase(), chars.as_str()),
        None => String::new(),
    };
    Ok(Prompt { text, candidate: c.clone(), references })
}
