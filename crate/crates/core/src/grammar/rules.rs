use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::GrammarError;

pub const GRAMMAR_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryRule {
    pub lhs: String,
    pub left: String,
    pub right: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LexicalRule {
    pub tag: String,
    pub word: String,
    pub weight: f64,
}

/// Weighted CNF grammar. Tree scores use per-LHS relative frequencies of the
/// rule weights, accumulated in log space.
#[derive(Clone, Debug, PartialEq)]
pub struct Grammar {
    pub nonterminals: BTreeSet<String>,
    pub binary: Vec<BinaryRule>,
    pub lexical: Vec<LexicalRule>,
    pub start: BTreeSet<String>,
    lhs_total: BTreeMap<String, f64>,
}

impl Grammar {
    pub fn new(
        binary: Vec<BinaryRule>,
        lexical: Vec<LexicalRule>,
        start: impl IntoIterator<Item = String>,
    ) -> Result<Self, GrammarError> {
        let mut nonterminals = BTreeSet::new();
        let mut lhs_total: BTreeMap<String, f64> = BTreeMap::new();
        for r in &binary {
            check_weight(r.weight, &format!("{} -> {} {}", r.lhs, r.left, r.right))?;
            nonterminals.extend([r.lhs.clone(), r.left.clone(), r.right.clone()]);
            *lhs_total.entry(r.lhs.clone()).or_default() += r.weight;
        }
        for r in &lexical {
            check_weight(r.weight, &format!("{} -> '{}'", r.tag, r.word))?;
            nonterminals.insert(r.tag.clone());
            *lhs_total.entry(r.tag.clone()).or_default() += r.weight;
        }
        let start: BTreeSet<String> = start.into_iter().collect();
        nonterminals.extend(start.iter().cloned());
        Ok(Grammar { nonterminals, binary, lexical, start, lhs_total })
    }

    pub fn load(path: &Path) -> Result<Self, GrammarError> {
        let text = std::fs::read_to_string(path).map_err(|e| GrammarError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        let mut binary = Vec::new();
        let mut lexical = Vec::new();
        let mut start = Vec::new();
        let mut version = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| GrammarError::Format { line: line_no, msg: msg.to_string() };
            if let Some(rest) = line.strip_prefix('%') {
                let mut parts = rest.split_whitespace();
                match parts.next() {
                    Some("version") => {
                        let v: u32 = parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| err("bad version"))?;
                        if v != GRAMMAR_VERSION {
                            return Err(err(&format!("unsupported grammar version {v}")));
                        }
                        version = Some(v);
                    }
                    Some("start") => start.extend(parts.map(str::to_string)),
                    _ => return Err(err("unknown directive")),
                }
                continue;
            }
            let (lhs, rhs) = line.split_once("->").ok_or_else(|| err("expected `->`"))?;
            let lhs = lhs.trim();
            if lhs.is_empty() || lhs.contains(char::is_whitespace) {
                return Err(err("left-hand side must be a single symbol"));
            }
            let (body, weight) = match rhs.rfind('[') {
                Some(open) => {
                    let close = rhs[open..].find(']').ok_or_else(|| err("unclosed weight"))? + open;
                    if !rhs[close + 1..].trim().is_empty() {
                        return Err(err("text after weight"));
                    }
                    let w: f64 = rhs[open + 1..close].trim().parse().map_err(|_| err("bad weight"))?;
                    (&rhs[..open], w)
                }
                None => (rhs, 1.0),
            };
            let body = body.trim();
            if let Some(word) = body.strip_prefix('\'') {
                let word = word.strip_suffix('\'').ok_or_else(|| err("unterminated word"))?;
                if word.is_empty() || word.contains(char::is_whitespace) {
                    return Err(err("lexical rule needs one word"));
                }
                lexical.push(LexicalRule { tag: lhs.to_string(), word: word.to_string(), weight });
                continue;
            }
            let syms: Vec<&str> = body.split_whitespace().collect();
            if syms.len() != 2 {
                return Err(GrammarError::NotCnf(line.to_string()));
            }
            binary.push(BinaryRule { lhs: lhs.to_string(), left: syms[0].to_string(), right: syms[1].to_string(), weight });
        }
        if binary.is_empty() && lexical.is_empty() {
            return Err(GrammarError::Format { line: 0, msg: "grammar has no rules".into() });
        }
        if version.is_none() {
            return Err(GrammarError::Format { line: 0, msg: "missing %version".into() });
        }
        if start.is_empty() {
            return Err(GrammarError::Format { line: 0, msg: "missing %start".into() });
        }
        Self::new(binary, lexical, start)
    }

    /// Serialize in the file format; `parse(to_text())` reproduces the grammar.
    pub fn to_text(&self) -> String {
        let mut out = format!("%version {GRAMMAR_VERSION}\n%start {}\n", self.start.iter().cloned().collect::<Vec<_>>().join(" "));
        for r in &self.binary {
            out.push_str(&format!("{} -> {} {} [{}]\n", r.lhs, r.left, r.right, r.weight));
        }
        for r in &self.lexical {
            out.push_str(&format!("{} -> '{}' [{}]\n", r.tag, r.word, r.weight));
        }
        out
    }

    /// Log relative frequency of a rule with the given LHS and weight.
    pub fn log_prob(&self, lhs: &str, weight: f64) -> f64 {
        let total = self.lhs_total.get(lhs).copied().unwrap_or(0.0);
        if total <= 0.0 || weight <= 0.0 {
            f64::NEG_INFINITY
        } else {
            (weight / total).ln()
        }
    }

    pub fn tags_for(&self, word: &str) -> Vec<&LexicalRule> {
        self.lexical.iter().filter(|r| r.word == word).collect()
    }

    pub fn vocabulary(&self) -> BTreeSet<&str> {
        self.lexical.iter().map(|r| r.word.as_str()).collect()
    }

    pub fn with_start(&self, start: &[&str]) -> Grammar {
        let mut g = self.clone();
        g.start = start.iter().map(|s| s.to_string()).collect();
        g.nonterminals.extend(g.start.iter().cloned());
        g
    }
}

fn check_weight(w: f64, rule: &str) -> Result<(), GrammarError> {
    if w.is_finite() && w >= 0.0 {
        Ok(())
    } else {
        Err(GrammarError::BadWeight(rule.to_string()))
    }
}
