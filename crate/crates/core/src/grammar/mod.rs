//! Weighted CNF grammar, k-best CYK parsing, and instruction splitting.

mod cyk;
mod rules;
mod split;
mod tree;

use thiserror::Error;

pub use cyk::{cyk_parse, tree_order};
pub use rules::{BinaryRule, Grammar, LexicalRule, GRAMMAR_VERSION};
pub use split::{split_instruction, tokenize};
pub use tree::ParseTree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("{0}")]
    Io(String),
    #[error("grammar line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("rule is not in Chomsky normal form: {0}")]
    NotCnf(String),
    #[error("rule weight must be finite and nonnegative: {0}")]
    BadWeight(String),
    #[error("out of vocabulary: {}", .0.join(", "))]
    OutOfVocabulary(Vec<String>),
    #[error("malformed tree: {0}")]
    BadTree(String),
}

pub const BUNDLED_GRAMMAR: &str = include_str!("../../data/grammar/tabletop.cfg");

pub fn bundled_grammar() -> Grammar {
    Grammar::parse(BUNDLED_GRAMMAR).expect("bundled grammar is valid")
}

/// Count rule uses in gold trees, add one, and return the reweighted grammar.
pub fn estimate_weights(g: &Grammar, trees: &[ParseTree]) -> Grammar {
    use std::collections::BTreeMap;
    let mut counts: BTreeMap<(String, String, String), f64> = BTreeMap::new();
    for t in trees {
        for n in t.preorder() {
            let key = match &n.word {
                Some(w) => (n.tag.clone(), format!("'{w}"), String::new()),
                None => (n.tag.clone(), n.children[0].tag.clone(), n.children[1].tag.clone()),
            };
            *counts.entry(key).or_default() += 1.0;
        }
    }
    let binary = g
        .binary
        .iter()
        .map(|r| BinaryRule {
            weight: 1.0 + counts.get(&(r.lhs.clone(), r.left.clone(), r.right.clone())).copied().unwrap_or(0.0),
            ..r.clone()
        })
        .collect();
    let lexical = g
        .lexical
        .iter()
        .map(|r| LexicalRule {
            weight: 1.0 + counts.get(&(r.tag.clone(), format!("'{}", r.word), String::new())).copied().unwrap_or(0.0),
            ..r.clone()
        })
        .collect();
    Grammar::new(binary, lexical, g.start.iter().cloned()).expect("reweighting keeps weights valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        tokenize(s)
    }

    fn parse(g: &Grammar, s: &str, k: usize) -> Vec<ParseTree> {
        let w = words(s);
        let refs: Vec<&str> = w.iter().map(String::as_str).collect();
        cyk_parse(&refs, g, k).unwrap()
    }

    #[test]
    fn noun_phrase() {
        let g = bundled_grammar().with_start(&["NP"]);
        let t = parse(&g, "the box", 4);
        assert_eq!(t[0].bracketed(), "(NP (DT the) (NN box))");
        let g = bundled_grammar().with_start(&["NN"]);
        let t = parse(&g, "box", 4);
        assert_eq!(t.len(), 1);
        assert!(t[0].is_leaf());
    }

    #[test]
    fn grammar_file_errors() {
        assert!(matches!(Grammar::parse(""), Err(GrammarError::Format { .. })));
        assert!(matches!(Grammar::parse("%version 1\n%start S\nS -> A B C\n"), Err(GrammarError::NotCnf(_))));
        assert!(matches!(Grammar::parse("%version 1\n%start S\nS -> A\n"), Err(GrammarError::NotCnf(_))));
        assert!(matches!(Grammar::parse("%version 1\n%start S\nS -> A B [-1]\n"), Err(GrammarError::BadWeight(_))));
        let g = bundled_grammar();
        assert_eq!(Grammar::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn out_of_vocabulary_lists_words() {
        let g = bundled_grammar();
        let err = cyk_parse(&["pick", "zorp", "up", "blarg"], &g, 1).unwrap_err();
        assert_eq!(err, GrammarError::OutOfVocabulary(vec!["zorp".into(), "blarg".into()]));
    }

    #[test]
    fn k_best_is_prefix_stable_and_derives_input() {
        let g = Grammar::parse("%version 1\n%start S\nS -> S S [1]\nS -> 'a' [1]\n").unwrap();
        let s = "a a a a";
        let one = parse(&g, s, 1);
        let four = parse(&g, s, 4);
        assert_eq!(four.len(), 4);
        assert_eq!(parse(&g, s, 10).len(), 5);
        assert_eq!(one[0], four[0]);
        for t in &four {
            assert_eq!(t.words().join(" "), s);
            assert_eq!(ParseTree::from_bracketed(&t.bracketed()).unwrap().bracketed(), t.bracketed());
        }
    }

    #[test]
    fn splitting() {
        assert_eq!(
            split_instruction("Take the red cube. Put the red cube on the green cube."),
            ["Take the red cube", "Put the red cube on the green cube"]
        );
        assert_eq!(split_instruction("pick up"), ["pick up"]);
        assert_eq!(split_instruction("Pick up the cube, then put it down"), ["Pick up the cube", "put it down"]);
        assert!(split_instruction(" . ").is_empty());
    }
}
