use std::fmt;

use super::GrammarError;

/// Phrase-structure tree. Leaves are preterminals carrying their word;
/// internal nodes have exactly two children.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseTree {
    pub tag: String,
    pub start: usize,
    pub end: usize,
    pub word: Option<String>,
    pub children: Vec<ParseTree>,
    /// Log weight of the derivation.
    pub weight: f64,
}

impl ParseTree {
    pub fn leaf(tag: &str, word: &str, pos: usize, weight: f64) -> Self {
        ParseTree { tag: tag.into(), start: pos, end: pos + 1, word: Some(word.into()), children: vec![], weight }
    }

    pub fn node(tag: &str, left: ParseTree, right: ParseTree, rule_weight: f64) -> Self {
        ParseTree {
            tag: tag.into(),
            start: left.start,
            end: right.end,
            word: None,
            weight: rule_weight + left.weight + right.weight,
            children: vec![left, right],
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn words(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_words(&mut out);
        out
    }

    fn collect_words<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.word {
            Some(w) => out.push(w),
            None => self.children.iter().for_each(|c| c.collect_words(out)),
        }
    }

    /// Nodes in preorder.
    pub fn preorder(&self) -> Vec<&ParseTree> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.preorder());
        }
        out
    }

    /// Nodes in postorder (children before parents).
    pub fn postorder(&self) -> Vec<&ParseTree> {
        let mut out = Vec::new();
        for c in &self.children {
            out.extend(c.postorder());
        }
        out.push(self);
        out
    }

    /// Preorder `(split, tag)` sequence used to order equal-weight trees:
    /// the leftmost, lowest split wins.
    pub fn structure_key(&self) -> Vec<(usize, &str)> {
        self.preorder()
            .into_iter()
            .map(|n| (n.children.first().map_or(n.start, |l| l.end), n.tag.as_str()))
            .collect()
    }

    /// Bracketed form `(TAG (TAG word) ...)`.
    pub fn bracketed(&self) -> String {
        match &self.word {
            Some(w) => format!("({} {})", self.tag, w),
            None => format!(
                "({} {})",
                self.tag,
                self.children.iter().map(|c| c.bracketed()).collect::<Vec<_>>().join(" ")
            ),
        }
    }

    /// Parse the bracketed form. Spans are recomputed; weights are zero.
    pub fn from_bracketed(text: &str) -> Result<ParseTree, GrammarError> {
        let tokens: Vec<String> = text
            .replace('(', " ( ")
            .replace(')', " ) ")
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let mut pos = 0;
        let mut word_pos = 0;
        let tree = parse_node(&tokens, &mut pos, &mut word_pos)?;
        if pos != tokens.len() {
            return Err(GrammarError::BadTree(format!("trailing input in `{text}`")));
        }
        Ok(tree)
    }
}

fn parse_node(tokens: &[String], pos: &mut usize, word_pos: &mut usize) -> Result<ParseTree, GrammarError> {
    let bad = |m: &str| GrammarError::BadTree(m.to_string());
    if tokens.get(*pos).map(String::as_str) != Some("(") {
        return Err(bad("expected `(`"));
    }
    *pos += 1;
    let tag = tokens.get(*pos).ok_or_else(|| bad("missing tag"))?.clone();
    *pos += 1;
    let node = if tokens.get(*pos).map(String::as_str) == Some("(") {
        let left = parse_node(tokens, pos, word_pos)?;
        let right = parse_node(tokens, pos, word_pos)?;
        ParseTree { tag, start: left.start, end: right.end, word: None, weight: 0.0, children: vec![left, right] }
    } else {
        let word = tokens.get(*pos).ok_or_else(|| bad("missing word"))?.clone();
        if word == ")" {
            return Err(bad("empty leaf"));
        }
        *pos += 1;
        let leaf = ParseTree::leaf(&tag, &word, *word_pos, 0.0);
        *word_pos += 1;
        leaf
    };
    if tokens.get(*pos).map(String::as_str) != Some(")") {
        return Err(bad("expected `)`; internal nodes take exactly two children"));
    }
    *pos += 1;
    Ok(node)
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bracketed())
    }
}
