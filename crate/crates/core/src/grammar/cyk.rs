use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::rules::Grammar;
use super::tree::ParseTree;
use super::GrammarError;

/// Order: higher weight first, then structural key.
pub fn tree_order(a: &ParseTree, b: &ParseTree) -> Ordering {
    b.weight.total_cmp(&a.weight).then_with(|| a.structure_key().cmp(&b.structure_key()))
}

fn keep_best(mut trees: Vec<ParseTree>, k: usize) -> Vec<ParseTree> {
    trees.sort_by(tree_order);
    trees.truncate(k);
    trees
}

/// k-best CYK. Each chart cell keeps the k best trees per nonterminal, which
/// is exact for this order because a tree's score and key are monotone in
/// its children's.
pub fn cyk_parse(sentence: &[&str], g: &Grammar, k: usize) -> Result<Vec<ParseTree>, GrammarError> {
    let k = k.max(1);
    let n = sentence.len();
    if n == 0 {
        return Ok(vec![]);
    }
    let oov: Vec<String> = sentence.iter().filter(|w| g.tags_for(w).is_empty()).map(|w| w.to_string()).collect();
    if !oov.is_empty() {
        return Err(GrammarError::OutOfVocabulary(oov));
    }
    // chart[i][len-1]: tag -> best trees over words i..i+len
    let mut chart: Vec<Vec<BTreeMap<&str, Vec<ParseTree>>>> = vec![vec![BTreeMap::new(); n]; n];
    for (i, w) in sentence.iter().enumerate() {
        let cell = &mut chart[i][0];
        for r in g.tags_for(w) {
            let t = ParseTree::leaf(&r.tag, w, i, g.log_prob(&r.tag, r.weight));
            cell.entry(r.tag.as_str()).or_default().push(t);
        }
        for trees in cell.values_mut() {
            *trees = keep_best(std::mem::take(trees), k);
        }
    }
    for len in 2..=n {
        for i in 0..=n - len {
            let mut cell: BTreeMap<&str, Vec<ParseTree>> = BTreeMap::new();
            for split in 1..len {
                for r in &g.binary {
                    let (Some(ls), Some(rs)) =
                        (chart[i][split - 1].get(r.left.as_str()), chart[i + split][len - split - 1].get(r.right.as_str()))
                    else {
                        continue;
                    };
                    let rw = g.log_prob(&r.lhs, r.weight);
                    for l in ls {
                        for rt in rs {
                            cell.entry(r.lhs.as_str()).or_default().push(ParseTree::node(&r.lhs, l.clone(), rt.clone(), rw));
                        }
                    }
                }
            }
            for trees in cell.values_mut() {
                *trees = keep_best(std::mem::take(trees), k);
            }
            chart[i][len - 1] = cell;
        }
    }
    let roots: Vec<ParseTree> = g
        .start
        .iter()
        .filter_map(|s| chart[0][n - 1].get(s.as_str()))
        .flatten()
        .cloned()
        .collect();
    Ok(keep_best(roots, k))
}
