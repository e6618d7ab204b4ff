use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::formula::Formula;
use super::LtlError;

/// Truth assignment over a declared proposition set.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Valuation(pub BTreeMap<String, bool>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, bool)>) -> Self {
        Valuation(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn get(&self, name: &str) -> Option<bool> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: &str, value: bool) {
        self.0.insert(name.to_string(), value);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Merge two valuations over disjoint proposition sets.
    pub fn union(&self, other: &Valuation) -> Valuation {
        let mut out = self.clone();
        out.0.extend(other.0.iter().map(|(k, v)| (k.clone(), *v)));
        out
    }
}

/// Evaluate a propositional formula (no temporal operators) on one valuation.
pub fn eval_state(f: &Formula, v: &Valuation) -> Result<bool, LtlError> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Prop(p) => v.get(p).ok_or_else(|| LtlError::UnknownProposition(p.clone()))?,
        Formula::Not(g) => !eval_state(g, v)?,
        Formula::And(gs) => {
            for g in gs {
                if !eval_state(g, v)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(gs) => {
            for g in gs {
                if eval_state(g, v)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Implies(a, b) => !eval_state(a, v)? || eval_state(b, v)?,
        _ => return Err(LtlError::NotPropositional(f.to_string())),
    })
}

/// Evaluate `f` at position 0 of the lasso `trace[..loopback] (trace[loopback..])^ω`.
///
/// Every subformula is labelled over the finite lasso positions; temporal
/// operators are fixpoints over the successor map (which sends the last
/// position back to `loopback`).
pub fn eval_trace(f: &Formula, trace: &[Valuation], loopback: usize) -> Result<bool, LtlError> {
    if trace.is_empty() || loopback >= trace.len() {
        return Err(LtlError::BadLoopback { loopback, len: trace.len() });
    }
    Ok(label(f, trace, loopback)?[0])
}

fn label(f: &Formula, trace: &[Valuation], loopback: usize) -> Result<Vec<bool>, LtlError> {
    let n = trace.len();
    let succ = |i: usize| if i + 1 < n { i + 1 } else { loopback };
    Ok(match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Prop(p) => trace
            .iter()
            .map(|v| v.get(p).ok_or_else(|| LtlError::UnknownProposition(p.clone())))
            .collect::<Result<_, _>>()?,
        Formula::Not(g) => label(g, trace, loopback)?.into_iter().map(|b| !b).collect(),
        Formula::And(gs) | Formula::Or(gs) => {
            let conj = matches!(f, Formula::And(_));
            let mut acc = vec![conj; n];
            for g in gs {
                let lg = label(g, trace, loopback)?;
                for (a, b) in acc.iter_mut().zip(lg) {
                    *a = if conj { *a && b } else { *a || b };
                }
            }
            acc
        }
        Formula::Implies(a, b) => {
            let la = label(a, trace, loopback)?;
            let lb = label(b, trace, loopback)?;
            la.into_iter().zip(lb).map(|(x, y)| !x || y).collect()
        }
        Formula::Next(g) => {
            let lg = label(g, trace, loopback)?;
            (0..n).map(|i| lg[succ(i)]).collect()
        }
        Formula::Always(g) => {
            let lg = label(g, trace, loopback)?;
            fixpoint(n, true, |v, i| lg[i] && v[succ(i)])
        }
        Formula::Eventually(g) => {
            let lg = label(g, trace, loopback)?;
            fixpoint(n, false, |v, i| lg[i] || v[succ(i)])
        }
        Formula::Until(a, b) => {
            let la = label(a, trace, loopback)?;
            let lb = label(b, trace, loopback)?;
            fixpoint(n, false, |v, i| lb[i] || (la[i] && v[succ(i)]))
        }
    })
}

fn fixpoint(n: usize, init: bool, step: impl Fn(&[bool], usize) -> bool) -> Vec<bool> {
    let mut v = vec![init; n];
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let b = step(&v, i);
            if b != v[i] {
                v[i] = b;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
}
