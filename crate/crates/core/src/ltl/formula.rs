use std::collections::BTreeSet;
use std::fmt;

/// LTL formula tree.
///
/// `And` and `Or` are n-ary and kept canonical by their constructors:
/// nested conjunctions are flattened, children sorted and deduplicated, and
/// singleton/empty forms collapsed. Build formulas through [`Formula::and`]
/// and [`Formula::or`] so structural equality stays meaningful.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Prop(String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Always(Box<Formula>),
    Eventually(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn prop(name: impl Into<String>) -> Self {
        Formula::Prop(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn always(f: Formula) -> Self {
        Formula::Always(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }

    pub fn implies(lhs: Formula, rhs: Formula) -> Self {
        Formula::Implies(Box::new(lhs), Box::new(rhs))
    }

    pub fn until(lhs: Formula, rhs: Formula) -> Self {
        Formula::Until(Box::new(lhs), Box::new(rhs))
    }

    /// `G F f`
    pub fn always_eventually(f: Formula) -> Self {
        Self::always(Self::eventually(f))
    }

    pub fn and(children: impl IntoIterator<Item = Formula>) -> Self {
        Self::nary(children, true)
    }

    pub fn or(children: impl IntoIterator<Item = Formula>) -> Self {
        Self::nary(children, false)
    }

    fn nary(children: impl IntoIterator<Item = Formula>, conj: bool) -> Self {
        let mut flat = BTreeSet::new();
        for child in children {
            match child {
                Formula::And(inner) if conj => flat.extend(inner),
                Formula::Or(inner) if !conj => flat.extend(inner),
                other => {
                    flat.insert(other);
                }
            }
        }
        let mut flat: Vec<Formula> = flat.into_iter().collect();
        match flat.len() {
            0 => {
                if conj {
                    Formula::True
                } else {
                    Formula::False
                }
            }
            1 => flat.pop().unwrap(),
            _ if conj => Formula::And(flat),
            _ => Formula::Or(flat),
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::True | Formula::False | Formula::Prop(_))
    }

    /// True when the formula contains no temporal operator at all.
    pub fn is_propositional(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => true,
            Formula::Not(f) => f.is_propositional(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(Formula::is_propositional),
            Formula::Implies(a, b) => a.is_propositional() && b.is_propositional(),
            _ => false,
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => vec![],
            Formula::Not(f) | Formula::Next(f) | Formula::Always(f) | Formula::Eventually(f) => {
                vec![f]
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().collect(),
            Formula::Implies(a, b) | Formula::Until(a, b) => vec![a, b],
        }
    }

    /// Names of every proposition mentioned, sorted.
    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        if let Formula::Prop(p) = self {
            out.insert(p.clone());
        }
        for c in self.children() {
            c.collect_props(out);
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

/// Canonical concrete syntax. Temporal unary operators always parenthesize
/// their operand; binary operands are parenthesized unless atomic or unary.
pub fn format_formula(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(f, &mut out);
    out
}

fn write_operand(f: &Formula, out: &mut String) {
    let tight = !matches!(
        f,
        Formula::And(_) | Formula::Or(_) | Formula::Implies(..) | Formula::Until(..)
    );
    if tight {
        write_formula(f, out);
    } else {
        out.push('(');
        write_formula(f, out);
        out.push(')');
    }
}

fn write_formula(f: &Formula, out: &mut String) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Prop(p) => out.push_str(p),
        Formula::Not(inner) => {
            out.push('!');
            write_operand(inner, out);
        }
        Formula::And(fs) | Formula::Or(fs) => {
            let sep = if matches!(f, Formula::And(_)) { " & " } else { " | " };
            for (i, c) in fs.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                write_operand(c, out);
            }
        }
        Formula::Implies(a, b) | Formula::Until(a, b) => {
            let op = if matches!(f, Formula::Implies(..)) { " -> " } else { " U " };
            write_operand(a, out);
            out.push_str(op);
            write_operand(b, out);
        }
        Formula::Next(inner) | Formula::Always(inner) | Formula::Eventually(inner) => {
            out.push_str(match f {
                Formula::Next(_) => "X (",
                Formula::Always(_) => "G (",
                _ => "F (",
            });
            write_formula(inner, out);
            out.push(')');
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_formula(self))
    }
}
