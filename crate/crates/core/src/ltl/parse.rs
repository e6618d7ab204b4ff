use super::formula::Formula;
use super::LtlError;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Next,
    Always,
    Eventually,
    Until,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, LtlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '(' => out.push((start, Tok::LParen)),
            ')' => out.push((start, Tok::RParen)),
            '!' => out.push((start, Tok::Not)),
            '&' => out.push((start, Tok::And)),
            '|' => out.push((start, Tok::Or)),
            'X' => out.push((start, Tok::Next)),
            'G' => out.push((start, Tok::Always)),
            'F' => out.push((start, Tok::Eventually)),
            'U' => out.push((start, Tok::Until)),
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    out.push((start, Tok::Implies));
                    i += 2;
                    continue;
                }
                return Err(LtlError::Syntax { pos: start, msg: "expected '->'".into() });
            }
            'a'..='z' => {
                while i < bytes.len()
                    && matches!(bytes[i], b'a'..=b'z' | b'0'..=b'9' | b'_')
                {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = match word {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(word.to_string()),
                };
                out.push((start, tok));
                continue;
            }
            _ => {
                return Err(LtlError::Syntax { pos: start, msg: format!("unexpected character {c:?}") })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    known: &'a dyn Fn(&str) -> bool,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn implies(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, LtlError> {
        let mut parts = vec![self.and()?];
        while self.eat(&Tok::Or) {
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::or(parts) })
    }

    fn and(&mut self) -> Result<Formula, LtlError> {
        let mut parts = vec![self.until()?];
        while self.eat(&Tok::And) {
            parts.push(self.until()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::and(parts) })
    }

    fn until(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.unary()?;
        if self.eat(&Tok::Until) {
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, LtlError> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Next) => {
                self.pos += 1;
                Ok(Formula::next(self.unary()?))
            }
            Some(Tok::Always) => {
                self.pos += 1;
                Ok(Formula::always(self.unary()?))
            }
            Some(Tok::Eventually) => {
                self.pos += 1;
                Ok(Formula::eventually(self.unary()?))
            }
            Some(Tok::True) => {
                self.pos += 1;
                Ok(Formula::True)
            }
            Some(Tok::False) => {
                self.pos += 1;
                Ok(Formula::False)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if !(self.known)(&name) {
                    return Err(LtlError::UnknownProposition(name));
                }
                Ok(Formula::Prop(name))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.implies()?;
                if !self.eat(&Tok::RParen) {
                    return Err(LtlError::Syntax { pos: self.offset(), msg: "expected ')'".into() });
                }
                Ok(inner)
            }
            Some(tok) => Err(LtlError::Syntax { pos: at, msg: format!("unexpected token {tok:?}") }),
            None => Err(LtlError::Syntax { pos: at, msg: "unexpected end of input".into() }),
        }
    }
}

/// Parse with a caller-supplied predicate deciding which atoms are declared.
pub fn parse_with(text: &str, known: &dyn Fn(&str) -> bool) -> Result<Formula, LtlError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len(), known };
    let f = p.implies()?;
    if p.pos != p.toks.len() {
        return Err(LtlError::Syntax { pos: p.offset(), msg: "trailing input".into() });
    }
    Ok(f)
}
