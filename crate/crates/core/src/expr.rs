//! Test-weight expressions `u(x)`: coordinates `x1..xn`, numeric constants,
//! `+`, `*`, `^` (non-negative integer exponent) and parentheses.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum WeightExpr {
    Const(f64),
    Coord(usize),
    Add(Box<WeightExpr>, Box<WeightExpr>),
    Mul(Box<WeightExpr>, Box<WeightExpr>),
    Pow(Box<WeightExpr>, u32),
}

impl WeightExpr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::Const(c) => *c,
            Self::Coord(i) => x[*i],
            Self::Add(a, b) => a.eval(x) + b.eval(x),
            Self::Mul(a, b) => a.eval(x) * b.eval(x),
            Self::Pow(a, e) => a.eval(x).powi(*e as i32),
        }
    }

    /// Largest coordinate index used, one-based (0 if none).
    pub fn arity(&self) -> usize {
        match self {
            Self::Const(_) => 0,
            Self::Coord(i) => i + 1,
            Self::Add(a, b) | Self::Mul(a, b) => a.arity().max(b.arity()),
            Self::Pow(a, _) => a.arity(),
        }
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.arity() > n {
            return Err(Error::Expression(format!(
                "uses x{} but the polytope has dimension {n}",
                self.arity()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for WeightExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Const(c) => write!(f, "{c}"),
            Self::Coord(i) => write!(f, "x{}", i + 1),
            Self::Add(a, b) => write!(f, "({a} + {b})"),
            Self::Mul(a, b) => write!(f, "({a} * {b})"),
            Self::Pow(a, e) => write!(f, "{a}^{e}"),
        }
    }
}

impl FromStr for WeightExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens = tokenize(s)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.sum()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expression(format!(
                "unexpected trailing input in {s:?}"
            )));
        }
        Ok(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Var(usize),
    Plus,
    Star,
    Caret,
    Open,
    Close,
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::Open);
                i += 1;
            }
            ')' => {
                out.push(Tok::Close);
                i += 1;
            }
            'x' => {
                let start = i + 1;
                let mut end = start;
                while end < chars.len() && chars[end].is_ascii_digit() {
                    end += 1;
                }
                let idx: usize = chars[start..end]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| Error::Expression(format!("bad variable at offset {i}")))?;
                if idx == 0 {
                    return Err(Error::Expression("variables are numbered from x1".into()));
                }
                out.push(Tok::Var(idx - 1));
                i = end;
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' => {
                let start = i;
                i += 1;
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || chars[i] == '.'
                        || chars[i] == 'e'
                        || (chars[i] == '-' && chars[i - 1] == 'e'))
                {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let v = text
                    .parse()
                    .map_err(|_| Error::Expression(format!("bad number {text:?}")))?;
                out.push(Tok::Num(v));
            }
            other => return Err(Error::Expression(format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn sum(&mut self) -> Result<WeightExpr> {
        let mut lhs = self.product()?;
        while self.peek() == Some(&Tok::Plus) {
            self.pos += 1;
            lhs = WeightExpr::Add(Box::new(lhs), Box::new(self.product()?));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<WeightExpr> {
        let mut lhs = self.power()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            lhs = WeightExpr::Mul(Box::new(lhs), Box::new(self.power()?));
        }
        Ok(lhs)
    }

    fn power(&mut self) -> Result<WeightExpr> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.tokens.get(self.pos) {
                Some(Tok::Num(e)) if *e >= 0.0 && e.fract() == 0.0 => {
                    let e = *e as u32;
                    self.pos += 1;
                    return Ok(WeightExpr::Pow(Box::new(base), e));
                }
                _ => {
                    return Err(Error::Expression(
                        "exponent must be a non-negative integer".into(),
                    ))
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<WeightExpr> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Expression("unexpected end of input".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(WeightExpr::Const(v)),
            Tok::Var(i) => Ok(WeightExpr::Coord(i)),
            Tok::Open => {
                let e = self.sum()?;
                if self.peek() != Some(&Tok::Close) {
                    return Err(Error::Expression("missing ')'".into()));
                }
                self.pos += 1;
                Ok(e)
            }
            other => Err(Error::Expression(format!("unexpected token {other:?}"))),
        }
    }
}
