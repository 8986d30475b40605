//! Tiny expression language for field profiles over the plane.
//!
//! Grammar (EBNF):
//!   expr   = term { ("+" | "-") term } ;
//!   term   = factor { "*" factor } ;
//!   factor = "-" factor | "(" expr ")" | number | "x1" | "x2" ;
//!   number = digits [ "." digits ] ;
//!
//! The language is closed under differentiation, which supplies exact
//! gradients of the profile.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X1,
    X2,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            chars: src.chars().collect(),
            pos: 0,
            src,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(Error::invalid(format!(
                "unexpected trailing input at byte {} in {src:?}",
                p.pos
            )));
        }
        Ok(e)
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X1 => x1,
            Expr::X2 => x2,
            Expr::Neg(a) => -a.eval(x1, x2),
            Expr::Add(a, b) => a.eval(x1, x2) + b.eval(x1, x2),
            Expr::Sub(a, b) => a.eval(x1, x2) - b.eval(x1, x2),
            Expr::Mul(a, b) => a.eval(x1, x2) * b.eval(x1, x2),
        }
    }

    /// Partial derivative with respect to x1 (var=1) or x2 (var=2).
    pub fn derivative(&self, var: u8) -> Expr {
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::X1 => Expr::Num(if var == 1 { 1.0 } else { 0.0 }),
            Expr::X2 => Expr::Num(if var == 2 { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::Neg(Box::new(a.derivative(var))),
            Expr::Add(a, b) => Expr::Add(
                Box::new(a.derivative(var)),
                Box::new(b.derivative(var)),
            ),
            Expr::Sub(a, b) => Expr::Sub(
                Box::new(a.derivative(var)),
                Box::new(b.derivative(var)),
            ),
            Expr::Mul(a, b) => Expr::Add(
                Box::new(Expr::Mul(Box::new(a.derivative(var)), b.clone())),
                Box::new(Expr::Mul(a.clone(), Box::new(b.derivative(var)))),
            ),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::X1 => write!(f, "x1"),
            Expr::X2 => write!(f, "x2"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
        }
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                '+' => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                '-' => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while let Some('*') = self.peek() {
            self.pos += 1;
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(Error::invalid(format!("missing ')' in {:?}", self.src)));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some('x') => {
                if self.pos + 1 < self.chars.len() {
                    let v = self.chars[self.pos + 1];
                    self.pos += 2;
                    match v {
                        '1' => return Ok(Expr::X1),
                        '2' => return Ok(Expr::X2),
                        _ => {}
                    }
                }
                Err(Error::invalid(format!(
                    "unknown variable in {:?}; only x1 and x2 exist",
                    self.src
                )))
            }
            other => Err(Error::invalid(format!(
                "unexpected {:?} in {:?}",
                other, self.src
            ))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .map(|c| c.is_ascii_digit() || *c == '.')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| Error::invalid(format!("bad number {text:?} in {:?}", self.src)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval() {
        let e = Expr::parse("x1 * x1 - 0.5 * x2 + 1").unwrap();
        assert_eq!(e.eval(2.0, 4.0), 4.0 - 2.0 + 1.0);
        assert_eq!(Expr::parse("x1").unwrap().eval(3.5, 0.0), 3.5);
        assert_eq!(Expr::parse("-(x1 + x2)").unwrap().eval(1.0, 2.0), -3.0);
    }

    #[test]
    fn derivative_of_product() {
        let e = Expr::parse("x1 * x2 + x1 * x1").unwrap();
        let d1 = e.derivative(1);
        let d2 = e.derivative(2);
        assert_eq!(d1.eval(3.0, 5.0), 5.0 + 6.0);
        assert_eq!(d2.eval(3.0, 5.0), 3.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("x3").is_err());
        assert!(Expr::parse("1 +").is_err());
        assert!(Expr::parse("(x1").is_err());
        assert!(Expr::parse("x1 x2").is_err());
    }
}
