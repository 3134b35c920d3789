//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := ['-'] term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' ['-'] integer)?
//! base   := number | identifier | identifier '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers are `[A-Za-z][A-Za-z0-9_.]*` (coordinate names carry dots
//! and underscores); numbers are decimal integers, with ratios `p/q`
//! arriving through the division operator. The leading `-` is a
//! convenience extension; printed expressions stay within the grammar
//! except for that sign.

use super::{Expr, Func};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown function {name:?} at byte {pos}")]
    UnknownFunction { pos: usize, name: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        while let Some((p, t)) = lx.next_token()? {
            out.push((p, t));
        }
        Ok(out)
    }

    fn next_token(&mut self) -> Result<Option<(usize, Tok)>, ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            b'-' => {
                self.pos += 1;
                Tok::Minus
            }
            b'*' => {
                self.pos += 1;
                Tok::Star
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'^' => {
                self.pos += 1;
                Tok::Caret
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b'0'..=b'9' => {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                Tok::Num(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            c if c.is_ascii_alphabetic() => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric()
                        || self.src[self.pos] == b'_'
                        || self.src[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                Tok::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            other => {
                return Err(ParseError::Syntax {
                    pos: start,
                    message: format!("unexpected character {:?}", other as char),
                })
            }
        };
        Ok(Some((start, tok)))
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    idx: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.idx).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn advance(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(_, t)| t.clone());
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.idx += 1;
            Ok(())
        } else {
            Err(ParseError::Syntax {
                pos: self.pos(),
                message: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = Vec::new();
        let negate_first = if self.peek() == Some(&Tok::Minus) {
            self.idx += 1;
            true
        } else {
            false
        };
        let first = self.term()?;
        terms.push(if negate_first { first.neg() } else { first });
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.idx += 1;
                    terms.push(self.term()?);
                }
                Some(Tok::Minus) => {
                    self.idx += 1;
                    terms.push(self.term()?.neg());
                }
                _ => break,
            }
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.idx += 1;
                    let rhs = self.factor()?;
                    acc = Expr::prod(vec![acc, rhs]);
                }
                Some(Tok::Slash) => {
                    self.idx += 1;
                    let rhs = self.factor()?;
                    acc = Expr::quot(acc, rhs);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.peek() == Some(&Tok::Caret) {
            self.idx += 1;
            let neg = if self.peek() == Some(&Tok::Minus) {
                self.idx += 1;
                true
            } else {
                false
            };
            let pos = self.pos();
            match self.advance() {
                Some(Tok::Num(digits)) => {
                    let k: i32 = digits.parse().map_err(|_| ParseError::Syntax {
                        pos,
                        message: format!("exponent {digits} out of range"),
                    })?;
                    Ok(Expr::pow(base, if neg { -k } else { k }))
                }
                _ => Err(ParseError::Syntax {
                    pos,
                    message: "expected integer exponent after ^".to_string(),
                }),
            }
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.advance() {
            Some(Tok::Num(digits)) => {
                let v: i64 = digits.parse().map_err(|_| ParseError::Syntax {
                    pos,
                    message: format!("integer {digits} out of range"),
                })?;
                Ok(Expr::int(v))
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let f = Func::from_name(&name)
                        .ok_or(ParseError::UnknownFunction { pos, name })?;
                    self.idx += 1;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, ") to close function argument")?;
                    Ok(Expr::func(f, arg))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, ") to close group")?;
                Ok(e)
            }
            Some(other) => Err(ParseError::Syntax {
                pos,
                message: format!("unexpected token {other:?}"),
            }),
            None => Err(ParseError::Syntax {
                pos,
                message: "unexpected end of input".to_string(),
            }),
        }
    }
}

/// Parses an expression; print-then-parse is the identity up to
/// normalization.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser {
        toks,
        idx: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.idx != p.toks.len() {
        return Err(ParseError::Syntax {
            pos: p.pos(),
            message: "trailing input".to_string(),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{eval, Env};

    #[test]
    fn parses_sum_and_product() {
        let e = parse("x + 2*y").unwrap();
        assert_eq!(
            e,
            Expr::Sum(vec![
                Expr::var("x"),
                Expr::Prod(vec![Expr::int(2), Expr::var("y")])
            ])
        );
    }

    #[test]
    fn parses_sqrt_over_sum() {
        let e = parse("sqrt(1 + p^2)").unwrap();
        assert_eq!(
            e,
            Expr::sqrt(Expr::Sum(vec![
                Expr::int(1),
                Expr::Pow(Box::new(Expr::var("p")), 2)
            ]))
        );
    }

    #[test]
    fn pythagorean_identity_numerically() {
        let e = parse("sin(x)^2 + cos(x)^2").unwrap();
        let mut env: Env<f64> = Env::new();
        env.insert("x".to_string(), 0.7);
        assert!((eval(&e, &env).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reports_error_position() {
        match parse("x + )") {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_function() {
        match parse("tanh(x)") {
            Err(ParseError::UnknownFunction { name, .. }) => assert_eq!(name, "tanh"),
            other => panic!("expected unknown function, got {other:?}"),
        }
    }

    #[test]
    fn rejects_decimal_literals() {
        assert!(parse("1.5 + x").is_err());
    }

    #[test]
    fn ratio_numbers_become_rationals() {
        assert_eq!(parse("3/4").unwrap(), Expr::rational(3, 4));
    }

    #[test]
    fn identifiers_may_carry_dots() {
        let e = parse("u1_2.0.1 + tD_1.1").unwrap();
        assert_eq!(e, Expr::var("u1_2.0.1") + Expr::var("tD_1.1"));
    }

    #[test]
    fn unary_minus_is_accepted() {
        let e = parse("-p + u1").unwrap();
        let mut env: Env<f64> = Env::new();
        env.insert("p".to_string(), 2.0);
        env.insert("u1".to_string(), 5.0);
        assert_eq!(eval(&e, &env).unwrap(), 3.0);
    }
}
