//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr     := term (("+" | "-") term)*
//! term     := factor ("*" factor)*
//! factor   := rational | variable | "inv" "(" expr ")" | "(" expr ")" | "-" factor
//! variable := "X" partnum "_" idxnum ["'"]
//! rational := int ("/" posint)?
//! ```
//!
//! Whitespace between tokens is ignored. Error positions are 0-based byte
//! offsets into the input.

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use super::{Alphabet, ExprError, RationalExpr, Variable};
use crate::field::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownVariable(Variable),
    IndexOutOfRange(Variable),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => {
                write!(f, "syntax error at column {}: {msg}", self.position)
            }
            ParseErrorKind::UnknownVariable(v) => {
                write!(f, "unknown variable {v} at column {}", self.position)
            }
            ParseErrorKind::IndexOutOfRange(v) => {
                write!(f, "index out of range in {v} at column {}", self.position)
            }
        }
    }
}

/// Parses `text` into an expression whose letters all belong to `alphabet`.
pub fn parse(text: &str, alphabet: &Alphabet) -> Result<RationalExpr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        alphabet,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    alphabet: &'a Alphabet,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax(&self, msg: &str) -> ParseError {
        ParseError {
            kind: ParseErrorKind::Syntax(msg.to_string()),
            position: self.pos,
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<RationalExpr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    terms.push(self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    terms.push(self.term()?.neg());
                }
                _ => break,
            }
        }
        Ok(RationalExpr::sum(terms))
    }

    fn term(&mut self) -> Result<RationalExpr, ParseError> {
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(b'*') {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(RationalExpr::product(factors))
    }

    fn factor(&mut self) -> Result<RationalExpr, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.factor()?.neg())
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'X') => self.variable(),
            Some(b'i') => {
                if !self.src[self.pos..].starts_with(b"inv") {
                    return Err(self.syntax("expected 'inv'"));
                }
                self.pos += 3;
                self.expect(b'(')?;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e.inv())
            }
            Some(c) if c.is_ascii_digit() => self.rational(),
            Some(_) => Err(self.syntax("expected a number, variable, 'inv' or '('")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    /// Digits at the current position, without skipping whitespace.
    fn digits(&mut self) -> Option<String> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            None
        } else {
            Some(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
        }
    }

    fn small_number(&mut self, what: &str) -> Result<usize, ParseError> {
        let at = self.pos;
        let text = self
            .digits()
            .ok_or_else(|| self.syntax(&format!("expected {what}")))?;
        text.parse().map_err(|_| ParseError {
            kind: ParseErrorKind::Syntax(format!("{what} too large")),
            position: at,
        })
    }

    fn variable(&mut self) -> Result<RationalExpr, ParseError> {
        let start = self.pos;
        self.pos += 1;
        let part = self.small_number("part number")?;
        if self.src.get(self.pos) != Some(&b'_') {
            return Err(self.syntax("expected '_'"));
        }
        self.pos += 1;
        let index = self.small_number("letter index")?;
        let primed = self.src.get(self.pos) == Some(&b'\'');
        if primed {
            self.pos += 1;
        }
        let v = Variable {
            part,
            index,
            primed,
        };
        match self.alphabet.check(&v) {
            Ok(()) => Ok(RationalExpr::var(v)),
            Err(ExprError::IndexOutOfRange { .. }) => Err(ParseError {
                kind: ParseErrorKind::IndexOutOfRange(v),
                position: start,
            }),
            Err(_) => Err(ParseError {
                kind: ParseErrorKind::UnknownVariable(v),
                position: start,
            }),
        }
    }

    fn rational(&mut self) -> Result<RationalExpr, ParseError> {
        let num: BigInt = self
            .digits()
            .expect("caller saw a digit")
            .parse()
            .expect("decimal digits");
        let den = if self.peek() == Some(b'/') {
            self.pos += 1;
            self.skip_ws();
            let at = self.pos;
            let d: BigInt = self
                .digits()
                .ok_or_else(|| self.syntax("expected denominator"))?
                .parse()
                .expect("decimal digits");
            if d.is_zero() {
                return Err(ParseError {
                    kind: ParseErrorKind::Syntax("zero denominator".into()),
                    position: at,
                });
            }
            d
        } else {
            BigInt::from(1)
        };
        Ok(RationalExpr::constant(Rational::new(num, den)))
    }
}
