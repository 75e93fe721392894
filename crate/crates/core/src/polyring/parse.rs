//! Recursive-descent parser for polynomial text such as `n^2 - 2*m1*n + 3/4`.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{RatPoly, VarId};
use crate::error::{Error, Result};

/// Parses a polynomial in `n` and `m1, m2, ...`.
///
/// Supports integers, `+ - * / ^`, and parentheses. Division is only by
/// nonzero constants; exponents are non-negative integer literals.
pub fn parse_poly(text: &str) -> Result<RatPoly> {
    let mut p = Parser::new(text);
    let out = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error("unexpected character", &["operator", "end of input"]));
    }
    Ok(out)
}

pub(crate) struct Parser {
    chars: Vec<char>,
    pub(crate) pos: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Self {
        Parser {
            chars: src.chars().collect(),
            pos: 0,
        }
    }

    fn location(&self) -> (usize, usize) {
        self.location_of(self.pos)
    }

    pub(crate) fn error(&self, message: &str, expected: &[&str]) -> Error {
        let (line, column) = self.location();
        let found = self
            .chars
            .get(self.pos)
            .map_or_else(|| "end of input".to_string(), |c| format!("'{c}'"));
        Error::Parse {
            line,
            column,
            message: format!("{message} (found {found})"),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// `[A-Za-z_][A-Za-z0-9_]*`, after skipping whitespace.
    pub(crate) fn identifier(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        if !self
            .chars
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphabetic() || *c == '_')
        {
            return None;
        }
        while self
            .chars
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_')
        {
            self.pos += 1;
        }
        Some(self.chars[start..self.pos].iter().collect())
    }

    pub(crate) fn location_of(&self, pos: usize) -> (usize, usize) {
        let mut line = 1;
        let mut col = 1;
        for &c in self.chars.iter().take(pos) {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    pub(crate) fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    pub(crate) fn integer(&mut self) -> Option<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().ok()
    }

    pub(crate) fn expr(&mut self) -> Result<RatPoly> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some('-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RatPoly> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                Some('/') => {
                    self.pos += 1;
                    self.skip_ws();
                    let at = self.pos;
                    let d = self.unary()?;
                    match d.constant_value() {
                        Some(c) if c != BigRational::from_integer(0.into()) => {
                            acc = acc.scale(&(BigRational::from_integer(1.into()) / c));
                        }
                        _ => {
                            self.pos = at;
                            return Err(self.error(
                                "division is only allowed by a nonzero constant",
                                &["nonzero constant"],
                            ));
                        }
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<RatPoly> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<RatPoly> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            let caret = self.pos;
            self.pos += 1;
            let e = match self.integer() {
                Some(e) => e,
                None => {
                    self.pos = caret;
                    return Err(self.error(
                        "'^' must be followed by an exponent",
                        &["non-negative integer"],
                    ));
                }
            };
            let e: u32 = e
                .try_into()
                .map_err(|_| self.error("exponent too large", &["exponent below 2^32"]))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<RatPoly> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error("unclosed parenthesis", &["')'"]));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some('n') => {
                self.pos += 1;
                Ok(RatPoly::var(VarId::Time))
            }
            Some('m') => {
                self.pos += 1;
                let start = self.pos;
                let idx = self.integer();
                match idx.and_then(|i| u32::try_from(i).ok()) {
                    Some(i) if i >= 1 && start == self.pos - digits(i) => {
                        Ok(RatPoly::var(VarId::Param(i)))
                    }
                    _ => {
                        self.pos = start;
                        Err(self.error("malformed parameter name", &["parameter index >= 1"]))
                    }
                }
            }
            Some(c) if c.is_ascii_digit() => {
                let i = self.integer().expect("digit present");
                Ok(RatPoly::constant(BigRational::from_integer(i)))
            }
            _ => Err(self.error(
                "expected a term",
                &["integer", "'n'", "parameter 'm<k>'", "'('", "'-'"],
            )),
        }
    }
}

fn digits(mut i: u32) -> usize {
    let mut d = 1;
    while i >= 10 {
        i /= 10;
        d += 1;
    }
    d
}
