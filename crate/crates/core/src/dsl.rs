//! Text syntax for systems of words.
//!
//! ```text
//! system := word (';' word)*
//! word   := factor+ | '1' | '1_G'
//! factor := NAME ('^' '(' poly ')' | '^' INT | '^' VAR)?
//! ```
//!
//! `VAR` is a bare `n` or `m<k>`, so `S^n` is accepted alongside `S^(n)`.
//!
//! Juxtaposition is the group product, read left to right, so
//! `T^(n^2) S^n C` is the sequence `n -> T^{n^2} S^n C`.

use std::fmt;

use crate::error::{Error, Result};
use crate::nilgroup::{realize_word, GSequence, GeneratorAssignment, UTMatrix, WordSequence};
use crate::polyring::parse::Parser;
use crate::polyring::RatPoly;

/// 1-based source position of a factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

/// Parsed system: one word per sequence, with factor positions for errors.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub words: Vec<WordSequence>,
    pub spans: Vec<Vec<Span>>,
}

impl PartialEq for SystemSpec {
    /// Positions are ignored: two specs are equal when their words are.
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words
    }
}

impl SystemSpec {
    /// Realizes every word against concrete generator matrices.
    pub fn realize(&self, a: &GeneratorAssignment) -> Result<Vec<GSequence>> {
        self.words
            .iter()
            .zip(&self.spans)
            .map(|(w, spans)| {
                realize_word(w, a).map_err(|e| match e {
                    Error::UnboundGenerator(name) => {
                        let at = w
                            .factors
                            .iter()
                            .position(|(n, _)| *n == name)
                            .and_then(|i| spans.get(i).copied());
                        match at {
                            Some(s) => Error::UnboundGenerator(format!(
                                "{name} (line {}, column {})",
                                s.line, s.column
                            )),
                            None => Error::UnboundGenerator(name),
                        }
                    }
                    other => other,
                })
            })
            .collect()
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            if w.is_empty() {
                f.write_str("1")?;
            } else {
                write!(f, "{w}")?;
            }
        }
        Ok(())
    }
}

pub fn parse_system(text: &str) -> Result<SystemSpec> {
    let mut p = Parser::new(text);
    let mut words = Vec::new();
    let mut spans = Vec::new();
    loop {
        let (w, s) = parse_word(&mut p)?;
        words.push(w);
        spans.push(s);
        match p.peek() {
            Some(';') => p.pos += 1,
            None => break,
            Some(_) => {
                return Err(p.error(
                    "unexpected character",
                    &["generator name", "'^'", "';'", "end of input"],
                ))
            }
        }
    }
    Ok(SystemSpec { words, spans })
}

fn parse_word(p: &mut Parser) -> Result<(WordSequence, Vec<Span>)> {
    if p.peek() == Some('1') {
        let save = p.pos;
        p.pos += 1;
        if p.identifier().is_some_and(|rest| rest == "_G") || matches!(p.peek(), Some(';') | None) {
            return Ok((WordSequence::empty(), Vec::new()));
        }
        p.pos = save;
    }
    let mut factors = Vec::new();
    let mut spans = Vec::new();
    while p
        .peek()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
    {
        let (line, column) = p.location_of(p.pos);
        let name = p.identifier().expect("peeked a name start");
        let exponent = if p.peek() == Some('^') {
            p.pos += 1;
            match p.peek() {
                Some('(') => {
                    p.pos += 1;
                    let e = p.expr()?;
                    if p.peek() != Some(')') {
                        return Err(p.error("unclosed exponent", &["')'", "operator"]));
                    }
                    p.pos += 1;
                    e
                }
                Some(c) if c.is_ascii_digit() => {
                    let k = p.integer().expect("digit present");
                    RatPoly::constant(k.into())
                }
                Some('n') => {
                    p.pos += 1;
                    RatPoly::time()
                }
                Some('m') => {
                    let at = p.pos;
                    p.pos += 1;
                    match p.integer().and_then(|k| u32::try_from(k).ok()) {
                        Some(k) if k >= 1 => RatPoly::param(k),
                        _ => {
                            p.pos = at;
                            return Err(p.error("malformed parameter name", &["parameter 'm<k>'"]));
                        }
                    }
                }
                _ => {
                    return Err(p.error(
                        "expected exponent",
                        &["'('", "non-negative integer", "'n'", "parameter 'm<k>'"],
                    ))
                }
            }
        } else {
            RatPoly::one()
        };
        factors.push((name, exponent));
        spans.push(Span { line, column });
    }
    if factors.is_empty() {
        return Err(p.error("expected a word", &["generator name", "'1'"]));
    }
    Ok((WordSequence::new(factors), spans))
}

/// Reads a sequence back as a word when every generator is an elementary
/// matrix `I + E_{a,b}` and no two positions chain (`b != a'`), so products
/// are just sums of exponents placed at the generator positions.
pub fn render_word(g: &GSequence, a: &GeneratorAssignment) -> Option<WordSequence> {
    let d = a.dim();
    if g.dim() != d {
        return None;
    }
    let mut at: Vec<((usize, usize), &str)> = Vec::new();
    for name in a.names() {
        let m = a.get(name).ok()?;
        let mut nonzero = (0..d)
            .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
            .filter(|&(i, j)| !m.upper(i, j).is_zero());
        let pos = nonzero.next()?;
        if nonzero.next().is_some() || *m != UTMatrix::elementary(d, pos.0, pos.1) {
            return None;
        }
        if at
            .iter()
            .any(|&(p, _)| p == pos || p.1 == pos.0 || p.0 == pos.1)
        {
            return None;
        }
        at.push((pos, name));
    }
    at.sort();
    let mut factors = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            let e = g.matrix().upper(i, j);
            if e.is_zero() {
                continue;
            }
            let (_, name) = at.iter().find(|&&(p, _)| p == (i, j))?;
            factors.push((name.to_string(), e.clone()));
        }
    }
    Some(WordSequence::new(factors))
}

/// Human-readable form: a word when one is available, else the matrix.
pub fn render_sequence(g: &GSequence, a: Option<&GeneratorAssignment>) -> String {
    if g.is_identity() {
        return "1_G".into();
    }
    a.and_then(|a| render_word(g, a))
        .map(|w| w.to_string())
        .unwrap_or_else(|| g.matrix().to_string())
}
