//! Recursive-descent parser for the arithmetic expression grammar shared by
//! the model format, region syntax, and the CLI:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor ('*' factor | '/' factor)*
//! factor := NUMBER | IDENT | '(' expr ')' | '-' factor
//! ```
//!
//! Numbers are integers, exact decimals (`0.4` parses to `2/5`), or rational
//! literals formed by constant division (`2/5`). No floating point is
//! involved at any stage.

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use super::{RatFuncError, Rational, RationalFunction, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
    line_start: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Lexer {
            src,
            chars: src.char_indices().collect(),
            pos: 0,
            line,
            line_start: 0,
        }
    }

    fn col(&self, byte: usize) -> usize {
        self.src[self.line_start..byte].chars().count() + 1
    }

    fn error(&self, byte: usize, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col(byte),
            msg: msg.into(),
        }
    }

    fn tokenize(&mut self) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut toks = Vec::new();
        while self.pos < self.chars.len() {
            let (byte, c) = self.chars[self.pos];
            match c {
                ' ' | '\t' | '\r' => {
                    self.pos += 1;
                }
                '+' => {
                    toks.push((Tok::Plus, byte));
                    self.pos += 1;
                }
                '-' => {
                    toks.push((Tok::Minus, byte));
                    self.pos += 1;
                }
                '*' => {
                    toks.push((Tok::Star, byte));
                    self.pos += 1;
                }
                '/' => {
                    toks.push((Tok::Slash, byte));
                    self.pos += 1;
                }
                '(' => {
                    toks.push((Tok::LParen, byte));
                    self.pos += 1;
                }
                ')' => {
                    toks.push((Tok::RParen, byte));
                    self.pos += 1;
                }
                c if c.is_ascii_digit() => {
                    let num = self.lex_number(byte)?;
                    toks.push((Tok::Num(num), byte));
                }
                c if c.is_alphabetic() || c == '_' => {
                    let start = self.pos;
                    while self.pos < self.chars.len() {
                        let (_, d) = self.chars[self.pos];
                        if d.is_alphanumeric() || d == '_' {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                    let end = self
                        .chars
                        .get(self.pos)
                        .map(|&(b, _)| b)
                        .unwrap_or(self.src.len());
                    toks.push((Tok::Ident(self.src[self.chars[start].0..end].to_string()), byte));
                }
                other => {
                    return Err(self.error(byte, format!("unexpected character `{}`", other)));
                }
            }
        }
        Ok(toks)
    }

    fn lex_number(&mut self, start_byte: usize) -> Result<Rational, ParseError> {
        let mut int_part = String::new();
        while self.pos < self.chars.len() {
            let (_, d) = self.chars[self.pos];
            if d.is_ascii_digit() {
                int_part.push(d);
                self.pos += 1;
            } else {
                break;
            }
        }
        let mut frac_part = String::new();
        if self.pos < self.chars.len() && self.chars[self.pos].1 == '.' {
            self.pos += 1;
            while self.pos < self.chars.len() {
                let (_, d) = self.chars[self.pos];
                if d.is_ascii_digit() {
                    frac_part.push(d);
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if frac_part.is_empty() {
                return Err(self.error(start_byte, "decimal literal misses fractional digits"));
            }
        }
        let int: BigInt = int_part.parse().unwrap_or_else(|_| BigInt::zero());
        if frac_part.is_empty() {
            return Ok(Rational::from_integer(int));
        }
        // 0.4 -> 4/10 -> 2/5, exactly.
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let frac: BigInt = frac_part.parse().unwrap();
        Ok(Rational::new(int * &scale + frac, scale))
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    line: usize,
    src_len: usize,
    src: String,
}

impl Parser {
    fn col_of(&self, byte: usize) -> usize {
        self.src[..byte.min(self.src.len())].chars().count() + 1
    }

    fn error_at(&self, msg: impl Into<String>) -> ParseError {
        let byte = self
            .toks
            .get(self.idx)
            .map(|&(_, b)| b)
            .unwrap_or(self.src_len);
        ParseError {
            line: self.line,
            col: self.col_of(byte),
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(t, _)| t.clone());
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<RationalFunction, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RationalFunction, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    acc = acc.mul(&self.factor()?);
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.factor()?;
                    acc = acc.div(&rhs).map_err(|e| match e {
                        RatFuncError::DivisionByZeroFunction => {
                            self.error_at("division by zero")
                        }
                        other => self.error_at(other.to_string()),
                    })?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<RationalFunction, ParseError> {
        match self.bump() {
            Some(Tok::Num(n)) => Ok(RationalFunction::constant(n)),
            Some(Tok::Ident(name)) => Ok(RationalFunction::var(Var::intern(&name))),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => {
                        self.idx = self.idx.saturating_sub(1);
                        Err(self.error_at("expected `)`"))
                    }
                }
            }
            Some(Tok::Minus) => Ok(self.factor()?.neg()),
            _ => {
                self.idx = self.idx.saturating_sub(1);
                Err(self.error_at("expected a number, parameter, or `(`"))
            }
        }
    }
}

/// Parses an expression into a rational function. `line` seeds error
/// positions when the expression sits inside a larger file.
pub fn parse_rational_function_at(src: &str, line: usize) -> Result<RationalFunction, ParseError> {
    let mut lexer = Lexer::new(src, line);
    let toks = lexer.tokenize()?;
    if toks.is_empty() {
        return Err(ParseError {
            line,
            col: 1,
            msg: "empty expression".to_string(),
        });
    }
    let mut parser = Parser {
        toks,
        idx: 0,
        line,
        src_len: src.len(),
        src: src.to_string(),
    };
    let rf = parser.expr()?;
    if parser.idx < parser.toks.len() {
        return Err(parser.error_at("trailing input after expression"));
    }
    Ok(rf)
}

pub fn parse_rational_function(src: &str) -> Result<RationalFunction, ParseError> {
    parse_rational_function_at(src, 1)
}

/// Parses an expression that must denote a constant, e.g. a threshold.
pub fn parse_rational_constant(src: &str) -> Result<Rational, ParseError> {
    let rf = parse_rational_function(src)?;
    rf.as_constant().ok_or_else(|| ParseError {
        line: 1,
        col: 1,
        msg: format!("expected a constant, found `{}`", rf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(
            parse_rational_constant("0.4").unwrap(),
            Rational::new(2.into(), 5.into())
        );
        assert_eq!(
            parse_rational_constant("1.250").unwrap(),
            Rational::new(5.into(), 4.into())
        );
    }

    #[test]
    fn rational_literals_via_division() {
        assert_eq!(
            parse_rational_constant("2/5").unwrap(),
            Rational::new(2.into(), 5.into())
        );
        assert_eq!(
            parse_rational_constant("-3/4").unwrap(),
            Rational::new((-3).into(), 4.into())
        );
    }

    #[test]
    fn error_carries_position() {
        let err = parse_rational_function("1 + $").unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.col, 5);
    }

    #[test]
    fn unbalanced_parenthesis_rejected() {
        assert!(parse_rational_function("(1 + p").is_err());
        assert!(parse_rational_function("1 + p)").is_err());
    }

    #[test]
    fn division_by_zero_constant_rejected() {
        assert!(parse_rational_function("1/0").is_err());
        assert!(parse_rational_function("1/(q - q)").is_err());
    }
}
