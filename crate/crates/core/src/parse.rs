//! Text input: rational expressions in `z`, loop literals, symbol literals.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | factor
//! factor  := base ('^' '-'? integer)?
//! base    := 'z' | 'i' | number | number 'i' | '(' expr ')'
//!
//! loop    := 'circle(' re ',' im ',' r ')'
//!          | 'fourier(' k ':' re ',' im (';' k ':' re ',' im)* ')'
//!
//! symbol  := sfactor ('*' sfactor)*
//! sfactor := 'z' ('^' '-'? integer)? | fourier | 'exp(' fourier ')'
//! ```
//!
//! `1+2i` parses as the sum of two literals, which is the complex literal.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::circle::CircleFunction;
use crate::error::Result;
use crate::geometry::Loop;
use crate::poly::Polynomial;
use crate::rational::{Point, RationalFunction};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at byte {offset}: {message} (expected one of: {})", expected.join(", "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Sym(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(x) => write!(f, "number {x}"),
            Tok::Imag(x) => write!(f, "imaginary {x}i"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Sym(c) => write!(f, "'{c}'"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

fn lex(text: &str) -> std::result::Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        if ch.is_ascii_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let value: f64 = text[start..i].parse().map_err(|_| ParseError {
                offset: start,
                expected: vec!["number".into()],
                message: format!("malformed number '{}'", &text[start..i]),
            })?;
            let followed_by_i = i < bytes.len()
                && bytes[i] == b'i'
                && !(i + 1 < bytes.len() && bytes[i + 1].is_ascii_alphanumeric());
            if followed_by_i {
                i += 1;
                out.push((start, Tok::Imag(value)));
            } else {
                out.push((start, Tok::Num(value)));
            }
        } else if ch.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_ascii_lowercase())));
        } else if "+-*/^(),:;".contains(ch) {
            out.push((i, Tok::Sym(ch)));
            i += 1;
        } else {
            return Err(ParseError {
                offset: i,
                expected: vec!["expression".into()],
                message: format!("unexpected character '{ch}'"),
            });
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Z,
    Const(Complex64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
}

/// Unreduced fraction used while evaluating; may be zero.
struct Frac {
    num: Polynomial,
    den: Polynomial,
}

impl Expr {
    fn to_frac(&self) -> std::result::Result<Frac, &'static str> {
        Ok(match self {
            Expr::Z => Frac {
                num: Polynomial::z(),
                den: Polynomial::one(),
            },
            Expr::Const(c) => Frac {
                num: Polynomial::constant(*c),
                den: Polynomial::one(),
            },
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let (a, b) = (a.to_frac()?, b.to_frac()?);
                let left = &a.num * &b.den;
                let right = &b.num * &a.den;
                Frac {
                    num: if matches!(self, Expr::Add(..)) {
                        &left + &right
                    } else {
                        &left - &right
                    },
                    den: &a.den * &b.den,
                }
            }
            Expr::Mul(a, b) => {
                let (a, b) = (a.to_frac()?, b.to_frac()?);
                Frac {
                    num: &a.num * &b.num,
                    den: &a.den * &b.den,
                }
            }
            Expr::Div(a, b) => {
                let (a, b) = (a.to_frac()?, b.to_frac()?);
                if b.num.is_zero() {
                    return Err("division by zero");
                }
                Frac {
                    num: &a.num * &b.den,
                    den: &a.den * &b.num,
                }
            }
            Expr::Neg(a) => {
                let a = a.to_frac()?;
                Frac { num: -&a.num, den: a.den }
            }
            Expr::Pow(a, e) => {
                let a = a.to_frac()?;
                let k = e.unsigned_abs();
                if *e < 0 {
                    if a.num.is_zero() {
                        return Err("division by zero");
                    }
                    Frac {
                        num: a.den.powi(k),
                        den: a.num.powi(k),
                    }
                } else {
                    Frac {
                        num: a.num.powi(k),
                        den: a.den.powi(k),
                    }
                }
            }
        })
    }

    fn to_constant(&self) -> std::result::Result<Complex64, &'static str> {
        Ok(match self {
            Expr::Z => return Err("expected a constant, found 'z'"),
            Expr::Const(c) => *c,
            Expr::Add(a, b) => a.to_constant()? + b.to_constant()?,
            Expr::Sub(a, b) => a.to_constant()? - b.to_constant()?,
            Expr::Mul(a, b) => a.to_constant()? * b.to_constant()?,
            Expr::Div(a, b) => a.to_constant()? / b.to_constant()?,
            Expr::Neg(a) => -a.to_constant()?,
            Expr::Pow(a, e) => a.to_constant()?.powi(*e),
        })
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> std::result::Result<Self, ParseError> {
        Ok(Self {
            toks: lex(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            message: format!("unexpected {}", self.peek()),
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> std::result::Result<(), ParseError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(self.error(&[&format!("'{c}'")]))
        }
    }

    fn expect_ident(&mut self, name: &str) -> std::result::Result<(), ParseError> {
        if *self.peek() == Tok::Ident(name.into()) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("'{name}'")]))
        }
    }

    fn expect_end(&self) -> std::result::Result<(), ParseError> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.error(&["end of input", "operator"]))
        }
    }

    fn expr(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_sym('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_sym('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_sym('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_sym('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> std::result::Result<Expr, ParseError> {
        if self.eat_sym('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.factor()
    }

    fn factor(&mut self) -> std::result::Result<Expr, ParseError> {
        let base = self.base()?;
        if self.eat_sym('^') {
            let e = self.integer()?;
            let e = i32::try_from(e).map_err(|_| self.error(&["small integer exponent"]))?;
            return Ok(Expr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn base(&mut self) -> std::result::Result<Expr, ParseError> {
        const EXPECTED: &[&str] = &["'z'", "number", "'('"];
        match self.peek().clone() {
            Tok::Ident(s) if s == "z" => {
                self.bump();
                Ok(Expr::Z)
            }
            Tok::Ident(s) if s == "i" => {
                self.bump();
                Ok(Expr::Const(Complex64::new(0.0, 1.0)))
            }
            Tok::Num(x) => {
                self.bump();
                Ok(Expr::Const(Complex64::new(x, 0.0)))
            }
            Tok::Imag(x) => {
                self.bump();
                Ok(Expr::Const(Complex64::new(0.0, x)))
            }
            Tok::Sym('(') => {
                self.bump();
                let inner = self.expr()?;
                self.expect_sym(')')?;
                Ok(inner)
            }
            _ => Err(self.error(EXPECTED)),
        }
    }

    fn integer(&mut self) -> std::result::Result<i64, ParseError> {
        let negative = self.eat_sym('-');
        match *self.peek() {
            Tok::Num(x) if x.fract() == 0.0 && x.abs() < 1e9 => {
                self.bump();
                Ok(if negative { -(x as i64) } else { x as i64 })
            }
            _ => Err(self.error(&["integer"])),
        }
    }

    fn real(&mut self) -> std::result::Result<f64, ParseError> {
        let negative = self.eat_sym('-');
        if !negative {
            self.eat_sym('+');
        }
        match *self.peek() {
            Tok::Num(x) => {
                self.bump();
                Ok(if negative { -x } else { x })
            }
            _ => Err(self.error(&["number"])),
        }
    }

    fn fourier_modes(&mut self) -> std::result::Result<Vec<(i64, Complex64)>, ParseError> {
        self.expect_ident("fourier")?;
        self.expect_sym('(')?;
        let mut modes = Vec::new();
        loop {
            let k = self.integer()?;
            self.expect_sym(':')?;
            let re = self.real()?;
            self.expect_sym(',')?;
            let im = self.real()?;
            modes.push((k, Complex64::new(re, im)));
            if self.eat_sym(')') {
                return Ok(modes);
            }
            if !self.eat_sym(';') {
                return Err(self.error(&["';'", "')'"]));
            }
        }
    }

    fn loop_literal(&mut self) -> std::result::Result<Loop, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "circle" => {
                self.bump();
                self.expect_sym('(')?;
                let re = self.real()?;
                self.expect_sym(',')?;
                let im = self.real()?;
                self.expect_sym(',')?;
                let offset = self.offset();
                let r = self.real()?;
                self.expect_sym(')')?;
                if r <= 0.0 {
                    return Err(ParseError {
                        offset,
                        expected: vec!["positive radius".into()],
                        message: format!("radius {r} is not positive"),
                    });
                }
                Ok(Loop::circle(Complex64::new(re, im), r))
            }
            Tok::Ident(s) if s == "fourier" => Ok(Loop::fourier(self.fourier_modes()?)),
            _ => Err(self.error(&["'circle'", "'fourier'"])),
        }
    }

    fn symbol_factor(&mut self) -> std::result::Result<SymbolFactor, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "z" => {
                self.bump();
                let k = if self.eat_sym('^') { self.integer()? } else { 1 };
                Ok(SymbolFactor::Power(k))
            }
            Tok::Ident(s) if s == "fourier" => Ok(SymbolFactor::Series(self.fourier_modes()?)),
            Tok::Ident(s) if s == "exp" => {
                self.bump();
                self.expect_sym('(')?;
                let modes = self.fourier_modes()?;
                self.expect_sym(')')?;
                Ok(SymbolFactor::ExpSeries(modes))
            }
            _ => Err(self.error(&["'z'", "'fourier'", "'exp'"])),
        }
    }
}

fn eval_error(offset: usize, msg: &str) -> ParseError {
    ParseError {
        offset,
        expected: vec!["expression".into()],
        message: msg.into(),
    }
}

pub fn parse_rational(text: &str) -> Result<RationalFunction> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.expect_end()?;
    let frac = e.to_frac().map_err(|m| eval_error(0, m))?;
    RationalFunction::new(frac.num, frac.den)
}

/// A constant expression or `inf`.
pub fn parse_point(text: &str) -> Result<Point> {
    let trimmed = text.trim();
    if matches!(trimmed.to_ascii_lowercase().as_str(), "inf" | "infinity") {
        return Ok(Point::Infinity);
    }
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.expect_end()?;
    Ok(Point::Finite(e.to_constant().map_err(|m| eval_error(0, m))?))
}

pub fn parse_loop(text: &str) -> Result<Loop> {
    let mut p = Parser::new(text)?;
    let l = p.loop_literal()?;
    p.expect_end()?;
    Ok(l)
}

#[derive(Debug, Clone, PartialEq)]
enum SymbolFactor {
    Power(i64),
    Series(Vec<(i64, Complex64)>),
    ExpSeries(Vec<(i64, Complex64)>),
}

/// A circle function given directly as a product of `z^k`, trigonometric
/// polynomials and exponentials of trigonometric polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolLiteral {
    factors: Vec<SymbolFactor>,
}

impl SymbolLiteral {
    pub fn sample(&self, g: usize) -> Result<CircleFunction> {
        let mut acc = CircleFunction::constant(g, Complex64::new(1.0, 0.0))?;
        for factor in &self.factors {
            let f = match factor {
                SymbolFactor::Power(k) => CircleFunction::mode(g, *k)?,
                SymbolFactor::Series(modes) => CircleFunction::from_modes(g, modes)?,
                SymbolFactor::ExpSeries(modes) => CircleFunction::from_modes(g, modes)?.exp(),
            };
            acc = acc.mul(&f)?;
        }
        Ok(acc)
    }
}

pub fn parse_symbol(text: &str) -> Result<SymbolLiteral> {
    let mut p = Parser::new(text)?;
    let mut factors = vec![p.symbol_factor()?];
    while p.eat_sym('*') {
        factors.push(p.symbol_factor()?);
    }
    p.expect_end()?;
    Ok(SymbolLiteral { factors })
}
