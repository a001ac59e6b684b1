//! Periodic field expressions.
//!
//! The grammar is deliberately tiny so configs stay portable and every
//! expression is automatically periodic on the unit torus:
//!
//! ```text
//! expr   := ['+' | '-'] term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := number | wave ['^' integer]
//! wave   := ('sin' | 'cos') '(' arg ')'
//! arg    := atom ('*' atom)*        atoms: integer | 'pi' | coordinate
//! ```
//!
//! A wave argument must contain `pi` once, one coordinate (`x1`, `y1`,
//! `x2`, ...) once, and integers whose product is even, i.e. it reads
//! `2*pi*k*coord`. Derivatives are evaluated analytically.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::{x_axis, y_axis, HermitianField, ScalarField, TorusGrid};
use crate::symfunc::HermitianMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wave {
    Sin,
    Cos,
}

/// `sin(2 pi k x_axis)` or `cos(2 pi k x_axis)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub wave: Wave,
    pub axis: usize,
    pub frequency: u32,
}

impl Factor {
    /// Value, first and second derivative at `x`.
    fn jet(&self, x: f64) -> (f64, f64, f64) {
        let w = 2.0 * std::f64::consts::PI * self.frequency as f64;
        let (s, c) = (w * x).sin_cos();
        match self.wave {
            Wave::Sin => (s, w * c, -w * w * s),
            Wave::Cos => (c, -w * s, -w * w * c),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub factors: Vec<Factor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrigExpr {
    terms: Vec<Term>,
}

/// Value, gradient and Hessian of an expression at one point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Row-major `axes x axes`.
    pub hessian: Vec<f64>,
}

impl TrigExpr {
    pub fn constant(c: f64) -> Self {
        TrigExpr {
            terms: vec![Term {
                coeff: c,
                factors: vec![],
            }],
        }
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        TrigExpr { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// One past the largest real axis referenced.
    pub fn axes_used(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.factors.iter().map(|f| f.axis + 1))
            .max()
            .unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.factors.is_empty())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * t.factors.iter().map(|f| f.jet(x[f.axis]).0).product::<f64>())
            .sum()
    }

    pub fn jet(&self, x: &[f64]) -> Jet {
        let axes = x.len();
        let mut out = Jet {
            value: 0.0,
            gradient: vec![0.0; axes],
            hessian: vec![0.0; axes * axes],
        };
        let mut v = vec![0.0; axes];
        let mut d1 = vec![0.0; axes];
        let mut d2 = vec![0.0; axes];
        for term in &self.terms {
            v.fill(1.0);
            d1.fill(0.0);
            d2.fill(0.0);
            for f in &term.factors {
                let (fv, f1, f2) = f.jet(x[f.axis]);
                let a = f.axis;
                // product rule for the 1D factor group on axis a
                let (gv, g1, g2) = (v[a], d1[a], d2[a]);
                v[a] = gv * fv;
                d1[a] = g1 * fv + gv * f1;
                d2[a] = g2 * fv + 2.0 * g1 * f1 + gv * f2;
            }
            let others = |skip: &[usize]| -> f64 {
                (0..axes).filter(|b| !skip.contains(b)).map(|b| v[b]).product()
            };
            out.value += term.coeff * others(&[]);
            for a in 0..axes {
                if d1[a] != 0.0 || d2[a] != 0.0 {
                    let rest = others(&[a]);
                    out.gradient[a] += term.coeff * d1[a] * rest;
                    out.hessian[a * axes + a] += term.coeff * d2[a] * rest;
                }
                for b in (a + 1)..axes {
                    if d1[a] != 0.0 && d1[b] != 0.0 {
                        let m = term.coeff * d1[a] * d1[b] * others(&[a, b]);
                        out.hessian[a * axes + b] += m;
                        out.hessian[b * axes + a] += m;
                    }
                }
            }
        }
        out
    }

    /// Analytic `u_{i jbar}` at `x` for complex dimension `n`.
    pub fn complex_hessian_at(&self, x: &[f64], n: usize) -> HermitianMatrix {
        let axes = 2 * n;
        let jet = self.jet(x);
        let d = |a: usize, b: usize| jet.hessian[a * axes + b];
        let mut m = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = 0.25
                    * C64::new(
                        d(x_axis(i), x_axis(j)) + d(y_axis(i), y_axis(j)),
                        d(x_axis(i), y_axis(j)) - d(y_axis(i), x_axis(j)),
                    );
            }
        }
        HermitianMatrix::from_raw(n, &m)
    }

    fn check_grid(&self, grid: &TorusGrid) -> Result<()> {
        if self.axes_used() > grid.axes() {
            return Err(Error::Parse(format!(
                "expression uses a coordinate beyond complex dimension {}",
                grid.n()
            )));
        }
        Ok(())
    }

    pub fn sample(&self, grid: &TorusGrid) -> Result<ScalarField> {
        self.check_grid(grid)?;
        ScalarField::from_fn(grid, |x| self.eval(x))
    }

    pub fn sample_complex_hessian(&self, grid: &TorusGrid) -> Result<HermitianField> {
        self.check_grid(grid)?;
        let n = grid.n();
        let mats: Vec<HermitianMatrix> = (0..grid.len())
            .map(|p| self.complex_hessian_at(&grid.coordinates(p), n))
            .collect();
        HermitianField::from_matrices(grid, &mats)
    }
}

fn axis_name(axis: usize) -> String {
    let c = if axis.is_multiple_of(2) { 'x' } else { 'y' };
    format!("{c}{}", axis / 2 + 1)
}

impl fmt::Display for TrigExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            let neg = t.coeff.is_sign_negative();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            write!(f, "{}", t.coeff.abs())?;
            for fac in &t.factors {
                let w = match fac.wave {
                    Wave::Sin => "sin",
                    Wave::Cos => "cos",
                };
                if fac.frequency == 1 {
                    write!(f, "*{w}(2*pi*{})", axis_name(fac.axis))?;
                } else {
                    write!(f, "*{w}(2*pi*{}*{})", fac.frequency, axis_name(fac.axis))?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Int(u64),
    Ident(String),
    Sym(char),
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            let mut integral = true;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                integral &= chars[i] != '.';
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    integral = false;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let tok = match (integral, text.parse::<u64>()) {
                (true, Ok(v)) => Token::Int(v),
                _ => Token::Num(
                    text.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number '{text}'")))?,
                ),
            };
            out.push(tok);
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*^()".contains(c) {
            out.push(Token::Sym(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        match self.next() {
            Some(Token::Sym(s)) if s == c => Ok(()),
            other => Err(Error::Parse(format!("expected '{c}', found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<TrigExpr> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        if let Some(Token::Sym(c @ ('+' | '-'))) = self.peek() {
            if *c == '-' {
                sign = -1.0;
            }
            self.pos += 1;
        }
        loop {
            let mut t = self.term()?;
            t.coeff *= sign;
            terms.push(t);
            match self.peek() {
                Some(Token::Sym('+')) => sign = 1.0,
                Some(Token::Sym('-')) => sign = -1.0,
                None => break,
                Some(other) => return Err(Error::Parse(format!("unexpected token {other:?}"))),
            }
            self.pos += 1;
        }
        Ok(TrigExpr { terms })
    }

    fn term(&mut self) -> Result<Term> {
        let mut term = Term {
            coeff: 1.0,
            factors: vec![],
        };
        self.factor(&mut term)?;
        while let Some(Token::Sym('*')) = self.peek() {
            self.pos += 1;
            self.factor(&mut term)?;
        }
        Ok(term)
    }

    fn factor(&mut self, term: &mut Term) -> Result<()> {
        match self.next() {
            Some(Token::Num(v)) => term.coeff *= v,
            Some(Token::Int(v)) => term.coeff *= v as f64,
            Some(Token::Ident(name)) if name == "sin" || name == "cos" => {
                let wave = if name == "sin" { Wave::Sin } else { Wave::Cos };
                self.expect_sym('(')?;
                let (axis, frequency) = self.argument()?;
                self.expect_sym(')')?;
                let mut power = 1;
                if let Some(Token::Sym('^')) = self.peek() {
                    self.pos += 1;
                    match self.next() {
                        Some(Token::Int(p)) if (1..=16).contains(&p) => power = p,
                        other => {
                            return Err(Error::Parse(format!(
                                "exponent must be an integer in 1..=16, found {other:?}"
                            )))
                        }
                    }
                }
                for _ in 0..power {
                    term.factors.push(Factor {
                        wave,
                        axis,
                        frequency,
                    });
                }
            }
            other => return Err(Error::Parse(format!("expected a number or sin/cos, found {other:?}"))),
        }
        Ok(())
    }

    fn argument(&mut self) -> Result<(usize, u32)> {
        let mut multiple: u64 = 1;
        let mut pis = 0;
        let mut axis = None;
        loop {
            match self.next() {
                Some(Token::Int(v)) => {
                    multiple = multiple
                        .checked_mul(v)
                        .ok_or_else(|| Error::Parse("frequency overflow".into()))?
                }
                Some(Token::Ident(id)) if id == "pi" => pis += 1,
                Some(Token::Ident(id)) => {
                    if axis.is_some() {
                        return Err(Error::Parse("wave argument names two coordinates".into()));
                    }
                    axis = Some(parse_coordinate(&id)?);
                }
                other => return Err(Error::Parse(format!("bad wave argument token {other:?}"))),
            }
            match self.peek() {
                Some(Token::Sym('*')) => self.pos += 1,
                _ => break,
            }
        }
        let axis = axis.ok_or_else(|| Error::Parse("wave argument needs a coordinate".into()))?;
        if pis != 1 || !multiple.is_multiple_of(2) {
            return Err(Error::Parse(
                "wave argument must read 2*pi*k*coordinate for an integer k".into(),
            ));
        }
        let frequency = u32::try_from(multiple / 2).map_err(|_| Error::Parse("frequency too large".into()))?;
        Ok((axis, frequency))
    }
}

fn parse_coordinate(id: &str) -> Result<usize> {
    let (kind, rest) = id.split_at(1);
    let i: usize = rest
        .parse()
        .map_err(|_| Error::Parse(format!("unknown identifier '{id}'")))?;
    if i == 0 {
        return Err(Error::Parse("coordinates are numbered from 1".into()));
    }
    match kind {
        "x" => Ok(x_axis(i - 1)),
        "y" => Ok(y_axis(i - 1)),
        _ => Err(Error::Parse(format!("unknown identifier '{id}'"))),
    }
}

impl FromStr for TrigExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens = tokenize(s)?;
        if tokens.is_empty() {
            return Err(Error::Parse("empty expression".into()));
        }
        let mut p = Parser { tokens, pos: 0 };
        p.expr()
    }
}

impl Serialize for TrigExpr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TrigExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
