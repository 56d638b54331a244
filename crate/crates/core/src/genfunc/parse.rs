//! Text syntax for representatives and distributions.
//!
//! ```text
//! rep   := term (('+' | '-') term)*
//! term  := unary ('*' unary)*
//! unary := '-' unary | atom ('^' int)?
//! atom  := number | iota(dist) | sigma(fexpr) | L(field, rep) | exp(rep) | '(' rep ')'
//! dist  := dterm (('+' | '-') dterm)*
//! dterm := (number '*')? datom
//! datom := delta(x, ...) | heaviside(t) | regular(fexpr) | L(field, dist) | 0 | name | '(' dist ')'
//! ```
//!
//! Inside `iota(...)` a bare smooth-function expression means `regular(...)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::distributions::Distribution;
use crate::error::{suggest, Error, Result};
use crate::expr::SmoothFn;
use crate::geometry::{Manifold, Shape, VectorField};

use super::repr::Representative;

const REP_KEYWORDS: [&str; 4] = ["iota", "sigma", "L", "exp"];
const DIST_KEYWORDS: [&str; 4] = ["delta", "heaviside", "regular", "L"];

/// Names visible to the parser.
#[derive(Clone, Debug)]
pub struct Scope {
    pub manifold: Arc<Manifold>,
    pub fields: BTreeMap<String, VectorField>,
    pub distributions: BTreeMap<String, Distribution>,
    /// Chart used by `heaviside(t)`.
    pub heaviside_chart: String,
}

/// Built-in vector fields of a manifold, by name.
pub fn builtin_fields(m: &Manifold) -> BTreeMap<String, VectorField> {
    let mut out = BTreeMap::new();
    if m.dim == 1 {
        out.insert("d_x".to_string(), VectorField::coordinate(1, 0));
        if m.shape == Shape::Circle {
            out.insert("d_theta".to_string(), VectorField::coordinate(1, 0).named("d_theta"));
            out.insert(
                "sin_d_theta".to_string(),
                VectorField::sine(1, 0, 1.0, 1.0).named("sin_d_theta"),
            );
        } else {
            out.insert("x_d_x".to_string(), VectorField::euler(1));
        }
    } else {
        for axis in 0..m.dim {
            let f = VectorField::coordinate(m.dim, axis);
            out.insert(f.name.clone(), f);
        }
        if m.shape != Shape::Circle {
            out.insert("x_d_x".to_string(), VectorField::euler(m.dim));
        }
    }
    out
}

impl Scope {
    pub fn new(manifold: Arc<Manifold>) -> Self {
        let heaviside_chart = manifold.charts()[0].id.clone();
        Self {
            fields: builtin_fields(&manifold),
            distributions: BTreeMap::new(),
            heaviside_chart,
            manifold,
        }
    }

    pub fn field(&self, name: &str) -> Result<VectorField> {
        self.fields.get(name).cloned().ok_or_else(|| Error::Unresolved {
            name: name.to_string(),
            suggestions: suggest(name, self.fields.keys().map(String::as_str)),
        })
    }
}

pub fn parse_representative(src: &str, scope: &Scope) -> Result<Representative> {
    let mut p = Parser::new(src, 0, src.len(), scope);
    let r = p.rep()?;
    p.finish()?;
    Ok(r)
}

pub fn parse_distribution(src: &str, scope: &Scope) -> Result<Distribution> {
    let mut p = Parser::new(src, 0, src.len(), scope);
    let d = p.dist()?;
    p.finish()?;
    Ok(d)
}

enum Item {
    Scalar(f64),
    Rep(Representative),
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    end: usize,
    scope: &'a Scope,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, start: usize, end: usize, scope: &'a Scope) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: start,
            end,
            scope,
        }
    }

    fn location(&self, at: usize) -> (usize, usize) {
        let before = &self.src[..at.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, column)
    }

    fn error_at(&self, at: usize, message: impl Into<String>) -> Error {
        let (line, column) = self.location(at);
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        self.error_at(self.pos, message)
    }

    /// Shift a parse error from a sub-expression starting at `start`.
    fn relocate(&self, e: Error, start: usize) -> Error {
        match e {
            Error::Parse {
                line: 1,
                column,
                message,
            } => {
                let (l, c) = self.location(start);
                Error::Parse {
                    line: l,
                    column: c + column - 1,
                    message,
                }
            }
            other => other,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.end && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        (self.pos < self.end).then(|| self.bytes[self.pos])
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", c as char)))
        }
    }

    fn finish(&mut self) -> Result<()> {
        if self.peek().is_some() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(())
    }

    fn ident(&mut self) -> Option<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        let b = *self.bytes.get(self.pos).filter(|_| self.pos < self.end)?;
        if !(b.is_ascii_alphabetic() || b == b'_') {
            return None;
        }
        while self.pos < self.end && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_') {
            self.pos += 1;
        }
        Some((start, &self.src[start..self.pos]))
    }

    fn number(&mut self) -> Option<Result<f64>> {
        self.skip_ws();
        let start = self.pos;
        let b = *self.bytes.get(self.pos).filter(|_| self.pos < self.end)?;
        if !(b.is_ascii_digit() || b == b'.') {
            return None;
        }
        while self.pos < self.end && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.end && matches!(self.bytes[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.end && matches!(self.bytes[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if self.pos < self.end && self.bytes[self.pos].is_ascii_digit() {
                while self.pos < self.end && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        Some(
            text.parse::<f64>()
                .map_err(|_| self.error_at(start, format!("invalid number `{text}`"))),
        )
    }

    fn signed_number(&mut self) -> Result<f64> {
        let neg = self.eat(b'-');
        match self.number() {
            Some(v) => Ok(if neg { -v? } else { v? }),
            None => Err(self.error("expected a number")),
        }
    }

    /// Byte range of a parenthesized argument, consuming through the closing `)`.
    fn raw_argument(&mut self) -> Result<(usize, usize)> {
        self.expect(b'(')?;
        let start = self.pos;
        let mut depth = 0usize;
        while self.pos < self.end {
            match self.bytes[self.pos] {
                b'(' => depth += 1,
                b')' if depth == 0 => {
                    let end = self.pos;
                    self.pos += 1;
                    return Ok((start, end));
                }
                b')' => depth -= 1,
                _ => {}
            }
            self.pos += 1;
        }
        Err(self.error("unbalanced parentheses"))
    }

    fn smooth_fn(&self, start: usize, end: usize) -> Result<SmoothFn> {
        SmoothFn::parse(&self.src[start..end]).map_err(|e| self.relocate(e, start))
    }

    // representatives

    fn rep(&mut self) -> Result<Representative> {
        let first = self.term()?;
        let mut terms = vec![self.as_rep(first)];
        loop {
            if self.eat(b'+') {
                let t = self.term()?;
                terms.push(self.as_rep(t));
            } else if self.eat(b'-') {
                let t = self.term()?;
                terms.push(self.as_rep(t).scale(-1.0));
            } else {
                break;
            }
        }
        if terms.len() == 1 {
            Ok(terms.pop().expect("one term"))
        } else {
            Representative::sum(terms)
        }
    }

    fn as_rep(&self, item: Item) -> Representative {
        match item {
            Item::Scalar(c) => Representative::constant(self.scope.manifold.clone(), c),
            Item::Rep(r) => r,
        }
    }

    fn term(&mut self) -> Result<Item> {
        let mut scalar = 1.0;
        let mut any_scalar = false;
        let mut factors = Vec::new();
        let mut push = |item: Item, scalar: &mut f64, any: &mut bool| match item {
            Item::Scalar(c) => {
                *scalar *= c;
                *any = true;
            }
            Item::Rep(r) => factors.push(r),
        };
        let u = self.unary()?;
        push(u, &mut scalar, &mut any_scalar);
        while self.eat(b'*') {
            let u = self.unary()?;
            push(u, &mut scalar, &mut any_scalar);
        }
        if factors.is_empty() {
            return Ok(Item::Scalar(scalar));
        }
        let r = if factors.len() == 1 {
            factors.pop().expect("one factor")
        } else {
            Representative::product(factors)?
        };
        Ok(Item::Rep(if any_scalar && scalar != 1.0 {
            r.scale(scalar)
        } else {
            r
        }))
    }

    fn unary(&mut self) -> Result<Item> {
        if self.eat(b'-') {
            return Ok(match self.unary()? {
                Item::Scalar(c) => Item::Scalar(-c),
                Item::Rep(r) => Item::Rep(r.scale(-1.0)),
            });
        }
        let a = self.atom()?;
        if self.eat(b'^') {
            let at = self.pos;
            let k = self.signed_number()?;
            if k < 0.0 || k.fract() != 0.0 || k > 16.0 {
                return Err(self.error_at(at, "exponent must be an integer between 0 and 16"));
            }
            let k = k as usize;
            return Ok(match a {
                Item::Scalar(c) => Item::Scalar(c.powi(k as i32)),
                Item::Rep(_) if k == 0 => Item::Scalar(1.0),
                Item::Rep(r) if k == 1 => Item::Rep(r),
                Item::Rep(r) => Item::Rep(Representative::product(vec![r; k])?),
            });
        }
        Ok(a)
    }

    fn atom(&mut self) -> Result<Item> {
        if let Some(v) = self.number() {
            return Ok(Item::Scalar(v?));
        }
        if self.eat(b'(') {
            let r = self.rep()?;
            self.expect(b')')?;
            return Ok(Item::Rep(r));
        }
        let Some((at, name)) = self.ident() else {
            return Err(self.error("expected a representative"));
        };
        match name {
            "iota" => {
                let (s, e) = self.raw_argument()?;
                let mut sub = Parser::new(self.src, s, e, self.scope);
                let d = match sub.dist().and_then(|d| sub.finish().map(|_| d)) {
                    Ok(d) => d,
                    Err(err) => match self.smooth_fn(s, e) {
                        Ok(f) => Distribution::regular(self.scope.manifold.clone(), f),
                        Err(_) => return Err(err),
                    },
                };
                Ok(Item::Rep(Representative::iota(d)))
            }
            "sigma" => {
                let (s, e) = self.raw_argument()?;
                let f = self.smooth_fn(s, e)?;
                Ok(Item::Rep(Representative::sigma(self.scope.manifold.clone(), f)))
            }
            "L" => {
                self.expect(b'(')?;
                let field = self.field_name()?;
                self.expect(b',')?;
                let r = self.rep()?;
                self.expect(b')')?;
                Ok(Item::Rep(r.lie_derivative(&field)?))
            }
            "exp" => {
                self.expect(b'(')?;
                let r = self.rep()?;
                self.expect(b')')?;
                Ok(Item::Rep(r.exp()))
            }
            other => Err(self.unresolved(at, other, &REP_KEYWORDS)),
        }
    }

    fn unresolved(&self, at: usize, name: &str, keywords: &[&str]) -> Error {
        let (line, column) = self.location(at);
        let candidates: Vec<&str> = keywords
            .iter()
            .copied()
            .chain(self.scope.distributions.keys().map(String::as_str))
            .collect();
        let s = suggest(name, candidates);
        Error::Parse {
            line,
            column,
            message: if s.is_empty() {
                format!("unknown name `{name}`")
            } else {
                format!("unknown name `{name}` (did you mean: {}?)", s.join(", "))
            },
        }
    }

    fn field_name(&mut self) -> Result<VectorField> {
        let Some((at, name)) = self.ident() else {
            return Err(self.error("expected a field name"));
        };
        self.scope.field(name).map_err(|e| match e {
            Error::Unresolved { name, suggestions } => {
                let (line, column) = self.location(at);
                let hint = if suggestions.is_empty() {
                    String::new()
                } else {
                    format!(" (did you mean: {}?)", suggestions.join(", "))
                };
                Error::Parse {
                    line,
                    column,
                    message: format!("unknown field `{name}`{hint}"),
                }
            }
            other => other,
        })
    }

    // distributions

    fn dist(&mut self) -> Result<Distribution> {
        let m = self.scope.manifold.clone();
        let mut terms = vec![self.dterm()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.dterm()?);
            } else if self.eat(b'-') {
                let (c, u) = self.dterm()?;
                terms.push((-c, u));
            } else {
                break;
            }
        }
        if terms.len() == 1 && terms[0].0 == 1.0 {
            return Ok(terms.pop().expect("one term").1);
        }
        let terms: Vec<(f64, Distribution)> = terms.into_iter().filter(|(_, u)| !u.is_zero()).collect();
        if terms.is_empty() {
            return Ok(Distribution::zero(m));
        }
        Ok(Distribution::combination(m, terms))
    }

    fn dterm(&mut self) -> Result<(f64, Distribution)> {
        if self.eat(b'-') {
            let (c, u) = self.dterm()?;
            return Ok((-c, u));
        }
        let save = self.pos;
        if let Some(v) = self.number() {
            let v = v?;
            if self.eat(b'*') {
                let (c, u) = self.dterm()?;
                return Ok((v * c, u));
            }
            if v == 0.0 {
                return Ok((1.0, Distribution::zero(self.scope.manifold.clone())));
            }
            return Err(self.error_at(save, "a bare number other than 0 is not a distribution"));
        }
        Ok((1.0, self.datom()?))
    }

    fn datom(&mut self) -> Result<Distribution> {
        let m = self.scope.manifold.clone();
        if self.eat(b'(') {
            let d = self.dist()?;
            self.expect(b')')?;
            return Ok(d);
        }
        let Some((at, name)) = self.ident() else {
            return Err(self.error("expected a distribution"));
        };
        match name {
            "delta" => {
                self.expect(b'(')?;
                let mut point = vec![self.signed_number()?];
                while self.eat(b',') {
                    point.push(self.signed_number()?);
                }
                self.expect(b')')?;
                if point.len() != m.dim {
                    return Err(self.error_at(at, format!("delta needs {} coordinates", m.dim)));
                }
                Distribution::delta(m, point)
            }
            "heaviside" => {
                self.expect(b'(')?;
                let t = self.signed_number()?;
                self.expect(b')')?;
                Distribution::heaviside(m, &self.scope.heaviside_chart, 0, t)
            }
            "regular" => {
                let (s, e) = self.raw_argument()?;
                Ok(Distribution::regular(m, self.smooth_fn(s, e)?))
            }
            "L" => {
                self.expect(b'(')?;
                let field = self.field_name()?;
                self.expect(b',')?;
                let d = self.dist()?;
                self.expect(b')')?;
                d.lie_derivative(&field)
            }
            other => match self.scope.distributions.get(other) {
                Some(d) => Ok(d.clone()),
                None => Err(self.unresolved(at, other, &DIST_KEYWORDS)),
            },
        }
    }
}
