//! Whitelisted smooth-function expressions: polynomials, `sin`, `cos`, `exp`.
//!
//! Variables are `x` (alias `x0`, `theta`) and `x1`. Division is only
//! allowed by constant subexpressions so every parsed function is smooth.

use std::fmt;
use std::sync::Arc;

use crate::dual::MultiDual;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, f64),
    Pow(Box<Node>, u32),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Exp(Box<Node>),
}

impl Node {
    fn eval(&self, x: &[MultiDual]) -> MultiDual {
        match self {
            Node::Const(c) => MultiDual::constant(*c),
            Node::Var(i) => x[*i].clone(),
            Node::Neg(a) => -a.eval(x),
            Node::Add(a, b) => &a.eval(x) + &b.eval(x),
            Node::Sub(a, b) => &a.eval(x) - &b.eval(x),
            Node::Mul(a, b) => &a.eval(x) * &b.eval(x),
            Node::Div(a, c) => a.eval(x).scale(1.0 / c),
            Node::Pow(a, k) => a.eval(x).powi(*k as i32),
            Node::Sin(a) => a.eval(x).sin(),
            Node::Cos(a) => a.eval(x).cos(),
            Node::Exp(a) => a.eval(x).exp(),
        }
    }

    fn eval_f64(&self, x: &[f64]) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(i) => x[*i],
            Node::Neg(a) => -a.eval_f64(x),
            Node::Add(a, b) => a.eval_f64(x) + b.eval_f64(x),
            Node::Sub(a, b) => a.eval_f64(x) - b.eval_f64(x),
            Node::Mul(a, b) => a.eval_f64(x) * b.eval_f64(x),
            Node::Div(a, c) => a.eval_f64(x) / c,
            Node::Pow(a, k) => a.eval_f64(x).powi(*k as i32),
            Node::Sin(a) => a.eval_f64(x).sin(),
            Node::Cos(a) => a.eval_f64(x).cos(),
            Node::Exp(a) => a.eval_f64(x).exp(),
        }
    }

    fn constant_value(&self) -> Option<f64> {
        match self {
            Node::Var(_) => None,
            other => {
                if other.max_var().is_none() {
                    Some(other.eval_f64(&[]))
                } else {
                    None
                }
            }
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Div(a, _) | Node::Pow(a, _) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => {
                a.max_var()
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => match (a.max_var(), b.max_var()) {
                (Some(p), Some(q)) => Some(p.max(q)),
                (p, q) => p.or(q),
            },
        }
    }
}

type CustomFn = Arc<dyn Fn(&[MultiDual]) -> MultiDual + Send + Sync>;

#[derive(Clone)]
enum Body {
    Parsed(Node),
    Custom(CustomFn),
}

/// A smooth scalar function of ambient coordinates.
#[derive(Clone)]
pub struct SmoothFn {
    source: String,
    body: Body,
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothFn({})", self.source)
    }
}

impl fmt::Display for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl SmoothFn {
    /// Parse an expression; a bare `sin`, `cos` or `exp` means that function of `x`.
    pub fn parse(src: &str) -> Result<Self> {
        let trimmed = src.trim();
        if matches!(trimmed, "sin" | "cos" | "exp") {
            return Self::parse(&format!("{trimmed}(x)"));
        }
        let node = Parser::new(src).parse_all()?;
        Ok(Self {
            source: trimmed.to_string(),
            body: Body::Parsed(node),
        })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            source: format!("{c}"),
            body: Body::Parsed(Node::Const(c)),
        }
    }

    /// Wrap a closure; the caller guarantees smoothness.
    pub fn custom(name: &str, f: impl Fn(&[MultiDual]) -> MultiDual + Send + Sync + 'static) -> Self {
        Self {
            source: name.to_string(),
            body: Body::Custom(Arc::new(f)),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Number of coordinates referenced (0 for constants).
    pub fn arity(&self) -> usize {
        match &self.body {
            Body::Parsed(n) => n.max_var().map_or(0, |v| v + 1),
            Body::Custom(_) => 0,
        }
    }

    pub fn eval(&self, x: &[MultiDual]) -> MultiDual {
        match &self.body {
            Body::Parsed(n) => n.eval(x),
            Body::Custom(f) => f(x),
        }
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        match &self.body {
            Body::Parsed(n) => n.eval_f64(x),
            Body::Custom(f) => f(&crate::dual::lift(x)).re(),
        }
    }

    /// Pointwise product, used by tests of multiplicativity.
    pub fn product(&self, other: &SmoothFn) -> SmoothFn {
        let (a, b) = (self.clone(), other.clone());
        SmoothFn::custom(&format!("({})*({})", self.source, other.source), move |x| {
            &a.eval(x) * &b.eval(x)
        })
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let before = &self.src[..self.pos.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_all(mut self) -> Result<Node> {
        if self.peek().is_none() {
            return Err(self.error("empty expression"));
        }
        let n = self.expr()?;
        if self.peek().is_some() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(n)
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.peek() == Some(b'/') {
                self.pos += 1;
                let at = self.pos;
                let rhs = self.unary()?;
                let Some(c) = rhs.constant_value() else {
                    self.pos = at;
                    return Err(self.error("division is only allowed by constants"));
                };
                if c == 0.0 {
                    self.pos = at;
                    return Err(self.error("division by zero"));
                }
                lhs = Node::Div(Box::new(lhs), c);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let at = self.pos;
            let e = self.unary()?;
            match e.constant_value() {
                Some(k) if k >= 0.0 && k.fract() == 0.0 && k <= 64.0 => {
                    return Ok(Node::Pow(Box::new(base), k as u32));
                }
                _ => {
                    self.pos = at;
                    return Err(self.error("exponent must be a non-negative integer constant"));
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let n = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(n)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let word = &self.src[start..self.pos];
                match word {
                    "x" | "x0" | "theta" => Ok(Node::Var(0)),
                    "x1" | "y" => Ok(Node::Var(1)),
                    "pi" => Ok(Node::Const(std::f64::consts::PI)),
                    "e" => Ok(Node::Const(std::f64::consts::E)),
                    "sin" | "cos" | "exp" => {
                        if !self.eat(b'(') {
                            return Err(self.error(format!("expected `(` after `{word}`")));
                        }
                        let arg = Box::new(self.expr()?);
                        if !self.eat(b')') {
                            return Err(self.error("expected `)`"));
                        }
                        Ok(match word {
                            "sin" => Node::Sin(arg),
                            "cos" => Node::Cos(arg),
                            _ => Node::Exp(arg),
                        })
                    }
                    _ => {
                        self.pos = start;
                        let known = ["x", "x0", "x1", "y", "theta", "pi", "e", "sin", "cos", "exp"];
                        let s = crate::error::suggest(word, known);
                        let hint = if s.is_empty() {
                            String::new()
                        } else {
                            format!(" (did you mean: {}?)", s.join(", "))
                        };
                        Err(self.error(format!("unknown identifier `{word}`{hint}")))
                    }
                }
            }
            Some(c) => Err(self.error(format!("unexpected character `{}`", c as char))),
            None => Err(self.error("unexpected end of expression")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.bytes.len() && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.bytes.len() && (self.bytes[self.pos] == b'e' || self.bytes[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.bytes.len() && (self.bytes[self.pos] == b'-' || self.bytes[self.pos] == b'+') {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>().map(Node::Const).map_err(|_| {
            self.pos = start;
            self.error(format!("invalid number `{text}`"))
        })
    }
}
