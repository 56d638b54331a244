use std::fmt;
use std::sync::Arc;

use crate::distributions::Distribution;
use crate::dual::{lift, span_of, MultiDual};
use crate::error::{Error, Result};
use crate::expr::SmoothFn;
use crate::geometry::{Manifold, VectorField};
use crate::testobjects::TestForm;

#[derive(Clone)]
pub enum Node {
    /// `(ιu)(ω, p) = ⟨u, ω⟩`.
    EmbedDist(Distribution),
    /// `(σf)(ω, p) = f(p)`.
    EmbedSmooth(SmoothFn),
    Sum(Vec<Representative>),
    Product(Vec<Representative>),
    ScalarMul(f64, Representative),
    /// `L̂_ζ R = −d₁R(ω, p)(L_ζω) + L_ζ(R(ω, ·))|_p`.
    LieDeriv(VectorField, Representative),
    /// Pointwise `exp`; used to build non-moderate representatives.
    Exp(Representative),
}

/// An element `R ∈ Ê(X)` as an immutable expression tree.
#[derive(Clone)]
pub struct Representative {
    node: Arc<Node>,
    manifold: Arc<Manifold>,
}

impl fmt::Debug for Representative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Representative({self})")
    }
}

impl fmt::Display for Representative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node.as_ref() {
            Node::EmbedDist(u) => write!(f, "iota({u})"),
            Node::EmbedSmooth(g) => write!(f, "sigma({g})"),
            Node::Sum(c) => {
                f.write_str("(")?;
                for (i, r) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{r}")?;
                }
                f.write_str(")")
            }
            Node::Product(c) => {
                f.write_str("(")?;
                for (i, r) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" * ")?;
                    }
                    write!(f, "{r}")?;
                }
                f.write_str(")")
            }
            Node::ScalarMul(c, r) => write!(f, "{c}*{r}"),
            Node::LieDeriv(z, r) => write!(f, "L({}, {r})", z.name),
            Node::Exp(r) => write!(f, "exp({r})"),
        }
    }
}

/// Shift the real part of `p` to the canonical representative, keeping jets.
fn canonical_point(m: &Manifold, p: &[MultiDual]) -> Vec<MultiDual> {
    let re: Vec<f64> = p.iter().map(MultiDual::re).collect();
    let c = m.canonical(&re);
    p.iter().zip(re.iter().zip(&c)).map(|(v, (r, c))| v + (c - r)).collect()
}

impl Representative {
    fn wrap(manifold: &Arc<Manifold>, node: Node) -> Self {
        Self {
            node: Arc::new(node),
            manifold: manifold.clone(),
        }
    }

    pub fn iota(u: Distribution) -> Self {
        let m = u.manifold.clone();
        Self::wrap(&m, Node::EmbedDist(u))
    }

    pub fn sigma(manifold: Arc<Manifold>, f: SmoothFn) -> Self {
        Self::wrap(&manifold, Node::EmbedSmooth(f))
    }

    pub fn zero(manifold: Arc<Manifold>) -> Self {
        Self::iota(Distribution::zero(manifold))
    }

    pub fn one(manifold: Arc<Manifold>) -> Self {
        Self::constant(manifold, 1.0)
    }

    pub fn constant(manifold: Arc<Manifold>, c: f64) -> Self {
        Self::sigma(manifold, SmoothFn::constant(c))
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn manifold(&self) -> &Arc<Manifold> {
        &self.manifold
    }

    fn check_same(&self, other: &Representative) -> Result<()> {
        if self.manifold.name != other.manifold.name || self.manifold.dim != other.manifold.dim {
            return Err(Error::Construction(format!(
                "representatives live on different manifolds `{}` and `{}`",
                self.manifold.name, other.manifold.name
            )));
        }
        Ok(())
    }

    pub fn sum(terms: Vec<Representative>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Construction("empty sum".into()))?
            .clone();
        for t in &terms {
            first.check_same(t)?;
        }
        Ok(Self::wrap(&first.manifold, Node::Sum(terms)))
    }

    pub fn product(factors: Vec<Representative>) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::Construction("empty product".into()))?
            .clone();
        for t in &factors {
            first.check_same(t)?;
        }
        Ok(Self::wrap(&first.manifold, Node::Product(factors)))
    }

    pub fn add(&self, other: &Representative) -> Result<Self> {
        Self::sum(vec![self.clone(), other.clone()])
    }

    pub fn sub(&self, other: &Representative) -> Result<Self> {
        Self::sum(vec![self.clone(), other.scale(-1.0)])
    }

    pub fn mul(&self, other: &Representative) -> Result<Self> {
        Self::product(vec![self.clone(), other.clone()])
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::wrap(&self.manifold, Node::ScalarMul(c, self.clone()))
    }

    pub fn exp(&self) -> Self {
        Self::wrap(&self.manifold, Node::Exp(self.clone()))
    }

    /// `L̂_ζ R`.
    pub fn lie_derivative(&self, field: &VectorField) -> Result<Self> {
        field.validate_on(&self.manifold)?;
        Ok(Self::wrap(&self.manifold, Node::LieDeriv(field.clone(), self.clone())))
    }

    /// `R(ω, p)` for possibly jet-valued `ω` and `p`; `next` is the first free infinitesimal.
    pub fn evaluate(&self, omega: &TestForm, p: &[MultiDual], next: usize) -> Result<MultiDual> {
        let next = next.max(omega.span()).max(span_of(p));
        match self.node.as_ref() {
            Node::EmbedDist(u) => u.pair(omega),
            Node::EmbedSmooth(f) => Ok(f.eval(&canonical_point(&self.manifold, p))),
            Node::Sum(c) => {
                let mut total = MultiDual::zero();
                for r in c {
                    total += r.evaluate(omega, p, next)?;
                }
                Ok(total)
            }
            Node::Product(c) => {
                let mut total = MultiDual::constant(1.0);
                for r in c {
                    total = &total * &r.evaluate(omega, p, next)?;
                    if total.is_zero() {
                        break;
                    }
                }
                Ok(total)
            }
            Node::ScalarMul(a, r) => Ok(r.evaluate(omega, p, next)?.scale(*a)),
            Node::Exp(r) => Ok(r.evaluate(omega, p, next)?.exp()),
            Node::LieDeriv(z, s) => {
                // coefficient of t in S(ω − t·L_ζω, p + t·ζ(p))
                let t = MultiDual::infinitesimal(next);
                let moved = omega.add(&omega.lie_derivative(z).scaled(&-t.clone()));
                let zp = z.ambient(p);
                let p2: Vec<MultiDual> = p.iter().zip(&zp).map(|(a, b)| a + &(b * &t)).collect();
                Ok(s.evaluate(&moved, &p2, next + 1)?.part(next))
            }
        }
    }

    pub fn evaluate_f64(&self, omega: &TestForm, p: &[f64]) -> Result<f64> {
        Ok(self.evaluate(omega, &lift(p), 0)?.re())
    }

    /// `d₁R(ω, p)(η)`: derivative of `ω ↦ R(ω, p)` in direction `η`.
    pub fn d1(&self, omega: &TestForm, p: &[MultiDual], eta: &TestForm, next: usize) -> Result<MultiDual> {
        let next = next.max(omega.span()).max(eta.span()).max(span_of(p));
        match self.node.as_ref() {
            Node::EmbedDist(u) => u.pair(eta),
            Node::EmbedSmooth(_) => Ok(MultiDual::zero()),
            Node::Sum(c) => {
                let mut total = MultiDual::zero();
                for r in c {
                    total += r.d1(omega, p, eta, next)?;
                }
                Ok(total)
            }
            Node::ScalarMul(a, r) => Ok(r.d1(omega, p, eta, next)?.scale(*a)),
            Node::Product(c) => {
                let values: Vec<MultiDual> = c.iter().map(|r| r.evaluate(omega, p, next)).collect::<Result<_>>()?;
                let mut total = MultiDual::zero();
                for (i, r) in c.iter().enumerate() {
                    let mut term = r.d1(omega, p, eta, next)?;
                    for (j, v) in values.iter().enumerate() {
                        if j != i {
                            term = &term * v;
                        }
                    }
                    total += term;
                }
                Ok(total)
            }
            Node::Exp(r) => Ok(&r.evaluate(omega, p, next)?.exp() * &r.d1(omega, p, eta, next)?),
            Node::LieDeriv(..) => {
                // the defining formula differentiated in ω: coefficient of s in R(ω + s·η, p)
                let s = MultiDual::infinitesimal(next);
                let shifted = omega.add(&eta.scaled(&s));
                Ok(self.evaluate(&shifted, p, next + 1)?.part(next))
            }
        }
    }

    /// `p ↦ R(ω, p)` differentiated along `ζ` with `ω` fixed.
    pub fn point_derivative(
        &self,
        omega: &TestForm,
        p: &[MultiDual],
        field: &VectorField,
        next: usize,
    ) -> Result<MultiDual> {
        let next = next.max(omega.span()).max(span_of(p));
        let t = MultiDual::infinitesimal(next);
        let zp = field.ambient(p);
        let p2: Vec<MultiDual> = p.iter().zip(&zp).map(|(a, b)| a + &(b * &t)).collect();
        Ok(self.evaluate(omega, &p2, next + 1)?.part(next))
    }

    /// Whether the tree contains an `ι` node.
    pub fn depends_on_form(&self) -> bool {
        match self.node.as_ref() {
            Node::EmbedDist(u) => !u.is_zero(),
            Node::EmbedSmooth(_) => false,
            Node::Sum(c) | Node::Product(c) => c.iter().any(Representative::depends_on_form),
            Node::ScalarMul(_, r) | Node::Exp(r) | Node::LieDeriv(_, r) => r.depends_on_form(),
        }
    }
}
