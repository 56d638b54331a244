use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dual::{lift, MultiDual};
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::region::BoxRegion;

/// Largest mollifier order accepted by [`build_mollifier`].
pub const MAX_MOLLIFIER_ORDER: usize = 8;
/// Tolerance on the unit integral of functions flagged `unit`.
pub const UNIT_TOL: f64 = 1e-10;

pub type LocalDensity = Arc<dyn Fn(&[MultiDual]) -> MultiDual + Send + Sync>;

/// A smooth compactly supported function on ℝⁿ.
#[derive(Clone)]
pub struct LocalTestFunction {
    name: String,
    dim: usize,
    support: BoxRegion,
    density: LocalDensity,
    integral: f64,
    unit: bool,
}

impl fmt::Debug for LocalTestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalTestFunction")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("integral", &self.integral)
            .finish()
    }
}

impl LocalTestFunction {
    /// Wrap a density vanishing outside `support`; the integral is computed once.
    pub fn new(
        name: &str,
        support: BoxRegion,
        density: impl Fn(&[MultiDual]) -> MultiDual + Send + Sync + 'static,
    ) -> Result<Self> {
        let density: LocalDensity = Arc::new(density);
        let d = density.clone();
        let integral = integrate(&support, 0.0, |x| Ok(d(&lift(x)).re()))?;
        Ok(Self {
            name: name.to_string(),
            dim: support.dim(),
            support,
            density,
            integral,
            unit: false,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            name: "0".into(),
            dim,
            support: BoxRegion::cube(dim, 0.0),
            density: Arc::new(|_| MultiDual::zero()),
            integral: 0.0,
            unit: false,
        }
    }

    /// Flag as unit-integral after checking `∫ = 1` within [`UNIT_TOL`].
    pub fn into_unit(mut self) -> Result<Self> {
        if (self.integral - 1.0).abs() > UNIT_TOL {
            return Err(Error::Construction(format!(
                "`{}` has integral {} instead of 1",
                self.name, self.integral
            )));
        }
        self.unit = true;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &BoxRegion {
        &self.support
    }

    pub fn is_unit(&self) -> bool {
        self.unit
    }

    pub fn cached_integral(&self) -> f64 {
        self.integral
    }

    pub fn density(&self) -> &LocalDensity {
        &self.density
    }

    /// Value at a point; zero outside the support box.
    pub fn eval(&self, x: &[MultiDual]) -> MultiDual {
        let re: Vec<f64> = x.iter().map(MultiDual::re).collect();
        if !self.support.contains(&re) {
            return MultiDual::zero();
        }
        (self.density)(x)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.eval(&lift(x)).re()
    }

    /// `c·φ`.
    pub fn scaled(&self, c: f64) -> LocalTestFunction {
        let d = self.density.clone();
        LocalTestFunction {
            name: format!("{c}*{}", self.name),
            dim: self.dim,
            support: self.support.clone(),
            density: Arc::new(move |x| d(x).scale(c)),
            integral: c * self.integral,
            unit: false,
        }
    }

    /// `∂^β φ` by nested dual numbers.
    pub fn derivative(&self, beta: &[usize]) -> LocalTestFunction {
        let d = self.density.clone();
        let beta_v = beta.to_vec();
        let support = self.support.clone();
        let name = format!("d^{beta:?} {}", self.name);
        let f = move |x: &[MultiDual]| -> MultiDual {
            let base = crate::dual::span_of(x);
            let mut y = x.to_vec();
            let mut vars = Vec::new();
            let mut next = base;
            for (axis, &k) in beta_v.iter().enumerate() {
                for _ in 0..k {
                    y[axis] = &y[axis] + &MultiDual::infinitesimal(next);
                    vars.push(next);
                    next += 1;
                }
            }
            let mut v = d(&y);
            for var in vars.iter().rev() {
                v = v.part(*var);
            }
            v
        };
        let integral = integrate(&support, 0.0, |x| Ok(f(&lift(x)).re())).unwrap_or(0.0);
        LocalTestFunction {
            name,
            dim: self.dim,
            support,
            density: Arc::new(f),
            integral,
            unit: false,
        }
    }
}

/// `∫ φ`.
pub fn integrate_function(phi: &LocalTestFunction) -> Result<f64> {
    if phi.support.is_empty() {
        return Ok(0.0);
    }
    let d = phi.density.clone();
    integrate(&phi.support, 0.0, |x| Ok(d(&lift(x)).re()))
}

fn monomial(x: &[f64], beta: &[usize]) -> f64 {
    x.iter().zip(beta).map(|(v, k)| v.powi(*k as i32)).product()
}

/// `∫ φ(ξ) ξ^β dξ`.
pub fn moment(phi: &LocalTestFunction, beta: &[usize]) -> Result<f64> {
    if phi.support.is_empty() {
        return Ok(0.0);
    }
    let d = phi.density.clone();
    integrate(&phi.support, 0.0, |x| Ok(d(&lift(x)).re() * monomial(x, beta)))
}

/// `y ↦ ε^{-n} φ((y − x)/ε)`.
pub fn scale_translate(phi: &LocalTestFunction, eps: f64, x: &[f64]) -> LocalTestFunction {
    let n = phi.dim;
    let d = phi.density.clone();
    let center = x.to_vec();
    let factor = eps.powi(-(n as i32));
    LocalTestFunction {
        name: format!("T_{x:?} S_{eps} {}", phi.name),
        dim: n,
        support: phi.support.scaled_translated(eps, x),
        density: Arc::new(move |y| {
            let xi: Vec<MultiDual> = y
                .iter()
                .zip(&center)
                .map(|(yi, ci)| (yi - &MultiDual::constant(*ci)).scale(1.0 / eps))
                .collect();
            d(&xi).scale(factor)
        }),
        integral: phi.integral,
        unit: phi.unit,
    }
}

/// Multi-indices `β ∈ ℕⁿ` with `lo ≤ |β| ≤ hi`, graded then lexicographically descending.
pub fn multi_indices(n: usize, lo: usize, hi: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for deg in lo..=hi {
        let mut level = Vec::new();
        compositions(n, deg, &mut Vec::new(), &mut level);
        out.extend(level);
    }
    out
}

fn compositions(n: usize, deg: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() + 1 == n {
        let mut b = prefix.clone();
        b.push(deg);
        out.push(b);
        return;
    }
    for k in (0..=deg).rev() {
        prefix.push(k);
        compositions(n, deg - k, prefix, out);
        prefix.pop();
    }
}

/// `b(x) = exp(−1/(1 − |x|²))` on the open unit ball.
pub fn bump(x: &[MultiDual]) -> MultiDual {
    let r2: MultiDual = x.iter().map(|v| v * v).sum();
    let t = 1.0 - &r2;
    if t.re() <= 0.0 {
        return MultiDual::zero();
    }
    (-t.recip()).exp()
}

/// Unit-integral `ρ_m = P(|x|²)·b(x)` supported in `[−1, 1]ⁿ` whose moments of order `1..=m` vanish.
///
/// `P` is radial of degree `⌊m/2⌋` in `|x|²`; odd moments vanish by symmetry and
/// the even ones are solved for, so `ρ_{2j}` and `ρ_{2j+1}` coincide.
pub fn build_mollifier(m: usize, n: usize) -> Result<LocalTestFunction> {
    if m > MAX_MOLLIFIER_ORDER {
        return Err(Error::Construction(format!(
            "mollifier order {m} exceeds the supported maximum {MAX_MOLLIFIER_ORDER}"
        )));
    }
    if n == 0 || n > 2 {
        return Err(Error::Construction(format!(
            "mollifiers are available for n ∈ {{1, 2}}, got {n}"
        )));
    }
    let j = m / 2 + 1;
    let support = BoxRegion::cube(n, 1.0);
    let mut a = DMatrix::<f64>::zeros(j, j);
    for row in 0..j {
        for col in 0..j {
            a[(row, col)] = integrate(&support, 0.0, |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                Ok(x[0].powi(2 * row as i32) * r2.powi(col as i32) * bump(&lift(x)).re())
            })?;
        }
    }
    let mut rhs = DVector::<f64>::zeros(j);
    rhs[0] = 1.0;
    let c = a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Construction(format!("singular moment system for m = {m}, n = {n}")))?;
    let coeffs: Vec<f64> = c.iter().copied().collect();
    let name = if m <= 1 { "rho".to_string() } else { format!("rho{m}") };
    let k = coeffs.clone();
    let phi = LocalTestFunction::new(&name, support, move |x| {
        let b = bump(x);
        if b.is_zero() {
            return b;
        }
        let r2: MultiDual = x.iter().map(|v| v * v).sum();
        let mut p = MultiDual::constant(k[k.len() - 1]);
        for ck in k.iter().rev().skip(1) {
            p = &(&p * &r2) + &MultiDual::constant(*ck);
        }
        &p * &b
    })?;
    for beta in multi_indices(n, 1, m) {
        let mu = moment(&phi, &beta)?;
        if mu.abs() > 1e-9 {
            return Err(Error::Construction(format!(
                "moment {beta:?} of {name} is {mu:e}; increase the basis size"
            )));
        }
    }
    phi.into_unit()
}
