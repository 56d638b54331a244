//! Composite Gauss–Legendre quadrature on boxes with dyadic panel refinement.

use std::sync::OnceLock;

use crate::dual::MultiDual;
use crate::error::{Error, Result};
use crate::region::BoxRegion;

/// Nodes per panel along each axis.
pub const NODES_PER_PANEL: usize = 32;
/// Successive refinements must agree to this absolute tolerance.
pub const AGREEMENT_TOL: f64 = 1e-13;
/// Relative agreement against `∫|f|`.
pub const MASS_TOL: f64 = 1e-13;
/// Maximum number of panel doublings before giving up.
pub const MAX_DOUBLINGS: usize = 20;
/// Panels per axis at the coarsest level.
const START_PANELS: usize = 1;
/// Upper bound on integrand evaluations per level, which caps refinement in 2D.
const MAX_NODES_PER_LEVEL: usize = 1 << 22;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn reference_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(NODES_PER_PANEL))
}

/// Values that can be accumulated by a quadrature rule.
pub trait QuadValue: Clone {
    fn zero_like(&self) -> Self;
    /// Compensated `sum += w·x` (Neumaier), with `comp` the running correction.
    fn accumulate(sum: &mut Self, comp: &mut Self, w: f64, x: &Self);
    fn finish(sum: Self, comp: Self) -> Self;
    fn max_abs_diff(&self, other: &Self) -> f64;
    fn max_abs(&self) -> f64;
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, term: f64) {
    let t = *sum + term;
    if sum.abs() >= term.abs() {
        *comp += (*sum - t) + term;
    } else {
        *comp += (term - t) + *sum;
    }
    *sum = t;
}

impl QuadValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn accumulate(sum: &mut Self, comp: &mut Self, w: f64, x: &Self) {
        neumaier(sum, comp, w * x);
    }
    fn finish(sum: Self, comp: Self) -> Self {
        sum + comp
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Vec<f64> {
    fn zero_like(&self) -> Self {
        vec![0.0; self.len()]
    }
    fn accumulate(sum: &mut Self, comp: &mut Self, w: f64, x: &Self) {
        if sum.len() < x.len() {
            sum.resize(x.len(), 0.0);
            comp.resize(x.len(), 0.0);
        }
        for i in 0..x.len() {
            neumaier(&mut sum[i], &mut comp[i], w * x[i]);
        }
    }
    fn finish(sum: Self, comp: Self) -> Self {
        sum.iter().zip(&comp).map(|(s, c)| s + c).collect()
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter().zip(other).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl QuadValue for MultiDual {
    fn zero_like(&self) -> Self {
        MultiDual::zero()
    }
    fn accumulate(sum: &mut Self, comp: &mut Self, w: f64, x: &Self) {
        let mut s = sum.coefficients().to_vec();
        let mut c = comp.coefficients().to_vec();
        let terms = x.coefficients();
        let n = s.len().max(terms.len());
        s.resize(n, 0.0);
        c.resize(n, 0.0);
        for (i, t) in terms.iter().enumerate() {
            neumaier(&mut s[i], &mut c[i], w * t);
        }
        *sum = MultiDual::from_coefficients(&s);
        *comp = MultiDual::from_coefficients(&c);
    }
    fn finish(sum: Self, comp: Self) -> Self {
        &sum + &comp
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        MultiDual::max_abs_diff(self, other)
    }
    fn max_abs(&self) -> f64 {
        MultiDual::max_abs(self)
    }
}

/// Apply the composite rule with `panels` panels per axis.
pub fn composite<V, F>(region: &BoxRegion, panels: usize, f: &F) -> Result<V>
where
    V: QuadValue,
    F: Fn(&[f64]) -> Result<V>,
{
    Ok(composite_with_mass(region, panels, f)?.0)
}

/// Composite rule together with `Σ w·max|f|`, the scale of rounding in the sum.
fn composite_with_mass<V, F>(region: &BoxRegion, panels: usize, f: &F) -> Result<(V, f64)>
where
    V: QuadValue,
    F: Fn(&[f64]) -> Result<V>,
{
    let (nodes, weights) = reference_rule();
    let dim = region.dim();
    let per_axis = panels * nodes.len();
    let axes: Vec<Vec<(f64, f64)>> = (0..dim)
        .map(|i| {
            let h = (region.hi[i] - region.lo[i]) / panels as f64;
            let mut pts = Vec::with_capacity(per_axis);
            for p in 0..panels {
                let a = region.lo[i] + h * p as f64;
                for (x, w) in nodes.iter().zip(weights) {
                    pts.push((a + 0.5 * h * (x + 1.0), 0.5 * h * w));
                }
            }
            pts
        })
        .collect();

    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    let mut sum: Option<(V, V)> = None;
    let mut mass = 0.0;
    loop {
        let mut w = 1.0;
        for i in 0..dim {
            let (x, wi) = axes[i][idx[i]];
            point[i] = x;
            w *= wi;
        }
        let v = f(&point)?;
        mass += w.abs() * v.max_abs();
        let (s, c) = sum.get_or_insert_with(|| (v.zero_like(), v.zero_like()));
        V::accumulate(s, c, w, &v);

        let mut axis = dim;
        loop {
            if axis == 0 {
                let (s, c) = sum.expect("at least one node");
                return Ok((V::finish(s, c), mass));
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < per_axis {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Integrate `f` over `region`, doubling panels until two successive levels agree.
///
/// A degenerate (empty) box integrates to zero.
pub fn integrate<V, F>(region: &BoxRegion, zero: V, f: F) -> Result<V>
where
    V: QuadValue,
    F: Fn(&[f64]) -> Result<V>,
{
    if region.is_empty() {
        return Ok(zero);
    }
    let dim = region.dim() as u32;
    let mut panels = START_PANELS;
    let (mut prev, _) = composite_with_mass(region, panels, &f)?;
    for _ in 0..MAX_DOUBLINGS {
        panels *= 2;
        if (panels * NODES_PER_PANEL).pow(dim) > MAX_NODES_PER_LEVEL {
            break;
        }
        let (next, mass) = composite_with_mass(region, panels, &f)?;
        let diff = next.max_abs_diff(&prev);
        // cancelling integrands cannot agree below the rounding level of their mass
        if diff <= AGREEMENT_TOL.max(1e-14 * next.max_abs()).max(MASS_TOL * mass) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "no agreement to {AGREEMENT_TOL:e} on box {:?}..{:?} after {panels} panels per axis",
        region.lo, region.hi
    )))
}

/// Scalar convenience wrapper.
pub fn integrate_f64(region: &BoxRegion, f: impl Fn(&[f64]) -> Result<f64>) -> Result<f64> {
    integrate(region, 0.0, f)
}
