use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{estimate_order, EpsGrid, OrderEstimate, Samples};
use crate::dual::{lift, MultiDual};
use crate::error::{Error, Result};
use crate::expr::SmoothFn;
use crate::geometry::{Shape, VectorField};
use crate::region::BoxRegion;

use super::kernel::SmoothingKernel;
use super::two_slot::{lie_two_slot, Slot, TwoSlot};

/// Slope tolerance of the kernel certification checks.
pub const CERT_TOL: f64 = 0.25;
/// Sample points per axis over the known support box when searching for `sup_q`.
pub const SUPPORT_SAMPLES: usize = 201;
/// Largest `k + l` accepted by [`check_growth`].
pub const MAX_GROWTH_DEPTH: usize = 3;

fn q_samples(dim: usize) -> usize {
    if dim == 1 {
        SUPPORT_SAMPLES
    } else {
        41
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SupportViolation {
    pub eps: f64,
    pub p: Vec<f64>,
    pub ratio: f64,
}

/// Outcome of the support-shrinkage check `supp Φ(ε, p) ⊆ B_{εC}(p)`.
#[derive(Debug, Clone, Serialize)]
pub struct SupportReport {
    /// Smallest `C` with `r(ε) ≤ Cε` on the grid.
    pub c: f64,
    pub eps0: f64,
    pub passes: bool,
    /// Fitted order of the measured radius `r(ε)`.
    pub radius_order: OrderEstimate,
    pub samples: Samples,
    pub violations: Vec<SupportViolation>,
}

/// Measure the support radius of `Φ(ε, p)` over `K` and the ε grid.
pub fn check_support(
    kernel: &SmoothingKernel,
    compact: &BoxRegion,
    per_axis: usize,
    grid: &EpsGrid,
) -> Result<SupportReport> {
    let m = &kernel.manifold;
    let ps = m.sample_compact(compact, per_axis)?;
    let eps = grid.values();
    let rows: Vec<Vec<f64>> = eps
        .par_iter()
        .map(|&e| -> Result<Vec<f64>> {
            let mut per_p = Vec::with_capacity(ps.len());
            for p in &ps {
                let form = kernel.eval_f64(e, p)?;
                let mut r = 0.0f64;
                for t in form.terms() {
                    for y in t.support.grid(q_samples(m.dim)) {
                        let v = (t.density)(&lift(&y), 0)?.re();
                        if v != 0.0 {
                            let q = t.chart.from_coords(&y);
                            r = r.max(m.distance(p, &q)?);
                        }
                    }
                }
                per_p.push(r);
            }
            Ok(per_p)
        })
        .collect::<Result<_>>()?;
    let radius: Vec<f64> = rows.iter().map(|r| r.iter().copied().fold(0.0, f64::max)).collect();
    let ratios: Vec<f64> = radius.iter().zip(&eps).map(|(r, e)| r / e).collect();
    let c = ratios.iter().copied().fold(0.0, f64::max);
    let samples = Samples::new(eps.clone(), radius);
    let radius_order = estimate_order(&samples)?;
    let passes = radius_order.is_zero() || radius_order.slope >= 1.0 - CERT_TOL;
    let mut violations = Vec::new();
    if !passes {
        let reference = ratios[0];
        for (i, row) in rows.iter().enumerate() {
            for (j, r) in row.iter().enumerate() {
                let ratio = r / eps[i];
                if ratio > 1.1 * reference {
                    violations.push(SupportViolation {
                        eps: eps[i],
                        p: ps[j].clone(),
                        ratio,
                    });
                }
            }
        }
    }
    Ok(SupportReport {
        c,
        eps0: grid.eps0,
        passes,
        radius_order,
        samples,
        violations,
    })
}

/// Two-slot density `(p, q) ↦ Φ(ε, p)(q)` in the anchor chart at `p₀`.
fn kernel_two_slot(kernel: Arc<SmoothingKernel>, eps: f64, chart: Arc<crate::geometry::Chart>) -> TwoSlot {
    Arc::new(move |p: &[MultiDual], q: &[MultiDual], next: usize| kernel.eval(eps, p)?.density_in(&chart, q, next))
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub k: usize,
    pub l: usize,
    pub fields: Vec<String>,
    pub samples: Samples,
    pub estimate: OrderEstimate,
    /// `−(n + l)`.
    pub threshold: f64,
    pub passes: bool,
}

/// Fitted growth of `sup ‖L_θ₁…L_θ_l (L′_ζ₁+L_ζ₁)…(L′_ζ_k+L_ζ_k) Φ(ε, p)(q)‖`.
pub fn check_growth(
    kernel: Arc<SmoothingKernel>,
    compact: &BoxRegion,
    zetas: &[VectorField],
    thetas: &[VectorField],
    per_axis: usize,
    grid: &EpsGrid,
) -> Result<GrowthReport> {
    let (k, l) = (zetas.len(), thetas.len());
    if k + l > MAX_GROWTH_DEPTH {
        return Err(Error::Unsupported(format!(
            "derivative depth k + l = {} exceeds {MAX_GROWTH_DEPTH}",
            k + l
        )));
    }
    let m = kernel.manifold.clone();
    for f in zetas.iter().chain(thetas) {
        f.validate_on(&m)?;
    }
    let ps = m.sample_compact(compact, per_axis)?;
    let eps = grid.values();
    let n = m.dim;
    let values: Vec<f64> = eps
        .par_iter()
        .map(|&e| -> Result<f64> {
            let mut sup = 0.0f64;
            for p in &ps {
                let chart = kernel.anchor_chart(p)?;
                let mut f = kernel_two_slot(kernel.clone(), e, chart.clone());
                for z in zetas.iter().rev() {
                    f = lie_two_slot(f, z, chart.clone(), Slot::Both);
                }
                for t in thetas.iter().rev() {
                    f = lie_two_slot(f, t, chart.clone(), Slot::Second);
                }
                let form = kernel.eval_f64(e, p)?;
                let Some(qbox) = form.support_in(&chart) else { continue };
                let norm = chart.jacobian_det();
                let pd = lift(p);
                for q in qbox.grid(q_samples(n)) {
                    let v = f(&pd, &lift(&q), 0)?.re();
                    sup = sup.max(v.abs() * norm);
                }
            }
            Ok(sup)
        })
        .collect::<Result<_>>()?;
    let samples = Samples::new(eps, values);
    let estimate = estimate_order(&samples)?;
    let threshold = -((n + l) as f64);
    let passes = !estimate.super_polynomial && estimate.slope >= threshold - CERT_TOL;
    Ok(GrowthReport {
        k,
        l,
        fields: zetas.iter().chain(thetas).map(|f| f.name.clone()).collect(),
        samples,
        estimate,
        threshold,
        passes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproductionRow {
    pub function: String,
    pub samples: Samples,
    pub estimate: OrderEstimate,
    pub passes: bool,
}

/// Decay of `sup_{p∈K} |f(p) − ∫ f·Φ(ε, p)|` per test function.
#[derive(Debug, Clone, Serialize)]
pub struct OrderReport {
    pub m: usize,
    pub rows: Vec<ReproductionRow>,
    pub passes: bool,
}

impl OrderReport {
    pub fn min_order(&self) -> f64 {
        self.rows.iter().map(|r| r.estimate.slope).fold(f64::INFINITY, f64::min)
    }
}

/// Default test functions: coordinate monomials up to degree `m + 1` and one
/// trigonometric function (Fourier modes on the circle).
pub fn default_test_functions(shape: &Shape, dim: usize, m: usize) -> Vec<SmoothFn> {
    let mut out = Vec::new();
    match shape {
        Shape::Circle => {
            for k in 1..=2 {
                out.push(SmoothFn::parse(&format!("sin({k}*theta)")).expect("valid expression"));
                out.push(SmoothFn::parse(&format!("cos({k}*theta)")).expect("valid expression"));
            }
        }
        Shape::OpenBox(_) => {
            for d in 1..=m + 1 {
                if dim == 1 {
                    out.push(SmoothFn::parse(&format!("x^{d}")).expect("valid expression"));
                } else {
                    out.push(SmoothFn::parse(&format!("x0^{d}")).expect("valid expression"));
                    out.push(SmoothFn::parse(&format!("x1^{d}")).expect("valid expression"));
                }
            }
            if dim == 2 {
                out.push(SmoothFn::parse("x0*x1").expect("valid expression"));
                out.push(SmoothFn::parse("sin(x0 + 2*x1)").expect("valid expression"));
            } else {
                out.push(SmoothFn::parse("sin(x)").expect("valid expression"));
            }
        }
    }
    out
}

/// Reproduction samples `sup_{p∈K} |f(p) − ∫ f·Φ(ε, p)|`.
pub fn reproduction_samples(
    kernel: &SmoothingKernel,
    f: &SmoothFn,
    compact: &BoxRegion,
    per_axis: usize,
    grid: &EpsGrid,
) -> Result<Samples> {
    let ps = kernel.manifold.sample_compact(compact, per_axis)?;
    let eps = grid.values();
    let values: Vec<f64> = eps
        .par_iter()
        .map(|&e| -> Result<f64> {
            let mut sup = 0.0f64;
            for p in &ps {
                let form = kernel.eval_f64(e, p)?;
                let v = form.integrate_ambient(|x| f.eval_f64(x))?.re();
                sup = sup.max((f.eval_f64(p) - v).abs());
            }
            Ok(sup)
        })
        .collect::<Result<_>>()?;
    Ok(Samples::new(eps, values))
}

/// `Φ ∈ Ã_m` on the sampled functions: every order is at least `m + 1 − tol`.
pub fn check_order_m(
    kernel: &SmoothingKernel,
    fs: &[SmoothFn],
    compact: &BoxRegion,
    m: usize,
    per_axis: usize,
    grid: &EpsGrid,
) -> Result<OrderReport> {
    let defaults;
    let fs = if fs.is_empty() {
        defaults = default_test_functions(&kernel.manifold.shape, kernel.dim(), m);
        &defaults[..]
    } else {
        fs
    };
    let mut rows = Vec::new();
    for f in fs {
        let samples = reproduction_samples(kernel, f, compact, per_axis, grid)?;
        let estimate = estimate_order(&samples)?;
        rows.push(ReproductionRow {
            function: f.source().to_string(),
            passes: estimate.slope >= (m + 1) as f64 - CERT_TOL,
            samples,
            estimate,
        });
    }
    let passes = rows.iter().all(|r| r.passes);
    Ok(OrderReport { m, rows, passes })
}
