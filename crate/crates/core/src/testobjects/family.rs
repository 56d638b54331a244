use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{estimate_order, EpsGrid, OrderEstimate, Samples};
use crate::dual::{lift, MultiDual};
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::region::BoxRegion;

use super::function::{multi_indices, LocalTestFunction};

/// Slope tolerance used by moment classification.
pub const CLASS_TOL: f64 = 0.25;

/// An ε- and x-indexed family `φ(ε, x) ∈ 𝒟(ℝⁿ)` of local test functions.
pub trait LocalTestFamily: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    /// `φ(ε, x)(ξ)`; `x` may be jet-valued, `next` is the first free infinitesimal.
    fn eval(&self, eps: f64, x: &[MultiDual], xi: &[MultiDual], next: usize) -> Result<MultiDual>;

    /// Closed box in ξ containing `supp φ(ε, x)`.
    fn support(&self, eps: f64, x: &[f64]) -> BoxRegion;

    /// `ε₀(L)`: the family is defined and smooth on `(0, ε₀] × L`.
    fn eps_threshold(&self, _compact: &BoxRegion) -> f64 {
        1.0
    }
}

pub type SharedFamily = Arc<dyn LocalTestFamily>;

/// Check that `(ε, x)` lies in the family's domain descriptor.
pub fn check_domain(fam: &dyn LocalTestFamily, eps: f64, x: &[f64], compact: &BoxRegion) -> Result<()> {
    let e0 = fam.eps_threshold(compact);
    if !(eps > 0.0 && eps <= e0) || !compact.contains(x) {
        return Err(Error::Domain(format!(
            "family `{}` is not defined at ε = {eps}, x = {x:?} (threshold {e0} on {:?}..{:?})",
            fam.name(),
            compact.lo,
            compact.hi
        )));
    }
    Ok(())
}

/// `φ(ε, x)` as a standalone function of ξ.
pub fn family_at(fam: &SharedFamily, eps: f64, x: &[f64]) -> Result<LocalTestFunction> {
    let f = fam.clone();
    let xd = lift(x);
    let name = format!("{}(ε={eps}, x={x:?})", fam.name());
    LocalTestFunction::new(&name, fam.support(eps, x), move |xi| {
        f.eval(eps, &xd, xi, crate::dual::span_of(xi))
            .unwrap_or_else(|_| MultiDual::constant(f64::NAN))
    })
}

/// `φ(ε, x) = ψ` for all `(ε, x)`.
pub struct ConstantFamily {
    pub base: LocalTestFunction,
}

impl LocalTestFamily for ConstantFamily {
    fn name(&self) -> String {
        self.base.name().to_string()
    }
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn eval(&self, _eps: f64, _x: &[MultiDual], xi: &[MultiDual], _next: usize) -> Result<MultiDual> {
        Ok(self.base.eval(xi))
    }
    fn support(&self, _eps: f64, _x: &[f64]) -> BoxRegion {
        self.base.support().clone()
    }
}

/// `φ(ε, x) = base + c·ε^a·perturbation`.
pub struct PerturbedFamily {
    pub base: LocalTestFunction,
    pub perturbation: LocalTestFunction,
    pub coefficient: f64,
    pub exponent: f64,
}

impl LocalTestFamily for PerturbedFamily {
    fn name(&self) -> String {
        format!(
            "{} + {}·ε^{}·{}",
            self.base.name(),
            self.coefficient,
            self.exponent,
            self.perturbation.name()
        )
    }
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn eval(&self, eps: f64, _x: &[MultiDual], xi: &[MultiDual], _next: usize) -> Result<MultiDual> {
        let w = self.coefficient * eps.powf(self.exponent);
        Ok(&self.base.eval(xi) + &self.perturbation.eval(xi).scale(w))
    }
    fn support(&self, _eps: f64, _x: &[f64]) -> BoxRegion {
        self.base.support().hull(self.perturbation.support())
    }
}

/// `φ(ε, x)(ξ) = r^{-n} ψ(ξ/r)` with `r = factor·ε^{-exponent}`.
pub struct DilatedFamily {
    pub base: LocalTestFunction,
    pub factor: f64,
    pub exponent: f64,
}

impl DilatedFamily {
    fn radius(&self, eps: f64) -> f64 {
        self.factor * eps.powf(-self.exponent)
    }
}

impl LocalTestFamily for DilatedFamily {
    fn name(&self) -> String {
        format!("dilate({}, {}·ε^-{})", self.base.name(), self.factor, self.exponent)
    }
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn eval(&self, eps: f64, _x: &[MultiDual], xi: &[MultiDual], _next: usize) -> Result<MultiDual> {
        let r = self.radius(eps);
        let s: Vec<MultiDual> = xi.iter().map(|v| v.scale(1.0 / r)).collect();
        Ok(self.base.eval(&s).scale(r.powi(-(self.dim() as i32))))
    }
    fn support(&self, eps: f64, _x: &[f64]) -> BoxRegion {
        self.base
            .support()
            .scaled_translated(self.radius(eps), &vec![0.0; self.dim()])
    }
}

/// Moment class of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MomentClass {
    Box(usize),
    Delta(usize),
    Neither,
}

impl fmt::Display for MomentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentClass::Box(m) => write!(f, "box({m})"),
            MomentClass::Delta(m) => write!(f, "delta({m})"),
            MomentClass::Neither => f.write_str("neither"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub beta: Vec<usize>,
    pub estimate: OrderEstimate,
    pub box_ok: bool,
    pub delta_ok: bool,
}

/// Fitted decay orders of the moments `1 ≤ |β| ≤ m` and the resulting class.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub family: String,
    pub m: usize,
    pub rows: Vec<MomentRow>,
    pub class: MomentClass,
}

impl MomentReport {
    pub fn is_box(&self) -> bool {
        self.rows.iter().all(|r| r.box_ok)
    }

    pub fn is_delta(&self) -> bool {
        self.rows.iter().all(|r| r.delta_ok)
    }

    pub fn order(&self, beta: &[usize]) -> Option<f64> {
        self.rows.iter().find(|r| r.beta == beta).map(|r| r.estimate.slope)
    }

    /// CSV with columns `beta, fitted_order, r2, class`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["beta", "fitted_order", "r2", "class"])
            .map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.rows {
            let beta = r.beta.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(";");
            let class = if r.box_ok {
                "box"
            } else if r.delta_ok {
                "delta"
            } else {
                "neither"
            };
            w.write_record([
                beta,
                format!("{}", r.estimate.slope),
                format!("{:.6}", r.estimate.r2),
                class.into(),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `sup_{x∈K} |∫ φ(ε, x)(ξ) ξ^β dξ|` for every grid ε.
pub fn moment_samples(
    fam: &dyn LocalTestFamily,
    beta: &[usize],
    compact: &BoxRegion,
    per_axis: usize,
    grid: &EpsGrid,
) -> Result<Samples> {
    let xs = compact.grid(per_axis);
    let eps = grid.values();
    let values: Vec<f64> = eps
        .par_iter()
        .map(|&e| -> Result<f64> {
            let mut sup = 0.0f64;
            for x in &xs {
                check_domain(fam, e, x, compact)?;
                let xd = lift(x);
                let v = integrate(&fam.support(e, x), 0.0, |xi| {
                    let mono: f64 = xi.iter().zip(beta).map(|(v, k)| v.powi(*k as i32)).product();
                    Ok(fam.eval(e, &xd, &lift(xi), 0)?.re() * mono)
                })?;
                sup = sup.max(v.abs());
            }
            Ok(sup)
        })
        .collect::<Result<_>>()?;
    Ok(Samples::new(eps, values))
}

/// Classify a family as `Box(m)`, `Delta(m)` or neither.
///
/// `Box(m)`: every moment of order `1..=m` decays like `ε^m`.
/// `Delta(m)`: the moment of order `|β|` decays like `ε^{m+1−|β|}`.
pub fn classify_family(
    fam: &dyn LocalTestFamily,
    m: usize,
    compact: &BoxRegion,
    per_axis: usize,
    grid: &EpsGrid,
) -> Result<MomentReport> {
    let mut rows = Vec::new();
    for beta in multi_indices(fam.dim(), 1, m) {
        let s = moment_samples(fam, &beta, compact, per_axis, grid)?;
        let est = estimate_order(&s)?;
        let k: usize = beta.iter().sum();
        rows.push(MomentRow {
            box_ok: est.slope >= m as f64 - CLASS_TOL,
            delta_ok: est.slope >= (m + 1 - k) as f64 - CLASS_TOL,
            beta,
            estimate: est,
        });
    }
    let box_ok = rows.iter().all(|r| r.box_ok);
    let delta_ok = rows.iter().all(|r| r.delta_ok);
    let class = if box_ok {
        MomentClass::Box(m)
    } else if delta_ok {
        MomentClass::Delta(m)
    } else {
        MomentClass::Neither
    };
    Ok(MomentReport {
        family: fam.name(),
        m,
        rows,
        class,
    })
}

/// Spot check of uniform boundedness: x-derivatives up to order 4 of
/// `φ(ε, x)(ξ)` on sample grids stay bounded as ε → 0, and the ξ-support
/// does not grow.
pub fn spot_check_bounded(fam: &dyn LocalTestFamily, compact: &BoxRegion, grid: &EpsGrid) -> Result<bool> {
    let n = fam.dim();
    let xs = compact.grid(5);
    let eps = grid.values();
    let mut sups = Vec::with_capacity(eps.len());
    let mut radii = Vec::with_capacity(eps.len());
    for &e in &eps {
        let mut sup = 0.0f64;
        let mut radius = 0.0f64;
        for x in &xs {
            check_domain(fam, e, x, compact)?;
            let supp = fam.support(e, x);
            radius = radius.max(supp.lo.iter().chain(&supp.hi).fold(0.0f64, |a, v| a.max(v.abs())));
            for xi in supp.grid(9) {
                for axis in 0..n {
                    // x + d0 + … + d3 along one axis: coefficient of d0⋯d_{k−1} is ∂^k_x
                    let mut xd = lift(x);
                    for v in 0..4 {
                        xd[axis] = &xd[axis] + &MultiDual::infinitesimal(v);
                    }
                    let val = fam.eval(e, &xd, &lift(&xi), 4)?;
                    for k in 0..=4usize {
                        sup = sup.max(val.coeff((1 << k) - 1).abs());
                    }
                }
            }
        }
        sups.push(sup);
        radii.push(radius);
    }
    let grows = |v: &[f64]| -> Result<bool> {
        let est = estimate_order(&Samples::new(eps.clone(), v.to_vec()))?;
        Ok(!est.is_zero() && est.slope < -CLASS_TOL)
    };
    Ok(!grows(&sups)? && !grows(&radii)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testobjects::function::build_mollifier;

    fn grid() -> EpsGrid {
        EpsGrid::default()
    }

    #[test]
    fn constant_mollifier_family_is_box() {
        let fam = ConstantFamily {
            base: build_mollifier(3, 1).unwrap(),
        };
        let r = classify_family(&fam, 3, &BoxRegion::interval(-1.0, 1.0), 3, &grid()).unwrap();
        assert_eq!(r.class, MomentClass::Box(3));
        assert!(r.rows.iter().all(|row| row.estimate.is_zero()));
    }

    #[test]
    fn dilated_family_support_grows() {
        let fam = DilatedFamily {
            base: build_mollifier(0, 1).unwrap(),
            factor: 1.0,
            exponent: 0.5,
        };
        assert!(!spot_check_bounded(&fam, &BoxRegion::interval(-1.0, 1.0), &grid()).unwrap());
        let fixed = ConstantFamily {
            base: build_mollifier(0, 1).unwrap(),
        };
        assert!(spot_check_bounded(&fixed, &BoxRegion::interval(-1.0, 1.0), &grid()).unwrap());
    }

    #[test]
    fn domain_threshold_enforced() {
        struct Short;
        impl LocalTestFamily for Short {
            fn name(&self) -> String {
                "short".into()
            }
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, _: f64, _: &[MultiDual], _: &[MultiDual], _: usize) -> Result<MultiDual> {
                Ok(MultiDual::zero())
            }
            fn support(&self, _: f64, _: &[f64]) -> BoxRegion {
                BoxRegion::cube(1, 1.0)
            }
            fn eps_threshold(&self, _: &BoxRegion) -> f64 {
                0.1
            }
        }
        let e = classify_family(&Short, 1, &BoxRegion::interval(0.0, 1.0), 3, &grid()).unwrap_err();
        assert!(e.to_string().contains("ε = 0.25"), "{e}");
    }
}
