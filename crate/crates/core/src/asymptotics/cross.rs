use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::dual::lift;
use crate::error::{Error, Result};
use crate::genfunc::Representative;
use crate::geometry::Chart;
use crate::kernels::{from_local, CutoffSpec, SmoothingKernel};
use crate::region::BoxRegion;
use crate::testobjects::{check_domain, SharedFamily, TestForm};

use super::estimate::{estimate_order, EpsGrid, OrderEstimate, Samples};
use super::sweep::{clustered_grid, sweep};
use super::verdict::{moderate_exponent, negligible_level, DEFAULT_L_MAX, SLOPE_TOL};

/// Verdicts read off one path of the local/global comparison.
#[derive(Clone, Debug, Serialize)]
pub struct PathResult {
    pub samples: Samples,
    pub estimate: OrderEstimate,
    /// `None` when the slope is not polynomially bounded.
    pub moderate: Option<u32>,
    pub negligible_level: u32,
}

impl PathResult {
    fn new(samples: Samples, l_max: u32) -> Result<Self> {
        let estimate = estimate_order(&samples)?;
        let moderate = if estimate.super_polynomial {
            None
        } else {
            moderate_exponent(estimate.slope, SLOPE_TOL)
        };
        let negligible_level = negligible_level(estimate.slope, SLOPE_TOL, l_max);
        Ok(Self {
            samples,
            estimate,
            moderate,
            negligible_level,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossCheck {
    pub representative: String,
    pub chart: String,
    pub family: String,
    pub family_order: usize,
    /// Global kernel order guaranteed by the family (`2m − 1` degradation for negligibility).
    pub global_order: usize,
    pub local: PathResult,
    pub global: PathResult,
    pub agree: bool,
    pub diagnostic: Option<String>,
}

/// Local test on `T_x S_ε φ(ε, x)` against the global test through `from_local`.
///
/// Agreement means equal moderateness exponents and equal negligibility levels.
#[allow(clippy::too_many_arguments)]
pub fn cross_check_local(
    rep: &Representative,
    chart: Arc<Chart>,
    family: SharedFamily,
    family_order: usize,
    compact: &BoxRegion,
    background: Arc<SmoothingKernel>,
    per_axis: usize,
    grid: &EpsGrid,
) -> Result<CrossCheck> {
    grid.validate()?;
    if compact.dim() != chart.dim {
        return Err(Error::Domain("compact and chart dimensions differ".into()));
    }
    let l_max = DEFAULT_L_MAX;
    let eps = grid.values();
    let local_values: Vec<f64> = eps
        .par_iter()
        .map(|&e| -> Result<f64> {
            let mut sup = 0.0f64;
            for x in &clustered_grid(compact, per_axis, e) {
                check_domain(family.as_ref(), e, x, compact)?;
                let fam = family.clone();
                let xd = lift(x);
                let xc = xd.clone();
                let w = TestForm::concentrated(chart.clone(), &family.support(e, x), e, &xd, move |xi, next| {
                    fam.eval(e, &xc, xi, next)
                })?;
                let v = rep.evaluate_f64(&w, &chart.from_coords(x))?;
                if !v.is_finite() {
                    return Ok(f64::INFINITY);
                }
                sup = sup.max(v.abs());
            }
            Ok(sup)
        })
        .collect::<Result<_>>()?;
    let local = PathResult::new(Samples::new(eps, local_values), l_max)?;

    let cutoff = CutoffSpec::around(compact, &chart.image)?;
    let kernel = from_local(
        &format!("from_local({})", family.name()),
        family.clone(),
        chart.clone(),
        compact.clone(),
        cutoff,
        background,
        family_order,
    )?;
    let ambient = ambient_box(&chart, compact);
    let global = PathResult::new(sweep(rep, &kernel, &ambient, &[], per_axis, grid)?.samples, l_max)?;

    let agree = local.moderate == global.moderate && local.negligible_level == global.negligible_level;
    let diagnostic = (!agree).then(|| {
        format!(
            "local slope {:.3} (N {:?}, l {}) vs global slope {:.3} (N {:?}, l {})",
            local.estimate.slope,
            local.moderate,
            local.negligible_level,
            global.estimate.slope,
            global.moderate,
            global.negligible_level
        )
    });
    Ok(CrossCheck {
        representative: rep.to_string(),
        chart: chart.id.clone(),
        family: family.name(),
        family_order,
        global_order: (2 * family_order).saturating_sub(1),
        local,
        global,
        agree,
        diagnostic,
    })
}

/// `ψ⁻¹(K)` for an affine chart, as an ambient box.
fn ambient_box(chart: &Chart, k: &BoxRegion) -> BoxRegion {
    let a = chart.from_coords(&k.lo);
    let b = chart.from_coords(&k.hi);
    let lo = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
    let hi = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
    BoxRegion::new(lo, hi)
}
