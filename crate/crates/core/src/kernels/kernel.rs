use std::fmt;
use std::sync::Arc;

use crate::dual::{lift, MultiDual};
use crate::error::{Error, Result};
use crate::geometry::{Chart, Manifold};
use crate::region::BoxRegion;
use crate::testobjects::{build_mollifier, check_domain, LocalTestFamily, LocalTestFunction, SharedFamily, TestForm};

use super::cutoff::{lambda, CutoffSpec};

#[derive(Clone)]
pub enum KernelKind {
    /// `ε^{-n} ρ((y − ψ(p))/ε) dⁿy` in a fixed chart, or in the best chart at `p` when `chart` is `None`.
    Mollifier {
        rho: LocalTestFunction,
        chart: Option<Arc<Chart>>,
    },
    /// `(1 − χ̂λ)Φ₁ + χ̂λ·ψ*(ε^{-n} φ(ε, ψp)((y − ψp)/ε) χ₁(y) dⁿy)`.
    FromLocal {
        family: SharedFamily,
        chart: Arc<Chart>,
        compact: BoxRegion,
        cutoff: CutoffSpec,
        background: Arc<SmoothingKernel>,
        /// `λ` is applied as `λ(ε/ε₁)` so that the local term stays inside `{χ₁ = 1}`.
        lambda_scale: f64,
    },
}

/// A smoothing kernel `Φ: (ε, p) ↦ Φ(ε, p) ∈ Â₀(X)`.
#[derive(Clone)]
pub struct SmoothingKernel {
    pub name: String,
    pub manifold: Arc<Manifold>,
    pub kind: KernelKind,
    /// Claimed support constant `C` of `supp Φ(ε, p) ⊆ B_{εC}(p)`.
    pub support_constant: f64,
    /// Largest ε for which the support claim is made.
    pub eps0: f64,
    /// Claimed `m` with `Φ ∈ Ã_m(X)`.
    pub moment_order: usize,
}

impl fmt::Debug for SmoothingKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothingKernel")
            .field("name", &self.name)
            .field("manifold", &self.manifold.name)
            .field("C", &self.support_constant)
            .field("m", &self.moment_order)
            .finish()
    }
}

impl SmoothingKernel {
    /// Kernel built from the order-`m` mollifier `ρ_m`.
    ///
    /// Odd-order mollifiers are symmetric, so `ρ_{2j}` equals `ρ_{2j+1}` and
    /// the kernel is claimed in `Ã_{m}` for odd `m` and `Ã_{m+1}` for even `m > 0`.
    pub fn mollifier(manifold: Arc<Manifold>, m: usize, chart: Option<&str>) -> Result<Self> {
        let rho = build_mollifier(m, manifold.dim)?;
        let chart = chart.map(|c| manifold.chart(c)).transpose()?;
        let scale = chart
            .as_ref()
            .map_or(1.0, |c| c.scale().iter().copied().fold(f64::INFINITY, f64::min));
        let order = if m == 0 { 1 } else { m | 1 };
        Ok(Self {
            name: rho.name().to_string(),
            manifold,
            kind: KernelKind::Mollifier { rho, chart },
            support_constant: 1.0 / scale,
            eps0: 1.0,
            moment_order: order,
        })
    }

    /// Kernel from an arbitrary unit-integral function supported in `[−1, 1]ⁿ` (or wider).
    pub fn from_function(manifold: Arc<Manifold>, rho: LocalTestFunction, claimed_order: usize) -> Result<Self> {
        if !rho.is_unit() {
            return Err(Error::Construction(format!(
                "`{}` is not flagged unit-integral",
                rho.name()
            )));
        }
        let radius = rho
            .support()
            .lo
            .iter()
            .chain(&rho.support().hi)
            .fold(0.0f64, |a, v| a.max(v.abs()));
        Ok(Self {
            name: rho.name().to_string(),
            manifold,
            kind: KernelKind::Mollifier { rho, chart: None },
            support_constant: radius,
            eps0: 1.0,
            moment_order: claimed_order,
        })
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim
    }

    /// Chart in which `Φ(ε, p)` is written.
    pub fn anchor_chart(&self, p: &[f64]) -> Result<Arc<Chart>> {
        match &self.kind {
            KernelKind::Mollifier { chart: Some(c), .. } => Ok(c.clone()),
            KernelKind::Mollifier { chart: None, .. } => self.manifold.chart_for(p),
            KernelKind::FromLocal { chart, .. } => Ok(chart.clone()),
        }
    }

    /// `Φ(ε, p)` for a possibly jet-valued point in ambient coordinates.
    pub fn eval(&self, eps: f64, p: &[MultiDual]) -> Result<TestForm> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Domain(format!("ε = {eps} is outside (0, 1]")));
        }
        let re: Vec<f64> = p.iter().map(MultiDual::re).collect();
        if !self.manifold.contains(&re) {
            return Err(Error::Domain(format!(
                "point {re:?} is not on `{}`",
                self.manifold.name
            )));
        }
        match &self.kind {
            KernelKind::Mollifier { rho, .. } => {
                let chart = self.anchor_chart(&re)?;
                let y0 = chart.to_coords_dual(p)?;
                TestForm::concentrated(chart, rho.support(), eps, &y0, {
                    let rho = rho.clone();
                    move |xi, _| Ok(rho.eval(xi))
                })
            }
            KernelKind::FromLocal {
                family,
                chart,
                compact,
                cutoff,
                background,
                lambda_scale,
            } => {
                let y0 = match chart.to_coords_dual(p) {
                    Ok(y) => y,
                    Err(_) => return background.eval(eps, p),
                };
                let w = &cutoff.chi.eval(&y0) * &MultiDual::constant(lambda(eps / lambda_scale));
                if w.is_zero() {
                    return background.eval(eps, p);
                }
                let y0r: Vec<f64> = y0.iter().map(MultiDual::re).collect();
                check_domain(family.as_ref(), eps, &y0r, &cutoff.chi.outer)
                    .map_err(|e| Error::Construction(format!("{e} (kernel `{}`, compact {:?})", self.name, compact)))?;
                let fsupp = family.support(eps, &y0r);
                let supp = fsupp.scaled_translated(eps, &y0r);
                if !cutoff.chi1.inner.contains_box(&supp) {
                    return Err(Error::Construction(format!(
                        "kernel `{}`: support {:?}..{:?} of the local family escapes {{χ₁ = 1}} at ε = {eps}, p = {re:?}",
                        self.name, supp.lo, supp.hi
                    )));
                }
                let fam = family.clone();
                let chi1 = cutoff.chi1.clone();
                let y0c = y0.clone();
                let local = TestForm::concentrated(chart.clone(), &fsupp, eps, &y0, move |xi, next| {
                    let y: Vec<MultiDual> = xi.iter().zip(&y0c).map(|(v, c)| &v.scale(eps) + c).collect();
                    Ok(&fam.eval(eps, &y0c, xi, next)? * &chi1.eval(&y))
                })?;
                let one_minus = 1.0 - &w;
                if one_minus.is_zero() {
                    return Ok(local);
                }
                Ok(background.eval(eps, p)?.scaled(&one_minus).add(&local.scaled(&w)))
            }
        }
    }

    pub fn eval_f64(&self, eps: f64, p: &[f64]) -> Result<TestForm> {
        self.eval(eps, &lift(p))
    }
}

/// Build `Φ` from a local family (`family_order` is the family's certified moment order).
pub fn from_local(
    name: &str,
    family: SharedFamily,
    chart: Arc<Chart>,
    compact: BoxRegion,
    cutoff: CutoffSpec,
    background: Arc<SmoothingKernel>,
    family_order: usize,
) -> Result<SmoothingKernel> {
    if family.dim() != chart.dim || compact.dim() != chart.dim {
        return Err(Error::Construction(
            "family, chart and compact dimensions differ".into(),
        ));
    }
    if !cutoff.chi.inner.contains_box(&compact) {
        return Err(Error::Construction(format!("χ is not identically 1 near {compact:?}")));
    }
    let mut radius = 0.0f64;
    for e in [0.25, 0.01] {
        for x in cutoff.chi.outer.grid(5) {
            let s = family.support(e, &x);
            radius = radius.max(s.lo.iter().chain(&s.hi).fold(0.0f64, |a, v| a.max(v.abs())));
        }
    }
    let scale = chart.scale().iter().copied().fold(f64::INFINITY, f64::min);
    let room = (0..chart.dim)
        .map(|i| {
            (cutoff.chi.outer.lo[i] - cutoff.chi1.inner.lo[i]).min(cutoff.chi1.inner.hi[i] - cutoff.chi.outer.hi[i])
        })
        .fold(f64::INFINITY, f64::min);
    let lambda_scale = if radius > 0.0 { (room / radius).min(1.0) } else { 1.0 };
    Ok(SmoothingKernel {
        name: name.to_string(),
        manifold: background.manifold.clone(),
        support_constant: (radius / scale).max(background.support_constant),
        eps0: background.eps0.min(family.eps_threshold(&compact)),
        moment_order: family_order.min(background.moment_order),
        kind: KernelKind::FromLocal {
            family,
            chart,
            compact,
            cutoff,
            background,
            lambda_scale,
        },
    })
}

/// `φ(ε, x)(y) = εⁿ·(density of Φ(ε, ψ⁻¹x) in ψ)(εy + x)`.
pub struct KernelLocalFamily {
    pub kernel: Arc<SmoothingKernel>,
    pub chart: Arc<Chart>,
}

impl KernelLocalFamily {
    fn form(&self, eps: f64, x: &[MultiDual]) -> Result<TestForm> {
        let p = self.chart.from_coords_dual(x);
        self.kernel.eval(eps, &p)
    }
}

/// Local family of a kernel in a chart.
pub fn to_local(kernel: Arc<SmoothingKernel>, chart: Arc<Chart>) -> Result<KernelLocalFamily> {
    if !kernel.manifold.charts().iter().any(|c| c.id == chart.id) {
        return Err(Error::Domain(format!(
            "chart `{}` does not belong to the manifold of kernel `{}`",
            chart.id, kernel.name
        )));
    }
    Ok(KernelLocalFamily { kernel, chart })
}

impl LocalTestFamily for KernelLocalFamily {
    fn name(&self) -> String {
        format!("local({}, {})", self.kernel.name, self.chart.id)
    }

    fn dim(&self) -> usize {
        self.chart.dim
    }

    fn eval(&self, eps: f64, x: &[MultiDual], xi: &[MultiDual], next: usize) -> Result<MultiDual> {
        let xr: Vec<f64> = x.iter().map(MultiDual::re).collect();
        if !self.chart.image.contains_open(&xr, 0.0) {
            return Err(Error::Domain(format!(
                "x = {xr:?} is outside chart `{}`",
                self.chart.id
            )));
        }
        let form = self.form(eps, x)?;
        let y: Vec<MultiDual> = xi.iter().zip(x).map(|(v, c)| &v.scale(eps) + c).collect();
        let n = self.chart.dim as i32;
        Ok(form.density_in(&self.chart, &y, next)?.scale(eps.powi(n)))
    }

    fn support(&self, eps: f64, x: &[f64]) -> BoxRegion {
        let fallback = BoxRegion::cube(self.chart.dim, self.kernel.support_constant * self.chart.scale()[0]);
        let Ok(form) = self.form(eps, &lift(x)) else {
            return fallback;
        };
        let Some(b) = form.support_in(&self.chart) else {
            return fallback;
        };
        let lo = (0..x.len()).map(|i| (b.lo[i] - x[i]) / eps).collect();
        let hi = (0..x.len()).map(|i| (b.hi[i] - x[i]) / eps).collect();
        BoxRegion::new(lo, hi)
    }

    fn eps_threshold(&self, _compact: &BoxRegion) -> f64 {
        self.kernel.eps0
    }
}
