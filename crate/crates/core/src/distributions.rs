//! Distributions as pairings against compactly supported n-forms.

use std::fmt;
use std::sync::Arc;

use crate::dual::MultiDual;
use crate::error::{Error, Result};
use crate::expr::SmoothFn;
use crate::geometry::{Chart, Manifold, Shape, VectorField};
use crate::region::BoxRegion;
use crate::testobjects::{LocalTestFunction, TestForm};

pub type Pairing = Arc<dyn Fn(&TestForm) -> Result<MultiDual> + Send + Sync>;

#[derive(Clone)]
pub enum DistKind {
    Zero,
    /// `ω ↦ ∫ f·ω`, `f` in ambient coordinates.
    Regular(SmoothFn),
    /// Density of `ω` at `p`, read in `chart`.
    Delta {
        point: Vec<f64>,
        chart: Arc<Chart>,
    },
    /// `L_{ζ₁}…L_{ζ_k} δ_p`.
    DeltaDerivative {
        point: Vec<f64>,
        chart: Arc<Chart>,
        fields: Vec<VectorField>,
    },
    /// Integration over `{y_axis ≥ threshold}` in `chart` coordinates.
    Heaviside {
        chart: Arc<Chart>,
        axis: usize,
        threshold: f64,
    },
    Lie {
        field: VectorField,
        inner: Box<Distribution>,
    },
    Combination(Vec<(f64, Distribution)>),
    Custom(Pairing),
}

/// A distribution `u ∈ 𝒟′(X)`.
#[derive(Clone)]
pub struct Distribution {
    pub id: String,
    pub manifold: Arc<Manifold>,
    kind: DistKind,
}

impl fmt::Debug for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Distribution({})", self.id)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(", ")
}

impl Distribution {
    pub fn zero(manifold: Arc<Manifold>) -> Self {
        Self {
            id: "0".into(),
            manifold,
            kind: DistKind::Zero,
        }
    }

    pub fn regular(manifold: Arc<Manifold>, f: SmoothFn) -> Self {
        Self {
            id: format!("regular({})", f.source()),
            manifold,
            kind: DistKind::Regular(f),
        }
    }

    /// `δ_p` read in the chart chosen by [`Manifold::chart_for`].
    pub fn delta(manifold: Arc<Manifold>, point: Vec<f64>) -> Result<Self> {
        let chart = manifold.chart_for(&point)?;
        Self::delta_in(manifold, point, chart)
    }

    pub fn delta_in(manifold: Arc<Manifold>, point: Vec<f64>, chart: Arc<Chart>) -> Result<Self> {
        chart.to_coords(&point)?;
        let point = manifold.canonical(&point);
        Ok(Self {
            id: format!("delta({})", fmt_point(&point)),
            manifold,
            kind: DistKind::Delta { point, chart },
        })
    }

    pub fn delta_derivative(manifold: Arc<Manifold>, point: Vec<f64>, fields: Vec<VectorField>) -> Result<Self> {
        for f in &fields {
            f.validate_on(&manifold)?;
        }
        let chart = manifold.chart_for(&point)?;
        let point = manifold.canonical(&point);
        let names: Vec<&str> = fields.iter().map(|f| f.name.as_str()).collect();
        Ok(Self {
            id: format!("delta({}; {})", fmt_point(&point), names.join(", ")),
            manifold,
            kind: DistKind::DeltaDerivative { point, chart, fields },
        })
    }

    /// `H` along `axis` of `chart`; the threshold must be interior to the chart image.
    pub fn heaviside(manifold: Arc<Manifold>, chart: &str, axis: usize, threshold: f64) -> Result<Self> {
        if manifold.shape == Shape::Circle {
            return Err(Error::Construction("heaviside is not defined on the circle".into()));
        }
        let chart = manifold.chart(chart)?;
        if axis >= chart.dim {
            return Err(Error::Construction(format!(
                "axis {axis} out of range for chart `{}`",
                chart.id
            )));
        }
        let (lo, hi) = (chart.image.lo[axis], chart.image.hi[axis]);
        if !(threshold > lo && threshold < hi) {
            return Err(Error::Construction(format!(
                "heaviside threshold {threshold} is not interior to chart `{}` ({lo}, {hi})",
                chart.id
            )));
        }
        Ok(Self {
            id: format!("heaviside({threshold})"),
            manifold,
            kind: DistKind::Heaviside { chart, axis, threshold },
        })
    }

    /// A distribution given by an arbitrary pairing; failures are reported with `id`.
    pub fn custom(
        manifold: Arc<Manifold>,
        id: &str,
        pair: impl Fn(&TestForm) -> Result<MultiDual> + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.to_string(),
            manifold,
            kind: DistKind::Custom(Arc::new(pair)),
        }
    }

    pub fn combination(manifold: Arc<Manifold>, terms: Vec<(f64, Distribution)>) -> Self {
        let id = terms
            .iter()
            .map(|(c, u)| format!("{c}*{}", u.id))
            .collect::<Vec<_>>()
            .join(" + ");
        Self {
            id,
            manifold,
            kind: DistKind::Combination(terms),
        }
    }

    pub fn named(mut self, id: &str) -> Self {
        self.id = id.to_string();
        self
    }

    pub fn kind(&self) -> &DistKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, DistKind::Zero)
    }

    /// `⟨u, ω⟩`; jet-valued when `ω` is.
    pub fn pair(&self, omega: &TestForm) -> Result<MultiDual> {
        match &self.kind {
            DistKind::Zero => Ok(MultiDual::zero()),
            DistKind::Regular(f) => {
                let m = &self.manifold;
                omega.integrate_jet_with(
                    |t| Some(t.support.clone()),
                    |t, y, _| {
                        let x = t.chart.from_coords_dual(y);
                        let re: Vec<f64> = x.iter().map(MultiDual::re).collect();
                        let shift: Vec<f64> = m.canonical(&re).iter().zip(&re).map(|(c, r)| c - r).collect();
                        let x: Vec<MultiDual> = x
                            .iter()
                            .zip(&shift)
                            .map(|(v, d)| v + &MultiDual::constant(*d))
                            .collect();
                        Ok(f.eval(&x))
                    },
                )
            }
            DistKind::Delta { point, chart } => {
                let y = chart.to_coords(point)?;
                omega.density_in(chart, &crate::dual::lift(&y), 0)
            }
            DistKind::DeltaDerivative { point, chart, fields } => {
                let mut w = omega.clone();
                for f in fields {
                    w = w.lie_derivative(f);
                }
                let y = chart.to_coords(point)?;
                let v = w.density_in(chart, &crate::dual::lift(&y), 0)?;
                Ok(if fields.len() % 2 == 1 { -v } else { v })
            }
            DistKind::Heaviside { chart, axis, threshold } => {
                let (chart, axis, threshold) = (chart.clone(), *axis, *threshold);
                omega.integrate_jet_with(
                    |t| half_space_in(&chart, axis, threshold, t.chart.as_ref(), &t.support),
                    |_, _, _| Ok(MultiDual::constant(1.0)),
                )
            }
            DistKind::Lie { field, inner } => Ok(-inner.pair(&omega.lie_derivative(field))?),
            DistKind::Combination(terms) => {
                let mut total = MultiDual::zero();
                for (c, u) in terms {
                    total += u.pair(omega)?.scale(*c);
                }
                Ok(total)
            }
            DistKind::Custom(p) => p(omega).map_err(|e| match e {
                Error::Pairing { .. } => e,
                other => Error::Pairing {
                    id: self.id.clone(),
                    message: other.to_string(),
                },
            }),
        }
    }

    /// `L_ζ u: ω ↦ −⟨u, L_ζ ω⟩`.
    pub fn lie_derivative(&self, field: &VectorField) -> Result<Distribution> {
        field.validate_on(&self.manifold)?;
        if self.is_zero() {
            return Ok(self.clone());
        }
        Ok(Distribution {
            id: format!("L({}, {})", field.name, self.id),
            manifold: self.manifold.clone(),
            kind: DistKind::Lie {
                field: field.clone(),
                inner: Box::new(self.clone()),
            },
        })
    }

    /// `u|_{U_α}` as a pairing on test functions of the chart image.
    pub fn localize(&self, chart: Arc<Chart>) -> LocalDistribution {
        LocalDistribution {
            dist: self.clone(),
            chart,
        }
    }
}

/// `{y ∈ term chart : y_c(y)_axis ≥ threshold} ∩ support` for the diagonal affine transition.
fn half_space_in(c: &Chart, axis: usize, threshold: f64, t: &Chart, support: &BoxRegion) -> Option<BoxRegion> {
    let mut lo = support.lo.clone();
    let mut hi = support.hi.clone();
    if c.id == t.id {
        lo[axis] = lo[axis].max(threshold);
    } else {
        // y_c = sc·(y_t − ot)/st + oc ≥ threshold
        let (sc, oc) = (c.scale()[axis], c.offset()[axis]);
        let (st, ot) = (t.scale()[axis], t.offset()[axis]);
        let cut = ot + (threshold - oc) * st / sc;
        if sc / st > 0.0 {
            lo[axis] = lo[axis].max(cut);
        } else {
            hi[axis] = hi[axis].min(cut);
        }
    }
    (lo[axis] < hi[axis]).then(|| BoxRegion::new(lo, hi))
}

/// A distribution restricted to a chart: `φ ↦ ⟨u, ψ*(φ dⁿy)⟩`.
#[derive(Clone, Debug)]
pub struct LocalDistribution {
    pub dist: Distribution,
    pub chart: Arc<Chart>,
}

impl LocalDistribution {
    pub fn pair(&self, phi: &LocalTestFunction) -> Result<MultiDual> {
        self.dist.pair(&TestForm::pullback(self.chart.clone(), phi)?)
    }

    pub fn pair_f64(&self, phi: &LocalTestFunction) -> Result<f64> {
        Ok(self.pair(phi)?.re())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testobjects::{build_mollifier, scale_translate};

    fn omega() -> Arc<Manifold> {
        Arc::new(Manifold::interval(-2.0, 2.0).unwrap())
    }

    fn form(m: &Manifold, phi: &LocalTestFunction) -> TestForm {
        TestForm::pullback(m.chart("main").unwrap(), phi).unwrap()
    }

    #[test]
    fn delta_reads_the_density() {
        let m = omega();
        let rho = build_mollifier(0, 1).unwrap();
        let d = Distribution::delta(m.clone(), vec![0.3]).unwrap();
        let v = d.pair(&form(&m, &rho)).unwrap().re();
        assert!((v - rho.eval_f64(&[0.3])).abs() < 1e-15);
    }

    #[test]
    fn heaviside_is_half() {
        let m = omega();
        let rho = build_mollifier(0, 1).unwrap();
        let h = Distribution::heaviside(m.clone(), "main", 0, 0.0).unwrap();
        assert!((h.pair(&form(&m, &rho)).unwrap().re() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn heaviside_on_boundary_rejected() {
        assert!(matches!(
            Distribution::heaviside(omega(), "main", 0, 2.0),
            Err(Error::Construction(_))
        ));
        assert!(Distribution::heaviside(Arc::new(Manifold::circle()), "a", 0, 1.0).is_err());
    }

    #[test]
    fn derivative_of_heaviside_is_delta() {
        let m = omega();
        let phi = scale_translate(&build_mollifier(0, 1).unwrap(), 0.7, &[0.2]);
        let h = Distribution::heaviside(m.clone(), "main", 0, 0.0).unwrap();
        let dh = h.lie_derivative(&VectorField::coordinate(1, 0)).unwrap();
        let v = dh.pair(&form(&m, &phi)).unwrap().re();
        assert!((v - phi.eval_f64(&[0.0])).abs() < 1e-8, "{v}");
    }

    #[test]
    fn delta_derivative_kind_matches_lie_chain() {
        let m = omega();
        let phi = scale_translate(&build_mollifier(0, 1).unwrap(), 0.5, &[0.1]);
        let e = VectorField::euler(1);
        let d = VectorField::coordinate(1, 0);
        let a = Distribution::delta_derivative(m.clone(), vec![0.2], vec![d.clone(), e.clone()]).unwrap();
        let b = Distribution::delta(m.clone(), vec![0.2])
            .unwrap()
            .lie_derivative(&e)
            .unwrap()
            .lie_derivative(&d)
            .unwrap();
        let w = form(&m, &phi);
        assert!((a.pair(&w).unwrap().re() - b.pair(&w).unwrap().re()).abs() < 1e-12);
    }

    #[test]
    fn custom_errors_carry_id() {
        let m = omega();
        let u = Distribution::custom(m.clone(), "broken", |_| Err(Error::Domain("nope".into())));
        let rho = build_mollifier(0, 1).unwrap();
        match u.pair(&form(&m, &rho)) {
            Err(Error::Pairing { id, .. }) => assert_eq!(id, "broken"),
            other => panic!("{other:?}"),
        }
    }
}
