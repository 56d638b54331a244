use std::fmt;
use std::sync::Arc;

use crate::dual::{lift, span_of, MultiDual};
use crate::error::{Error, Result};
use crate::geometry::{Chart, VectorField};
use crate::quadrature::integrate;
use crate::region::BoxRegion;

use super::function::LocalTestFunction;

/// Density of an n-form in chart coordinates.
///
/// The second argument is the first infinitesimal the closure may use
/// internally; every infinitesimal it introduces must be eliminated before
/// returning.
pub type FormDensity = Arc<dyn Fn(&[MultiDual], usize) -> Result<MultiDual> + Send + Sync>;

/// Scaled coordinates `y = center + scale·ξ` of a concentrated term.
///
/// `density` is the same density written as a function of `ξ`; quadrature
/// runs in `ξ` so that `(y − center)/scale` is never formed from rounded `y`.
/// `moving` is the density in `ξ` for `y = jet_center + scale·ξ`, where the
/// jet part of the center moves with the frame instead of entering the density.
/// It is kept free of Lie derivatives: the term equals `L_{lie[k−1]}⋯L_{lie[0]}`
/// applied to the `moving` form.
#[derive(Clone)]
pub struct LocalFrame {
    pub center: Vec<f64>,
    pub scale: f64,
    pub density: FormDensity,
    pub jet_center: Vec<MultiDual>,
    pub moving: FormDensity,
    pub lie: Vec<VectorField>,
}

/// One summand `φ dⁿy` of a test form, written in a single chart.
#[derive(Clone)]
pub struct FormTerm {
    pub chart: Arc<Chart>,
    /// Closed box in `chart` coordinates containing the support.
    pub support: BoxRegion,
    pub density: FormDensity,
    pub frame: Option<LocalFrame>,
}

impl FormTerm {
    fn map(&self, f: impl Fn(FormDensity) -> FormDensity) -> FormTerm {
        FormTerm {
            chart: self.chart.clone(),
            support: self.support.clone(),
            density: f(self.density.clone()),
            frame: self.frame.as_ref().map(|fr| LocalFrame {
                center: fr.center.clone(),
                scale: fr.scale,
                density: f(fr.density.clone()),
                jet_center: fr.jet_center.clone(),
                moving: f(fr.moving.clone()),
                lie: fr.lie.clone(),
            }),
        }
    }
}

/// A compactly supported n-form as a finite sum of chart-local terms.
///
/// Densities may be jet-valued (depend on infinitesimals below `span`),
/// which is how derivatives in the kernel point and in the form slot are
/// carried through evaluation.
#[derive(Clone)]
pub struct TestForm {
    terms: Vec<FormTerm>,
    span: usize,
}

impl fmt::Debug for TestForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestForm")
            .field(
                "charts",
                &self.terms.iter().map(|t| t.chart.id.as_str()).collect::<Vec<_>>(),
            )
            .field("supports", &self.terms.iter().map(|t| &t.support).collect::<Vec<_>>())
            .field("span", &self.span)
            .finish()
    }
}

impl TestForm {
    pub fn zero() -> Self {
        Self {
            terms: Vec::new(),
            span: 0,
        }
    }

    /// A single term; `span` bounds the infinitesimals captured by `density`.
    pub fn from_density(
        chart: Arc<Chart>,
        support: BoxRegion,
        span: usize,
        density: impl Fn(&[MultiDual], usize) -> Result<MultiDual> + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::with_frame(chart, support, span, Arc::new(density), None)
    }

    /// A single term that also carries its density in scaled coordinates.
    pub fn with_frame(
        chart: Arc<Chart>,
        support: BoxRegion,
        span: usize,
        density: FormDensity,
        frame: Option<LocalFrame>,
    ) -> Result<Self> {
        if support.dim() != chart.dim {
            return Err(Error::Domain(format!(
                "support dimension {} does not match chart `{}`",
                support.dim(),
                chart.id
            )));
        }
        if !support.is_empty() && !chart.image.contains_box(&support) {
            return Err(Error::Domain(format!(
                "support {:?}..{:?} leaves the image of chart `{}`",
                support.lo, support.hi, chart.id
            )));
        }
        Ok(Self {
            terms: vec![FormTerm {
                chart,
                support,
                density,
                frame,
            }],
            span,
        })
    }

    /// `ψ*(φ dⁿy)`.
    pub fn pullback(chart: Arc<Chart>, phi: &LocalTestFunction) -> Result<Self> {
        let f = phi.clone();
        Self::from_density(chart, phi.support().clone(), 0, move |y, _| Ok(f.eval(y)))
    }

    /// `y ↦ ε^{-n} g((y − y0)/ε)` written in `chart`, with ξ-support `xi_support`.
    pub fn concentrated(
        chart: Arc<Chart>,
        xi_support: &BoxRegion,
        eps: f64,
        y0: &[MultiDual],
        g: impl Fn(&[MultiDual], usize) -> Result<MultiDual> + Send + Sync + 'static,
    ) -> Result<TestForm> {
        let n = chart.dim;
        let y0r: Vec<f64> = y0.iter().map(MultiDual::re).collect();
        let support = xi_support.scaled_translated(eps, &y0r);
        let span = span_of(y0);
        let center = y0.to_vec();
        let factor = eps.powi(-(n as i32));
        let g = Arc::new(g);
        let gy = g.clone();
        let density: FormDensity = Arc::new(move |y: &[MultiDual], next: usize| {
            let xi: Vec<MultiDual> = y.iter().zip(&center).map(|(a, c)| (a - c).scale(1.0 / eps)).collect();
            Ok(gy(&xi, next.max(span))?.scale(factor))
        });
        // ξ − (y0 − ψp)/ε: only the jet part of the center is subtracted
        let shift: Vec<MultiDual> = y0.iter().map(|c| (c - c.re()).scale(1.0 / eps)).collect();
        let gs = g.clone();
        let local: FormDensity = Arc::new(move |xi: &[MultiDual], next: usize| {
            let xi: Vec<MultiDual> = xi.iter().zip(&shift).map(|(a, c)| a - c).collect();
            Ok(gs(&xi, next.max(span))?.scale(factor))
        });
        let moving: FormDensity =
            Arc::new(move |xi: &[MultiDual], next: usize| Ok(g(xi, next.max(span))?.scale(factor)));
        let frame = LocalFrame {
            center: y0r,
            scale: eps,
            density: local,
            jet_center: y0.to_vec(),
            moving,
            lie: Vec::new(),
        };
        Self::with_frame(chart, support, span, density, Some(frame))
    }

    pub fn terms(&self) -> &[FormTerm] {
        &self.terms
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `c·ω` for a possibly jet-valued scalar.
    pub fn scaled(&self, c: &MultiDual) -> TestForm {
        if c.is_zero() {
            return TestForm::zero();
        }
        let terms = self
            .terms
            .iter()
            .map(|t| {
                t.map(|d| {
                    let c = c.clone();
                    Arc::new(move |y: &[MultiDual], next: usize| Ok(&d(y, next)? * &c))
                })
            })
            .collect();
        TestForm {
            terms,
            span: self.span.max(c.span()),
        }
    }

    pub fn add(&self, other: &TestForm) -> TestForm {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        TestForm {
            terms,
            span: self.span.max(other.span),
        }
    }

    /// `L_ζ ω`: per term `ζ_α·∇φ + (div ζ_α)·φ` in chart coordinates.
    pub fn lie_derivative(&self, field: &VectorField) -> TestForm {
        let span = self.span;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let chart = t.chart.clone();
                let d = t.density.clone();
                let density = lie_density(d, field.clone(), chart.clone(), span, None);
                FormTerm {
                    chart: t.chart.clone(),
                    support: t.support.clone(),
                    density,
                    frame: t.frame.as_ref().map(|fr| LocalFrame {
                        center: fr.center.clone(),
                        scale: fr.scale,
                        density: lie_density(
                            fr.density.clone(),
                            field.clone(),
                            chart.clone(),
                            span,
                            Some((lift(&fr.center), fr.scale)),
                        ),
                        jet_center: fr.jet_center.clone(),
                        moving: fr.moving.clone(),
                        lie: {
                            let mut l = fr.lie.clone();
                            l.push(field.clone());
                            l
                        },
                    }),
                }
            })
            .collect();
        TestForm { terms, span }
    }

    /// Density of the form in `chart` coordinates at `y`.
    pub fn density_in(&self, chart: &Chart, y: &[MultiDual], next: usize) -> Result<MultiDual> {
        let next = next.max(self.span).max(span_of(y));
        let x = chart.from_coords_dual(y);
        let mut total = MultiDual::zero();
        for t in &self.terms {
            let yt = if t.chart.id == chart.id {
                y.to_vec()
            } else {
                match t.chart.to_coords_dual(&x) {
                    Ok(v) => v,
                    Err(_) => continue,
                }
            };
            let re: Vec<f64> = yt.iter().map(MultiDual::re).collect();
            if !t.support.contains(&re) {
                continue;
            }
            let jac = t.chart.jacobian_det() / chart.jacobian_det();
            total += (t.density)(&yt, next)?.scale(jac);
        }
        Ok(total)
    }

    pub fn density_in_f64(&self, chart: &Chart, y: &[f64]) -> Result<f64> {
        Ok(self.density_in(chart, &lift(y), 0)?.re())
    }

    /// Hull of the term supports expressed in `chart` coordinates.
    ///
    /// Terms written in other charts are mapped corner by corner, which is
    /// exact for the diagonal affine transitions of the built-in atlases.
    pub fn support_in(&self, chart: &Chart) -> Option<BoxRegion> {
        let mut out: Option<BoxRegion> = None;
        for t in &self.terms {
            let b = if t.chart.id == chart.id {
                t.support.clone()
            } else {
                let a = chart.to_coords(&t.chart.from_coords(&t.support.lo)).ok()?;
                let z = chart.to_coords(&t.chart.from_coords(&t.support.hi)).ok()?;
                let lo = a.iter().zip(&z).map(|(u, v)| u.min(*v)).collect();
                let hi = a.iter().zip(&z).map(|(u, v)| u.max(*v)).collect();
                BoxRegion::new(lo, hi)
            };
            out = Some(match out {
                Some(o) => o.hull(&b),
                None => b,
            });
        }
        out
    }

    /// `Σ_terms ∫_{region(term)} g(term, y)·φ(y) dy`, jet-valued.
    pub fn integrate_with(
        &self,
        region: impl Fn(&FormTerm) -> Option<BoxRegion>,
        weight: impl Fn(&FormTerm, &[f64]) -> f64,
    ) -> Result<MultiDual> {
        let mut total = MultiDual::zero();
        for t in &self.terms {
            let Some(r) = region(t) else { continue };
            if r.is_empty() {
                continue;
            }
            let span = self.span;
            let v = match &t.frame {
                None => integrate(&r, MultiDual::zero(), |y| {
                    let w = weight(t, y);
                    if w == 0.0 {
                        return Ok(MultiDual::zero());
                    }
                    Ok((t.density)(&lift(y), span)?.scale(w))
                })?,
                Some(fr) => {
                    let s = fr.scale;
                    let lo = r.lo.iter().zip(&fr.center).map(|(a, c)| (a - c) / s).collect();
                    let hi = r.hi.iter().zip(&fr.center).map(|(a, c)| (a - c) / s).collect();
                    let xr = BoxRegion::new(lo, hi);
                    let v = integrate(&xr, MultiDual::zero(), |xi| {
                        let y: Vec<f64> = xi.iter().zip(&fr.center).map(|(x, c)| c + s * x).collect();
                        let w = weight(t, &y);
                        if w == 0.0 {
                            return Ok(MultiDual::zero());
                        }
                        Ok((fr.density)(&lift(xi), span)?.scale(w))
                    })?;
                    v.scale(s.powi(r.dim() as i32))
                }
            };
            total += v;
        }
        Ok(total)
    }

    /// Like [`TestForm::integrate_with`] with a jet-valued weight of the jet-valued chart point.
    ///
    /// Framed terms whose support lies inside the region are integrated in the
    /// moving frame, so derivatives in the center fall on the weight, and
    /// Lie derivatives of the form are moved onto the weight by parts:
    /// `∫ w·L_ζ ω = −∫ (ζw)·ω`.
    pub fn integrate_jet_with(
        &self,
        region: impl Fn(&FormTerm) -> Option<BoxRegion>,
        weight: impl Fn(&FormTerm, &[MultiDual], usize) -> Result<MultiDual>,
    ) -> Result<MultiDual> {
        let span = self.span;
        let mut total = MultiDual::zero();
        for t in &self.terms {
            let Some(r) = region(t) else { continue };
            if r.is_empty() {
                continue;
            }
            let v = match &t.frame {
                Some(fr) if r.contains_box(&t.support) => {
                    let s = fr.scale;
                    let lo = t.support.lo.iter().zip(&fr.center).map(|(a, c)| (a - c) / s).collect();
                    let hi = t.support.hi.iter().zip(&fr.center).map(|(a, c)| (a - c) / s).collect();
                    let v = integrate(&BoxRegion::new(lo, hi), MultiDual::zero(), |xi| {
                        let xd = lift(xi);
                        let y: Vec<MultiDual> = xd.iter().zip(&fr.jet_center).map(|(x, c)| &x.scale(s) + c).collect();
                        let d = (fr.moving)(&xd, span)?;
                        if d.is_zero() {
                            return Ok(d);
                        }
                        let w = lie_weight(&weight, t, &fr.lie, &y, span)?;
                        Ok(&w * &d)
                    })?;
                    v.scale(s.powi(r.dim() as i32))
                }
                Some(fr) => {
                    let s = fr.scale;
                    let lo = r.lo.iter().zip(&fr.center).map(|(a, c)| (a - c) / s).collect();
                    let hi = r.hi.iter().zip(&fr.center).map(|(a, c)| (a - c) / s).collect();
                    let v = integrate(&BoxRegion::new(lo, hi), MultiDual::zero(), |xi| {
                        let y: Vec<f64> = xi.iter().zip(&fr.center).map(|(x, c)| c + s * x).collect();
                        let d = (fr.density)(&lift(xi), span)?;
                        if d.is_zero() {
                            return Ok(d);
                        }
                        Ok(&weight(t, &lift(&y), span)? * &d)
                    })?;
                    v.scale(s.powi(r.dim() as i32))
                }
                None => integrate(&r, MultiDual::zero(), |y| {
                    let d = (t.density)(&lift(y), span)?;
                    if d.is_zero() {
                        return Ok(d);
                    }
                    Ok(&weight(t, &lift(y), span)? * &d)
                })?,
            };
            total += v;
        }
        Ok(total)
    }

    /// `∫_X ω`.
    pub fn integral(&self) -> Result<MultiDual> {
        self.integrate_with(|t| Some(t.support.clone()), |_, _| 1.0)
    }

    /// `∫_X f·ω` for a function of ambient coordinates.
    pub fn integrate_ambient(&self, f: impl Fn(&[f64]) -> f64) -> Result<MultiDual> {
        self.integrate_with(|t| Some(t.support.clone()), |t, y| f(&t.chart.from_coords(y)))
    }
}

/// `(−1)^k L_{ζ₀}⋯L_{ζ_{k−1}} w` at a chart point, with the fields acting in `chart` coordinates.
fn lie_weight(
    weight: &impl Fn(&FormTerm, &[MultiDual], usize) -> Result<MultiDual>,
    t: &FormTerm,
    fields: &[VectorField],
    y: &[MultiDual],
    span: usize,
) -> Result<MultiDual> {
    if fields.is_empty() {
        return weight(t, y, span);
    }
    let fresh = span.max(span_of(y));
    let mut q = y.to_vec();
    for (i, f) in fields.iter().enumerate() {
        let tv = MultiDual::infinitesimal(fresh + i);
        let z = f.in_chart(&t.chart, &q);
        q = q.iter().zip(&z).map(|(a, b)| a + &(b * &tv)).collect();
    }
    let mut v = weight(t, &q, fresh + fields.len())?;
    for i in (0..fields.len()).rev() {
        v = v.part(fresh + i);
    }
    Ok(if fields.len() % 2 == 1 { -v } else { v })
}

/// Lie derivative of a density; with a frame the argument is `ξ` and the
/// chart point is `center + scale·ξ`.
fn lie_density(
    d: FormDensity,
    field: VectorField,
    chart: Arc<Chart>,
    span: usize,
    frame: Option<(Vec<MultiDual>, f64)>,
) -> FormDensity {
    Arc::new(move |x: &[MultiDual], next: usize| {
        let fresh = next.max(span).max(span_of(x));
        let tvar = MultiDual::infinitesimal(fresh);
        let (y, s) = match &frame {
            None => (x.to_vec(), 1.0),
            Some((c, s)) => (x.iter().zip(c).map(|(v, c)| &v.scale(*s) + c).collect(), *s),
        };
        let z = field.in_chart(&chart, &y);
        let moved: Vec<MultiDual> = x
            .iter()
            .zip(&z)
            .map(|(xi, zi)| xi + &(zi * &tvar).scale(1.0 / s))
            .collect();
        let div = field.divergence_in_chart(&chart, &y, fresh + 1);
        let v = &d(&moved, fresh + 1)? * &(&MultiDual::constant(1.0) + &(&div * &tvar));
        Ok(v.part(fresh))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Manifold;
    use crate::testobjects::function::build_mollifier;

    #[test]
    fn pullback_integrates_to_one() {
        let m = Manifold::interval(-2.0, 2.0).unwrap();
        let rho = build_mollifier(0, 1).unwrap();
        let w = TestForm::pullback(m.chart("main").unwrap(), &rho).unwrap();
        assert!((w.integral().unwrap().re() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lie_derivative_along_coordinate_field_is_derivative() {
        let m = Manifold::interval(-2.0, 2.0).unwrap();
        let c = m.chart("main").unwrap();
        let rho = build_mollifier(0, 1).unwrap();
        let w = TestForm::pullback(c.clone(), &rho).unwrap();
        let l = w.lie_derivative(&VectorField::coordinate(1, 0));
        let h = 1e-5;
        let fd = (rho.eval_f64(&[0.3 + h]) - rho.eval_f64(&[0.3 - h])) / (2.0 * h);
        let v = l.density_in_f64(&c, &[0.3]).unwrap();
        assert!((v - fd).abs() < 1e-8, "{v} vs {fd}");
        assert!(l.integral().unwrap().re().abs() < 1e-12);
    }

    #[test]
    fn density_transforms_between_charts() {
        let m = Manifold::interval(-2.0, 2.0)
            .unwrap()
            .with_affine_chart("double", vec![2.0], vec![0.0])
            .unwrap();
        let rho = build_mollifier(0, 1).unwrap();
        let w = TestForm::pullback(m.chart("main").unwrap(), &rho).unwrap();
        let d = m.chart("double").unwrap();
        // φ dx = φ(y/2)·(1/2) dy
        let v = w.density_in_f64(&d, &[0.6]).unwrap();
        assert!((v - 0.5 * rho.eval_f64(&[0.3])).abs() < 1e-15);
    }

    #[test]
    fn support_outside_chart_rejected() {
        let m = Manifold::interval(-2.0, 2.0).unwrap();
        let r = TestForm::from_density(m.chart("main").unwrap(), BoxRegion::interval(1.5, 2.5), 0, |_, _| {
            Ok(MultiDual::zero())
        });
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
