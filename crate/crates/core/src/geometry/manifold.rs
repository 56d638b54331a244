use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{suggest, Error, Result};
use crate::region::BoxRegion;

use super::chart::Chart;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Open box `Ω ⊆ ℝⁿ` with the Euclidean metric.
    OpenBox(BoxRegion),
    /// Unit circle, ambient coordinate the angle, round metric.
    Circle,
}

/// A manifold with an explicit finite atlas of affine charts.
#[derive(Debug, Clone)]
pub struct Manifold {
    pub name: String,
    pub dim: usize,
    pub shape: Shape,
    charts: Vec<Arc<Chart>>,
}

impl Manifold {
    /// `Ω = (lo, hi)` with the identity chart `main`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::open_box(BoxRegion::interval(lo, hi))
    }

    pub fn open_box(domain: BoxRegion) -> Result<Self> {
        if domain.is_empty() || domain.dim() == 0 || domain.dim() > 2 {
            return Err(Error::Construction(format!(
                "open box must be nonempty with dimension 1 or 2, got {domain:?}"
            )));
        }
        let name = if domain.dim() == 1 { "interval" } else { "box" };
        Ok(Self {
            name: name.to_string(),
            dim: domain.dim(),
            charts: vec![Arc::new(Chart::identity("main", domain.clone()))],
            shape: Shape::OpenBox(domain),
        })
    }

    /// Unit circle with angle charts `a` (θ ∈ (−π, π)) and `b` (θ − π, excludes θ = 0).
    pub fn circle() -> Self {
        Self {
            name: "circle".to_string(),
            dim: 1,
            shape: Shape::Circle,
            charts: vec![Arc::new(Chart::angle("a", 0.0)), Arc::new(Chart::angle("b", -PI))],
        }
    }

    /// Add a chart `y = scale ⊙ x + offset` covering the whole open box.
    pub fn with_affine_chart(mut self, id: &str, scale: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        let Shape::OpenBox(domain) = &self.shape else {
            return Err(Error::Unsupported(
                "extra affine charts are only available on open boxes".into(),
            ));
        };
        if scale.len() != self.dim || offset.len() != self.dim || scale.iter().any(|s| *s <= 0.0) {
            return Err(Error::Construction(format!(
                "chart `{id}` needs {} positive scales and offsets",
                self.dim
            )));
        }
        if self.charts.iter().any(|c| c.id == id) {
            return Err(Error::Construction(format!("duplicate chart id `{id}`")));
        }
        let lo = (0..self.dim).map(|i| scale[i] * domain.lo[i] + offset[i]).collect();
        let hi = (0..self.dim).map(|i| scale[i] * domain.hi[i] + offset[i]).collect();
        self.charts
            .push(Arc::new(Chart::affine(id, BoxRegion::new(lo, hi), scale, offset)));
        Ok(self)
    }

    pub fn charts(&self) -> &[Arc<Chart>] {
        &self.charts
    }

    pub fn chart(&self, id: &str) -> Result<Arc<Chart>> {
        self.charts
            .iter()
            .find(|c| c.id == id)
            .cloned()
            .ok_or_else(|| Error::Unresolved {
                name: id.to_string(),
                suggestions: suggest(id, self.charts.iter().map(|c| c.id.as_str())),
            })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim
            && p.iter().all(|v| v.is_finite())
            && match &self.shape {
                Shape::OpenBox(d) => d.contains_open(p, 0.0),
                Shape::Circle => true,
            }
    }

    fn check(&self, p: &[f64]) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::Domain(format!("point {p:?} is not on manifold `{}`", self.name)))
        }
    }

    /// Canonical ambient representative (angles in `[0, 2π)`).
    pub fn canonical(&self, p: &[f64]) -> Vec<f64> {
        match self.shape {
            Shape::Circle => vec![p[0].rem_euclid(2.0 * PI)],
            Shape::OpenBox(_) => p.to_vec(),
        }
    }

    /// Riemannian distance of the built-in metric.
    pub fn distance(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        self.check(p)?;
        self.check(q)?;
        Ok(match self.shape {
            Shape::OpenBox(_) => p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(),
            Shape::Circle => {
                let d = (p[0] - q[0]).rem_euclid(2.0 * PI);
                d.min(2.0 * PI - d)
            }
        })
    }

    /// Chart whose image keeps `p` farthest from its boundary, in ambient units.
    pub fn chart_for(&self, p: &[f64]) -> Result<Arc<Chart>> {
        self.check(p)?;
        let mut best: Option<(f64, &Arc<Chart>)> = None;
        for c in &self.charts {
            if let Ok(y) = c.to_coords(p) {
                let margin = (0..self.dim)
                    .map(|i| (y[i] - c.image.lo[i]).min(c.image.hi[i] - y[i]) / c.scale()[i])
                    .fold(f64::INFINITY, f64::min);
                if best.is_none_or(|(m, _)| margin > m) {
                    best = Some((margin, c));
                }
            }
        }
        best.map(|(_, c)| c.clone())
            .ok_or_else(|| Error::Domain(format!("point {p:?} lies in no chart")))
    }

    /// `ψ_b(ψ_a⁻¹(x))`.
    pub fn transition(&self, a: &Chart, b: &Chart, x: &[f64]) -> Result<Vec<f64>> {
        let overlap = || Error::Overlap {
            from: a.id.clone(),
            to: b.id.clone(),
            coords: x.to_vec(),
        };
        if x.len() != a.dim || !a.image.contains_open(x, 0.0) {
            return Err(overlap());
        }
        let p = a.from_coords(x);
        if !self.contains(&p) {
            return Err(overlap());
        }
        b.to_coords(&p).map_err(|_| overlap())
    }

    /// Diagonal Jacobian of the transition `a → b` (constant on each overlap component).
    pub fn transition_jacobian(&self, a: &Chart, b: &Chart) -> Vec<f64> {
        (0..a.dim).map(|i| b.scale()[i] / a.scale()[i]).collect()
    }

    pub fn transition_jacobian_det(&self, a: &Chart, b: &Chart) -> f64 {
        self.transition_jacobian(a, b).iter().product()
    }

    /// Deterministic sample points of a compact box given in ambient coordinates.
    pub fn sample_compact(&self, k: &BoxRegion, per_axis: usize) -> Result<Vec<Vec<f64>>> {
        let pts = k.grid(per_axis);
        for p in &pts {
            self.check(p)?;
        }
        Ok(pts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_distance() {
        let m = Manifold::interval(-2.0, 2.0).unwrap();
        assert_eq!(m.distance(&[0.5], &[-0.5]).unwrap(), 1.0);
        assert!(m.distance(&[3.0], &[0.0]).is_err());
    }

    #[test]
    fn circle_shorter_arc() {
        let m = Manifold::circle();
        let d = m.distance(&[0.0], &[1.5 * PI]).unwrap();
        assert!((d - PI / 2.0).abs() < 1e-15);
        assert_eq!(m.distance(&[1.0], &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn circle_chart_offset_transition() {
        let m = Manifold::circle();
        let (a, b) = (m.chart("a").unwrap(), m.chart("b").unwrap());
        let y = m.transition(&a, &b, &[PI / 4.0]).unwrap();
        assert!((y[0] - (PI / 4.0 - PI)).abs() < 1e-15);
        let y = m.transition(&a, &b, &[-PI / 4.0]).unwrap();
        assert!((y[0] - (-PI / 4.0 + PI)).abs() < 1e-15);
        assert!(matches!(m.transition(&a, &b, &[0.0]), Err(Error::Overlap { .. })));
    }

    #[test]
    fn rescale_chart_transition() {
        let m = Manifold::interval(-2.0, 2.0)
            .unwrap()
            .with_affine_chart("double", vec![2.0], vec![0.0])
            .unwrap();
        let (a, b) = (m.chart("main").unwrap(), m.chart("double").unwrap());
        assert_eq!(m.transition(&a, &b, &[0.5]).unwrap(), vec![1.0]);
        assert_eq!(m.transition(&a, &a, &[0.7]).unwrap(), vec![0.7]);
        assert!(m.transition(&a, &b, &[2.5]).is_err());
    }

    #[test]
    fn unknown_chart_suggests() {
        let m = Manifold::circle();
        match m.chart("aa") {
            Err(Error::Unresolved { suggestions, .. }) => assert!(suggestions.contains(&"a".to_string())),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn chart_for_avoids_boundary() {
        let m = Manifold::circle();
        assert_eq!(m.chart_for(&[0.1]).unwrap().id, "a");
        assert_eq!(m.chart_for(&[3.0]).unwrap().id, "b");
    }
}
