use std::sync::Arc;

use crate::dual::{lift, MultiDual};
use crate::error::Result;
use crate::geometry::{Chart, VectorField};
use crate::testobjects::{LocalTestFunction, TestForm};

use super::repr::{Node, Representative};

/// `(ψ⁻¹)*R = R ∘ (ψ* × ψ⁻¹)`: a function of a chart test function and a chart point.
#[derive(Clone, Debug)]
pub struct LocalRepresentative {
    pub rep: Representative,
    pub chart: Arc<Chart>,
}

impl Representative {
    pub fn localize(&self, chart: Arc<Chart>) -> LocalRepresentative {
        LocalRepresentative {
            rep: self.clone(),
            chart,
        }
    }
}

impl LocalRepresentative {
    fn form(&self, phi: &LocalTestFunction) -> Result<TestForm> {
        TestForm::pullback(self.chart.clone(), phi)
    }

    /// `R(ψ*(φ dⁿy), ψ⁻¹x)` at a possibly jet-valued chart point.
    pub fn evaluate(&self, phi: &LocalTestFunction, x: &[MultiDual], next: usize) -> Result<MultiDual> {
        let p = self.chart.from_coords_dual(x);
        self.rep.evaluate(&self.form(phi)?, &p, next)
    }

    pub fn evaluate_f64(&self, phi: &LocalTestFunction, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate(phi, &lift(x), 0)?.re())
    }

    /// Local form of the Lie derivative: `ζ_α·∂_x R_loc(φ, x) − d₁R_loc(φ, x)(L_{ζ_α}(φ dⁿy))`.
    ///
    /// Computed from the localized pieces only, without building an `L̂` node;
    /// compare with `localize(L̂_ζ R)` for the two-path check.
    pub fn lie_local(&self, field: &VectorField, phi: &LocalTestFunction, x: &[f64]) -> Result<f64> {
        let w = self.form(phi)?;
        let xd = lift(x);
        let z = field.in_chart(&self.chart, &xd);
        let t = MultiDual::infinitesimal(0);
        let moved: Vec<MultiDual> = xd.iter().zip(&z).map(|(a, b)| a + &(b * &t)).collect();
        let along = self.evaluate(phi, &moved, 1)?.part(0).re();
        let eta = w.lie_derivative(field);
        let p = self.chart.from_coords_dual(&xd);
        let d1 = self.rep.d1(&w, &p, &eta, 0)?.re();
        Ok(along - d1)
    }

    /// Whether the top node is a Lie derivative (the case the two-path check targets).
    pub fn is_lie(&self) -> bool {
        matches!(self.rep.node(), Node::LieDeriv(..))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Distribution;
    use crate::geometry::Manifold;
    use crate::testobjects::{build_mollifier, scale_translate};

    #[test]
    fn two_paths_agree_for_lie_of_delta() {
        let m = Arc::new(
            Manifold::interval(-2.0, 2.0)
                .unwrap()
                .with_affine_chart("double", vec![2.0], vec![0.0])
                .unwrap(),
        );
        let d = Representative::iota(Distribution::delta(m.clone(), vec![0.0]).unwrap());
        let z = VectorField::coordinate(1, 0);
        for chart in ["main", "double"] {
            let c = m.chart(chart).unwrap();
            let phi = scale_translate(&build_mollifier(0, 1).unwrap(), 0.5, &[0.1]);
            let a = d
                .lie_derivative(&z)
                .unwrap()
                .localize(c.clone())
                .evaluate_f64(&phi, &[0.2])
                .unwrap();
            let b = d.localize(c).lie_local(&z, &phi, &[0.2]).unwrap();
            assert!((a - b).abs() < 1e-8, "{chart}: {a} vs {b}");
        }
    }
}
