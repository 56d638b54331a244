use std::sync::Arc;

use crate::dual::{span_of, MultiDual};
use crate::error::Result;
use crate::geometry::{Chart, VectorField};

/// A two-slot n-form family `f(p, q)`: point `p` in ambient coordinates,
/// density at `q` in a fixed chart. The last argument is the first free infinitesimal.
pub type TwoSlot = Arc<dyn Fn(&[MultiDual], &[MultiDual], usize) -> Result<MultiDual> + Send + Sync>;

/// Which slot a Lie derivative acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// `L′_ζ`: along the flow in the point slot.
    Prime,
    /// `L_ζ`: the n-form Lie derivative in the q-slot.
    Second,
    /// `L′_ζ + L_ζ`.
    Both,
}

/// Apply `L′_ζ`, `L_ζ` or their sum to a two-slot family.
///
/// With one infinitesimal `t`, `(L′ + L)f` is the coefficient of `t` in
/// `f(p + tζ(p), q + tζ_α(q))·(1 + t·div ζ_α(q))`.
pub fn lie_two_slot(f: TwoSlot, field: &VectorField, chart: Arc<Chart>, which: Slot) -> TwoSlot {
    let field = field.clone();
    Arc::new(move |p: &[MultiDual], q: &[MultiDual], next: usize| {
        let fresh = next.max(span_of(p)).max(span_of(q));
        let t = MultiDual::infinitesimal(fresh);
        let p2: Vec<MultiDual> = if which == Slot::Second {
            p.to_vec()
        } else {
            let z = field.ambient(p);
            p.iter().zip(&z).map(|(a, b)| a + &(b * &t)).collect()
        };
        let (q2, jac) = if which == Slot::Prime {
            (q.to_vec(), MultiDual::constant(1.0))
        } else {
            let z = field.in_chart(&chart, q);
            let div = field.divergence_in_chart(&chart, q, fresh + 1);
            (
                q.iter().zip(&z).map(|(a, b)| a + &(b * &t)).collect(),
                &MultiDual::constant(1.0) + &(&div * &t),
            )
        };
        Ok((&f(&p2, &q2, fresh + 1)? * &jac).part(fresh))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::lift;
    use crate::geometry::Manifold;
    use crate::testobjects::build_mollifier;

    fn setup() -> (Arc<Chart>, TwoSlot, crate::testobjects::LocalTestFunction) {
        let m = Manifold::interval(-3.0, 3.0).unwrap();
        let c = m.chart("main").unwrap();
        let rho = build_mollifier(0, 1).unwrap();
        let r = rho.clone();
        let f: TwoSlot = Arc::new(move |p, q, _| Ok(r.eval(&[&q[0] - &p[0]])));
        (c, f, rho)
    }

    #[test]
    fn p_independent_family_has_zero_prime_derivative() {
        let (c, _, rho) = setup();
        let g: TwoSlot = Arc::new(move |_, q, _| Ok(rho.eval(q)));
        let l = lie_two_slot(g, &VectorField::euler(1), c, Slot::Prime);
        assert_eq!(l(&lift(&[0.3]), &lift(&[0.2]), 0).unwrap().re(), 0.0);
    }

    #[test]
    fn translation_invariance_cancels() {
        let (c, f, _) = setup();
        let l = lie_two_slot(f, &VectorField::coordinate(1, 0), c, Slot::Both);
        for (p, q) in [(0.0, 0.5), (0.2, -0.3), (1.0, 1.4)] {
            assert!(l(&lift(&[p]), &lift(&[q]), 0).unwrap().re().abs() < 1e-14);
        }
    }

    #[test]
    fn euler_field_spot_value() {
        let (c, f, rho) = setup();
        let l = lie_two_slot(f, &VectorField::euler(1), c, Slot::Both);
        let v = l(&lift(&[0.0]), &lift(&[0.5]), 0).unwrap().re();
        let d = rho.eval(&[MultiDual::variable(0.5, 0)]).derivative(&[0]);
        let expected = rho.eval_f64(&[0.5]) + 0.5 * d;
        assert!((v - expected).abs() < 1e-14, "{v} vs {expected}");
    }
}
