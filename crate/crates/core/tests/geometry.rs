use std::f64::consts::PI;

use colombeau::geometry::{Manifold, VectorField};
use proptest::prelude::*;

fn interval_with_charts() -> Manifold {
    Manifold::interval(-2.0, 2.0)
        .unwrap()
        .with_affine_chart("wide", vec![3.0], vec![0.5])
        .unwrap()
}

proptest! {
    #[test]
    fn chart_round_trip_on_interval(x in -1.999f64..1.999) {
        let m = interval_with_charts();
        for c in m.charts() {
            let y = c.to_coords(&[x]).unwrap();
            prop_assert!((c.from_coords(&y)[0] - x).abs() < 1e-12);
        }
    }

    #[test]
    fn chart_round_trip_on_circle(t in 0.01f64..(2.0 * PI - 0.01)) {
        let m = Manifold::circle();
        for c in m.charts() {
            if let Ok(y) = c.to_coords(&[t]) {
                let back = m.canonical(&c.from_coords(&y))[0];
                prop_assert!((back - t).abs() < 1e-12, "{} {back} {t}", c.id);
            }
        }
    }

    #[test]
    fn circle_transitions_compose_to_identity(t in 0.05f64..3.0) {
        let m = Manifold::circle();
        let (a, b) = (m.chart("a").unwrap(), m.chart("b").unwrap());
        let y = a.to_coords(&[t]).unwrap();
        let z = m.transition(&a, &b, &y).unwrap();
        let back = m.transition(&b, &a, &z).unwrap();
        prop_assert!((back[0] - y[0]).abs() < 1e-10);
        prop_assert!(m.transition_jacobian_det(&a, &b) > 0.0);
    }

    #[test]
    fn flow_group_law_and_inverse(p in -0.5f64..0.5, s in -0.5f64..0.5, t in -0.5f64..0.5) {
        let m = Manifold::interval(-2.0, 2.0).unwrap();
        let z = VectorField::sine(1, 0, 0.7, 1.3);
        let st = z.flow(&m, s, &z.flow(&m, t, &[p]).unwrap()).unwrap();
        let direct = z.flow(&m, s + t, &[p]).unwrap();
        prop_assert!((st[0] - direct[0]).abs() < 1e-8);
        let back = z.scaled(-1.0).flow(&m, t, &z.flow(&m, t, &[p]).unwrap()).unwrap();
        prop_assert!((back[0] - p).abs() < 1e-8);
    }

    #[test]
    fn circle_distance_is_rotation_invariant(p in 0.0f64..std::f64::consts::TAU, q in 0.0f64..std::f64::consts::TAU, t in -3.0f64..3.0) {
        let m = Manifold::circle();
        let rot = VectorField::coordinate(1, 0);
        let (pp, qq) = (rot.flow(&m, t, &[p]).unwrap(), rot.flow(&m, t, &[q]).unwrap());
        let d0 = m.distance(&[p], &[q]).unwrap();
        prop_assert!((m.distance(&pp, &qq).unwrap() - d0).abs() < 1e-10);
    }
}

#[test]
fn field_components_transform_by_the_jacobian() {
    let m = interval_with_charts();
    let (main, wide) = (m.chart("main").unwrap(), m.chart("wide").unwrap());
    let z = VectorField::euler(1);
    let jac = m.transition_jacobian(&main, &wide)[0];
    for x in [-1.5, -0.3, 0.0, 0.8, 1.9] {
        let a = z.in_chart(&main, &colombeau::dual::lift(&main.to_coords(&[x]).unwrap()))[0].re();
        let b = z.in_chart(&wide, &colombeau::dual::lift(&wide.to_coords(&[x]).unwrap()))[0].re();
        assert!((b - jac * a).abs() < 1e-8, "{x}: {a} {b}");
    }
}
