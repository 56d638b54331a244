use std::sync::Arc;

use colombeau::distributions::Distribution;
use colombeau::dual::{lift, MultiDual};
use colombeau::expr::SmoothFn;
use colombeau::genfunc::{parse_representative, Representative, Scope};
use colombeau::geometry::{Manifold, VectorField};
use colombeau::testobjects::{build_mollifier, scale_translate, TestForm};
use proptest::prelude::*;

fn omega() -> Arc<Manifold> {
    Arc::new(Manifold::interval(-2.0, 2.0).unwrap())
}

fn bump_form(m: &Manifold, eps: f64, x: f64, order: usize) -> TestForm {
    let rho = build_mollifier(order, 1).unwrap();
    TestForm::pullback(m.charts()[0].clone(), &scale_translate(&rho, eps, &[x])).unwrap()
}

fn distributions(m: &Arc<Manifold>) -> Vec<Distribution> {
    let d = Distribution::delta(m.clone(), vec![0.1]).unwrap();
    vec![
        d.clone(),
        Distribution::heaviside(m.clone(), "main", 0, 0.0).unwrap(),
        Distribution::regular(m.clone(), SmoothFn::parse("sin(x)").unwrap()),
        d.lie_derivative(&VectorField::euler(1)).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pairings_are_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, x1 in -0.5f64..0.5, x2 in -0.5f64..0.5) {
        let m = omega();
        let (w1, w2) = (bump_form(&m, 0.4, x1, 0), bump_form(&m, 0.3, x2, 3));
        let combo = w1.scaled(&MultiDual::constant(a)).add(&w2.scaled(&MultiDual::constant(b)));
        for u in distributions(&m) {
            let lhs = u.pair(&combo).unwrap().re();
            let rhs = a * u.pair(&w1).unwrap().re() + b * u.pair(&w2).unwrap().re();
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()), "{u}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn lie_derivative_is_homogeneous_in_the_field(a in -3.0f64..3.0, x in -0.5f64..0.5) {
        let m = omega();
        let w = bump_form(&m, 0.3, x, 1);
        for z in [VectorField::coordinate(1, 0), VectorField::euler(1)] {
            for u in distributions(&m) {
                let lhs = u.lie_derivative(&z.scaled(a)).unwrap().pair(&w).unwrap().re();
                let rhs = a * u.lie_derivative(&z).unwrap().pair(&w).unwrap().re();
                prop_assert!((lhs - rhs).abs() < 1e-8 * (1.0 + rhs.abs()), "{u}: {lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn lie_derivative_is_linear_in_the_distribution() {
    let m = omega();
    let w = bump_form(&m, 0.3, 0.2, 1);
    let us = distributions(&m);
    let z = VectorField::euler(1);
    let combo = Distribution::combination(m.clone(), vec![(2.0, us[0].clone()), (-0.5, us[2].clone())]);
    let lhs = combo.lie_derivative(&z).unwrap().pair(&w).unwrap().re();
    let rhs = 2.0 * us[0].lie_derivative(&z).unwrap().pair(&w).unwrap().re()
        - 0.5 * us[2].lie_derivative(&z).unwrap().pair(&w).unwrap().re();
    assert!((lhs - rhs).abs() < 1e-9);
}

#[test]
fn local_derivative_matches_global_lie_derivative() {
    let m = omega();
    let chart = m.charts()[0].clone();
    let rho = build_mollifier(1, 1).unwrap();
    let phi = scale_translate(&rho, 0.4, &[0.3]);
    let w = TestForm::pullback(chart.clone(), &phi).unwrap();
    // ⟨L_{∂x} u, φ⟩ = −⟨u, φ′⟩ on Ω
    let dphi = phi.derivative(&[1]);
    for u in distributions(&m) {
        let global = u
            .lie_derivative(&VectorField::coordinate(1, 0))
            .unwrap()
            .pair(&w)
            .unwrap()
            .re();
        let local = -u.localize(chart.clone()).pair_f64(&dphi).unwrap();
        assert!((global - local).abs() < 1e-8, "{u}: {global} vs {local}");
    }
}

fn scope() -> Scope {
    Scope::new(omega())
}

#[test]
fn d1_matches_central_differences_on_every_node_kind() {
    let s = scope();
    let m = s.manifold.clone();
    let w = bump_form(&m, 0.4, 0.1, 0);
    let eta = bump_form(&m, 0.3, -0.2, 1);
    let p = [0.15];
    for src in [
        "iota(delta(0))",
        "sigma(x^2)",
        "2*iota(heaviside(0)) + iota(sin(x))",
        "iota(delta(0)) * iota(heaviside(0))",
        "exp(0.1*iota(delta(0)))",
        "L(x_d_x, iota(delta(0)) * iota(delta(0)))",
    ] {
        let r: Representative = parse_representative(src, &s).unwrap();
        let exact = r.d1(&w, &lift(&p), &eta, 0).unwrap().re();
        let h = 1e-5;
        let plus = w.add(&eta.scaled(&MultiDual::constant(h)));
        let minus = w.add(&eta.scaled(&MultiDual::constant(-h)));
        let fd = (r.evaluate_f64(&plus, &p).unwrap() - r.evaluate_f64(&minus, &p).unwrap()) / (2.0 * h);
        assert!(
            (exact - fd).abs() <= 1e-4 * exact.abs().max(1.0),
            "{src}: {exact} vs {fd}"
        );
    }
}

#[test]
fn sigma_is_multiplicative_with_unit() {
    let s = scope();
    let m = s.manifold.clone();
    let w = bump_form(&m, 0.2, 0.0, 0);
    let prod = parse_representative("sigma(sin(x)) * sigma(exp(x))", &s).unwrap();
    let joint = parse_representative("sigma(sin(x)*exp(x))", &s).unwrap();
    let one = Representative::one(m.clone());
    for p in [-0.7, 0.0, 0.4] {
        let a = prod.evaluate_f64(&w, &[p]).unwrap();
        let b = joint.evaluate_f64(&w, &[p]).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert_eq!(one.evaluate_f64(&w, &[p]).unwrap(), 1.0);
    }
}
