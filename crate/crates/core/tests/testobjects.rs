use colombeau::asymptotics::EpsGrid;
use colombeau::dual::lift;
use colombeau::quadrature::integrate_f64;
use colombeau::region::BoxRegion;
use colombeau::testobjects::{
    build_mollifier, bump, classify_family, integrate_function, moment, scale_translate, ConstantFamily, MomentClass,
    PerturbedFamily,
};
use proptest::prelude::*;

/// Trapezoid rule; spectrally accurate for smooth functions vanishing to all orders at the ends.
fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (1..n).map(|i| f(a + h * i as f64)).sum::<f64>() * h
}

fn b(x: f64) -> f64 {
    bump(&lift(&[x])).re()
}

#[test]
fn bump_integral_matches_trapezoid_oracle() {
    let oracle = trapezoid(b, -1.0, 1.0, 100_000);
    let v = integrate_f64(&BoxRegion::interval(-1.0, 1.0), |x| Ok(b(x[0]))).unwrap();
    assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
}

#[test]
fn mollifier_peak_scales_like_inverse_eps() {
    let total = trapezoid(b, -1.0, 1.0, 100_000);
    let rho = build_mollifier(0, 1).unwrap();
    let peak = (-1f64).exp() / total;
    assert!((rho.eval_f64(&[0.0]) - peak).abs() < 1e-10);
    for eps in [0.5, 0.1, 0.01] {
        let s = scale_translate(&rho, eps, &[0.3]);
        assert!((s.eval_f64(&[0.3]) - peak / eps).abs() < 1e-9 / eps);
    }
}

#[test]
fn mollifier_moments_vanish_to_order() {
    for m in [1, 3, 5] {
        let rho = build_mollifier(m, 1).unwrap();
        assert!((integrate_function(&rho).unwrap() - 1.0).abs() < 1e-10);
        for k in 1..=m {
            assert!(moment(&rho, &[k]).unwrap().abs() < 1e-9, "m={m} k={k}");
        }
        // the next even moment is the first one that survives
        let next = if m % 2 == 1 { m + 1 } else { m + 2 };
        assert!(moment(&rho, &[next]).unwrap().abs() > 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scale_translate_moments(eps in 0.05f64..1.0, x in -1.0f64..1.0, k in 0usize..4) {
        let phi = build_mollifier(1, 1).unwrap().derivative(&[1]);
        let s = scale_translate(&phi, eps, &[x]);
        let lhs = integrate_f64(s.support(), |y| Ok(s.eval_f64(y) * (y[0] - x).powi(k as i32))).unwrap();
        let rhs = eps.powi(k as i32) * moment(&phi, &[k]).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }
}

fn grid() -> EpsGrid {
    EpsGrid::new(0.25, 0.5f64.sqrt(), 13).unwrap()
}

#[test]
fn constant_mollifier_families_are_box() {
    let k = BoxRegion::interval(-1.0, 1.0);
    for m in [1, 3] {
        let fam = ConstantFamily {
            base: build_mollifier(m, 1).unwrap(),
        };
        let r = classify_family(&fam, m, &k, 3, &grid()).unwrap();
        assert_eq!(r.class, MomentClass::Box(m));
    }
}

#[test]
fn box_implies_delta_on_perturbed_families() {
    let k = BoxRegion::interval(-1.0, 1.0);
    let base = build_mollifier(3, 1).unwrap();
    for exponent in [0.0, 1.0, 2.0, 3.0, 4.0] {
        for m in [1, 2, 3] {
            let fam = PerturbedFamily {
                base: base.clone(),
                perturbation: base.derivative(&[1]).scaled(-1.0),
                coefficient: 1.0,
                exponent,
            };
            let r = classify_family(&fam, m, &k, 3, &grid()).unwrap();
            if r.is_box() {
                assert!(r.is_delta(), "exponent {exponent}, m {m}");
            }
            // the perturbation carries a unit first moment, so the first moment decays like ε^a
            let first = r.order(&[1]).unwrap();
            assert!((first - exponent).abs() < 0.05, "exponent {exponent}: fitted {first}");
        }
    }
}

#[test]
fn delta_of_odd_order_implies_box_of_half_order() {
    let k = BoxRegion::interval(-1.0, 1.0);
    let base = build_mollifier(5, 1).unwrap();
    // ψ = ρ₅ + ε³·ρ₅''/2 has moment 2 ~ ε³ and moments 1, 3 zero: Delta(3) but not Box(3)
    let fam = PerturbedFamily {
        perturbation: base.derivative(&[2]).scaled(0.5),
        base,
        coefficient: 1.0,
        exponent: 3.0,
    };
    let delta = classify_family(&fam, 3, &k, 3, &grid()).unwrap();
    assert!(delta.is_delta());
    let half = classify_family(&fam, 2, &k, 3, &grid()).unwrap();
    assert!(half.is_box());
}
