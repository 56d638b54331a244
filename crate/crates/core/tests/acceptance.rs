//! Acceptance criteria, one test each. Every test writes a single
//! `criterion N: PASS|FAIL ...` line to stdout, bypassing output capture.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use colombeau::asymptotics::{
    cross_check_local, equal_in_g, estimate_order, sweep, test_moderate, test_negligible, EpsGrid, Samples, TestSpec,
};
use colombeau::distributions::Distribution;
use colombeau::dual::lift;
use colombeau::expr::SmoothFn;
use colombeau::genfunc::Representative;
use colombeau::geometry::{Manifold, VectorField};
use colombeau::kernels::{
    check_growth, check_order_m, check_support, from_local, to_local, CutoffSpec, SmoothingKernel,
};
use colombeau::region::BoxRegion;
use colombeau::testobjects::{build_mollifier, classify_family, PerturbedFamily, SharedFamily};

const PER_AXIS: usize = 9;

fn report(n: usize, ok: bool, start: Instant, detail: String) {
    let line = format!(
        "criterion {n}: {} ({:.1} s) {detail}\n",
        if ok { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(ok, "criterion {n} failed: {detail}");
}

fn omega() -> Arc<Manifold> {
    Arc::new(Manifold::interval(-2.0, 2.0).unwrap())
}

fn kernel(m: &Arc<Manifold>, order: usize) -> Arc<SmoothingKernel> {
    Arc::new(SmoothingKernel::mollifier(m.clone(), order, None).unwrap())
}

fn unit_k() -> BoxRegion {
    BoxRegion::interval(-1.0, 1.0)
}

fn delta(m: &Arc<Manifold>) -> Representative {
    Representative::iota(Distribution::delta(m.clone(), vec![0.0]).unwrap())
}

fn coherence(m: &Arc<Manifold>, f: &str) -> Representative {
    let f = SmoothFn::parse(f).unwrap();
    Representative::iota(Distribution::regular(m.clone(), f.clone()))
        .sub(&Representative::sigma(m.clone(), f))
        .unwrap()
}

fn slope(rep: &Representative, k: &SmoothingKernel, compact: &BoxRegion) -> f64 {
    let s = sweep(rep, k, compact, &[], PER_AXIS, &EpsGrid::default()).unwrap();
    estimate_order(&s.samples).unwrap().slope
}

#[test]
fn criterion_1_embedding_coherence() {
    let start = Instant::now();
    let grid = EpsGrid::default();
    assert!((grid.smallest() - 2f64.powi(-12)).abs() < 1e-15 && grid.eps0 == 0.25);
    let circle = Arc::new(Manifold::circle());
    let cases = [
        (omega(), "sin(x)", unit_k()),
        (
            circle.clone(),
            "sin(theta)",
            BoxRegion::interval(0.0, 2.0 * std::f64::consts::PI - 0.25),
        ),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (m, f, k) in &cases {
        let rep = coherence(m, f);
        for order in [1, 3, 5] {
            let s = slope(&rep, &kernel(m, order), k);
            let pass = s >= (order + 1) as f64 - 0.25;
            ok &= pass;
            detail.push(format!("{}/m={order}: {s:.3}", m.name));
        }
    }
    report(1, ok, start, detail.join(", "));
}

#[test]
fn criterion_2_injectivity_witness() {
    let start = Instant::now();
    let m = omega();
    let d = delta(&m);
    let sq = d.mul(&d).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for order in [0, 1, 3, 5] {
        let k = kernel(&m, order);
        let s1 = slope(&d, &k, &unit_k());
        let s2 = slope(&sq, &k, &unit_k());
        ok &= (s1 + 1.0).abs() <= 0.1 && (s2 + 2.0).abs() <= 0.1;
        detail.push(format!("m={order}: δ {s1:.3}, δ² {s2:.3}"));
    }
    let spec = TestSpec::new(vec![kernel(&m, 0), kernel(&m, 3)], vec![unit_k()])
        .with_fields(vec![VectorField::coordinate(1, 0)])
        .with_per_axis(PER_AXIS);
    let spec = TestSpec { depth: 1, ..spec };
    let neg = test_negligible(&d, &spec).unwrap();
    let fails_l1 = matches!(
        neg.kind,
        colombeau::asymptotics::VerdictKind::FailsNegligible { l: 1, .. }
    );
    let moderate = test_moderate(&sq, &spec).unwrap();
    let n_ok = matches!(moderate.kind, colombeau::asymptotics::VerdictKind::Moderate { n } if n <= 3);
    ok &= fails_l1 && n_ok;
    detail.push(format!("ιδ₀ {}, ιδ₀² {}", neg.kind, moderate.kind));
    report(2, ok, start, detail.join(", "));
}

#[test]
fn criterion_3_nonlinear_distinction() {
    let start = Instant::now();
    let m = omega();
    let h = Representative::iota(Distribution::heaviside(m.clone(), "main", 0, 0.0).unwrap());
    let h2 = h.mul(&h).unwrap();
    let rho = kernel(&m, 0);
    let spec = TestSpec::new(vec![rho.clone()], vec![unit_k()]).with_per_axis(PER_AXIS);
    let eq = equal_in_g(&h2, &h, &spec).unwrap();

    let diff = h2.sub(&h).unwrap();
    let grid = EpsGrid::default();
    let at_zero: Vec<f64> = grid
        .values()
        .iter()
        .map(|&e| diff.evaluate_f64(&rho.eval_f64(e, &[0.0]).unwrap(), &[0.0]).unwrap())
        .collect();
    let plateau_ok = at_zero.iter().all(|v| (v + 0.25).abs() <= 1e-3);
    let plateau = estimate_order(&Samples::new(grid.values(), at_zero.iter().map(|v| v.abs()).collect())).unwrap();

    let rho3 = kernel(&m, 3);
    let mut off_slopes = Vec::new();
    for p in [-0.5, 0.5] {
        let values = grid
            .values()
            .iter()
            .map(|&e| diff.evaluate_f64(&rho3.eval_f64(e, &[p]).unwrap(), &[p]).unwrap().abs())
            .collect();
        off_slopes.push(estimate_order(&Samples::new(grid.values(), values)).unwrap().slope);
    }
    let ok = !eq.equal && plateau_ok && plateau.plateau && off_slopes.iter().all(|s| *s >= 3.0);
    report(
        3,
        ok,
        start,
        format!(
            "equal={}, p=0 values in [{:.6}, {:.6}] slope {:.3}, p=±0.5 slopes {:?}",
            eq.equal,
            at_zero.iter().cloned().fold(f64::INFINITY, f64::min),
            at_zero.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            plateau.slope,
            off_slopes
        ),
    );
}

#[test]
fn criterion_4_exact_commutation() {
    let start = Instant::now();
    let m = omega();
    let us = [
        Distribution::delta(m.clone(), vec![0.0]).unwrap(),
        Distribution::heaviside(m.clone(), "main", 0, 0.0).unwrap(),
        Distribution::regular(m.clone(), SmoothFn::parse("sin(x)").unwrap()),
    ];
    let fields = [VectorField::coordinate(1, 0), VectorField::euler(1)];
    let kernels = [kernel(&m, 0), kernel(&m, 3)];
    // 50 deterministic (ω, p) pairs: ω = Φ(ε, q) with p and q on separate grids
    let mut samples = Vec::new();
    for i in 0..50usize {
        let k = &kernels[i % 2];
        let eps = 0.25 * 0.5f64.powi((i % 5) as i32);
        let q = -0.9 + 1.8 * ((i * 7) % 50) as f64 / 49.0;
        let p = -1.0 + 2.0 * i as f64 / 49.0;
        samples.push((k.eval_f64(eps, &[q]).unwrap(), p));
    }
    let mut worst = 0.0f64;
    for u in &us {
        for z in &fields {
            let lhs = Representative::iota(u.clone()).lie_derivative(z).unwrap();
            let rhs = Representative::iota(u.lie_derivative(z).unwrap());
            for (w, p) in &samples {
                let a = lhs.evaluate(w, &lift(&[*p]), 0).unwrap().re();
                let b = rhs.evaluate_f64(w, &[*p]).unwrap();
                worst = worst.max((a - b).abs());
            }
        }
    }
    report(
        4,
        worst < 1e-8,
        start,
        format!("max |difference| = {worst:.3e} over 6 pairs × 50 samples"),
    );
}

#[test]
fn criterion_5_kernel_certification() {
    let start = Instant::now();
    let m = omega();
    let grid = EpsGrid::default();
    let rho = kernel(&m, 0);
    let support = check_support(&rho, &unit_k(), 5, &grid).unwrap();
    let mut ok = support.passes && (support.c - 1.0).abs() <= 0.02;
    let mut detail = vec![format!("C = {:.4}", support.c)];
    let (d, e) = (VectorField::coordinate(1, 0), VectorField::euler(1));
    for (z, t) in [
        (vec![], vec![]),
        (vec![], vec![d.clone()]),
        (vec![e.clone()], vec![]),
        (vec![e.clone()], vec![d.clone()]),
    ] {
        let g = check_growth(rho.clone(), &unit_k(), &z, &t, 5, &grid).unwrap();
        ok &= g.passes && g.estimate.slope >= -((1 + g.l) as f64) - 0.25;
        detail.push(format!("(k,l)=({},{}) {:.3}", g.k, g.l, g.estimate.slope));
    }
    let x2 = SmoothFn::parse("x^2").unwrap();
    let a1 = check_order_m(&rho, std::slice::from_ref(&x2), &unit_k(), 1, 5, &grid).unwrap();
    let a2 = check_order_m(&rho, &[x2], &unit_k(), 2, 5, &grid).unwrap();
    let a3 = check_order_m(&kernel(&m, 3), &[], &unit_k(), 3, 5, &grid).unwrap();
    ok &= a1.passes && (a1.min_order() - 2.0).abs() < 0.1 && !a2.passes && a3.passes;
    detail.push(format!(
        "x² order {:.3} (Ã₁ {}, Ã₂ {}), ρ₃ min order {:.3} (Ã₃ {})",
        a1.min_order(),
        a1.passes,
        a2.passes,
        a3.min_order(),
        a3.passes
    ));
    report(5, ok, start, detail.join(", "));
}

fn box3_family() -> SharedFamily {
    let rho3 = build_mollifier(3, 1).unwrap();
    Arc::new(PerturbedFamily {
        perturbation: rho3.derivative(&[1]).scaled(-1.0),
        base: rho3,
        coefficient: 1.0,
        exponent: 3.0,
    })
}

#[test]
fn criterion_6_transport_laws() {
    let start = Instant::now();
    let m = omega();
    let grid = EpsGrid::default();
    let chart = m.chart("main").unwrap();
    let local = to_local(kernel(&m, 3), chart.clone()).unwrap();
    let moments = classify_family(&local, 3, &unit_k(), 5, &grid).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for (k, bound) in [(1usize, 3.0), (2, 2.0), (3, 1.0)] {
        let o = moments.order(&[k]).unwrap();
        ok &= o >= bound - 0.25;
        detail.push(format!("|β|={k}: {o:.3}"));
    }
    let fam = box3_family();
    let class = classify_family(fam.as_ref(), 3, &unit_k(), 5, &grid).unwrap();
    let cutoff = CutoffSpec::around(&unit_k(), &chart.image).unwrap();
    let k = from_local("local_box3", fam, chart, unit_k(), cutoff, kernel(&m, 3), 3).unwrap();
    let a3 = check_order_m(&k, &[], &unit_k(), 3, 5, &grid).unwrap();
    ok &= class.is_box() && a3.passes;
    detail.push(format!(
        "family {}, from_local min order {:.3}",
        class.class,
        a3.min_order()
    ));
    report(6, ok, start, detail.join(", "));
}

fn suite(m: &Arc<Manifold>) -> Vec<Representative> {
    let d = delta(m);
    vec![
        Representative::sigma(m.clone(), SmoothFn::parse("sin(x)").unwrap()),
        d.clone(),
        d.mul(&d).unwrap(),
        coherence(m, "sin(x)"),
        d.lie_derivative(&VectorField::coordinate(1, 0)).unwrap(),
    ]
}

#[test]
fn criterion_7_local_global_equivalence() {
    let start = Instant::now();
    let m = omega();
    let chart = m.chart("main").unwrap();
    let mut disagreements = Vec::new();
    let mut detail = Vec::new();
    for r in suite(&m) {
        let c = cross_check_local(
            &r,
            chart.clone(),
            box3_family(),
            3,
            &unit_k(),
            kernel(&m, 3),
            PER_AXIS,
            &EpsGrid::default(),
        )
        .unwrap();
        detail.push(format!(
            "{}: {:.2}/{:.2}",
            c.representative, c.local.estimate.slope, c.global.estimate.slope
        ));
        if !c.agree {
            disagreements.push(c.representative.clone());
        }
    }
    detail.push(format!("{} disagreements", disagreements.len()));
    report(7, disagreements.is_empty(), start, detail.join(", "));
}

#[test]
fn criterion_8_lie_stability() {
    let start = Instant::now();
    let m = omega();
    let fields = [VectorField::coordinate(1, 0), VectorField::euler(1)];
    let spec = TestSpec::new(vec![kernel(&m, 3)], vec![unit_k()])
        .with_per_axis(PER_AXIS)
        .with_l_max(3);
    let mut ok = true;
    let mut detail = Vec::new();
    for r in suite(&m) {
        let base = test_moderate(&r, &spec).unwrap();
        ok &= base.is_moderate();
        for z in &fields {
            let l = r.lie_derivative(z).unwrap();
            let v = test_moderate(&l, &spec).unwrap();
            ok &= v.is_moderate();
            detail.push(format!("L_{}({}) {}", z.name, r, v.kind));
        }
    }
    let neg = coherence(&m, "sin(x)");
    ok &= test_negligible(&neg, &spec).unwrap().is_negligible();
    for z in &fields {
        let v = test_negligible(&neg.lie_derivative(z).unwrap(), &spec).unwrap();
        ok &= v.is_negligible();
        detail.push(format!("L_{}(ι−σ)(sin) {}", z.name, v.kind));
    }
    report(8, ok, start, detail.join(", "));
}

#[test]
fn criterion_9_estimator_calibration() {
    let start = Instant::now();
    let grid = EpsGrid::default();
    type Law = (&'static str, f64, fn(f64) -> f64);
    let cases: [Law; 3] = [
        ("ε²", 2.0, |e| e * e),
        ("ε⁻¹", -1.0, |e| 1.0 / e),
        ("ε⁴(1+0.1 sin(1/ε))", 4.0, |e| {
            e.powi(4) * (1.0 + 0.1 * (1.0 / e).sin())
        }),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, a, f) in cases {
        let est = estimate_order(&Samples::from_fn(&grid, f)).unwrap();
        ok &= (est.slope - a).abs() <= 0.1;
        detail.push(format!("{name}: {:.4}", est.slope));
    }
    let flat = estimate_order(&Samples::from_fn(&grid, |_| 0.75)).unwrap();
    ok &= flat.plateau && flat.slope.abs() <= 0.02;
    detail.push(format!("0.75: slope {:.4} plateau {}", flat.slope, flat.plateau));
    report(9, ok, start, detail.join(", "));
}
