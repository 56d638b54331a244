use std::sync::Arc;

use colombeau::asymptotics::EpsGrid;
use colombeau::expr::SmoothFn;
use colombeau::geometry::{Manifold, VectorField};
use colombeau::kernels::{check_growth, check_order_m, check_support, SmoothingKernel};
use colombeau::region::BoxRegion;

fn omega() -> Arc<Manifold> {
    Arc::new(Manifold::interval(-2.0, 2.0).unwrap())
}

#[test]
fn rho_kernel_support_constant_is_one() {
    let k = SmoothingKernel::mollifier(omega(), 0, None).unwrap();
    let r = check_support(&k, &BoxRegion::interval(-1.0, 1.0), 5, &EpsGrid::default()).unwrap();
    assert!(r.passes);
    assert!((r.c - 1.0).abs() < 0.02, "C = {}", r.c);
}

#[test]
fn rho_kernel_growth_orders() {
    let k = Arc::new(SmoothingKernel::mollifier(omega(), 0, None).unwrap());
    let kk = BoxRegion::interval(-1.0, 1.0);
    let d = VectorField::coordinate(1, 0);
    let e = VectorField::euler(1);
    let cases: Vec<(Vec<VectorField>, Vec<VectorField>)> = vec![
        (vec![], vec![]),
        (vec![], vec![d.clone()]),
        (vec![e.clone()], vec![]),
        (vec![e.clone()], vec![d.clone()]),
    ];
    for (z, t) in cases {
        let r = check_growth(k.clone(), &kk, &z, &t, 5, &EpsGrid::default()).unwrap();
        assert!(r.passes, "{r:?}");
    }
}

#[test]
fn rho_kernel_reproduction_orders() {
    let k = SmoothingKernel::mollifier(omega(), 0, None).unwrap();
    let kk = BoxRegion::interval(-1.0, 1.0);
    let x2 = SmoothFn::parse("x^2").unwrap();
    let a1 = check_order_m(&k, std::slice::from_ref(&x2), &kk, 1, 5, &EpsGrid::default()).unwrap();
    assert!(a1.passes);
    assert!((a1.min_order() - 2.0).abs() < 0.1);
    let a2 = check_order_m(&k, &[x2], &kk, 2, 5, &EpsGrid::default()).unwrap();
    assert!(!a2.passes);
    let k3 = SmoothingKernel::mollifier(omega(), 3, None).unwrap();
    let a3 = check_order_m(&k3, &[], &kk, 3, 5, &EpsGrid::default()).unwrap();
    assert!(a3.passes);
}

#[test]
fn from_local_box3_family_passes_a3() {
    use colombeau::kernels::{from_local, CutoffSpec};
    use colombeau::testobjects::{build_mollifier, classify_family, PerturbedFamily, SharedFamily};
    let m = omega();
    let chart = m.chart("main").unwrap();
    let rho3 = build_mollifier(3, 1).unwrap();
    let fam: SharedFamily = Arc::new(PerturbedFamily {
        base: rho3.clone(),
        perturbation: rho3.derivative(&[1]).scaled(-1.0),
        coefficient: 1.0,
        exponent: 3.0,
    });
    let kk = BoxRegion::interval(-1.0, 1.0);
    let class = classify_family(fam.as_ref(), 3, &kk, 5, &EpsGrid::default()).unwrap();
    assert!(class.is_box());
    let background = Arc::new(SmoothingKernel::mollifier(m.clone(), 3, None).unwrap());
    let cutoff = CutoffSpec::around(&kk, &chart.image).unwrap();
    let k = from_local("local_box3", fam, chart, kk.clone(), cutoff, background, 3).unwrap();
    let r = check_order_m(&k, &[], &kk, 3, 5, &EpsGrid::default()).unwrap();
    assert!(r.passes);
}
