use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use colombeau_ffi::*;

const SPEC: &str = r#"
[manifold]
kind = "interval"
lo = -2.0
hi = 2.0

[grid]
points = 9
per_axis = 5

[[kernel]]
name = "rho"
"#;

fn context() -> *mut ColombeauContext {
    let spec = CString::new(SPEC).unwrap();
    let mut ctx = ptr::null_mut();
    assert_eq!(
        unsafe { colombeau_context_new(spec.as_ptr(), &mut ctx) },
        ColombeauStatus::Ok
    );
    ctx
}

fn parse(ctx: *const ColombeauContext, expr: &str) -> (ColombeauStatus, *mut ColombeauRepresentative) {
    let e = CString::new(expr).unwrap();
    let mut rep = ptr::null_mut();
    let s = unsafe { colombeau_parse(ctx, e.as_ptr(), &mut rep) };
    (s, rep)
}

fn last_error() -> String {
    let p = colombeau_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn delta_evaluates_to_mollifier_peak() {
    let ctx = context();
    let (s, rep) = parse(ctx, "iota(delta(0))");
    assert_eq!(s, ColombeauStatus::Ok);
    let kernel = CString::new("rho").unwrap();
    let eps = 0.125;
    let mut v = 0.0;
    let p = [0.0];
    let s = unsafe { colombeau_evaluate(ctx, rep, kernel.as_ptr(), eps, p.as_ptr(), 1, &mut v) };
    assert_eq!(s, ColombeauStatus::Ok);
    // ρ(0)/ε with ρ(0) = e^{-1}/∫b, ∫b = 0.44399381616807943
    let expected = (-1f64).exp() / 0.443_993_816_168_079_4 / eps;
    assert!((v - expected).abs() < 1e-9 * expected, "{v} vs {expected}");
    unsafe {
        colombeau_representative_free(rep);
        colombeau_context_free(ctx);
    }
}

#[test]
fn sweep_and_estimate_recover_delta_growth() {
    let ctx = context();
    let (_, rep) = parse(ctx, "iota(delta(0))");
    let kernel = CString::new("rho").unwrap();
    let mut n = 0usize;
    let s = unsafe {
        colombeau_sweep(
            ctx,
            rep,
            kernel.as_ptr(),
            ptr::null(),
            ptr::null(),
            1,
            ptr::null_mut(),
            ptr::null_mut(),
            &mut n,
        )
    };
    assert_eq!(s, ColombeauStatus::BufferTooSmall);
    assert_eq!(n, 9);
    let (mut eps, mut vals) = (vec![0.0; n], vec![0.0; n]);
    let s = unsafe {
        colombeau_sweep(
            ctx,
            rep,
            kernel.as_ptr(),
            ptr::null(),
            ptr::null(),
            1,
            eps.as_mut_ptr(),
            vals.as_mut_ptr(),
            &mut n,
        )
    };
    assert_eq!(s, ColombeauStatus::Ok);
    let mut slope = 0.0;
    assert_eq!(
        unsafe { colombeau_estimate_order(eps.as_ptr(), vals.as_ptr(), n, &mut slope) },
        ColombeauStatus::Ok
    );
    assert!((slope + 1.0).abs() < 0.05, "slope {slope}");
    unsafe {
        colombeau_representative_free(rep);
        colombeau_context_free(ctx);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let ctx = context();
    let (s, rep) = parse(ctx, "iota(delta(0)) +");
    assert_eq!(s, ColombeauStatus::Parse);
    assert!(rep.is_null());
    assert!(last_error().contains("parse error"));

    // unknown names inside an expression are located parse errors
    let (s, _) = parse(ctx, "L(d_y, iota(delta(0)))");
    assert_eq!(s, ColombeauStatus::Parse);
    assert!(last_error().contains("d_x"), "{}", last_error());

    let mut v = 0.0;
    let kernel = CString::new("rho").unwrap();
    let s = unsafe { colombeau_evaluate(ctx, ptr::null(), kernel.as_ptr(), 0.1, [0.0].as_ptr(), 1, &mut v) };
    assert_eq!(s, ColombeauStatus::NullPointer);

    let bad = CString::new("[manifold]\nkind = \"torus\"\n").unwrap();
    let mut other = ptr::null_mut();
    assert_eq!(
        unsafe { colombeau_context_new(bad.as_ptr(), &mut other) },
        ColombeauStatus::Unresolved
    );
    unsafe { colombeau_context_free(ctx) };
    // freeing null is a no-op
    unsafe { colombeau_context_free(ptr::null_mut()) };
}

#[test]
fn run_spec_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let spec = format!(
        "name = \"ffi_run\"\n{SPEC}\n[[experiment]]\nid = \"d\"\ntest = \"negligible\"\nexpr = \"iota(delta(0))\"\nexpect = \"fails_negligible(1)\"\n"
    );
    let spec = CString::new(spec).unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut code = -1;
    assert_eq!(
        unsafe { colombeau_run_spec(spec.as_ptr(), out.as_ptr(), &mut code) },
        ColombeauStatus::Ok
    );
    assert_eq!(code, 0);
    for ext in ["evidence.csv", "verdicts.json", "summary.txt"] {
        assert!(dir.path().join(format!("ffi_run.{ext}")).exists());
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/colombeau.h");
    assert!(header.exists());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ return COLOMBEAU_STATUS_OK; }}\n",
            header.display()
        ),
    )
    .unwrap();
    match Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg(&src)
        .status()
    {
        Ok(s) => assert!(s.success()),
        Err(_) => eprintln!("no C compiler available; skipped"),
    }
}
