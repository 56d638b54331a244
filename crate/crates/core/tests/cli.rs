use std::fs;
use std::path::{Path, PathBuf};

use colombeau::cli::{main_with_args, spec_hash};

fn specs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs")
}

fn run(args: &[&str]) -> i32 {
    let mut v = vec!["colombeau"];
    v.extend_from_slice(args);
    main_with_args(v)
}

const SMALL: &str = r#"
name = "small"

[manifold]
kind = "interval"
lo = -2.0
hi = 2.0

[grid]
points = 11
per_axis = 5

[[kernel]]
name = "rho"

[[experiment]]
id = "delta"
test = "negligible"
expr = "iota(delta(0))"
expect = "fails_negligible(1)"

[[experiment]]
id = "square"
test = "moderate"
expr = "iota(delta(0))^2"
expect = "moderate(N=3)"
"#;

fn write_spec(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn informational_commands_succeed() {
    assert_eq!(run(&["version"]), 0);
    assert_eq!(run(&["list-builtins"]), 0);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(run(&["run"]), 2);
}

#[test]
fn bundled_delta_square_spec_passes() {
    let out = tempfile::tempdir().unwrap();
    let spec = specs().join("delta_square.toml");
    let code = run(&["--out-dir", out.path().to_str().unwrap(), "run", spec.to_str().unwrap()]);
    assert_eq!(code, 0);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("delta_square.verdicts.json")).unwrap()).unwrap();
    let text = fs::read_to_string(&spec).unwrap();
    assert_eq!(json["spec_hash"], spec_hash(&text).unwrap());
    assert_eq!(json["experiments"].as_array().unwrap().len(), 2);
}

#[test]
fn outputs_have_the_documented_shape_and_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "small.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&["--out-dir", a.to_str().unwrap(), "run", &spec]), 0);
    assert_eq!(run(&["--out-dir", b.to_str().unwrap(), "run", &spec]), 0);
    for ext in ["evidence.csv", "verdicts.json", "summary.txt"] {
        let x = fs::read(a.join(format!("small.{ext}"))).unwrap();
        let y = fs::read(b.join(format!("small.{ext}"))).unwrap();
        assert_eq!(x, y, "{ext} differs between runs");
    }
    let csv = fs::read_to_string(a.join("small.evidence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "experiment_id,kernel,m,K,chain,eps,sup_value");
    // one row per ε for each experiment
    assert_eq!(lines.count(), 22);
}

#[test]
fn grid_override_changes_the_sample_count() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("o");
    assert_eq!(
        run(&[
            "--grid-points",
            "13",
            "--jobs",
            "1",
            "--out-dir",
            out.to_str().unwrap(),
            "run",
            &spec
        ]),
        0
    );
    let csv = fs::read_to_string(out.join("small.evidence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 26);
}

#[test]
fn mismatched_expectation_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "wrong.toml", &SMALL.replace("moderate(N=3)", "moderate(2)"));
    let out = dir.path().join("o");
    assert_eq!(run(&["--out-dir", out.to_str().unwrap(), "run", &spec]), 1);
    let summary = fs::read_to_string(out.join("small.summary.txt")).unwrap();
    assert!(summary.contains("MISMATCH"));
}

#[test]
fn experiment_errors_are_reported_with_their_id() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace(
        "expr = \"iota(delta(0))\"\n",
        "expr = \"iota(delta(0))\"\nkernels = [\"rho9\"]\n",
    );
    let spec = write_spec(dir.path(), "err.toml", &text);
    let out = dir.path().join("o");
    assert_eq!(run(&["--out-dir", out.to_str().unwrap(), "run", &spec]), 1);
    let json = fs::read_to_string(out.join("small.verdicts.json")).unwrap();
    assert!(json.contains("experiment `delta`"));
    assert!(json.contains("rho9"));
}

#[test]
fn unloadable_specs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_spec(dir.path(), "bad.toml", "[manifold]\nkind = \"interval\"\nlo = = 1\n");
    assert_eq!(run(&["--out-dir", dir.path().to_str().unwrap(), "run", &bad]), 1);
    let unknown = write_spec(
        dir.path(),
        "unknown.toml",
        "[manifold]\nkind = \"interval\"\nlo = -1.0\nhi = 1.0\ncolour = 3\n",
    );
    assert_eq!(run(&["run", &unknown]), 1);
    assert_eq!(run(&["run", "/nonexistent/spec.toml"]), 1);
}

#[test]
fn empty_experiment_list_is_a_success() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "empty.toml", "[manifold]\nkind = \"circle\"\n");
    assert_eq!(
        run(&["--out-dir", dir.path().join("o").to_str().unwrap(), "run", &spec]),
        0
    );
}

#[test]
fn certify_kernel_checks_every_declared_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let text = "name = \"cert\"\n[manifold]\nkind = \"interval\"\nlo = -2.0\nhi = 2.0\n[grid]\nper_axis = 5\n[[kernel]]\nname = \"rho\"\nsupport_C = 1.0\n";
    let spec = write_spec(dir.path(), "cert.toml", text);
    let out = dir.path().join("o");
    assert_eq!(run(&["--out-dir", out.to_str().unwrap(), "certify-kernel", &spec]), 0);
    let summary = fs::read_to_string(out.join("cert.certify.summary.txt")).unwrap();
    assert!(summary.contains("certify_rho"));
    // a support claim below the true constant fails
    let spec = write_spec(
        dir.path(),
        "cert2.toml",
        &text.replace("support_C = 1.0", "support_C = 0.5"),
    );
    assert_eq!(run(&["--out-dir", out.to_str().unwrap(), "certify-kernel", &spec]), 1);
}
