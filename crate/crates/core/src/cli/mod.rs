//! The `colombeau` command-line tool.

mod run;
mod spec;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

pub use run::{format_box, normalize_outcome, EvidenceRow, ExperimentResult, RunReport};
pub use spec::{
    build_family, default_compact, parse_spec, spec_hash, BoxDecl, ChartDecl, Context, Coords, DistributionDecl,
    ExperimentDecl, ExperimentSpec, FamilyDecl, FieldDecl, GridDecl, KernelDecl, LocalKernelDecl, ManifoldDecl,
    Overrides, TestKind,
};

#[derive(Debug, Parser)]
#[command(
    name = "colombeau",
    version,
    about = "Asymptotic experiments on Colombeau generalized functions"
)]
pub struct Cli {
    /// Override the number of ε grid points.
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    /// Override the slope tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every experiment of a spec file.
    Run {
        spec: PathBuf,
    },
    /// Certify every kernel declared in a spec file.
    CertifyKernel {
        spec: PathBuf,
    },
    /// List built-in manifolds, distributions, mollifiers, fields, operators and tests.
    ListBuiltins,
    Version,
}

/// Built-in names, sorted within each category.
pub fn builtins() -> Vec<(&'static str, Vec<&'static str>)> {
    let mut cats = vec![
        ("manifolds", vec!["interval", "box", "circle"]),
        ("distributions", vec!["delta", "heaviside", "regular"]),
        ("mollifiers", vec!["rho_0", "rho_1", "rho_2", "rho_3", "rho_4", "rho_5"]),
        ("fields", vec!["d_x", "x_d_x", "d_x0", "d_x1", "d_theta", "sin_d_theta"]),
        (
            "operators",
            vec!["+", "-", "*", "exp", "iota", "sigma", "L", "scalar multiple"],
        ),
        (
            "tests",
            vec![
                "moderate",
                "negligible",
                "negligible_full",
                "equal",
                "certify",
                "cross_check",
            ],
        ),
    ];
    for (_, names) in &mut cats {
        names.sort_unstable();
    }
    cats
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "spec".to_string())
}

fn load(path: &Path, ov: Overrides) -> Result<Context> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Context::build(&text, &stem(path), ov)
}

fn certify_spec(ctx: &mut Context) {
    let compact = default_compact(&ctx.manifold);
    let experiments = ctx
        .kernels
        .iter()
        .map(|k| ExperimentDecl {
            id: format!("certify_{}", k.name),
            test: TestKind::Certify,
            expr: None,
            expr2: None,
            expect: Some("pass".to_string()),
            kernels: Some(vec![k.name.clone()]),
            compacts: Some(vec![BoxDecl {
                lo: Coords::Vector(compact.lo.clone()),
                hi: Coords::Vector(compact.hi.clone()),
            }]),
            fields: None,
            depth: None,
            l_max: None,
            family: None,
            chart: None,
        })
        .collect();
    ctx.spec.experiments = experiments;
    ctx.name = format!("{}.certify", ctx.name);
}

fn execute(cli: &Cli) -> Result<i32> {
    let ov = Overrides {
        grid_points: cli.grid_points,
        tol: cli.tol,
    };
    let (path, certify) = match &cli.command {
        Command::Version => {
            println!("colombeau {}", env!("CARGO_PKG_VERSION"));
            return Ok(0);
        }
        Command::ListBuiltins => {
            for (cat, names) in builtins() {
                println!("{cat}: {}", names.join(", "));
            }
            return Ok(0);
        }
        Command::Run { spec } => (spec, false),
        Command::CertifyKernel { spec } => (spec, true),
    };
    let mut ctx = load(path, ov)?;
    if certify {
        certify_spec(&mut ctx);
    }
    let report = ctx.run();
    let files = report.write(&cli.out_dir)?;
    print!("{}", report.summary());
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(if report.all_match() { 0 } else { 1 })
}

/// Parse `args` and run; returns the process exit code.
///
/// 0: every experiment matched its expectation; 1: a mismatch, a failed
/// experiment or a spec that could not be loaded; 2: usage error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(j) = cli.jobs {
        // the global pool can only be built once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
