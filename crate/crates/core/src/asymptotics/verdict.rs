use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::genfunc::Representative;
use crate::geometry::VectorField;
use crate::kernels::SmoothingKernel;
use crate::region::BoxRegion;

use super::estimate::{estimate_order, EpsGrid, OrderEstimate, Samples};
use super::sweep::{chain_label, chains_up_to, sweep, DEFAULT_PER_AXIS};

/// Uniform slope tolerance.
pub const SLOPE_TOL: f64 = 0.25;
/// Largest moderateness exponent searched before declaring failure.
pub const N_CAP: u32 = 12;
pub const DEFAULT_L_MAX: u32 = 6;
/// Longest field chain in the moderateness test.
pub const DEFAULT_DEPTH: usize = 2;

/// Sampled quantifiers of the moderateness and negligibility tests.
#[derive(Clone, Debug)]
pub struct TestSpec {
    pub kernels: Vec<Arc<SmoothingKernel>>,
    pub compacts: Vec<BoxRegion>,
    /// Fields from which chains up to `depth` are formed.
    pub fields: Vec<VectorField>,
    pub depth: usize,
    pub grid: EpsGrid,
    pub per_axis: usize,
    pub tol: f64,
    pub l_max: u32,
}

impl TestSpec {
    pub fn new(kernels: Vec<Arc<SmoothingKernel>>, compacts: Vec<BoxRegion>) -> Self {
        Self {
            kernels,
            compacts,
            fields: Vec::new(),
            depth: DEFAULT_DEPTH,
            grid: EpsGrid::default(),
            per_axis: DEFAULT_PER_AXIS,
            tol: SLOPE_TOL,
            l_max: DEFAULT_L_MAX,
        }
    }

    pub fn with_fields(mut self, fields: Vec<VectorField>) -> Self {
        self.fields = fields;
        self
    }

    pub fn with_grid(mut self, grid: EpsGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_l_max(mut self, l_max: u32) -> Self {
        self.l_max = l_max;
        self
    }

    pub fn with_per_axis(mut self, per_axis: usize) -> Self {
        self.per_axis = per_axis;
        self
    }

    /// The empty chain followed by every chain of length `1..=depth`.
    pub fn chains(&self) -> Vec<Vec<VectorField>> {
        let mut out = vec![Vec::new()];
        out.extend(chains_up_to(&self.fields, self.depth));
        out
    }

    /// Canonical text of the sampled quantifiers.
    pub fn canonical(&self) -> String {
        let kernels: Vec<String> = self
            .kernels
            .iter()
            .map(|k| format!("{}:{}", k.name, k.moment_order))
            .collect();
        let compacts: Vec<String> = self
            .compacts
            .iter()
            .map(|c| format!("{:?}..{:?}", c.lo, c.hi))
            .collect();
        let fields: Vec<&str> = self.fields.iter().map(|f| f.name.as_str()).collect();
        format!(
            "kernels=[{}];compacts=[{}];fields=[{}];depth={};grid={:?}/{:?}/{};per_axis={};tol={:?};l_max={}",
            kernels.join(","),
            compacts.join(","),
            fields.join(","),
            self.depth,
            self.grid.eps0,
            self.grid.ratio,
            self.grid.points,
            self.per_axis,
            self.tol,
            self.l_max
        )
    }

    /// First 8 bytes of the SHA-256 of [`TestSpec::canonical`], in hex.
    pub fn key(&self) -> String {
        short_hash(&self.canonical())
    }

    /// Kernels sorted by claimed moment order (stable).
    fn kernels_by_order(&self) -> Vec<Arc<SmoothingKernel>> {
        let mut k = self.kernels.clone();
        k.sort_by_key(|k| k.moment_order);
        k
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerdictKind {
    Moderate {
        n: u32,
    },
    NegligibleUpTo {
        l: u32,
    },
    /// Fails at order `l` with the largest kernel order `m` tried.
    FailsNegligible {
        l: u32,
        m: usize,
    },
    FailsModerate,
    /// Every kernel tried saturates its own order below `l`; a larger `m` is needed.
    IncompleteEvidence {
        l: u32,
        m: usize,
    },
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictKind::Moderate { n } => write!(f, "moderate({n})"),
            VerdictKind::NegligibleUpTo { l } => write!(f, "negligible_up_to({l})"),
            VerdictKind::FailsNegligible { l, .. } => write!(f, "fails_negligible({l})"),
            VerdictKind::FailsModerate => write!(f, "fails_moderate"),
            VerdictKind::IncompleteEvidence { l, .. } => write!(f, "incomplete_evidence({l})"),
        }
    }
}

/// One `(kernel, K, chain)` sweep and its fitted order.
#[derive(Clone, Debug, Serialize)]
pub struct Evidence {
    pub kernel: String,
    pub m: usize,
    pub compact: BoxRegion,
    pub chain: String,
    pub samples: Samples,
    pub estimate: OrderEstimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Moderateness exponent per chain length `k = 0, 1, …` (empty for negligibility tests).
    pub n_by_order: Vec<u32>,
    /// Canonical string of the tested representative.
    pub representative: String,
    /// Always "corroborated": the sampled quantifiers can refute but not prove membership.
    pub status: &'static str,
    pub grid: EpsGrid,
    pub tol: f64,
    pub per_axis: usize,
    pub evidence: Vec<Evidence>,
}

impl Verdict {
    fn new(kind: VerdictKind, rep: &Representative, spec: &TestSpec, evidence: Vec<Evidence>) -> Self {
        Self {
            kind,
            n_by_order: Vec::new(),
            representative: rep.to_string(),
            status: "corroborated",
            grid: spec.grid,
            tol: spec.tol,
            per_axis: spec.per_axis,
            evidence,
        }
    }

    pub fn is_moderate(&self) -> bool {
        matches!(self.kind, VerdictKind::Moderate { .. })
    }

    pub fn is_negligible(&self) -> bool {
        matches!(self.kind, VerdictKind::NegligibleUpTo { .. })
    }

    /// Smallest fitted slope over all evidence.
    pub fn min_slope(&self) -> f64 {
        self.evidence
            .iter()
            .map(|e| e.estimate.slope)
            .fold(f64::INFINITY, f64::min)
    }
}

/// First 8 bytes of the SHA-256 of `text`, in hex.
pub fn short_hash(text: &str) -> String {
    let d = Sha256::digest(text.as_bytes());
    d[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// `N = ceil(−slope − tol) + 1`, at least 1.
pub fn moderate_exponent(slope: f64, tol: f64) -> Option<u32> {
    if slope == f64::INFINITY {
        return Some(1);
    }
    if !slope.is_finite() {
        return None;
    }
    let n = (-slope - tol).ceil().max(0.0) + 1.0;
    (n <= N_CAP as f64).then_some(n as u32)
}

/// Largest `l ≤ l_max` with `slope ≥ l − tol`.
pub fn negligible_level(slope: f64, tol: f64, l_max: u32) -> u32 {
    if slope == f64::INFINITY {
        return l_max;
    }
    if !slope.is_finite() {
        return 0;
    }
    ((slope + tol).floor().max(0.0) as u32).min(l_max)
}

fn collect_evidence(
    rep: &Representative,
    kernels: &[Arc<SmoothingKernel>],
    compacts: &[BoxRegion],
    chains: &[Vec<VectorField>],
    spec: &TestSpec,
) -> Result<Vec<Evidence>> {
    let mut jobs = Vec::new();
    for k in kernels {
        for c in compacts {
            for ch in chains {
                jobs.push((k.clone(), c.clone(), ch.clone()));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(k, c, ch)| {
            let s = sweep(rep, &k, &c, &ch, spec.per_axis, &spec.grid)?;
            let estimate = estimate_order(&s.samples)?;
            Ok(Evidence {
                kernel: k.name.clone(),
                m: k.moment_order,
                compact: c,
                chain: chain_label(&ch),
                samples: s.samples,
                estimate,
            })
        })
        .collect()
}

fn require_kernels(spec: &TestSpec) -> Result<()> {
    if spec.kernels.is_empty() || spec.compacts.is_empty() {
        return Err(Error::Config(
            "the test needs at least one kernel and one compact".into(),
        ));
    }
    Ok(())
}

/// Moderateness over every kernel, compact and chain of length `≤ depth`.
///
/// The exponent `N` may depend on the number of derivatives; the reported
/// `moderate(N)` is the `k = 0` exponent and `n_by_order` lists all of them.
pub fn test_moderate(rep: &Representative, spec: &TestSpec) -> Result<Verdict> {
    require_kernels(spec)?;
    let chains = spec.chains();
    let evidence = collect_evidence(rep, &spec.kernels, &spec.compacts, &chains, spec)?;
    let depth = chains.iter().map(Vec::len).max().unwrap_or(0);
    let mut n_by_order = vec![1u32; depth + 1];
    let mut fails = false;
    for e in &evidence {
        let k = if e.chain == "-" { 0 } else { e.chain.split(';').count() };
        if e.estimate.super_polynomial {
            fails = true;
            continue;
        }
        match moderate_exponent(e.estimate.slope, spec.tol) {
            Some(n) => n_by_order[k] = n_by_order[k].max(n),
            None => fails = true,
        }
    }
    let kind = if fails {
        VerdictKind::FailsModerate
    } else {
        VerdictKind::Moderate { n: n_by_order[0] }
    };
    let mut v = Verdict::new(kind, rep, spec, evidence);
    v.n_by_order = n_by_order;
    Ok(v)
}

/// Negligibility with the `k = 0` shortcut: no field chains.
pub fn test_negligible(rep: &Representative, spec: &TestSpec) -> Result<Verdict> {
    negligible_with_chains(rep, spec, &[Vec::new()])
}

/// Negligibility over the same chains as [`test_moderate`], for comparison with the shortcut.
pub fn test_negligible_full(rep: &Representative, spec: &TestSpec) -> Result<Verdict> {
    negligible_with_chains(rep, spec, &spec.chains())
}

fn negligible_with_chains(rep: &Representative, spec: &TestSpec, chains: &[Vec<VectorField>]) -> Result<Verdict> {
    if spec.kernels.is_empty() {
        let kind = VerdictKind::IncompleteEvidence { l: 1, m: 0 };
        return Ok(Verdict::new(kind, rep, spec, Vec::new()));
    }
    require_kernels(spec)?;
    let kernels = spec.kernels_by_order();
    let evidence = collect_evidence(rep, &kernels, &spec.compacts, chains, spec)?;
    // worst slope per kernel, kernels ascending by m
    let per_kernel: Vec<(usize, f64)> = kernels
        .iter()
        .map(|k| {
            let s = evidence
                .iter()
                .filter(|e| e.kernel == k.name && e.m == k.moment_order)
                .map(|e| {
                    if e.estimate.super_polynomial {
                        f64::NEG_INFINITY
                    } else {
                        e.estimate.slope
                    }
                })
                .fold(f64::INFINITY, f64::min);
            (k.moment_order, s)
        })
        .collect();
    let mut kind = VerdictKind::NegligibleUpTo { l: spec.l_max };
    for l in 1..=spec.l_max {
        let target = l as f64 - spec.tol;
        if per_kernel.iter().any(|&(_, s)| s >= target) {
            continue;
        }
        let &(m_max, s_max) = per_kernel.last().expect("nonempty kernel list");
        let increasing = per_kernel.len() > 1 && per_kernel.windows(2).all(|w| w[1].1 > w[0].1 + spec.tol);
        let saturated = s_max >= m_max as f64 + 1.0 - spec.tol;
        kind = if (m_max as u32) < l && (increasing || saturated) {
            VerdictKind::IncompleteEvidence { l, m: m_max }
        } else {
            VerdictKind::FailsNegligible { l, m: m_max }
        };
        break;
    }
    Ok(Verdict::new(kind, rep, spec, evidence))
}

/// Outcome of `equal_in_G`: the negligibility verdict of `R₁ − R₂`.
#[derive(Clone, Debug, Serialize)]
pub struct Equality {
    pub equal: bool,
    pub difference: Verdict,
}

/// `cl[R₁] = cl[R₂]` in `Ĝ(X)`, after checking both are moderate.
pub fn equal_in_g(r1: &Representative, r2: &Representative, spec: &TestSpec) -> Result<Equality> {
    for r in [r1, r2] {
        let v = test_moderate(r, spec)?;
        if !v.is_moderate() {
            return Err(Error::Numerical {
                experiment: "equal_in_G".into(),
                message: format!("`{r}` is not moderate: {} (min slope {:.3})", v.kind, v.min_slope()),
            });
        }
    }
    let d = r1.sub(r2)?;
    let difference = test_negligible(&d, spec)?;
    Ok(Equality {
        equal: difference.is_negligible(),
        difference,
    })
}
