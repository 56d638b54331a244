use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::Deserialize;

use crate::asymptotics::{short_hash, EpsGrid, DEFAULT_PER_AXIS, SLOPE_TOL};
use crate::error::{suggest, Error, Result};
use crate::expr::SmoothFn;
use crate::genfunc::{parse_distribution, Scope};
use crate::geometry::{Manifold, Shape, VectorField};
use crate::kernels::{from_local, CutoffSpec, SmoothingKernel};
use crate::region::BoxRegion;
use crate::testobjects::{build_mollifier, PerturbedFamily, SharedFamily};

/// Top level of a TOML experiment file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: Option<String>,
    pub manifold: ManifoldDecl,
    #[serde(default)]
    pub grid: GridDecl,
    #[serde(default, rename = "field")]
    pub fields: Vec<FieldDecl>,
    #[serde(default, rename = "kernel")]
    pub kernels: Vec<KernelDecl>,
    #[serde(default, rename = "distribution")]
    pub distributions: Vec<DistributionDecl>,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentDecl>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Coords {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Coords {
    fn to_vec(&self) -> Vec<f64> {
        match self {
            Coords::Scalar(v) => vec![*v],
            Coords::Vector(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldDecl {
    /// `interval`, `box` or `circle`.
    pub kind: String,
    pub lo: Option<Coords>,
    pub hi: Option<Coords>,
    #[serde(default)]
    pub charts: Vec<ChartDecl>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDecl {
    pub id: String,
    pub scale: Vec<f64>,
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDecl {
    pub eps0: Option<f64>,
    pub ratio: Option<f64>,
    pub points: Option<usize>,
    pub per_axis: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDecl {
    pub name: String,
    /// Ambient components as smooth-function expressions.
    pub components: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDecl {
    pub name: String,
    #[serde(default)]
    pub mollifier_order: usize,
    /// Claimed support constant; certification checks the measured one against it.
    #[serde(rename = "support_C")]
    pub support_c: Option<f64>,
    pub chart: Option<String>,
    /// Build the kernel with `from_local` from this family instead of a plain mollifier.
    pub local: Option<LocalKernelDecl>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalKernelDecl {
    pub family: FamilyDecl,
    pub compact: BoxDecl,
    /// Name of an earlier kernel.
    pub background: String,
}

/// `φ(ε, x) = ρ_m − c·ε^a·∂_{x₀}ρ_m`; the perturbation is omitted when `perturbation_exponent` is.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDecl {
    pub mollifier_order: usize,
    pub perturbation_exponent: Option<f64>,
    pub coefficient: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDecl {
    pub lo: Coords,
    pub hi: Coords,
}

impl BoxDecl {
    pub fn to_box(&self) -> Result<BoxRegion> {
        let (lo, hi) = (self.lo.to_vec(), self.hi.to_vec());
        if lo.len() != hi.len() {
            return Err(Error::Config(format!(
                "box bounds {lo:?} and {hi:?} differ in dimension"
            )));
        }
        Ok(BoxRegion::new(lo, hi))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionDecl {
    pub name: String,
    pub expr: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Moderate,
    Negligible,
    NegligibleFull,
    Equal,
    Certify,
    CrossCheck,
}

impl TestKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestKind::Moderate => "moderate",
            TestKind::Negligible => "negligible",
            TestKind::NegligibleFull => "negligible_full",
            TestKind::Equal => "equal",
            TestKind::Certify => "certify",
            TestKind::CrossCheck => "cross_check",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentDecl {
    pub id: String,
    pub test: TestKind,
    pub expr: Option<String>,
    /// Second representative of an `equal` test.
    pub expr2: Option<String>,
    pub expect: Option<String>,
    pub kernels: Option<Vec<String>>,
    pub compacts: Option<Vec<BoxDecl>>,
    pub fields: Option<Vec<String>>,
    pub depth: Option<usize>,
    pub l_max: Option<u32>,
    /// Local family of a `cross_check`.
    pub family: Option<FamilyDecl>,
    pub chart: Option<String>,
}

/// Command-line overrides of the grid table.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub grid_points: Option<usize>,
    pub tol: Option<f64>,
}

/// A spec with every name resolved.
pub struct Context {
    pub name: String,
    pub hash: String,
    pub manifold: Arc<Manifold>,
    pub scope: Scope,
    /// Declaration order.
    pub kernels: Vec<Arc<SmoothingKernel>>,
    pub support_claims: BTreeMap<String, f64>,
    pub grid: EpsGrid,
    pub per_axis: usize,
    pub tol: f64,
    pub spec: ExperimentSpec,
}

/// Canonical hash of a spec text: key order, whitespace and comments do not matter.
pub fn spec_hash(text: &str) -> Result<String> {
    let v: toml::Value = toml::from_str(text).map_err(toml_error)?;
    let json = serde_json::to_value(&v).map_err(|e| Error::Config(e.to_string()))?;
    Ok(short_hash(&json.to_string()))
}

fn toml_error(e: toml::de::Error) -> Error {
    match e.span() {
        Some(span) => Error::Parse {
            line: 0,
            column: span.start,
            message: e.message().to_string(),
        },
        None => Error::Config(e.message().to_string()),
    }
}

/// Parse and validate, converting byte offsets of TOML errors into line/column.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    toml::from_str(text).map_err(|e| match toml_error(e) {
        Error::Parse {
            column: offset,
            message,
            ..
        } => {
            let before = &text[..offset.min(text.len())];
            Error::Parse {
                line: before.matches('\n').count() + 1,
                column: before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1,
                message,
            }
        }
        other => other,
    })
}

fn build_manifold(d: &ManifoldDecl) -> Result<Manifold> {
    let mut m = match d.kind.as_str() {
        "interval" | "box" => {
            let (Some(lo), Some(hi)) = (&d.lo, &d.hi) else {
                return Err(Error::Config(format!("manifold `{}` needs `lo` and `hi`", d.kind)));
            };
            let b = BoxDecl {
                lo: lo.clone(),
                hi: hi.clone(),
            }
            .to_box()?;
            if d.kind == "interval" && b.dim() != 1 {
                return Err(Error::Config("an interval has scalar bounds".into()));
            }
            Manifold::open_box(b)?
        }
        "circle" => Manifold::circle(),
        other => {
            return Err(Error::Unresolved {
                name: other.to_string(),
                suggestions: suggest(other, ["box", "circle", "interval"]),
            })
        }
    };
    for c in &d.charts {
        m = m.with_affine_chart(&c.id, c.scale.clone(), c.offset.clone())?;
    }
    Ok(m)
}

/// Unit-integral family `ρ_m − c·ε^a·∂₀ρ_m` and its certified moment order.
pub fn build_family(d: &FamilyDecl, dim: usize) -> Result<(SharedFamily, usize)> {
    let base = build_mollifier(d.mollifier_order, dim)?;
    let base_order = if d.mollifier_order == 0 {
        1
    } else {
        d.mollifier_order | 1
    };
    let mut beta = vec![0usize; dim];
    beta[0] = 1;
    let (coefficient, exponent) = match d.perturbation_exponent {
        Some(a) => (d.coefficient.unwrap_or(1.0), a),
        None => (0.0, 1.0),
    };
    let order = if coefficient == 0.0 {
        base_order
    } else {
        base_order.min(exponent.floor().max(0.0) as usize)
    };
    let fam = PerturbedFamily {
        perturbation: base.derivative(&beta).scaled(-1.0),
        base,
        coefficient,
        exponent,
    };
    Ok((Arc::new(fam), order))
}

/// Default compact: the middle half of a box, or most of the circle.
pub fn default_compact(m: &Manifold) -> BoxRegion {
    match &m.shape {
        Shape::Circle => BoxRegion::interval(0.0, 2.0 * PI - 0.25),
        Shape::OpenBox(b) => {
            let lo = b.lo.iter().zip(&b.hi).map(|(l, h)| l + 0.25 * (h - l)).collect();
            let hi = b.lo.iter().zip(&b.hi).map(|(l, h)| h - 0.25 * (h - l)).collect();
            BoxRegion::new(lo, hi)
        }
    }
}

impl Context {
    pub fn build(text: &str, fallback_name: &str, ov: Overrides) -> Result<Self> {
        let spec = parse_spec(text)?;
        let hash = spec_hash(text)?;
        let manifold = Arc::new(build_manifold(&spec.manifold)?);
        let mut scope = Scope::new(manifold.clone());
        for f in &spec.fields {
            let comps = f
                .components
                .iter()
                .map(|c| SmoothFn::parse(c))
                .collect::<Result<Vec<_>>>()?;
            let field = VectorField::from_exprs(&f.name, comps);
            field.validate_on(&manifold)?;
            scope.fields.insert(f.name.clone(), field);
        }
        for d in &spec.distributions {
            let u = parse_distribution(&d.expr, &scope)?;
            scope.distributions.insert(d.name.clone(), u);
        }

        let mut kernels: Vec<Arc<SmoothingKernel>> = Vec::new();
        let mut support_claims = BTreeMap::new();
        let decls = if spec.kernels.is_empty() {
            default_kernels()
        } else {
            spec.kernels.clone()
        };
        for k in &decls {
            if kernels.iter().any(|o| o.name == k.name) {
                return Err(Error::Config(format!("duplicate kernel `{}`", k.name)));
            }
            let mut kernel = match &k.local {
                None => SmoothingKernel::mollifier(manifold.clone(), k.mollifier_order, k.chart.as_deref())?,
                Some(l) => {
                    let bg = resolve_kernel(&kernels, &l.background)?;
                    let chart = manifold.chart(k.chart.as_deref().unwrap_or(&manifold.charts()[0].id))?;
                    let compact = l.compact.to_box()?;
                    let (fam, order) = build_family(&l.family, manifold.dim)?;
                    let cutoff = CutoffSpec::around(&compact, &chart.image)?;
                    from_local(&k.name, fam, chart, compact, cutoff, bg, order)?
                }
            }
            .named(&k.name);
            if let Some(c) = k.support_c {
                kernel.support_constant = c;
                support_claims.insert(k.name.clone(), c);
            }
            kernels.push(Arc::new(kernel));
        }

        let g = &spec.grid;
        let d = EpsGrid::default();
        let grid = EpsGrid::new(
            g.eps0.unwrap_or(d.eps0),
            g.ratio.unwrap_or(d.ratio),
            ov.grid_points.or(g.points).unwrap_or(d.points),
        )?;
        let tol = ov.tol.or(g.tol).unwrap_or(SLOPE_TOL);
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be a nonnegative number, got {tol}"
            )));
        }
        Ok(Self {
            name: spec.name.clone().unwrap_or_else(|| fallback_name.to_string()),
            hash,
            manifold,
            scope,
            kernels,
            support_claims,
            grid,
            per_axis: g.per_axis.unwrap_or(DEFAULT_PER_AXIS),
            tol,
            spec,
        })
    }

    pub fn kernel(&self, name: &str) -> Result<Arc<SmoothingKernel>> {
        resolve_kernel(&self.kernels, name)
    }
}

fn resolve_kernel(kernels: &[Arc<SmoothingKernel>], name: &str) -> Result<Arc<SmoothingKernel>> {
    kernels
        .iter()
        .find(|k| k.name == name)
        .cloned()
        .ok_or_else(|| Error::Unresolved {
            name: name.to_string(),
            suggestions: suggest(name, kernels.iter().map(|k| k.name.as_str())),
        })
}

/// The ρ-kernel and the ρ₃-kernel.
fn default_kernels() -> Vec<KernelDecl> {
    [("rho", 0), ("rho3", 3)]
        .into_iter()
        .map(|(name, m)| KernelDecl {
            name: name.to_string(),
            mollifier_order: m,
            support_c: None,
            chart: None,
            local: None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"
        [manifold]
        kind = "interval"
        lo = -2.0
        hi = 2.0
    "#;

    #[test]
    fn hash_ignores_layout_and_key_order() {
        let a = spec_hash(SPEC).unwrap();
        let b = spec_hash("# comment\n[manifold]\nhi = 2.0\nkind = \"interval\"\nlo = -2.0\n").unwrap();
        assert_eq!(a, b);
        let c = spec_hash(&SPEC.replace("2.0\n", "3.0\n")).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn parse_error_has_line_and_column() {
        let err = parse_spec("[manifold]\nkind = \"interval\"\nlo = = 1\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn unknown_kernel_suggests() {
        let ctx = Context::build(SPEC, "t", Overrides::default()).unwrap();
        match ctx.kernel("rh03") {
            Err(Error::Unresolved { suggestions, .. }) => assert!(suggestions.contains(&"rho3".to_string())),
            _ => panic!("expected an unresolved-name error"),
        }
    }

    #[test]
    fn default_compact_is_middle_half() {
        let m = Manifold::interval(-2.0, 2.0).unwrap();
        assert_eq!(default_compact(&m), BoxRegion::interval(-1.0, 1.0));
    }
}
