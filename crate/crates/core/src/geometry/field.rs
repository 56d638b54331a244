use std::fmt;

use crate::dual::{span_of, MultiDual};
use crate::error::{Error, Result};
use crate::expr::SmoothFn;

use super::chart::Chart;
use super::manifold::{Manifold, Shape};

/// Absolute and relative tolerance of the adaptive flow integrator.
pub const FLOW_TOL: f64 = 1e-10;

#[derive(Clone)]
pub enum FieldKind {
    /// `c·∂_axis`.
    Coordinate {
        axis: usize,
        speed: f64,
    },
    /// `Σ a_i x_i ∂_i`; all ones is the Euler field.
    Linear {
        diag: Vec<f64>,
    },
    /// `a·sin(k x_axis)·∂_axis`.
    Sine {
        axis: usize,
        amplitude: f64,
        frequency: f64,
    },
    /// Components given by expressions in ambient coordinates.
    Expr(Vec<SmoothFn>),
    Scaled(Box<VectorField>, f64),
}

/// A smooth vector field, specified by its components in ambient coordinates.
#[derive(Clone)]
pub struct VectorField {
    pub name: String,
    pub dim: usize,
    kind: FieldKind,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({})", self.name)
    }
}

impl VectorField {
    pub fn coordinate(dim: usize, axis: usize) -> Self {
        assert!(axis < dim);
        let name = if dim == 1 {
            "d_x".to_string()
        } else {
            format!("d_x{axis}")
        };
        Self {
            name,
            dim,
            kind: FieldKind::Coordinate { axis, speed: 1.0 },
        }
    }

    pub fn euler(dim: usize) -> Self {
        Self {
            name: "x_d_x".to_string(),
            dim,
            kind: FieldKind::Linear { diag: vec![1.0; dim] },
        }
    }

    pub fn linear(diag: Vec<f64>) -> Self {
        Self {
            name: format!("linear{diag:?}"),
            dim: diag.len(),
            kind: FieldKind::Linear { diag },
        }
    }

    pub fn sine(dim: usize, axis: usize, amplitude: f64, frequency: f64) -> Self {
        Self {
            name: format!("sine({amplitude},{frequency})"),
            dim,
            kind: FieldKind::Sine {
                axis,
                amplitude,
                frequency,
            },
        }
    }

    pub fn from_exprs(name: &str, components: Vec<SmoothFn>) -> Self {
        Self {
            name: name.to_string(),
            dim: components.len(),
            kind: FieldKind::Expr(components),
        }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    /// `a·ζ`.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            name: format!("{a}*{}", self.name),
            dim: self.dim,
            kind: FieldKind::Scaled(Box::new(self.clone()), a),
        }
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    /// Reject fields that are not globally defined on `m`.
    pub fn validate_on(&self, m: &Manifold) -> Result<()> {
        if self.dim != m.dim {
            return Err(Error::Construction(format!(
                "field `{}` has dimension {} but manifold `{}` has dimension {}",
                self.name, self.dim, m.name, m.dim
            )));
        }
        if m.shape == Shape::Circle {
            match &self.kind {
                FieldKind::Linear { .. } => {
                    return Err(Error::Unsupported(format!(
                        "field `{}` is not periodic and cannot live on the circle",
                        self.name
                    )))
                }
                FieldKind::Sine { frequency, .. } if frequency.fract() != 0.0 => {
                    return Err(Error::Unsupported(format!(
                        "field `{}` needs an integer frequency on the circle",
                        self.name
                    )))
                }
                FieldKind::Scaled(inner, _) => return inner.validate_on(m),
                _ => {}
            }
        }
        Ok(())
    }

    /// Components at an ambient point.
    pub fn ambient(&self, x: &[MultiDual]) -> Vec<MultiDual> {
        match &self.kind {
            FieldKind::Coordinate { axis, speed } => (0..self.dim)
                .map(|i| MultiDual::constant(if i == *axis { *speed } else { 0.0 }))
                .collect(),
            FieldKind::Linear { diag } => x.iter().zip(diag).map(|(xi, a)| xi.scale(*a)).collect(),
            FieldKind::Sine {
                axis,
                amplitude,
                frequency,
            } => (0..self.dim)
                .map(|i| {
                    if i == *axis {
                        x[i].scale(*frequency).sin().scale(*amplitude)
                    } else {
                        MultiDual::zero()
                    }
                })
                .collect(),
            FieldKind::Expr(c) => c.iter().map(|f| f.eval(x)).collect(),
            FieldKind::Scaled(inner, a) => inner.ambient(x).into_iter().map(|v| v.scale(*a)).collect(),
        }
    }

    pub fn ambient_f64(&self, x: &[f64]) -> Vec<f64> {
        self.ambient(&crate::dual::lift(x)).iter().map(MultiDual::re).collect()
    }

    /// Components `ζ_α` in chart coordinates.
    pub fn in_chart(&self, chart: &Chart, y: &[MultiDual]) -> Vec<MultiDual> {
        let x = chart.from_coords_dual(y);
        self.ambient(&x)
            .into_iter()
            .zip(chart.jacobian_diag())
            .map(|(z, s)| z.scale(*s))
            .collect()
    }

    /// `div ζ_α` in chart coordinates, using infinitesimals from `next` upward.
    pub fn divergence_in_chart(&self, chart: &Chart, y: &[MultiDual], next: usize) -> MultiDual {
        let fresh = next.max(span_of(y));
        let mut div = MultiDual::zero();
        for i in 0..self.dim {
            let mut yy = y.to_vec();
            yy[i] = &yy[i] + &MultiDual::infinitesimal(fresh);
            div += self.in_chart(chart, &yy)[i].part(fresh);
        }
        div
    }

    /// `Fl^ζ_t(p)`, exact for coordinate and linear fields, adaptive RK otherwise.
    pub fn flow(&self, m: &Manifold, t: f64, p: &[f64]) -> Result<Vec<f64>> {
        if !m.contains(p) {
            return Err(Error::Domain(format!("flow start {p:?} is not on `{}`", m.name)));
        }
        if t == 0.0 {
            return Ok(m.canonical(p));
        }
        let out = match &self.kind {
            FieldKind::Coordinate { axis, speed } => {
                let mut q = p.to_vec();
                q[*axis] += speed * t;
                if !m.contains(&q) {
                    return Err(Error::FlowEscape {
                        exit_time: exit_time_linear_path(m, p, &q, t),
                    });
                }
                q
            }
            FieldKind::Linear { diag } => {
                let q: Vec<f64> = p.iter().zip(diag).map(|(x, a)| x * (a * t).exp()).collect();
                if !m.contains(&q) {
                    return Err(Error::FlowEscape {
                        exit_time: exit_time_exponential(m, p, diag, t),
                    });
                }
                q
            }
            FieldKind::Scaled(inner, a) => return inner.flow(m, a * t, p),
            _ => integrate_rk45(self, m, t, p)?,
        };
        Ok(m.canonical(&out))
    }
}

fn signed_margin(m: &Manifold, x: &[f64]) -> f64 {
    match &m.shape {
        Shape::OpenBox(d) => (0..x.len())
            .map(|i| (x[i] - d.lo[i]).min(d.hi[i] - x[i]))
            .fold(f64::INFINITY, f64::min),
        Shape::Circle => f64::INFINITY,
    }
}

fn exit_time_linear_path(m: &Manifold, p: &[f64], q: &[f64], t: f64) -> f64 {
    let (g0, g1) = (signed_margin(m, p), signed_margin(m, q));
    t * g0 / (g0 - g1)
}

fn exit_time_exponential(m: &Manifold, p: &[f64], diag: &[f64], t: f64) -> f64 {
    let Shape::OpenBox(d) = &m.shape else { return t };
    let mut best = t.abs();
    for i in 0..p.len() {
        for b in [d.lo[i], d.hi[i]] {
            let ratio = b / p[i];
            if diag[i] != 0.0 && ratio > 1.0 {
                let s = ratio.ln() / diag[i];
                if s * t > 0.0 && s.abs() < best {
                    best = s.abs();
                }
            }
        }
    }
    best * t.signum()
}

// Dormand–Prince 5(4) tableau; the stage times are implicit since the field is autonomous.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn integrate_rk45(field: &VectorField, m: &Manifold, t_end: f64, p: &[f64]) -> Result<Vec<f64>> {
    let n = p.len();
    let dir = t_end.signum();
    let f = |x: &[f64]| -> Vec<f64> { field.ambient_f64(x).into_iter().map(|v| v * dir).collect() };
    let total = t_end.abs();
    let mut t = 0.0;
    let mut x = p.to_vec();
    let mut h = (total / 16.0).min(0.05);
    let mut steps = 0usize;
    while t < total {
        steps += 1;
        if steps > 1_000_000 {
            return Err(Error::Numerical {
                experiment: "flow".into(),
                message: "step limit exceeded".into(),
            });
        }
        h = h.min(total - t);
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        for (s, row) in A.iter().enumerate() {
            let xs: Vec<f64> = (0..n)
                .map(|i| x[i] + h * row[..s].iter().zip(&k).map(|(a, kj)| a * kj[i]).sum::<f64>())
                .collect();
            k.push(f(&xs));
        }
        let x5: Vec<f64> = (0..n)
            .map(|i| x[i] + h * (0..7).map(|s| B5[s] * k[s][i]).sum::<f64>())
            .collect();
        let x4: Vec<f64> = (0..n)
            .map(|i| x[i] + h * (0..7).map(|s| B4[s] * k[s][i]).sum::<f64>())
            .collect();
        let err = (0..n)
            .map(|i| (x5[i] - x4[i]).abs() / (FLOW_TOL + FLOW_TOL * x[i].abs().max(x5[i].abs())))
            .fold(0.0f64, f64::max);
        if err <= 1.0 {
            if !m.contains(&x5) {
                let (g0, g1) = (signed_margin(m, &x), signed_margin(m, &x5));
                let exit = t + h * g0 / (g0 - g1);
                return Err(Error::FlowEscape { exit_time: exit * dir });
            }
            t += h;
            x = x5;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn constant_field_translates() {
        let m = Manifold::interval(-5.0, 5.0).unwrap();
        let q = VectorField::coordinate(1, 0).flow(&m, 0.3, &[1.0]).unwrap();
        assert!((q[0] - 1.3).abs() < 1e-15);
    }

    #[test]
    fn euler_field_is_exponential() {
        let m = Manifold::interval(-5.0, 5.0).unwrap();
        let q = VectorField::euler(1).flow(&m, 1.0, &[1.0]).unwrap();
        assert!((q[0] - E).abs() < 1e-12);
    }

    #[test]
    fn rotation_on_circle() {
        let m = Manifold::circle();
        let q = VectorField::coordinate(1, 0).flow(&m, PI, &[0.0]).unwrap();
        assert!((q[0] - PI).abs() < 1e-12);
    }

    #[test]
    fn rk45_matches_closed_form_of_sine_field() {
        // ẋ = sin x has tan(x/2) = tan(x0/2)·e^t
        let m = Manifold::interval(-5.0, 5.0).unwrap();
        let q = VectorField::sine(1, 0, 1.0, 1.0).flow(&m, 0.7, &[0.4]).unwrap();
        let exact = 2.0 * ((0.2f64).tan() * (0.7f64).exp()).atan();
        assert!((q[0] - exact).abs() < 1e-9, "{} vs {exact}", q[0]);
    }

    #[test]
    fn escape_reports_exit_time() {
        let m = Manifold::interval(-2.0, 2.0).unwrap();
        match VectorField::coordinate(1, 0).flow(&m, 3.0, &[0.5]) {
            Err(Error::FlowEscape { exit_time }) => assert!((exit_time - 1.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        match VectorField::euler(1).flow(&m, 2.0, &[1.0]) {
            Err(Error::FlowEscape { exit_time }) => assert!((exit_time - 2f64.ln()).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        match VectorField::sine(1, 0, 1.0, 0.2).flow(&m, 50.0, &[1.0]) {
            Err(Error::FlowEscape { exit_time }) => assert!(exit_time > 0.0 && exit_time < 50.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn divergence_of_euler_field() {
        let m = Manifold::interval(-2.0, 2.0)
            .unwrap()
            .with_affine_chart("double", vec![2.0], vec![0.0])
            .unwrap();
        let c = m.chart("double").unwrap();
        let d = VectorField::euler(1).divergence_in_chart(&c, &[MultiDual::constant(0.6)], 0);
        assert!((d.re() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_field_rejected_on_circle() {
        assert!(VectorField::euler(1).validate_on(&Manifold::circle()).is_err());
        assert!(VectorField::coordinate(1, 0).validate_on(&Manifold::circle()).is_ok());
    }
}
