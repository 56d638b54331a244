use std::f64::consts::PI;

use serde::Serialize;

use crate::dual::MultiDual;
use crate::error::{Error, Result};
use crate::region::BoxRegion;

/// A chart `ψ: U → image` given by a diagonal affine map of ambient
/// coordinates, optionally reduced modulo a period (angle charts).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chart {
    pub id: String,
    pub dim: usize,
    /// Open box `ψ(U)`.
    pub image: BoxRegion,
    scale: Vec<f64>,
    offset: Vec<f64>,
    period: Option<f64>,
}

impl Chart {
    pub fn identity(id: &str, image: BoxRegion) -> Self {
        let n = image.dim();
        Self::affine(id, image, vec![1.0; n], vec![0.0; n])
    }

    /// `y = scale ⊙ x + offset`; the image must be the transformed domain.
    pub fn affine(id: &str, image: BoxRegion, scale: Vec<f64>, offset: Vec<f64>) -> Self {
        assert!(
            scale.iter().all(|s| *s > 0.0),
            "chart scales must be positive (orientation)"
        );
        Self {
            id: id.to_string(),
            dim: image.dim(),
            image,
            scale,
            offset,
            period: None,
        }
    }

    /// Angle chart on the unit circle: `y = θ + offset` reduced into `(-π, π)`.
    pub fn angle(id: &str, offset: f64) -> Self {
        Self {
            id: id.to_string(),
            dim: 1,
            image: BoxRegion::interval(-PI, PI),
            scale: vec![1.0],
            offset: vec![offset],
            period: Some(2.0 * PI),
        }
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn is_periodic(&self) -> bool {
        self.period.is_some()
    }

    /// Shift needed to bring an unreduced coordinate into the image.
    fn reduction(&self, raw: f64) -> f64 {
        match self.period {
            Some(t) => {
                let lo = self.image.lo[0];
                -((raw - lo) / t).floor() * t
            }
            None => 0.0,
        }
    }

    /// `ψ(x)` with `x` in ambient coordinates.
    pub fn to_coords(&self, x: &[f64]) -> Result<Vec<f64>> {
        let y: Vec<f64> = (0..self.dim)
            .map(|i| {
                let raw = self.scale[i] * x[i] + self.offset[i];
                raw + self.reduction(raw)
            })
            .collect();
        if !self.image.contains_open(&y, 0.0) {
            return Err(Error::Domain(format!(
                "point {x:?} is outside the domain of chart `{}`",
                self.id
            )));
        }
        Ok(y)
    }

    /// `ψ(x)` for jet-valued points; the reduction depends only on real parts.
    pub fn to_coords_dual(&self, x: &[MultiDual]) -> Result<Vec<MultiDual>> {
        let re: Vec<f64> = x.iter().map(MultiDual::re).collect();
        self.to_coords(&re)?;
        Ok((0..self.dim)
            .map(|i| {
                let raw = self.scale[i] * x[i].re() + self.offset[i];
                let shift = self.offset[i] + self.reduction(raw);
                &x[i].scale(self.scale[i]) + &MultiDual::constant(shift)
            })
            .collect())
    }

    /// `ψ⁻¹(y)` as ambient coordinates (no canonical reduction).
    pub fn from_coords(&self, y: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| (y[i] - self.offset[i]) / self.scale[i]).collect()
    }

    pub fn from_coords_dual(&self, y: &[MultiDual]) -> Vec<MultiDual> {
        (0..self.dim)
            .map(|i| (&y[i] - &MultiDual::constant(self.offset[i])).scale(1.0 / self.scale[i]))
            .collect()
    }

    /// Diagonal of `Dψ` (constant for these charts).
    pub fn jacobian_diag(&self) -> &[f64] {
        &self.scale
    }

    pub fn jacobian_det(&self) -> f64 {
        self.scale.iter().product()
    }
}
