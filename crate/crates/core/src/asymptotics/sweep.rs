use rayon::prelude::*;
use serde::Serialize;

use crate::dual::{lift, MultiDual};
use crate::error::{Error, Result};
use crate::genfunc::Representative;
use crate::geometry::{Manifold, VectorField};
use crate::kernels::SmoothingKernel;
use crate::region::{tensor, BoxRegion};

use super::estimate::{EpsGrid, Samples};

/// Default sample points per axis of a compact.
pub const DEFAULT_PER_AXIS: usize = 25;

/// Cluster offsets, in units of ε, placed around every coarse sample of a 1-dimensional compact.
const CLUSTER_1D: [f64; 8] = [-1.0, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.0];
/// Per-axis cluster offsets in higher dimension.
const CLUSTER_ND: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

/// Sample points of `K` at scale ε: the coarse grid plus an ε-scaled cluster around each coarse point.
///
/// A fixed grid alone misses features of width ε; the clusters keep their relative
/// position fixed as ε shrinks, so fitted slopes of concentrated features are not biased.
pub fn sample_points(m: &Manifold, k: &BoxRegion, per_axis: usize, eps: f64) -> Result<Vec<Vec<f64>>> {
    Ok(clustered(m.sample_compact(k, per_axis)?, k, eps))
}

/// [`sample_points`] for a box in chart coordinates.
pub fn clustered_grid(k: &BoxRegion, per_axis: usize, eps: f64) -> Vec<Vec<f64>> {
    clustered(k.grid(per_axis), k, eps)
}

fn clustered(coarse: Vec<Vec<f64>>, k: &BoxRegion, eps: f64) -> Vec<Vec<f64>> {
    let n = k.dim();
    let offsets: Vec<Vec<f64>> = if n == 1 {
        CLUSTER_1D.iter().map(|s| vec![*s]).collect()
    } else {
        tensor(&vec![CLUSTER_ND.to_vec(); n])
            .into_iter()
            .filter(|o| o.iter().any(|v| *v != 0.0))
            .collect()
    };
    let mut out = coarse.clone();
    for p in &coarse {
        for o in &offsets {
            let q: Vec<f64> = p.iter().zip(o).map(|(a, b)| a + eps * b).collect();
            if k.contains(&q) {
                out.push(q);
            }
        }
    }
    out
}

/// `sup_{p∈K} |L_{ζ₁}…L_{ζ_k}(R(Φ(ε, p), p))|` per grid ε, plus the signed value at the maximizer.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub samples: Samples,
    pub signed: Vec<f64>,
    pub argmax: Vec<Vec<f64>>,
}

/// Point `p_k` with `p_i = p_{i−1} + t_i ζ_i(p_{i−1})`, `t_i` the infinitesimal `i − 1`.
///
/// The coefficient of `t₁⋯t_k` in `g(p_k)` is `L_{ζ₁}…L_{ζ_k} g(p)`.
pub fn chain_point(p: &[f64], chain: &[VectorField]) -> Vec<MultiDual> {
    let mut q = lift(p);
    for (i, z) in chain.iter().enumerate() {
        let t = MultiDual::infinitesimal(i);
        let zq = z.ambient(&q);
        q = q.iter().zip(&zq).map(|(a, b)| a + &(b * &t)).collect();
    }
    q
}

/// `L_{ζ₁}…L_{ζ_k}(p ↦ R(Φ(ε, p), p))` at one point, differentiating both slots.
pub fn chain_value(
    rep: &Representative,
    kernel: &SmoothingKernel,
    eps: f64,
    p: &[f64],
    chain: &[VectorField],
) -> Result<f64> {
    let q = chain_point(p, chain);
    let omega = kernel.eval(eps, &q)?;
    let v = rep.evaluate(&omega, &q, chain.len())?;
    Ok(v.coeff((1usize << chain.len()) - 1))
}

pub fn sweep(
    rep: &Representative,
    kernel: &SmoothingKernel,
    compact: &BoxRegion,
    chain: &[VectorField],
    per_axis: usize,
    grid: &EpsGrid,
) -> Result<SweepResult> {
    grid.validate()?;
    for z in chain {
        z.validate_on(&kernel.manifold)?;
    }
    if chain.len() > crate::dual::MAX_VARS / 2 {
        return Err(Error::Unsupported(format!(
            "field chain of length {} is too deep",
            chain.len()
        )));
    }
    let eps = grid.values();
    let rows: Vec<(f64, f64, Vec<f64>)> = eps
        .par_iter()
        .map(|&e| -> Result<(f64, f64, Vec<f64>)> {
            let ps = sample_points(&kernel.manifold, compact, per_axis, e)?;
            let mut best = (0.0f64, 0.0f64, ps[0].clone());
            for p in &ps {
                let v = chain_value(rep, kernel, e, p, chain)?;
                if !v.is_finite() {
                    return Ok((f64::INFINITY, v, p.clone()));
                }
                if v.abs() > best.0 {
                    best = (v.abs(), v, p.clone());
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let values = rows.iter().map(|r| r.0).collect();
    Ok(SweepResult {
        samples: Samples::new(eps, values),
        signed: rows.iter().map(|r| r.1).collect(),
        argmax: rows.into_iter().map(|r| r.2).collect(),
    })
}

/// Every chain of length `1..=depth` over `fields` (with repetition), in lexicographic order.
pub fn chains_up_to(fields: &[VectorField], depth: usize) -> Vec<Vec<VectorField>> {
    let mut out: Vec<Vec<VectorField>> = Vec::new();
    let mut level: Vec<Vec<VectorField>> = vec![Vec::new()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for c in &level {
            for f in fields {
                let mut c2 = c.clone();
                c2.push(f.clone());
                next.push(c2);
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

pub fn chain_label(chain: &[VectorField]) -> String {
    if chain.is_empty() {
        "-".to_string()
    } else {
        chain.iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join(";")
    }
}
