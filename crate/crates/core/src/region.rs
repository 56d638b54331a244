use serde::{Deserialize, Serialize};

/// Axis-aligned box `[lo_0, hi_0] × … × [lo_{n-1}, hi_{n-1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box bounds must have equal dimension");
        Self { lo, hi }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::new(vec![lo], vec![hi])
    }

    /// `[-r, r]^n`.
    pub fn cube(n: usize, r: f64) -> Self {
        Self::new(vec![-r; n], vec![r; n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l >= h)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Interior membership with a margin.
    pub fn contains_open(&self, x: &[f64], margin: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v > *l + margin && *v < *h - margin)
    }

    pub fn contains_box(&self, other: &BoxRegion) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(other.lo.iter().zip(&other.hi))
            .all(|((l, h), (ol, oh))| ol >= l && oh <= h)
    }

    /// `x ↦ center + scale·x` applied to the box.
    pub fn scaled_translated(&self, scale: f64, center: &[f64]) -> BoxRegion {
        let (mut lo, mut hi) = (Vec::with_capacity(self.dim()), Vec::with_capacity(self.dim()));
        for ((c, l), h) in center.iter().zip(&self.lo).zip(&self.hi) {
            let a = c + scale * l;
            let b = c + scale * h;
            lo.push(a.min(b));
            hi.push(a.max(b));
        }
        BoxRegion { lo, hi }
    }

    pub fn intersect(&self, other: &BoxRegion) -> BoxRegion {
        let lo = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        BoxRegion { lo, hi }
    }

    pub fn hull(&self, other: &BoxRegion) -> BoxRegion {
        let lo = self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect();
        let hi = self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect();
        BoxRegion { lo, hi }
    }

    pub fn expanded(&self, margin: f64) -> BoxRegion {
        BoxRegion {
            lo: self.lo.iter().map(|v| v - margin).collect(),
            hi: self.hi.iter().map(|v| v + margin).collect(),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Tensor grid with `per_axis` points per axis, endpoints included.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim())
            .map(|i| {
                if per_axis <= 1 {
                    vec![0.5 * (self.lo[i] + self.hi[i])]
                } else {
                    (0..per_axis)
                        .map(|k| self.lo[i] + (self.hi[i] - self.lo[i]) * k as f64 / (per_axis - 1) as f64)
                        .collect()
                }
            })
            .collect();
        tensor(&axes)
    }
}

/// Cartesian product of per-axis samples; the last axis varies fastest.
pub fn tensor(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for v in axis {
                let mut p = prefix.clone();
                p.push(*v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoints_and_center() {
        let g = BoxRegion::interval(-1.0, 1.0).grid(25);
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], vec![-1.0]);
        assert_eq!(g[12], vec![0.0]);
        assert_eq!(g[24], vec![1.0]);
    }

    #[test]
    fn two_dimensional_grid_is_tensor() {
        let g = BoxRegion::cube(2, 1.0).grid(3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[1], vec![-1.0, 0.0]);
    }
}
