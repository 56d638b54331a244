use serde::Serialize;

use crate::dual::MultiDual;
use crate::error::{Error, Result};
use crate::region::BoxRegion;

fn flat(t: &MultiDual) -> MultiDual {
    if t.re() <= 0.0 {
        MultiDual::zero()
    } else {
        (-t.recip()).exp()
    }
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`, flat at both ends.
pub fn smoothstep(t: &MultiDual) -> MultiDual {
    if t.re() >= 1.0 {
        return MultiDual::constant(1.0);
    }
    if t.re() <= 0.0 {
        return MultiDual::zero();
    }
    let a = flat(t);
    let b = flat(&(1.0 - t));
    &a / &(&a + &b)
}

/// Smooth function equal to 1 on `inner` and vanishing outside `outer`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plateau {
    pub inner: BoxRegion,
    pub outer: BoxRegion,
}

impl Plateau {
    pub fn new(inner: BoxRegion, outer: BoxRegion) -> Result<Self> {
        let strict = (0..inner.dim()).all(|i| outer.lo[i] < inner.lo[i] && inner.hi[i] < outer.hi[i]);
        if inner.dim() != outer.dim() || !strict {
            return Err(Error::Construction(format!(
                "plateau needs inner {inner:?} strictly inside outer {outer:?}"
            )));
        }
        Ok(Self { inner, outer })
    }

    pub fn eval(&self, y: &[MultiDual]) -> MultiDual {
        let mut v = MultiDual::constant(1.0);
        for (i, yi) in y.iter().enumerate() {
            let up = (yi - &MultiDual::constant(self.outer.lo[i])).scale(1.0 / (self.inner.lo[i] - self.outer.lo[i]));
            let down = (&MultiDual::constant(self.outer.hi[i]) - yi).scale(1.0 / (self.outer.hi[i] - self.inner.hi[i]));
            v = &v * &(&smoothstep(&up) * &smoothstep(&down));
            if v.is_zero() {
                break;
            }
        }
        v
    }
}

/// `λ(ε)`: equal to 1 on `(0, 1/2]`, decaying smoothly to 0 at `ε = 1`, zero beyond.
pub fn lambda(eps: f64) -> f64 {
    smoothstep(&MultiDual::constant(2.0 * (1.0 - eps))).re()
}

/// The cut-offs `χ`, `χ₁` of the local-to-global kernel construction, in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffSpec {
    pub chi: Plateau,
    pub chi1: Plateau,
}

impl CutoffSpec {
    /// Nested plateaus around `compact` inside `image`, each transition a fifth of the gap.
    pub fn around(compact: &BoxRegion, image: &BoxRegion) -> Result<Self> {
        let gap = (0..compact.dim())
            .map(|i| (compact.lo[i] - image.lo[i]).min(image.hi[i] - compact.hi[i]))
            .fold(f64::INFINITY, f64::min);
        if !gap.is_finite() || gap <= 0.0 {
            return Err(Error::Construction(format!(
                "compact {compact:?} must lie in the interior of the chart image {image:?}"
            )));
        }
        let g = gap / 5.0;
        let spec = Self {
            chi: Plateau::new(compact.expanded(g), compact.expanded(2.0 * g))?,
            chi1: Plateau::new(compact.expanded(3.0 * g), compact.expanded(4.0 * g))?,
        };
        spec.verify_nesting()?;
        Ok(spec)
    }

    pub fn new(chi: Plateau, chi1: Plateau) -> Result<Self> {
        let s = Self { chi, chi1 };
        s.verify_nesting()?;
        Ok(s)
    }

    /// `supp χ ⊆ {χ₁ = 1}`, checked on a sample grid.
    pub fn verify_nesting(&self) -> Result<()> {
        for y in self.chi.outer.grid(41) {
            let v = self.chi1.eval(&crate::dual::lift(&y));
            if (v.re() - 1.0).abs() > 1e-15 {
                return Err(Error::Construction(format!("χ₁ is not 1 at {y:?} inside supp χ")));
            }
        }
        Ok(())
    }
}
