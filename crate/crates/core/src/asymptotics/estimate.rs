use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values whose magnitude falls below this are treated as exact zeros.
pub const ZERO_FLOOR: f64 = 1e-14;
/// Number of trailing (smallest-ε) retained samples used in the fit.
/// Fewer than three retained values all below `NOISE_BAND·ZERO_FLOOR` count as zero.
pub const NOISE_BAND: f64 = 100.0;
pub const TAIL_WINDOW: usize = 12;
/// Minimum number of samples accepted by [`estimate_order`].
pub const MIN_SAMPLES: usize = 8;

/// Geometric grid `ε_i = ε₀·r^i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsGrid {
    pub eps0: f64,
    pub ratio: f64,
    pub points: usize,
}

impl Default for EpsGrid {
    fn default() -> Self {
        Self {
            eps0: 0.25,
            ratio: 0.5f64.sqrt(),
            points: 21,
        }
    }
}

impl EpsGrid {
    pub fn new(eps0: f64, ratio: f64, points: usize) -> Result<Self> {
        let g = Self { eps0, ratio, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.eps0 <= 1.0) {
            return Err(Error::Config(format!("eps0 must lie in (0, 1], got {}", self.eps0)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Config(format!(
                "grid ratio must lie in (0, 1), got {}",
                self.ratio
            )));
        }
        if self.points < 2 {
            return Err(Error::Config("grid needs at least two points".into()));
        }
        Ok(())
    }

    /// Strictly decreasing ε values.
    pub fn values(&self) -> Vec<f64> {
        (0..self.points)
            .map(|i| self.eps0 * self.ratio.powi(i as i32))
            .collect()
    }

    pub fn smallest(&self) -> f64 {
        self.eps0 * self.ratio.powi(self.points as i32 - 1)
    }
}

/// Sampled `(ε, |v(ε)|)` pairs in grid order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Samples {
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
}

impl Samples {
    pub fn new(eps: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(eps.len(), values.len());
        Self { eps, values }
    }

    pub fn from_fn(grid: &EpsGrid, f: impl Fn(f64) -> f64) -> Self {
        let eps = grid.values();
        let values = eps.iter().map(|e| f(*e)).collect();
        Self { eps, values }
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }
}

/// Fitted exponent `a` in `|v(ε)| ≈ c·ε^a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    /// `+∞` when every sample is below [`ZERO_FLOOR`].
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Indices of the samples entering the fit.
    pub tail_window: Vec<usize>,
    /// `|v|` stabilized at a nonzero level.
    pub plateau: bool,
    /// Growth faster than any power (non-finite values or a steepening slope).
    pub super_polynomial: bool,
}

impl OrderEstimate {
    pub fn is_zero(&self) -> bool {
        self.slope == f64::INFINITY
    }

    fn zero() -> Self {
        Self {
            slope: f64::INFINITY,
            intercept: f64::NEG_INFINITY,
            r2: 1.0,
            tail_window: Vec::new(),
            plateau: false,
            super_polynomial: false,
        }
    }
}

struct Fit {
    slope: f64,
    intercept: f64,
    r2: f64,
}

fn least_squares(x: &[f64], y: &[f64]) -> Fit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy <= 1e-300 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Fit { slope, intercept, r2 }
}

/// Least-squares slope of `ln|v|` against `ln ε` over the tail window.
pub fn estimate_order(samples: &Samples) -> Result<OrderEstimate> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::Numerical {
            experiment: "estimate_order".into(),
            message: format!("need at least {MIN_SAMPLES} samples, got {}", samples.len()),
        });
    }
    let non_finite = samples.values.iter().any(|v| !v.is_finite());
    let retained: Vec<usize> = (0..samples.len())
        .filter(|&i| {
            let v = samples.values[i].abs();
            v.is_finite() && v >= ZERO_FLOOR && samples.eps[i] > 0.0
        })
        .collect();
    // one or two stray values just above the floor are quadrature noise
    let stray = retained.len() < 3
        && retained
            .iter()
            .all(|&i| samples.values[i].abs() < NOISE_BAND * ZERO_FLOOR);
    if retained.is_empty() || (stray && !non_finite) {
        let mut z = OrderEstimate::zero();
        z.super_polynomial = non_finite;
        if non_finite {
            z.slope = f64::NEG_INFINITY;
        }
        return Ok(z);
    }
    let window: Vec<usize> = retained[retained.len().saturating_sub(TAIL_WINDOW)..].to_vec();
    let lx: Vec<f64> = window.iter().map(|&i| samples.eps[i].ln()).collect();
    let ly: Vec<f64> = window.iter().map(|&i| samples.values[i].abs().ln()).collect();

    let last = *window.last().expect("nonempty window");
    let dropped_after = last + 1 < samples.len();
    let (slope, intercept, r2) = if window.len() >= 3 {
        let f = least_squares(&lx, &ly);
        (f.slope, f.intercept, f.r2)
    } else if dropped_after && !non_finite {
        // the value falls below the floor at the next grid point: a lower bound on the decay
        let v = samples.values[last].abs();
        let s = (v / ZERO_FLOOR).ln() / (samples.eps[last] / samples.eps[last + 1]).ln();
        let slope = if window.len() == 2 {
            least_squares(&lx, &ly).slope.max(s)
        } else {
            s
        };
        (slope, ly[ly.len() - 1] - slope * lx[lx.len() - 1], 1.0)
    } else if window.len() == 2 {
        let f = least_squares(&lx, &ly);
        (f.slope, f.intercept, 1.0)
    } else {
        (0.0, ly[0], 1.0)
    };

    let plateau = window.len() >= 3
        && window.windows(2).all(|w| {
            let r = samples.values[w[1]].abs() / samples.values[w[0]].abs();
            (0.9..=1.1).contains(&r)
        });

    let steepening = if window.len() >= 6 {
        let h = window.len() / 2;
        let early = least_squares(&lx[..h], &ly[..h]).slope;
        let late = least_squares(&lx[h..], &ly[h..]).slope;
        late < -1.0 && late < early - 1.0 && late < 1.5 * early
    } else {
        false
    };

    Ok(OrderEstimate {
        slope: if non_finite { f64::NEG_INFINITY } else { slope },
        intercept,
        r2,
        tail_window: window,
        plateau,
        super_polynomial: non_finite || steepening,
    })
}
