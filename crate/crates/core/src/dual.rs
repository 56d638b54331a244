//! Nested dual numbers with a runtime set of infinitesimals.
//!
//! A [`MultiDual`] is an element of `R[d_0, …, d_{k-1}] / (d_0², …, d_{k-1}²)`,
//! i.e. the tensor product of `k` copies of the ordinary dual numbers. It is
//! what nesting `Dual<Dual<…>>` `k` times produces, except the depth is chosen
//! at runtime. Coefficients are stored densely, indexed by the bitmask of the
//! infinitesimals in the monomial.
//!
//! Evaluating a smooth function on `x + d_0 v_0 + d_1 v_1` and reading the
//! coefficient of `d_0 d_1` yields the mixed second directional derivative;
//! chains of Lie derivatives along non-constant fields are obtained by
//! substituting `p ↦ p + d_i ζ_i(p)` once per field, which is exact because
//! every `d_i` squares to zero.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use smallvec::{smallvec, SmallVec};

/// Largest number of independent infinitesimals a value may carry.
pub const MAX_VARS: usize = 12;

#[derive(Clone, PartialEq)]
pub struct MultiDual {
    c: SmallVec<[f64; 4]>,
}

impl fmt::Debug for MultiDual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c.len() == 1 {
            return write!(f, "{}", self.c[0]);
        }
        write!(f, "{}", self.c[0])?;
        for (mask, v) in self.c.iter().enumerate().skip(1) {
            if *v != 0.0 {
                write!(f, " + {v}·d{mask:b}")?;
            }
        }
        Ok(())
    }
}

impl Default for MultiDual {
    fn default() -> Self {
        Self::constant(0.0)
    }
}

impl From<f64> for MultiDual {
    fn from(v: f64) -> Self {
        Self::constant(v)
    }
}

impl MultiDual {
    pub fn constant(v: f64) -> Self {
        Self { c: smallvec![v] }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `v + d_var`.
    pub fn variable(v: f64, var: usize) -> Self {
        let mut out = Self::infinitesimal(var);
        out.c[0] = v;
        out
    }

    /// `d_var`.
    pub fn infinitesimal(var: usize) -> Self {
        assert!(var < MAX_VARS, "infinitesimal index {var} exceeds MAX_VARS");
        let mut c: SmallVec<[f64; 4]> = smallvec![0.0; 1 << (var + 1)];
        c[1 << var] = 1.0;
        Self { c }
    }

    /// Real (standard) part.
    #[inline]
    pub fn re(&self) -> f64 {
        self.c[0]
    }

    /// One past the highest infinitesimal index this value may depend on.
    #[inline]
    pub fn span(&self) -> usize {
        self.c.len().trailing_zeros() as usize
    }

    pub fn is_real(&self) -> bool {
        self.c.iter().skip(1).all(|v| *v == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|v| *v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    /// Coefficient of the monomial whose infinitesimals are the set bits of `mask`.
    pub fn coeff(&self, mask: usize) -> f64 {
        self.c.get(mask).copied().unwrap_or(0.0)
    }

    /// Coefficient of `d_{v_1} ⋯ d_{v_k}`; duplicate indices give zero.
    pub fn derivative(&self, vars: &[usize]) -> f64 {
        let mut mask = 0usize;
        for &v in vars {
            if mask & (1 << v) != 0 {
                return 0.0;
            }
            mask |= 1 << v;
        }
        self.coeff(mask)
    }

    /// Coefficient of `d_var` as a value in the remaining infinitesimals.
    pub fn part(&self, var: usize) -> MultiDual {
        let bit = 1usize << var;
        if self.c.len() <= bit {
            return Self::zero();
        }
        let mut out: SmallVec<[f64; 4]> = smallvec![0.0; self.c.len()];
        for (i, v) in self.c.iter().enumerate() {
            if i & bit != 0 {
                out[i ^ bit] = *v;
            }
        }
        let mut r = Self { c: out };
        r.shrink();
        r
    }

    /// Same value with every monomial containing `d_var` removed.
    pub fn without(&self, var: usize) -> MultiDual {
        let bit = 1usize << var;
        let mut r = self.clone();
        for (i, v) in r.c.iter_mut().enumerate() {
            if i & bit != 0 {
                *v = 0.0;
            }
        }
        r.shrink();
        r
    }

    /// Drop trailing storage for infinitesimals that no longer appear.
    fn shrink(&mut self) {
        while self.c.len() > 1 {
            let half = self.c.len() / 2;
            if self.c[half..].iter().all(|v| *v == 0.0) {
                self.c.truncate(half);
            } else {
                break;
            }
        }
    }

    fn widened(&self, len: usize) -> SmallVec<[f64; 4]> {
        let mut c = self.c.clone();
        if c.len() < len {
            c.resize(len, 0.0);
        }
        c
    }

    pub fn scale(&self, s: f64) -> MultiDual {
        Self {
            c: self.c.iter().map(|v| v * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest coefficient-wise difference.
    pub fn max_abs_diff(&self, other: &MultiDual) -> f64 {
        let n = self.c.len().max(other.c.len());
        (0..n).fold(0.0f64, |m, i| m.max((self.coeff(i) - other.coeff(i)).abs()))
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    /// Build from dense coefficients; the length is padded to a power of two.
    pub fn from_coefficients(c: &[f64]) -> Self {
        let len = c.len().max(1).next_power_of_two();
        let mut v: SmallVec<[f64; 4]> = c.iter().copied().collect();
        v.resize(len, 0.0);
        let mut r = Self { c: v };
        r.shrink();
        r
    }

    fn mul_ref(&self, o: &MultiDual) -> MultiDual {
        if self.c.len() == 1 {
            return o.scale(self.c[0]);
        }
        if o.c.len() == 1 {
            return self.scale(o.c[0]);
        }
        let n = self.c.len().max(o.c.len());
        let (a, b) = (self.widened(n), o.widened(n));
        let full = n - 1;
        let mut out: SmallVec<[f64; 4]> = smallvec![0.0; n];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            // walk the submasks of the complement of i
            let comp = full & !i;
            let mut j = comp;
            loop {
                out[i | j] += x * b[j];
                if j == 0 {
                    break;
                }
                j = (j - 1) & comp;
            }
        }
        Self { c: out }
    }

    /// `f(self)` given the derivatives `f^{(j)}` at the real part.
    ///
    /// The nilpotent part `N` satisfies `N^{span+1} = 0`, so the Taylor
    /// expansion terminates.
    pub fn apply(&self, derivs: impl Fn(usize) -> f64) -> MultiDual {
        if self.c.len() == 1 {
            return Self::constant(derivs(0));
        }
        let mut nil = self.clone();
        nil.c[0] = 0.0;
        let mut out = Self::constant(derivs(0));
        let mut power = nil.clone();
        let mut factorial = 1.0;
        for j in 1..=self.span() {
            if power.is_zero() {
                break;
            }
            factorial *= j as f64;
            let d = derivs(j);
            if d != 0.0 {
                out += power.scale(d / factorial);
            }
            power = power.mul_ref(&nil);
        }
        out
    }

    pub fn exp(&self) -> MultiDual {
        let e = self.re().exp();
        self.apply(|_| e)
    }

    pub fn sin(&self) -> MultiDual {
        let (s, c) = self.re().sin_cos();
        self.apply(|j| match j % 4 {
            0 => s,
            1 => c,
            2 => -s,
            _ => -c,
        })
    }

    pub fn cos(&self) -> MultiDual {
        let (s, c) = self.re().sin_cos();
        self.apply(|j| match j % 4 {
            0 => c,
            1 => -s,
            2 => -c,
            _ => s,
        })
    }

    pub fn recip(&self) -> MultiDual {
        let a = self.re();
        self.apply(|j| {
            let mut v = 1.0 / a;
            for k in 1..=j {
                v *= -(k as f64) / a;
            }
            v
        })
    }

    pub fn powi(&self, n: i32) -> MultiDual {
        if n == 0 {
            return Self::constant(1.0);
        }
        if n > 0 && n <= 4 {
            let mut out = self.clone();
            for _ in 1..n {
                out = out.mul_ref(self);
            }
            return out;
        }
        let a = self.re();
        self.apply(|j| {
            let mut coef = 1.0;
            for k in 0..j {
                coef *= (n - k as i32) as f64;
            }
            if coef == 0.0 {
                0.0
            } else {
                coef * a.powi(n - j as i32)
            }
        })
    }

    pub fn powf(&self, alpha: f64) -> MultiDual {
        let a = self.re();
        self.apply(|j| {
            let mut coef = 1.0;
            for k in 0..j {
                coef *= alpha - k as f64;
            }
            coef * a.powf(alpha - j as f64)
        })
    }

    pub fn sqrt(&self) -> MultiDual {
        self.powf(0.5)
    }
}

/// Highest span among a collection of values.
pub fn span_of<'a>(values: impl IntoIterator<Item = &'a MultiDual>) -> usize {
    values.into_iter().map(MultiDual::span).max().unwrap_or(0)
}

/// Promote real coordinates to constant dual values.
pub fn lift(x: &[f64]) -> Vec<MultiDual> {
    x.iter().map(|v| MultiDual::constant(*v)).collect()
}

/// Real parts of a point.
pub fn real_parts(x: &[MultiDual]) -> Vec<f64> {
    x.iter().map(MultiDual::re).collect()
}

impl AddAssign<&MultiDual> for MultiDual {
    fn add_assign(&mut self, o: &MultiDual) {
        if o.c.len() > self.c.len() {
            self.c.resize(o.c.len(), 0.0);
        }
        for (a, b) in self.c.iter_mut().zip(o.c.iter()) {
            *a += b;
        }
    }
}

impl AddAssign for MultiDual {
    fn add_assign(&mut self, o: MultiDual) {
        *self += &o;
    }
}

impl SubAssign<&MultiDual> for MultiDual {
    fn sub_assign(&mut self, o: &MultiDual) {
        if o.c.len() > self.c.len() {
            self.c.resize(o.c.len(), 0.0);
        }
        for (a, b) in self.c.iter_mut().zip(o.c.iter()) {
            *a -= b;
        }
    }
}

impl MulAssign<f64> for MultiDual {
    fn mul_assign(&mut self, s: f64) {
        for a in self.c.iter_mut() {
            *a *= s;
        }
    }
}

impl Add for &MultiDual {
    type Output = MultiDual;
    fn add(self, o: &MultiDual) -> MultiDual {
        let n = self.c.len().max(o.c.len());
        let mut c = self.widened(n);
        for (a, b) in c.iter_mut().zip(o.c.iter()) {
            *a += b;
        }
        MultiDual { c }
    }
}

impl Sub for &MultiDual {
    type Output = MultiDual;
    fn sub(self, o: &MultiDual) -> MultiDual {
        let n = self.c.len().max(o.c.len());
        let mut c = self.widened(n);
        for (a, b) in c.iter_mut().zip(o.c.iter()) {
            *a -= b;
        }
        MultiDual { c }
    }
}

impl Mul for &MultiDual {
    type Output = MultiDual;
    fn mul(self, o: &MultiDual) -> MultiDual {
        self.mul_ref(o)
    }
}

impl Div for &MultiDual {
    type Output = MultiDual;
    fn div(self, o: &MultiDual) -> MultiDual {
        if o.c.len() == 1 {
            return self.scale(1.0 / o.c[0]);
        }
        self.mul_ref(&o.recip())
    }
}

impl Neg for &MultiDual {
    type Output = MultiDual;
    fn neg(self) -> MultiDual {
        self.scale(-1.0)
    }
}

impl Neg for MultiDual {
    type Output = MultiDual;
    fn neg(self) -> MultiDual {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for MultiDual {
            type Output = MultiDual;
            fn $m(self, o: MultiDual) -> MultiDual {
                (&self).$m(&o)
            }
        }
        impl $tr<&MultiDual> for MultiDual {
            type Output = MultiDual;
            fn $m(self, o: &MultiDual) -> MultiDual {
                (&self).$m(o)
            }
        }
        impl $tr<MultiDual> for &MultiDual {
            type Output = MultiDual;
            fn $m(self, o: MultiDual) -> MultiDual {
                self.$m(&o)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

macro_rules! scalar_ops {
    ($($t:ty),*) => {$(
        impl Add<f64> for $t {
            type Output = MultiDual;
            fn add(self, s: f64) -> MultiDual {
                let mut out = self.clone();
                out.c[0] += s;
                out
            }
        }
        impl Sub<f64> for $t {
            type Output = MultiDual;
            fn sub(self, s: f64) -> MultiDual {
                let mut out = self.clone();
                out.c[0] -= s;
                out
            }
        }
        impl Mul<f64> for $t {
            type Output = MultiDual;
            fn mul(self, s: f64) -> MultiDual {
                self.scale(s)
            }
        }
        impl Div<f64> for $t {
            type Output = MultiDual;
            fn div(self, s: f64) -> MultiDual {
                self.scale(1.0 / s)
            }
        }
    )*};
}

scalar_ops!(MultiDual, &MultiDual);

impl Mul<&MultiDual> for f64 {
    type Output = MultiDual;
    fn mul(self, o: &MultiDual) -> MultiDual {
        o.scale(self)
    }
}

impl Mul<MultiDual> for f64 {
    type Output = MultiDual;
    fn mul(self, o: MultiDual) -> MultiDual {
        o.scale(self)
    }
}

impl Sub<&MultiDual> for f64 {
    type Output = MultiDual;
    fn sub(self, o: &MultiDual) -> MultiDual {
        -o + self
    }
}

impl Sub<MultiDual> for f64 {
    type Output = MultiDual;
    fn sub(self, o: MultiDual) -> MultiDual {
        -o + self
    }
}

impl Sum for MultiDual {
    fn sum<I: Iterator<Item = MultiDual>>(iter: I) -> Self {
        let mut acc = MultiDual::zero();
        for v in iter {
            acc += &v;
        }
        acc
    }
}
