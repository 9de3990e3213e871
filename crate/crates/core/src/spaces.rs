//! The state space `E = lp(N)` and the noise space `H = R^d`.
//!
//! `LpVector` owns its exponent so a vector cannot be paired with the wrong
//! norm. All coordinates are validated finite at construction; norms use
//! compensated summation so exact-identity tests hold to near machine
//! precision.

use crate::error::{Error, Result};
use crate::sums::CompensatedSum;

/// Element of `lp(N)`: `N` real coordinates plus the exponent `p in [1, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpVector {
    coords: Vec<f64>,
    p: f64,
}

impl LpVector {
    pub fn new(coords: Vec<f64>, p: f64) -> Result<Self> {
        check_exponent(p)?;
        check_finite(&coords, "LpVector coordinates")?;
        Ok(Self { coords, p })
    }

    pub fn zeros(dim: usize, p: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], p)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// The lp norm of this vector.
    pub fn norm(&self) -> f64 {
        lp_norm_slice(&self.coords, self.p)
    }
}

/// Element of `H = R^d` under the Euclidean inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertVec {
    coords: Vec<f64>,
}

impl HilbertVec {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_finite(&coords, "HilbertVec coordinates")?;
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        lp_norm_slice(&self.coords, 2.0)
    }
}

/// lp norm of `v`.
pub fn lp_norm(v: &LpVector) -> f64 {
    v.norm()
}

/// Duality pairing `<v, xstar> = sum_i v_i xstar_i`.
pub fn dual_pair(v: &LpVector, xstar: &[f64]) -> Result<f64> {
    if v.dim() != xstar.len() {
        return Err(Error::LengthMismatch {
            left: v.dim(),
            right: xstar.len(),
            context: "dual_pair".into(),
        });
    }
    check_finite(xstar, "dual_pair functional")?;
    Ok(dot(v.coords(), xstar))
}

/// Inner product on `H`.
pub fn h_inner(a: &HilbertVec, b: &HilbertVec) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::LengthMismatch {
            left: a.dim(),
            right: b.dim(),
            context: "h_inner".into(),
        });
    }
    Ok(dot(a.coords(), b.coords()))
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::BadExponent {
            p,
            context: "lp exponent must lie in [1, inf)".into(),
        });
    }
    Ok(())
}

pub(crate) fn check_finite(xs: &[f64], context: &str) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            context: context.into(),
        });
    }
    Ok(())
}

/// Compensated dot product.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = CompensatedSum::new();
    for (x, y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.total()
}

/// lp norm of a raw slice; callers guarantee finite entries and `p >= 1`.
pub(crate) fn lp_norm_slice(xs: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        return lp_pow_sum(xs, 1.0).max(0.0);
    }
    if p == 2.0 {
        return lp_pow_sum(xs, 2.0).max(0.0).sqrt();
    }
    // Factor out the largest magnitude so |x_i|^p cannot overflow for large
    // exponents even though the norm itself is representable.
    let m = xs.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    let mut acc = CompensatedSum::new();
    for &x in xs {
        acc.add((x.abs() / m).powf(p));
    }
    m * acc.total().max(0.0).powf(1.0 / p)
}

/// `sum_i |x_i|^p` with compensation; the `p = 1, 2` cases avoid `powf`.
pub(crate) fn lp_pow_sum(xs: &[f64], p: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    if p == 1.0 {
        for &x in xs {
            acc.add(x.abs());
        }
    } else if p == 2.0 {
        for &x in xs {
            acc.add(x * x);
        }
    } else {
        for &x in xs {
            acc.add(x.abs().powf(p));
        }
    }
    acc.total()
}

/// Euclidean norm of a raw slice.
pub(crate) fn l2_norm_slice(xs: &[f64]) -> f64 {
    lp_pow_sum(xs, 2.0).sqrt()
}
