//! Smoothness norms for grid functions: the L^p modulus of continuity, the
//! Besov norm realized through its dyadic-scale sum, and the Hoelder norm.
//!
//! Conventions shared by all operations here:
//! * shifts are restricted to grid-aligned values `h = m * width`;
//! * time integrals are exact step-function integrals;
//! * the norm of a value is the grid function's own lp norm, while the
//!   integrability exponent `p` and summability `q` are parameters and may
//!   be infinite.

use crate::dyadic::GridFunction;
use crate::error::{Error, Result};
use crate::spaces::lp_norm_slice;
use crate::sums::CompensatedSum;

/// Parameters of the Besov norm on `(0, T)`: smoothness `s` in (0,1),
/// integrability `p` and summability `q` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub horizon: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: f64, horizon: f64) -> Result<Self> {
        if !s.is_finite() || s <= 0.0 || s >= 1.0 {
            return Err(Error::BadParameter(format!(
                "Besov smoothness s = {s} outside (0, 1)"
            )));
        }
        for (name, v) in [("p", p), ("q", q)] {
            if v < 1.0 || v.is_nan() {
                return Err(Error::BadExponent {
                    p: v,
                    context: format!("Besov exponent {name} must lie in [1, inf]"),
                });
            }
        }
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::BadParameter(format!("bad horizon {horizon}")));
        }
        Ok(Self { s, p, q, horizon })
    }
}

fn diff_norm(f: &GridFunction, j: usize, m: usize, buf: &mut [f64]) -> f64 {
    let a = f.value(j + m);
    let b = f.value(j);
    for ((o, x), y) in buf.iter_mut().zip(a).zip(b) {
        *o = x - y;
    }
    lp_norm_slice(buf, f.value_p())
}

/// `D(m) = (int ||f(r + m w) - f(r)||^p dr)^{1/p}` over the overlap, for every
/// whole-cell shift `m = 0..cells`. `p = inf` takes the essential sup.
pub fn shift_profile(f: &GridFunction, p: f64) -> Vec<f64> {
    let cells = f.grid().cells();
    let w = f.grid().width();
    let mut buf = vec![0.0; f.dim()];
    let mut profile = Vec::with_capacity(cells);
    profile.push(0.0);
    for m in 1..cells {
        let val = if p == f64::INFINITY {
            (0..cells - m)
                .map(|j| diff_norm(f, j, m, &mut buf))
                .fold(0.0, f64::max)
        } else {
            let mut acc = CompensatedSum::new();
            for j in 0..cells - m {
                acc.add(w * diff_norm(f, j, m, &mut buf).powf(p));
            }
            acc.total().max(0.0).powf(1.0 / p)
        };
        profile.push(val);
    }
    profile
}

fn running_max(profile: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(profile.len());
    let mut cur = 0.0f64;
    for &x in profile {
        cur = cur.max(x);
        out.push(cur);
    }
    out
}

/// Largest whole-cell shift with `m * width <= t`, capped at `cells - 1`.
fn max_shift(f: &GridFunction, t: f64) -> usize {
    let w = f.grid().width();
    // Nudge for the roundoff in t / w so exact multiples are admitted.
    let m = (t / w * (1.0 + 1e-12)).floor();
    (m.max(0.0) as usize).min(f.grid().cells().saturating_sub(1))
}

/// Modulus of continuity `rho_p(f, t)`: the sup over grid-aligned shifts
/// `|h| <= t` of the L^p distance between `f` and its translate on their
/// common domain. Negative and positive shifts give the same distance, so
/// only positive ones are scanned.
pub fn modulus(f: &GridFunction, t: f64, p: f64) -> Result<f64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::BadParameter(format!("modulus scale t = {t}")));
    }
    if p < 1.0 || p.is_nan() {
        return Err(Error::BadExponent {
            p,
            context: "modulus exponent".into(),
        });
    }
    let profile = shift_profile(f, p);
    let m = max_shift(f, t);
    Ok(profile[..=m].iter().fold(0.0f64, |a, &b| a.max(b)))
}

/// Dyadic Besov seminorm: the l^q norm of `(2^{ns} rho_p(f, 2^-n))` over the
/// scales `2^-n` representable on the grid.
pub fn besov_seminorm_dyadic(f: &GridFunction, params: &BesovParams) -> f64 {
    let profile = running_max(&shift_profile(f, params.p));
    seminorm_from_profile(f, params, &profile)
}

fn seminorm_from_profile(f: &GridFunction, params: &BesovParams, rho: &[f64]) -> f64 {
    let w = f.grid().width();
    let cells = f.grid().cells();
    let mut terms = Vec::new();
    for n in 0..=f.grid().level() {
        let scale = 0.5f64.powi(n as i32);
        let m = ((scale / w * (1.0 + 1e-12)).floor() as usize).min(cells - 1);
        if m == 0 {
            break;
        }
        terms.push(scale.powf(-params.s) * rho[m]);
    }
    if params.q == f64::INFINITY {
        terms.iter().fold(0.0f64, |a, &b| a.max(b))
    } else {
        let mut acc = CompensatedSum::new();
        for &x in &terms {
            acc.add(x.powf(params.q));
        }
        acc.total().max(0.0).powf(1.0 / params.q)
    }
}

/// Besov norm: `L^p` part plus the dyadic seminorm.
pub fn besov_norm(f: &GridFunction, params: &BesovParams) -> f64 {
    f.time_lp_norm(params.p) + besov_seminorm_dyadic(f, params)
}

/// Sup norm and Hoelder seminorm over all pairs of grid sample points.
///
/// The seminorm is the exact maximum of `||f(t) - f(s)|| / (t - s)^alpha`
/// over all pairs. Gaps are scanned in decreasing order of an upper bound
/// assembled from exact sups at power-of-two gaps (triangle inequality along
/// the binary decomposition of the gap), stopping once the bound cannot beat
/// the best exact ratio seen; the result equals the full pair scan.
pub fn holder_parts(f: &GridFunction, alpha: f64) -> Result<(f64, f64)> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
        return Err(Error::BadParameter(format!(
            "Hoelder exponent alpha = {alpha} outside (0, 1]"
        )));
    }
    let cells = f.grid().cells();
    let w = f.grid().width();
    let sup = (0..cells).map(|j| f.value_norm(j)).fold(0.0, f64::max);
    if cells < 2 {
        return Ok((sup, 0.0));
    }

    let mut buf = vec![0.0; f.dim()];
    let exact_gap = |m: usize, buf: &mut [f64]| -> f64 {
        (0..cells - m)
            .map(|j| diff_norm(f, j, m, buf))
            .fold(0.0, f64::max)
    };

    // Exact sups at power-of-two gaps seed both the bounds and the ratios.
    let dyadic_bits = usize::BITS - (cells - 1).leading_zeros();
    let mut dyadic_sup = vec![0.0f64; dyadic_bits as usize];
    let mut best = 0.0f64;
    for (bit, slot) in dyadic_sup.iter_mut().enumerate() {
        let m = 1usize << bit;
        if m >= cells {
            break;
        }
        *slot = exact_gap(m, &mut buf);
        best = best.max(*slot / ((m as f64) * w).powf(alpha));
    }

    let bound = |m: usize| -> f64 {
        let mut total = 0.0;
        let mut rest = m;
        while rest != 0 {
            let bit = rest.trailing_zeros() as usize;
            total += dyadic_sup[bit];
            rest &= rest - 1;
        }
        total
    };
    let mut candidates: Vec<(f64, usize)> = (1..cells)
        .filter(|m| !m.is_power_of_two())
        .map(|m| (bound(m) / ((m as f64) * w).powf(alpha), m))
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (bound_ratio, m) in candidates {
        if bound_ratio <= best {
            break;
        }
        let ratio = exact_gap(m, &mut buf) / ((m as f64) * w).powf(alpha);
        best = best.max(ratio);
    }
    Ok((sup, best))
}

/// Hoelder norm: sup norm plus Hoelder seminorm over grid sample points.
pub fn holder_norm(f: &GridFunction, alpha: f64) -> Result<f64> {
    holder_parts(f, alpha).map(|(sup, semi)| sup + semi)
}

/// Hoelder seminorm alone.
pub fn holder_seminorm(f: &GridFunction, alpha: f64) -> Result<f64> {
    holder_parts(f, alpha).map(|(_, semi)| semi)
}
