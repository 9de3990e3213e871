//! Finite sections of integral representation operators, gamma-norm
//! estimation by Gaussian sums, the exact p-th-moment formula for l^p
//! targets, the domination comparison, and an empirical type-p constant.
//!
//! A [`GammaOperator`] is the matrix of an operator from `L^2(0,1;R^d)` to
//! `l^p_N` against the orthonormal system Haar x standard basis. Its Gaussian
//! image `G = sum_j g_j col_j` has independent standard Gaussian weights, and
//! every norm of interest is a moment of `||G||_p`.

use libm::tgamma;
use rand::Rng;

use crate::dyadic::haar_system;
use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::spaces::{check_exponent, check_finite, lp_norm_slice};
use crate::stochint::SampledProcess;
use crate::sums::{chunked_mean, CompensatedSum, MeanStats};

/// `E|Z|^p` for a standard Gaussian `Z` and `p > 0`:
/// `2^{p/2} Gamma((p+1)/2) / sqrt(pi)`.
pub fn gaussian_abs_moment(p: f64) -> Result<f64> {
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::BadExponent {
            p,
            context: "Gaussian absolute moment".into(),
        });
    }
    Ok(2.0f64.powf(0.5 * p) * tgamma(0.5 * (p + 1.0)) / std::f64::consts::PI.sqrt())
}

/// `m_p = (E|Z|^p)^{1/p}`.
pub fn gaussian_abs_moment_root(p: f64) -> Result<f64> {
    gaussian_abs_moment(p).map(|m| m.powf(1.0 / p))
}

/// Matrix of an operator `L^2(0,1;R^d) -> l^p_N` against the system
/// `haar_system(basis_level) x {h_1..h_d}`; column `j = haar_index * d + h`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaOperator {
    entries: Vec<f64>,
    n_out: usize,
    cols: usize,
    p: f64,
    basis_level: u32,
    d: usize,
}

impl GammaOperator {
    pub fn from_entries(entries: Vec<f64>, p: f64, basis_level: u32, d: usize) -> Result<Self> {
        check_exponent(p)?;
        if d == 0 {
            return Err(Error::BadParameter("basis dimension d = 0".into()));
        }
        let cols = (1usize << (basis_level + 1)) * d;
        if entries.is_empty() || entries.len() % cols != 0 {
            return Err(Error::LengthMismatch {
                left: entries.len(),
                right: cols,
                context: "operator entries vs basis size".into(),
            });
        }
        check_finite(&entries, "operator entries")?;
        let n_out = entries.len() / cols;
        Ok(Self {
            entries,
            n_out,
            cols,
            p,
            basis_level,
            d,
        })
    }

    pub fn dim_out(&self) -> usize {
        self.n_out
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn basis_level(&self) -> u32 {
        self.basis_level
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    /// Standard deviation of coordinate `i` of the Gaussian image.
    pub fn row_sigma(&self, i: usize) -> f64 {
        let mut acc = CompensatedSum::new();
        for &x in self.row(i) {
            acc.add(x * x);
        }
        acc.total().max(0.0).sqrt()
    }

    /// Rescales every entry by `c`.
    pub fn scaled(&self, c: f64) -> GammaOperator {
        let mut out = self.clone();
        for x in &mut out.entries {
            *x *= c;
        }
        out
    }

    /// Same operator viewed against the system one level deeper; the new
    /// columns are zero, so every norm is unchanged.
    pub fn zero_extended(&self) -> GammaOperator {
        let new_cols = self.cols * 2;
        let mut entries = vec![0.0; self.n_out * new_cols];
        for i in 0..self.n_out {
            entries[i * new_cols..i * new_cols + self.cols].copy_from_slice(self.row(i));
        }
        GammaOperator {
            entries,
            n_out: self.n_out,
            cols: new_cols,
            p: self.p,
            basis_level: self.basis_level + 1,
            d: self.d,
        }
    }

    /// CSV: one row per output coordinate; the first column name carries the
    /// descriptor `coord/p=..;level=..;d=..`, the rest name basis elements.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "coord/p={};level={};d={}",
            self.p, self.basis_level, self.d
        ));
        for (n, k) in haar_system(self.basis_level) {
            for h in 1..=self.d {
                out.push_str(&format!(",g{n}_{k}:h{h}"));
            }
        }
        out.push('\n');
        for i in 0..self.n_out {
            out.push_str(&format!("{}", i + 1));
            for j in 0..self.cols {
                out.push_str(&format!(",{}", self.entry(i, j)));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty operator CSV".into()))?;
        let descriptor = header
            .split(',')
            .next()
            .and_then(|c| c.strip_prefix("coord/"))
            .ok_or_else(|| Error::Parse("missing operator descriptor".into()))?;
        let mut p = None;
        let mut level = None;
        let mut d = None;
        for part in descriptor.split(';') {
            match part.split_once('=') {
                Some(("p", v)) => p = v.parse::<f64>().ok(),
                Some(("level", v)) => level = v.parse::<u32>().ok(),
                Some(("d", v)) => d = v.parse::<usize>().ok(),
                _ => return Err(Error::Parse(format!("bad descriptor field {part}"))),
            }
        }
        let (p, level, d) = match (p, level, d) {
            (Some(p), Some(level), Some(d)) => (p, level, d),
            _ => return Err(Error::Parse("incomplete operator descriptor".into())),
        };
        let mut entries = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            for field in line.split(',').skip(1) {
                entries.push(
                    field
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad entry {field}: {e}")))?,
                );
            }
        }
        GammaOperator::from_entries(entries, p, level, d)
    }
}

/// Finite section of the representation operator of a deterministic process:
/// the column for basis element `f x h` holds `int f(t) (Phi(t) h) dt`,
/// computed exactly because `Phi` is a step function and `f` is constant on
/// the halves of its support. Requires the unit horizon and a grid at least
/// one level finer than the basis.
pub fn represent_operator(phi: &SampledProcess, basis_level: u32) -> Result<GammaOperator> {
    if !phi.is_deterministic() {
        return Err(Error::Unsupported(
            "representation requires a deterministic process".into(),
        ));
    }
    let grid = phi.grid();
    if grid.horizon() != 1.0 {
        return Err(Error::Unsupported(
            "the Haar system is defined on the unit horizon".into(),
        ));
    }
    if grid.level() < basis_level + 1 {
        return Err(Error::LevelTooCoarse {
            level: grid.level(),
            context: format!(
                "grid must be at least one level finer than basis level {basis_level}"
            ),
        });
    }
    let values = phi.operator_values(None)?;
    let (n_out, d) = (phi.dim_out(), phi.dim_in());
    let block = n_out * d;
    let w = grid.width();
    let system = haar_system(basis_level);
    let cols = system.len() * d;
    let mut entries = vec![0.0; n_out * cols];
    for (haar_idx, &(n, k)) in system.iter().enumerate() {
        // Support cells and the signed amplitude on each half.
        let (first, mid, last, amp) = if n == 0 && k == 0 {
            (0usize, grid.cells(), grid.cells(), 1.0)
        } else {
            let span = grid.cells() >> n;
            let start = (k - 1) as usize * span;
            let amp = ((1u64 << n) as f64).sqrt();
            (start, start + span / 2, start + span, amp)
        };
        for h in 0..d {
            let col = haar_idx * d + h;
            for i in 0..n_out {
                let mut acc = CompensatedSum::new();
                for cell in first..mid {
                    acc.add(w * values[cell * block + i * d + h]);
                }
                for cell in mid..last {
                    acc.add(-w * values[cell * block + i * d + h]);
                }
                entries[i * cols + col] = amp * acc.total();
            }
        }
    }
    Ok(GammaOperator {
        entries,
        n_out,
        cols,
        p: phi.value_p(),
        basis_level,
        d,
    })
}

/// Monte Carlo mean of `||G||_p^q` for the Gaussian image `G`, with the
/// sample-indexed Gaussian stream keyed by `seed`.
pub fn gaussian_sum_moment_mc(r: &GammaOperator, q: f64, samples: u64, seed: u64) -> Result<MeanStats> {
    if samples < 2 {
        return Err(Error::BadParameter("need at least 2 samples".into()));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::BadParameter(format!("moment exponent q = {q}")));
    }
    Ok(chunked_mean(samples, |i| {
        let mut rng = rng::stream(seed, domain::GAUSSIAN_SUM, i);
        let mut g = vec![0.0; r.cols];
        rng::fill_standard_normal(&mut rng, &mut g);
        let mut image = vec![0.0; r.n_out];
        for (i_out, y) in image.iter_mut().enumerate() {
            let row = r.row(i_out);
            let mut acc = 0.0;
            for (&e, &gj) in row.iter().zip(&g) {
                acc += e * gj;
            }
            *y = acc;
        }
        lp_norm_slice(&image, r.p).powf(q)
    }))
}

/// Gamma norm `(E ||G||_p^2)^{1/2}` by Monte Carlo; the standard error of the
/// squared-norm mean is propagated through the square root.
pub fn gamma_norm_mc(r: &GammaOperator, samples: u64, seed: u64) -> Result<MeanStats> {
    Ok(gaussian_sum_moment_mc(r, 2.0, samples, seed)?.sqrt_stats())
}

/// Monte Carlo estimate of `E ||G||_p^p`, the quantity the exact formula
/// computes.
pub fn gamma_pth_moment_mc(r: &GammaOperator, samples: u64, seed: u64) -> Result<MeanStats> {
    gaussian_sum_moment_mc(r, r.p, samples, seed)
}

/// Exact `E ||G||_p^p = m_p^p sum_i row_sigma(i)^p`: coordinate `i` of the
/// Gaussian image is a centered Gaussian with standard deviation
/// `row_sigma(i)`, and the p-th power of the l^p norm sums coordinatewise
/// regardless of cross-correlations.
pub fn gamma_pth_moment_exact(r: &GammaOperator) -> Result<f64> {
    let mp_p = gaussian_abs_moment(r.p)?;
    let mut acc = CompensatedSum::new();
    for i in 0..r.n_out {
        acc.add(r.row_sigma(i).powf(r.p));
    }
    Ok(mp_p * acc.total())
}

/// A functional on which the domination hypothesis fails, with both sides of
/// the inequality.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FunctionalViolation {
    pub index: usize,
    pub functional: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DominationReport {
    /// Hypothesis `int ||Phi* x*||^2 <= int ||Psi* x*||^2` on every sampled
    /// functional and every coordinate functional.
    pub hypothesis_holds: bool,
    pub violations: Vec<FunctionalViolation>,
    pub functionals_checked: usize,
    pub exact_phi: f64,
    pub exact_psi: f64,
    /// Exact p-th moments ordered (no tolerance).
    pub exact_ordered: bool,
    pub phi_norm: MeanStats,
    pub psi_norm: MeanStats,
    /// Gamma-norm estimates ordered within three joint standard errors.
    pub mc_ordered: bool,
}

/// Quadratic form `int_0^T ||Phi*(t) x*||_H^2 dt` of a deterministic process.
fn adjoint_energy(values: &[f64], n_out: usize, d: usize, w: f64, xstar: &[f64]) -> f64 {
    let block = n_out * d;
    let cells = values.len() / block;
    let mut acc = CompensatedSum::new();
    for cell in 0..cells {
        let matrix = &values[cell * block..(cell + 1) * block];
        for h in 0..d {
            let mut comp = 0.0;
            for i in 0..n_out {
                comp += matrix[i * d + h] * xstar[i];
            }
            acc.add(w * comp * comp);
        }
    }
    acc.total()
}

/// Checks the domination hypothesis on sampled functionals plus all
/// coordinate functionals, then compares gamma-norm estimates and exact
/// p-th moments of the two processes at a common seed.
pub fn domination_compare(
    phi: &SampledProcess,
    psi: &SampledProcess,
    functional_samples: usize,
    mc_samples: u64,
    seed: u64,
) -> Result<DominationReport> {
    if !phi.is_deterministic() || !psi.is_deterministic() {
        return Err(Error::Unsupported(
            "domination comparison requires deterministic processes".into(),
        ));
    }
    if phi.grid() != psi.grid() {
        return Err(Error::GridMismatch("domination operands".into()));
    }
    if phi.dim_out() != psi.dim_out() || phi.dim_in() != psi.dim_in() {
        return Err(Error::LengthMismatch {
            left: phi.dim_out() * phi.dim_in(),
            right: psi.dim_out() * psi.dim_in(),
            context: "domination operand dimensions".into(),
        });
    }
    let (n_out, d) = (phi.dim_out(), phi.dim_in());
    let w = phi.grid().width();
    let phi_values = phi.operator_values(None)?;
    let psi_values = psi.operator_values(None)?;

    // Coordinate functionals first, then sign patterns and normalized
    // Gaussian directions in the dual norm.
    let p = phi.value_p();
    let dual_p = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
    let dual_norm = |x: &[f64]| -> f64 {
        if dual_p.is_infinite() {
            x.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
        } else {
            lp_norm_slice(x, dual_p)
        }
    };
    let mut functionals: Vec<Vec<f64>> = (0..n_out)
        .map(|i| {
            let mut e = vec![0.0; n_out];
            e[i] = 1.0;
            e
        })
        .collect();
    for sample in 0..functional_samples {
        let mut rng = rng::stream(seed, domain::FUNCTIONALS, sample as u64);
        let mut x = vec![0.0; n_out];
        if sample % 2 == 0 {
            for xi in &mut x {
                *xi = if rng.random::<bool>() { 1.0 } else { -1.0 };
            }
        } else {
            rng::fill_standard_normal(&mut rng, &mut x);
        }
        let norm = dual_norm(&x);
        if norm > 0.0 {
            for xi in &mut x {
                *xi /= norm;
            }
        }
        functionals.push(x);
    }

    let mut violations = Vec::new();
    for (index, xstar) in functionals.iter().enumerate() {
        let lhs = adjoint_energy(&phi_values, n_out, d, w, xstar);
        let rhs = adjoint_energy(&psi_values, n_out, d, w, xstar);
        if lhs > rhs * (1.0 + 1e-10) + 1e-30 {
            violations.push(FunctionalViolation {
                index,
                functional: xstar.clone(),
                lhs,
                rhs,
            });
        }
    }
    let hypothesis_holds = violations.is_empty();

    let basis_level = phi.grid().level() - 1;
    let r_phi = represent_operator(phi, basis_level)?;
    let r_psi = represent_operator(psi, basis_level)?;
    let exact_phi = gamma_pth_moment_exact(&r_phi)?;
    let exact_psi = gamma_pth_moment_exact(&r_psi)?;
    let phi_norm = gamma_norm_mc(&r_phi, mc_samples, seed)?;
    let psi_norm = gamma_norm_mc(&r_psi, mc_samples, seed)?;
    let joint_se = (phi_norm.std_error.powi(2) + psi_norm.std_error.powi(2)).sqrt();
    Ok(DominationReport {
        hypothesis_holds,
        violations,
        functionals_checked: functionals.len(),
        exact_phi,
        exact_psi,
        exact_ordered: exact_phi <= exact_psi,
        phi_norm,
        psi_norm,
        mc_ordered: phi_norm.mean <= psi_norm.mean + 3.0 * joint_se,
    })
}

/// Exact Rademacher second moment over all sign patterns:
/// `(E ||sum_k r_k x_k||_p^2)^{1/2} / (sum_k ||x_k||_p^p)^{1/p}`.
/// Enumerates the `2^K` patterns, so at most 12 summands are accepted.
pub fn rademacher_ratio(xs: &[Vec<f64>], p: f64) -> Result<f64> {
    check_exponent(p)?;
    let count = xs.len();
    if count == 0 || count > 12 {
        return Err(Error::Unsupported(format!(
            "exact Rademacher enumeration needs 1..=12 summands, got {count}"
        )));
    }
    let dim = xs[0].len();
    if xs.iter().any(|x| x.len() != dim) {
        return Err(Error::LengthMismatch {
            left: dim,
            right: xs.iter().map(|x| x.len()).max().unwrap_or(0),
            context: "Rademacher summands".into(),
        });
    }
    // Gray-code walk: one sign flip per step keeps the running sum exact
    // enough and the enumeration linear per pattern.
    let mut current: Vec<f64> = (0..dim).map(|i| xs.iter().map(|x| x[i]).sum()).collect();
    let mut acc = CompensatedSum::new();
    acc.add(lp_norm_slice(&current, p).powi(2));
    let patterns = 1u64 << count;
    let mut gray = 0u64;
    for step in 1..patterns {
        let new_gray = step ^ (step >> 1);
        let flipped = (gray ^ new_gray).trailing_zeros() as usize;
        let sign_now_negative = new_gray >> flipped & 1 == 1;
        let delta = if sign_now_negative { -2.0 } else { 2.0 };
        for (c, &x) in current.iter_mut().zip(&xs[flipped]) {
            *c += delta * x;
        }
        gray = new_gray;
        acc.add(lp_norm_slice(&current, p).powi(2));
    }
    let second_moment = acc.total() / patterns as f64;
    let mut denom = CompensatedSum::new();
    for x in xs {
        denom.add(lp_norm_slice(x, p).powf(p));
    }
    Ok(second_moment.sqrt() / denom.total().powf(1.0 / p))
}

/// Empirical lower bound for the type-p constant of `l^p_N`: the best
/// Rademacher ratio over random summand sequences. Trial 0 is the single
/// standard basis vector, whose ratio is exactly 1, so the bound is always
/// at least 1 up to rounding.
pub fn type_p_lower_bound(p: f64, dim: usize, trials: u64, seed: u64) -> Result<f64> {
    check_exponent(p)?;
    if p > 2.0 {
        return Err(Error::BadExponent {
            p,
            context: "type-p constants are estimated only for p in [1, 2]".into(),
        });
    }
    if dim == 0 || trials == 0 {
        return Err(Error::BadParameter("need dim >= 1 and trials >= 1".into()));
    }
    let mut e1 = vec![0.0; dim];
    e1[0] = 1.0;
    let mut best = rademacher_ratio(&[e1], p)?;
    for trial in 1..trials {
        let mut rng = rng::stream(seed, domain::TYPE_TRIALS, trial);
        let count = rng.random_range(1..=12usize);
        let xs: Vec<Vec<f64>> = (0..count)
            .map(|_| {
                let mut x = vec![0.0; dim];
                rng::fill_standard_normal(&mut rng, &mut x);
                x
            })
            .collect();
        best = best.max(rademacher_ratio(&xs, p)?);
    }
    Ok(best)
}
