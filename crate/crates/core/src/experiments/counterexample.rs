//! The explicit Hoelder-continuous integrand family `psi_N` whose stochastic
//! integrals have p-th moments growing like `(N+1)^{1/p}` while the Hoelder
//! norms stay uniformly bounded. The integrand takes values in `l^p` of
//! dimension `2^{N+1}`: level `n <= N` places the `2^n` hat functions of the
//! Schauder system, scaled by `2^{(p-1)n/p}`, on disjoint coordinates
//! `2^n + k`. For `p in [1,2)` the scaling makes every level contribute the
//! same amount `m_p^p 12^{-p/2}` to `E||I(1)||_p^p` while the Hoelder norm
//! telescopes into a convergent geometric series.

use rayon::prelude::*;

use crate::dyadic::{schauder, DyadicGrid};
use crate::error::{Error, Result};
use crate::gamma::{gaussian_abs_moment, gaussian_abs_moment_root};
use crate::stochint::SampledProcess;

/// Parameters of the counterexample integrand: the number of tent levels is
/// `top_level + 1` (levels `0..=top_level`) and the target space is `l^p` of
/// dimension `2^{top_level+1}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PsiSpec {
    top_level: u32,
    p: f64,
}

fn check_psi_exponent(p: f64) -> Result<()> {
    if !p.is_finite() || !(1.0..2.0).contains(&p) {
        return Err(Error::BadExponent {
            p,
            context: "the counterexample family needs p in [1, 2); at p = 2 the \
                      geometric level sums 1/(2^{1-p/2} - 1) diverge"
                .into(),
        });
    }
    Ok(())
}

impl PsiSpec {
    pub fn new(top_level: u32, p: f64) -> Result<Self> {
        check_psi_exponent(p)?;
        if top_level > 48 {
            return Err(Error::BadParameter(format!(
                "top level {top_level} exceeds 48; the target dimension 2^(N+1) no \
                 longer fits an index"
            )));
        }
        Ok(Self { top_level, p })
    }

    pub fn top_level(&self) -> u32 {
        self.top_level
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Dimension of the `l^p` target: one coordinate per tent plus the unused
    /// zeroth coordinate, `2^{top_level+1}` in total.
    pub fn dim(&self) -> usize {
        1usize << (self.top_level + 1)
    }

    /// Hoelder exponent `1/p - 1/2` at which the family stays bounded.
    pub fn alpha(&self) -> f64 {
        1.0 / self.p - 0.5
    }

    /// Scaling `2^{(p-1)n/p}` of the level-`n` tents.
    pub fn level_coefficient(&self, n: u32) -> f64 {
        2f64.powf((self.p - 1.0) * n as f64 / self.p)
    }
}

/// Materializes `psi_N` as a deterministic process on the unit dyadic grid
/// (scalar Brownian input, `2^{N+1}`-dimensional `l^p` output). Needs
/// `grid_level >= top_level + 2` so every tent spans at least two cells.
pub fn build_psi(spec: &PsiSpec, grid_level: u32) -> Result<SampledProcess> {
    if grid_level < spec.top_level + 2 {
        return Err(Error::LevelTooCoarse {
            level: grid_level,
            context: format!(
                "materializing the counterexample with top level {} needs grid \
                 level >= {}",
                spec.top_level,
                spec.top_level + 2
            ),
        });
    }
    let grid = DyadicGrid::unit(grid_level)?;
    let dim = spec.dim();
    let cells = grid.cells();
    if (cells as u128) * (dim as u128) > 1u128 << 27 {
        return Err(Error::BadParameter(format!(
            "materializing the counterexample needs cells * dim <= 2^27 values, \
             got {cells} * {dim}; use the closed forms and the grid Hoelder \
             evaluator for larger instances"
        )));
    }
    let mut values = vec![0.0; cells * dim];
    for j in 0..cells {
        let t = grid.t_left(j);
        let block = &mut values[j * dim..(j + 1) * dim];
        for n in 0..=spec.top_level {
            let k_idx = (j >> (grid_level - n)) as u64;
            let coord = (1usize << n) + k_idx as usize;
            block[coord] = spec.level_coefficient(n) * schauder(n, k_idx + 1, t)?;
        }
    }
    SampledProcess::deterministic(grid, dim, 1, spec.p, values)
}

/// Closed-form `E ||I(1)||_p^p` of the counterexample integral, in both
/// level-count conventions.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PsiMoment {
    pub p: f64,
    pub top_level: u32,
    /// Sum over the `N+1` tent levels `0..=N`, each contributing exactly
    /// `m_p^p 12^{-p/2}`: the value the simulation reproduces.
    pub level_sum: f64,
    /// The same expression with the generation count taken as `N` instead of
    /// `N+1` (the level `n = 0` dropped); kept so reports surface which
    /// convention a cross-check used.
    pub dropped_level_sum: f64,
    /// True whenever the two forms differ, i.e. always for this family.
    pub level_count_discrepancy: bool,
    /// `p`-th root of `level_sum`, equal to `K_p (N+1)^{1/p}` with
    /// `K_p = m_p / sqrt(12)`.
    pub root: f64,
}

pub fn psi_exact_moment(spec: &PsiSpec) -> Result<PsiMoment> {
    let per_level = gaussian_abs_moment(spec.p)? * 12f64.powf(-spec.p / 2.0);
    let n = spec.top_level as f64;
    let level_sum = (n + 1.0) * per_level;
    Ok(PsiMoment {
        p: spec.p,
        top_level: spec.top_level,
        level_sum,
        dropped_level_sum: n * per_level,
        level_count_discrepancy: true,
        root: level_sum.powf(1.0 / spec.p),
    })
}

/// Growth constant `K_p = m_p / sqrt(12)` in the moment law
/// `E||I(1)||_p^p = K_p^p (N+1)`.
pub fn moment_rate_constant(p: f64) -> Result<f64> {
    check_psi_exponent(p)?;
    Ok(gaussian_abs_moment_root(p)? / 12f64.sqrt())
}

/// Uniform bound on `sup_t ||psi_N(t)||_p` over all `N`: at any time one tent
/// per level is active with value at most `2^{-n/2-1}`, so the p-th power sum
/// is the geometric series `2^{-p} sum_n 2^{(p/2-1)pn/...}`; in closed form
/// `(1/2) (r / (r - 1))^{1/p}` with `r = 2^{1-p/2}`.
pub fn psi_sup_bound(p: f64) -> Result<f64> {
    check_psi_exponent(p)?;
    let r = 2f64.powf(1.0 - p / 2.0);
    Ok(0.5 * (r / (r - 1.0)).powf(1.0 / p))
}

/// Uniform bound on the Hoelder norm (sup plus `alpha`-seminorm with
/// `alpha = 1/p - 1/2`) of the whole family: the sup part from
/// [`psi_sup_bound`] plus the seminorm bound
/// `(2^{2-alpha}/(2^{3p/2-1} - 1) + 1/(1 - 2^{-(1-p/2)}))^{1/p}` obtained by
/// splitting the tent levels at the gap scale.
pub fn psi_holder_constant(p: f64) -> Result<f64> {
    let alpha = 1.0 / p - 0.5;
    let sup = psi_sup_bound(p)?;
    let fine = 2f64.powf(2.0 - alpha) / (2f64.powf(1.5 * p - 1.0) - 1.0);
    let coarse = 1.0 / (1.0 - 2f64.powf(-(1.0 - p / 2.0)));
    Ok(sup + (fine + coarse).powf(1.0 / p))
}

/// Sup part and `alpha`-seminorm part of the Hoelder norm of `psi_N` sampled
/// at the left endpoints of a level-`grid_level` unit grid, computed without
/// materializing the `2^{N+1}`-dimensional values.
///
/// Every grid point is an integer multiple of the width of any tent of level
/// `n >= grid_level`, and tents vanish at such multiples, so only levels
/// `n <= min(N, grid_level - 1)` contribute. Per level exactly one tent is
/// active at a point and its value is `2^{n/2} delta u` for an integer
/// `u <= 2^{grid_level-n-1}`, so all pair differences reduce to small lookup
/// tables in `u`. Gaps are scanned in descending order of an analytic bound
/// (per level at most two tents change, each by at most
/// `min(2^{n/2} h, 2^{-n/2-1})`), stopping once the bound cannot beat the
/// best exact ratio; the result equals the full pair scan.
pub fn psi_grid_holder_parts(spec: &PsiSpec, grid_level: u32) -> Result<(f64, f64)> {
    if grid_level == 0 || grid_level > 24 {
        return Err(Error::BadParameter(format!(
            "grid Hoelder evaluation supports levels 1..=24, got {grid_level}"
        )));
    }
    let l = grid_level;
    let cells = 1usize << l;
    let delta = 0.5f64.powi(l as i32);
    let p = spec.p;
    let alpha = spec.alpha();
    let n_eff = spec.top_level.min(l - 1);

    // Per-level lookup tables: T_n[u] = |coefficient_n * tent value|^p where
    // the tent value at a grid point is 2^{n/2} * delta * u.
    let tables: Vec<Vec<f64>> = (0..=n_eff)
        .map(|n| {
            let nf = n as f64;
            let base = 2f64.powf((p - 1.0) * nf + nf * p / 2.0) * delta.powf(p);
            let half_span = 1usize << (l - n - 1);
            (0..=half_span).map(|u| base * (u as f64).powf(p)).collect()
        })
        .collect();

    let mut sup_pow = 0f64;
    for j in 0..cells {
        let mut s = 0.0;
        for n in 0..=n_eff {
            let span = 1usize << (l - n);
            let jj = j & (span - 1);
            s += tables[n as usize][jj.min(span - jj)];
        }
        sup_pow = sup_pow.max(s);
    }
    let sup = sup_pow.powf(1.0 / p);

    // Largest p-th power difference over pairs at gap m, maximized over
    // positions; per level the pair either sits in one tent (difference of
    // integer heights) or in two (both heights enter separately).
    let exact_pow = |m: usize| -> f64 {
        let mut best = 0f64;
        for j in 0..cells - m {
            let j2 = j + m;
            let mut s = 0.0;
            for n in 0..=n_eff {
                let sh = l - n;
                let span = 1usize << sh;
                let mask = span - 1;
                let jj1 = j & mask;
                let jj2 = j2 & mask;
                let u1 = jj1.min(span - jj1);
                let u2 = jj2.min(span - jj2);
                let t = &tables[n as usize];
                s += if (j >> sh) == (j2 >> sh) {
                    t[u1.abs_diff(u2)]
                } else {
                    t[u1] + t[u2]
                };
            }
            if s > best {
                best = s;
            }
        }
        best
    };

    let bound_pow = |m: usize| -> f64 {
        let h = m as f64 * delta;
        let mut s = 0.0;
        for n in 0..=n_eff {
            let nf = n as f64;
            let step = (2f64.powf(nf / 2.0) * h).min(2f64.powf(-nf / 2.0 - 1.0));
            s += 2.0 * 2f64.powf((p - 1.0) * nf) * step.powf(p);
        }
        s
    };

    let gap_pow = |m: usize| (m as f64 * delta).powf(alpha * p);
    let mut cands: Vec<(usize, f64)> = (1..cells)
        .map(|m| (m, bound_pow(m) / gap_pow(m)))
        .collect();
    cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut best_ratio_pow = 0f64;
    let mut idx = 0;
    const BATCH: usize = 64;
    while idx < cands.len() && cands[idx].1 > best_ratio_pow {
        let end = (idx + BATCH).min(cands.len());
        let batch_best = cands[idx..end]
            .par_iter()
            .map(|&(m, _)| exact_pow(m) / gap_pow(m))
            .reduce(|| 0.0, f64::max);
        best_ratio_pow = best_ratio_pow.max(batch_best);
        idx = end;
    }
    Ok((sup, best_ratio_pow.powf(1.0 / p)))
}

/// Grid Hoelder norm of `psi_N`: sup part plus seminorm part from
/// [`psi_grid_holder_parts`].
pub fn psi_grid_holder_norm(spec: &PsiSpec, grid_level: u32) -> Result<f64> {
    let (sup, semi) = psi_grid_holder_parts(spec, grid_level)?;
    Ok(sup + semi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::besov;
    use crate::dyadic::schauder_l2sq;
    use crate::stochint::terminal_moment_estimate;
    use crate::sums::CompensatedSum;
    use approx::assert_relative_eq;

    #[test]
    fn spec_validation() {
        assert!(PsiSpec::new(3, 2.0).is_err());
        assert!(PsiSpec::new(3, 0.9).is_err());
        assert!(PsiSpec::new(3, f64::NAN).is_err());
        assert!(PsiSpec::new(49, 1.5).is_err());
        let s = PsiSpec::new(0, 1.0).unwrap();
        assert_eq!(s.dim(), 2);
        assert_relative_eq!(s.alpha(), 0.5);
        assert!(psi_holder_constant(2.0).is_err());
        assert!(moment_rate_constant(2.0).is_err());
    }

    #[test]
    fn build_requires_fine_grid_and_bounded_size() {
        let spec = PsiSpec::new(4, 1.5).unwrap();
        assert!(matches!(
            build_psi(&spec, 5),
            Err(Error::LevelTooCoarse { .. })
        ));
        assert!(build_psi(&spec, 6).is_ok());
        let big = PsiSpec::new(13, 1.5).unwrap();
        assert!(matches!(build_psi(&big, 15), Err(Error::BadParameter(_))));
    }

    #[test]
    fn psi_matches_tent_formula() {
        let spec = PsiSpec::new(2, 1.3).unwrap();
        let level = 6;
        let psi = build_psi(&spec, level).unwrap();
        let f = psi.kernel_grid_function().unwrap();
        let grid = f.grid();
        for j in 0..grid.cells() {
            let t = grid.t_left(j);
            let value = f.value(j);
            let mut expected = vec![0.0; spec.dim()];
            for n in 0..=spec.top_level() {
                let k_idx = (j >> (level - n)) as u64;
                expected[(1usize << n) + k_idx as usize] =
                    spec.level_coefficient(n) * schauder(n, k_idx + 1, t).unwrap();
            }
            for (a, b) in value.iter().zip(&expected) {
                assert_eq!(a, b, "cell {j}");
            }
            assert_eq!(value[0], 0.0);
        }
    }

    #[test]
    fn sup_bound_closed_form_and_holds_on_grid() {
        // p = 1: r = sqrt(2), bound = (2 + sqrt 2)/2.
        let s2 = 2f64.sqrt();
        assert_relative_eq!(
            psi_sup_bound(1.0).unwrap(),
            (2.0 + s2) / 2.0,
            max_relative = 1e-14
        );
        for &p in &[1.0, 1.3, 1.7] {
            let spec = PsiSpec::new(3, p).unwrap();
            let f = build_psi(&spec, 8).unwrap().kernel_grid_function().unwrap();
            let bound = psi_sup_bound(p).unwrap();
            for j in 0..f.grid().cells() {
                assert!(
                    f.value_norm(j) <= bound,
                    "p = {p}, cell {j}: {} > {bound}",
                    f.value_norm(j)
                );
            }
        }
    }

    /// Independent oracle for the exact moment: sum the per-tent normal
    /// moments `m_p^p (c_n^2 sigma_n^2)^{p/2}` term by term over all tents.
    fn termwise_moment(top_level: u32, p: f64) -> f64 {
        let mpp = gaussian_abs_moment(p).unwrap();
        let mut acc = CompensatedSum::new();
        for n in 0..=top_level {
            let c = 2f64.powf((p - 1.0) * n as f64 / p);
            let term = mpp * c.powf(p) * schauder_l2sq(n).powf(p / 2.0);
            for _ in 0..(1u64 << n) {
                acc.add(term);
            }
        }
        acc.total()
    }

    #[test]
    fn exact_moment_matches_termwise_oracle() {
        for &p in &[1.0, 1.5, 1.9] {
            for &n in &[0u32, 3, 7] {
                let spec = PsiSpec::new(n, p).unwrap();
                let m = psi_exact_moment(&spec).unwrap();
                assert_relative_eq!(
                    m.level_sum,
                    termwise_moment(n, p),
                    max_relative = 1e-13
                );
                assert_relative_eq!(
                    m.dropped_level_sum,
                    m.level_sum * n as f64 / (n as f64 + 1.0),
                    max_relative = 1e-13
                );
                assert!(m.level_count_discrepancy);
                assert_relative_eq!(
                    m.root,
                    moment_rate_constant(p).unwrap() * (n as f64 + 1.0).powf(1.0 / p),
                    max_relative = 1e-13
                );
            }
        }
        // Diagnostic: at the excluded endpoint p = 2 the termwise sum is
        // (N+1)/12 exactly (m_2 = 1), confirming the per-level contribution.
        assert_relative_eq!(termwise_moment(5, 2.0), 6.0 / 12.0, max_relative = 1e-13);
    }

    #[test]
    fn monte_carlo_reproduces_exact_moment() {
        for &(p, n) in &[(1.0, 2u32), (1.5, 3)] {
            let spec = PsiSpec::new(n, p).unwrap();
            let psi = build_psi(&spec, 9).unwrap();
            let est = terminal_moment_estimate(&psi, p, 20_000, 99).unwrap();
            let exact = psi_exact_moment(&spec).unwrap().level_sum;
            assert!(
                (est.mean - exact).abs() <= 4.0 * est.std_error,
                "p = {p}, N = {n}: {} vs {exact} (se {})",
                est.mean,
                est.std_error
            );
        }
    }

    #[test]
    fn holder_constant_closed_form() {
        // p = 1, alpha = 1/2: sup part (2 + sqrt 2)/2, seminorm part
        // 2^{3/2}/(sqrt 2 - 1) + 1/(1 - 2^{-1/2}) = 3 sqrt 2/(sqrt 2 - 1).
        let s2 = 2f64.sqrt();
        assert_relative_eq!(
            psi_holder_constant(1.0).unwrap(),
            (2.0 + s2) / 2.0 + 3.0 * s2 / (s2 - 1.0),
            max_relative = 1e-13
        );
        for &p in &[1.0, 1.2, 1.5] {
            let c = psi_holder_constant(p).unwrap();
            assert!(c.is_finite() && c > 0.0);
        }
    }

    #[test]
    fn grid_holder_matches_generic_scan() {
        for &(p, n, level) in &[(1.0, 2u32, 6u32), (1.5, 3, 7), (1.2, 2, 8)] {
            let spec = PsiSpec::new(n, p).unwrap();
            let f = build_psi(&spec, level)
                .unwrap()
                .kernel_grid_function()
                .unwrap();
            let (sup_g, semi_g) = besov::holder_parts(&f, spec.alpha()).unwrap();
            let (sup_s, semi_s) = psi_grid_holder_parts(&spec, level).unwrap();
            assert_relative_eq!(sup_s, sup_g, max_relative = 1e-12);
            assert_relative_eq!(semi_s, semi_g, max_relative = 1e-12);
        }
    }

    #[test]
    fn fine_tents_vanish_at_grid_points() {
        // Tents of level n >= grid level are invisible to the grid: every
        // grid point is a whole multiple of the tent width. This justifies
        // truncating the level sum at min(N, grid_level - 1).
        let level = 3u32;
        let grid = DyadicGrid::unit(level).unwrap();
        for n in level..level + 3 {
            for k in 1..=(1u64 << n) {
                for j in 0..grid.cells() {
                    assert_eq!(schauder(n, k, grid.t_left(j)).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn grid_holder_norm_below_uniform_constant() {
        for &p in &[1.0, 1.5] {
            let c = psi_holder_constant(p).unwrap();
            for &n in &[0u32, 2, 4] {
                let spec = PsiSpec::new(n, p).unwrap();
                let norm = psi_grid_holder_norm(&spec, 10).unwrap();
                assert!(norm <= c, "p = {p}, N = {n}: {norm} > {c}");
            }
        }
    }

    #[test]
    fn grid_holder_norm_nondecreasing_in_level() {
        let spec = PsiSpec::new(2, 1.2).unwrap();
        let mut prev = 0.0;
        for level in 4..=8 {
            let norm = psi_grid_holder_norm(&spec, level).unwrap();
            assert!(
                norm >= prev * (1.0 - 1e-12),
                "level {level}: {norm} < {prev}"
            );
            prev = norm;
        }
    }

    #[test]
    fn grid_holder_handles_top_level_beyond_grid() {
        // Levels above the grid resolution vanish at grid points, so N = 16
        // and N = 9 give identical results on a level-10 grid.
        let a = psi_grid_holder_norm(&PsiSpec::new(16, 1.4).unwrap(), 10).unwrap();
        let b = psi_grid_holder_norm(&PsiSpec::new(9, 1.4).unwrap(), 10).unwrap();
        assert_eq!(a, b);
    }
}
