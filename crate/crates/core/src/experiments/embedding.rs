//! Embedding study: for deterministic integrands with values in `l^p`,
//! `1 <= p <= 2`, the radonifying norm of the induced operator is controlled
//! by the `L^p` norm plus a weighted sum of dyadic translation differences
//! (a smoothness term of order `1/p - 1/2`), with the type-p constant as the
//! weight. The driver computes both sides — the left by representing the
//! operator against the Haar system and estimating its norm by Monte Carlo,
//! the right exactly from the kernel — and cross-checks the dyadic block sum
//! against the modulus-based smoothness seminorm.

use crate::besov::{besov_seminorm_dyadic, BesovParams};
use crate::error::{Error, Result};
use crate::gamma::{gamma_norm_mc, represent_operator};
use crate::spaces::{l2_norm_slice, lp_norm_slice};
use crate::stochint::SampledProcess;
use crate::sums::{CompensatedSum, MeanStats};

use super::corpus;
use super::frozen;

/// Pointwise radonifying norm of one operator value: for scalar input the
/// operator is a vector and the norm is its `l^p` norm exactly; for `p = 2`
/// it is the Frobenius norm. Other combinations have no cheap closed form.
fn pointwise_gamma_norm(block: &[f64], dim_in: usize, p: f64) -> Result<f64> {
    if dim_in == 1 {
        Ok(lp_norm_slice(block, p))
    } else if p == 2.0 {
        Ok(l2_norm_slice(block))
    } else {
        Err(Error::Unsupported(format!(
            "pointwise radonifying norms need scalar input or p = 2, got \
             dim_in = {dim_in}, p = {p}"
        )))
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EmbeddingReport {
    pub p: f64,
    pub grid_level: u32,
    pub n_max: u32,
    pub mc_samples: u64,
    pub seed: u64,
    /// Frozen type-p constant estimate entering the right-hand side.
    pub type_hat: f64,
    /// Monte Carlo norm of the operator represented at basis level `L - 2`.
    pub left_coarse: MeanStats,
    /// Same at basis level `L - 1`; the report's left-hand side.
    pub left_fine: MeanStats,
    /// Relative change between the two representation levels.
    pub truncation_rel_change: f64,
    /// True when the change is below 2 percent, i.e. the basis truncation is
    /// converged at this grid resolution.
    pub truncation_ok: bool,
    /// Exact `L^p` norm in time of the pointwise radonifying norms.
    pub lp_part: f64,
    /// `(sum_n 2^{n(1-p/2)} I_n)^{1/p}` over the dyadic translation
    /// integrals `I_n = int ||Phi(s + 2^{-n-1}) - Phi(s)||^p ds`.
    pub block_sum: f64,
    /// `lp_part + type_hat * 2^{-1+1/p} * block_sum`.
    pub right: f64,
    /// `left_fine.mean <= right`.
    pub left_leq_right: bool,
    /// Smoothness seminorm of the kernel at `s = 1/p - 1/2`, `q = p`
    /// (absent at `p = 2` where the order degenerates to zero).
    pub besov_seminorm: Option<f64>,
    /// `block_sum / besov_seminorm`.
    pub blocksum_ratio: Option<f64>,
    /// True when the ratio lies in `[1/c, c]` for the frozen constant `c`.
    pub blocksum_ok: Option<bool>,
}

/// Evaluates both sides of the embedding bound for one deterministic
/// process. Needs `1 <= p <= 2` (the type-p regime), a unit-horizon grid of
/// level at least 2, and `n_max <= grid_level - 1` so every translation
/// shift is grid-resolvable.
pub fn embedding_bound(
    phi: &SampledProcess,
    n_max: u32,
    mc_samples: u64,
    seed: u64,
) -> Result<EmbeddingReport> {
    if !phi.is_deterministic() {
        return Err(Error::Unsupported(
            "the embedding bound applies to deterministic integrands".into(),
        ));
    }
    let p = phi.value_p();
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::BadExponent {
            p,
            context: "the embedding bound needs the type-p regime p in [1, 2]".into(),
        });
    }
    let grid = phi.grid();
    if grid.horizon() != 1.0 {
        return Err(Error::GridMismatch(
            "the embedding bound is set on the unit horizon".into(),
        ));
    }
    let level = grid.level();
    if level < 2 {
        return Err(Error::LevelTooCoarse {
            level,
            context: "the embedding bound needs grid level >= 2".into(),
        });
    }
    if n_max > level - 1 {
        return Err(Error::BadParameter(format!(
            "n_max = {n_max} exceeds the finest grid-resolvable shift scale {}",
            level - 1
        )));
    }
    let type_hat = frozen::type_hat(p)?;

    let values = phi.operator_values(None)?;
    let cells = grid.cells();
    let w = grid.width();
    let block = phi.dim_out() * phi.dim_in();

    let gnorm: Vec<f64> = (0..cells)
        .map(|j| pointwise_gamma_norm(&values[j * block..(j + 1) * block], phi.dim_in(), p))
        .collect::<Result<_>>()?;
    let mut acc = CompensatedSum::new();
    for &g in &gnorm {
        acc.add(w * g.powf(p));
    }
    let lp_part = acc.total().max(0.0).powf(1.0 / p);

    let mut block_acc = CompensatedSum::new();
    let mut diff = vec![0.0; block];
    for n in 0..=n_max {
        let shift = cells >> (n + 1);
        let mut int_acc = CompensatedSum::new();
        for j in 0..cells - shift {
            let a = &values[j * block..(j + 1) * block];
            let b = &values[(j + shift) * block..(j + shift + 1) * block];
            for (d, (x, y)) in diff.iter_mut().zip(b.iter().zip(a)) {
                *d = x - y;
            }
            int_acc.add(w * pointwise_gamma_norm(&diff, phi.dim_in(), p)?.powf(p));
        }
        block_acc.add(2f64.powf(n as f64 * (1.0 - p / 2.0)) * int_acc.total().max(0.0));
    }
    let block_sum = block_acc.total().max(0.0).powf(1.0 / p);
    let right = lp_part + type_hat * 2f64.powf(-1.0 + 1.0 / p) * block_sum;

    let left_coarse = gamma_norm_mc(&represent_operator(phi, level - 2)?, mc_samples, seed)?;
    let left_fine = gamma_norm_mc(&represent_operator(phi, level - 1)?, mc_samples, seed)?;
    let truncation_rel_change = (left_fine.mean - left_coarse.mean).abs() / left_fine.mean;
    let truncation_ok = truncation_rel_change < 0.02;

    let (besov_seminorm, blocksum_ratio, blocksum_ok) = if p < 2.0 {
        let s = 1.0 / p - 0.5;
        let params = BesovParams::new(s, p, p, grid.horizon())?;
        let semi = besov_seminorm_dyadic(&phi.kernel_grid_function()?, &params);
        let ratio = block_sum / semi;
        let c = frozen::blocksum_c(p)?;
        (Some(semi), Some(ratio), Some(ratio >= 1.0 / c && ratio <= c))
    } else {
        (None, None, None)
    };

    Ok(EmbeddingReport {
        p,
        grid_level: level,
        n_max,
        mc_samples,
        seed,
        type_hat,
        left_coarse,
        left_fine,
        truncation_rel_change,
        truncation_ok,
        lp_part,
        block_sum,
        right,
        left_leq_right: left_fine.mean <= right,
        besov_seminorm,
        blocksum_ratio,
        blocksum_ok,
    })
}

/// Embedding bound for instance `index` of the Schauder corpus (four output
/// coordinates), with the Monte Carlo seed derived per instance.
pub fn embedding_bound_for_instance(
    seed: u64,
    index: u64,
    grid_level: u32,
    n_max: u32,
    mc_samples: u64,
    p: f64,
) -> Result<EmbeddingReport> {
    let phi = corpus::schauder_series(seed, index, grid_level, 4, p)?;
    embedding_bound(&phi, n_max, mc_samples, corpus::instance_seed(seed, index))
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EmbeddingCampaign {
    pub p: f64,
    pub instances: u64,
    pub grid_level: u32,
    pub n_max: u32,
    pub mc_samples: u64,
    pub seed: u64,
    pub all_left_leq_right: bool,
    pub all_truncation_ok: bool,
    pub all_blocksum_ok: bool,
    pub rows: Vec<EmbeddingReport>,
}

/// Runs the embedding bound over the Schauder corpus and fails if any
/// instance violates the bound, the truncation gate, or the frozen
/// block-sum comparison.
pub fn embedding_campaign(
    p: f64,
    instances: u64,
    grid_level: u32,
    n_max: u32,
    mc_samples: u64,
    seed: u64,
) -> Result<EmbeddingCampaign> {
    if instances == 0 {
        return Err(Error::BadParameter("embedding campaign needs instances >= 1".into()));
    }
    let mut rows = Vec::with_capacity(instances as usize);
    for i in 0..instances {
        let report = embedding_bound_for_instance(seed, i, grid_level, n_max, mc_samples, p)?;
        if !report.left_leq_right {
            return Err(Error::AssertionFailed(format!(
                "embedding bound violated on instance {i}: left {} > right {}",
                report.left_fine.mean, report.right
            )));
        }
        if !report.truncation_ok {
            return Err(Error::AssertionFailed(format!(
                "basis truncation not converged on instance {i}: relative change {}",
                report.truncation_rel_change
            )));
        }
        if report.blocksum_ok == Some(false) {
            return Err(Error::AssertionFailed(format!(
                "block sum outside the frozen comparison interval on instance {i}: \
                 ratio {:?}",
                report.blocksum_ratio
            )));
        }
        rows.push(report);
    }
    Ok(EmbeddingCampaign {
        p,
        instances,
        grid_level,
        n_max,
        mc_samples,
        seed,
        all_left_leq_right: rows.iter().all(|r| r.left_leq_right),
        all_truncation_ok: rows.iter().all(|r| r.truncation_ok),
        all_blocksum_ok: rows.iter().all(|r| r.blocksum_ok != Some(false)),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicGrid;
    use approx::assert_relative_eq;

    fn constant_process(level: u32, x: &[f64]) -> SampledProcess {
        let grid = DyadicGrid::unit(level).unwrap();
        let values: Vec<f64> = (0..grid.cells()).flat_map(|_| x.to_vec()).collect();
        SampledProcess::deterministic(grid, x.len(), 1, 2.0, values).unwrap()
    }

    #[test]
    fn validation() {
        let phi = constant_process(5, &[1.0, 2.0]);
        assert!(embedding_bound(&phi, 5, 100, 1).is_err()); // n_max > level-1
        let grid = DyadicGrid::unit(5).unwrap();
        let bad_p =
            SampledProcess::deterministic(grid, 1, 1, 3.0, vec![1.0; grid.cells()]).unwrap();
        assert!(matches!(
            embedding_bound(&bad_p, 3, 100, 1),
            Err(Error::BadExponent { .. })
        ));
        let adapted = corpus::adapted_process(1, 0, grid, 2, 1, 2.0).unwrap();
        assert!(embedding_bound(&adapted, 3, 100, 1).is_err());
    }

    #[test]
    fn constant_process_collapses_to_lp_part() {
        // All translation differences vanish, so right = lp_part = |x| and
        // the represented operator norm equals |x| up to Monte Carlo error.
        let x = [3.0, 4.0];
        let phi = constant_process(6, &x);
        let report = embedding_bound(&phi, 5, 20_000, 11).unwrap();
        assert_eq!(report.block_sum, 0.0);
        assert_relative_eq!(report.right, 5.0, max_relative = 1e-12);
        assert_relative_eq!(report.lp_part, 5.0, max_relative = 1e-12);
        assert!(
            (report.left_fine.mean - 5.0).abs() <= 3.0 * report.left_fine.std_error,
            "left {} se {}",
            report.left_fine.mean,
            report.left_fine.std_error
        );
        assert!(report.truncation_ok);
        // p = 2: the smoothness comparison degenerates and is skipped.
        assert!(report.besov_seminorm.is_none());
    }

    #[test]
    fn block_integrals_match_direct_oracle() {
        // Recompute the weighted block sum with an independent reverse-order
        // plain accumulation.
        let phi = corpus::schauder_series(3, 1, 6, 3, 1.5).unwrap();
        let report = embedding_bound(&phi, 4, 1000, 5).unwrap();
        let values = phi.operator_values(None).unwrap();
        let grid = phi.grid();
        let (cells, w, dim) = (grid.cells(), grid.width(), phi.dim_out());
        let mut total = 0.0;
        for n in (0..=4u32).rev() {
            let shift = cells >> (n + 1);
            let mut int = 0.0;
            for j in (0..cells - shift).rev() {
                let mut s = 0.0;
                for i in 0..dim {
                    s += (values[(j + shift) * dim + i] - values[j * dim + i]).abs().powf(1.5);
                }
                int += w * s;
            }
            total += 2f64.powf(n as f64 * (1.0 - 0.75)) * int;
        }
        assert_relative_eq!(report.block_sum, total.powf(1.0 / 1.5), max_relative = 1e-12);
    }

    #[test]
    fn right_side_is_homogeneous() {
        let phi = corpus::schauder_series(9, 0, 6, 2, 1.5).unwrap();
        let scaled = phi.scaled(2.5).unwrap();
        let a = embedding_bound(&phi, 5, 500, 3).unwrap();
        let b = embedding_bound(&scaled, 5, 500, 3).unwrap();
        assert_relative_eq!(b.lp_part, 2.5 * a.lp_part, max_relative = 1e-12);
        assert_relative_eq!(b.block_sum, 2.5 * a.block_sum, max_relative = 1e-12);
        assert_relative_eq!(b.right, 2.5 * a.right, max_relative = 1e-12);
        assert_relative_eq!(
            b.left_fine.mean,
            2.5 * a.left_fine.mean,
            max_relative = 1e-12
        );
    }

    #[test]
    fn corpus_instances_satisfy_bound() {
        for &p in &[1.0, 1.5] {
            let campaign = embedding_campaign(p, 3, 7, 6, 4000, 1).unwrap();
            assert!(campaign.all_left_leq_right);
            assert!(campaign.all_truncation_ok);
            assert!(campaign.all_blocksum_ok);
            for row in &campaign.rows {
                assert!(row.besov_seminorm.unwrap() > 0.0);
            }
        }
    }
}
