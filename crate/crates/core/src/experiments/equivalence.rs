//! Square-function equivalence study: for adapted integrands with values in
//! `l^p`, `1 < p < infinity`, the second moment of the integral's terminal
//! norm is comparable to the second moment of the square-function norm, with
//! constants depending only on `p`. At `p = 2` the two agree exactly (the
//! isometry), and the excluded endpoint `p = 1` is rejected up front: the
//! comparison needs an unconditionality property of the target that `l^1`
//! lacks.

use crate::error::{Error, Result};
use crate::spaces::check_exponent;
use crate::stochint::{integrate_sampled, sample_brownian, square_function_norm, SampledProcess};
use crate::sums::{chunked_multi, MeanStats};

use super::corpus;
use super::frozen;

#[derive(Debug, Clone, serde::Serialize)]
pub struct EquivalenceRow {
    pub index: u64,
    /// `sqrt(E ||I(1)||_p^2)` over the instance's paths.
    pub terminal_sq: MeanStats,
    /// `sqrt(E S(phi)^2)` over the same paths.
    pub square_fn_sq: MeanStats,
    /// Ratio of the square roots of the two means.
    pub ratio: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EquivalenceReport {
    pub p: f64,
    pub dim_out: usize,
    pub dim_in: usize,
    pub grid_level: u32,
    pub instances: u64,
    pub paths: u64,
    pub seed: u64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// `max_ratio / min_ratio`, the observed two-sided spread.
    pub spread: f64,
    /// Frozen interval every ratio must lie in.
    pub frozen_interval: (f64, f64),
    pub all_within: bool,
    pub rows: Vec<EquivalenceRow>,
}

/// Runs the equivalence campaign over the bounded adapted corpus: per
/// instance, the terminal and square-function second moments along a common
/// set of Brownian paths, and their ratio. Fails when any ratio leaves the
/// frozen interval for the exponent.
pub fn equivalence_experiment(
    p: f64,
    dim_out: usize,
    dim_in: usize,
    instances: u64,
    paths: u64,
    seed: u64,
    grid_level: u32,
) -> Result<EquivalenceReport> {
    check_exponent(p)?;
    if p == 1.0 {
        return Err(Error::BadExponent {
            p,
            context: "the square-function equivalence needs 1 < p < infinity: \
                      martingale differences in l^1 are not unconditional, and \
                      the counterexample family shows the comparison fails there"
                .into(),
        });
    }
    if instances == 0 {
        return Err(Error::BadParameter("equivalence needs instances >= 1".into()));
    }
    let grid = crate::dyadic::DyadicGrid::unit(grid_level)?;
    let mut rows = Vec::with_capacity(instances as usize);
    for i in 0..instances {
        let phi = corpus::adapted_process(seed, i, grid, dim_out, dim_in, p)?;
        let path_seed = corpus::instance_seed(seed, i);
        let stats = chunked_multi(paths, 2, |k, out| {
            let path = sample_brownian(dim_in, grid, path_seed, k).expect("validated dims");
            let integral = integrate_sampled(&phi, &path).expect("adapted corpus");
            out[0] = integral.terminal_norm().powi(2);
            out[1] = square_function_norm(&phi, p, Some(&path))
                .expect("adapted corpus")
                .powi(2);
        });
        if !(stats[1].mean > 0.0) {
            return Err(Error::AssertionFailed(format!(
                "square function degenerate on instance {i}"
            )));
        }
        rows.push(EquivalenceRow {
            index: i,
            ratio: (stats[0].mean / stats[1].mean).sqrt(),
            terminal_sq: stats[0].clone(),
            square_fn_sq: stats[1].clone(),
        });
    }
    let mut sorted: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    sorted.sort_by(f64::total_cmp);
    let min_ratio = sorted[0];
    let max_ratio = *sorted.last().expect("nonempty");
    let median_ratio = sorted[sorted.len() / 2];
    let frozen_interval = frozen::equivalence_interval(p)?;
    for row in &rows {
        if row.ratio < frozen_interval.0 || row.ratio > frozen_interval.1 {
            return Err(Error::AssertionFailed(format!(
                "equivalence ratio {} on instance {} outside the frozen interval \
                 [{}, {}]",
                row.ratio, row.index, frozen_interval.0, frozen_interval.1
            )));
        }
    }
    Ok(EquivalenceReport {
        p,
        dim_out,
        dim_in,
        grid_level,
        instances,
        paths,
        seed,
        min_ratio,
        max_ratio,
        median_ratio,
        spread: max_ratio / min_ratio,
        frozen_interval,
        all_within: true,
        rows,
    })
}

/// Isometry check for a deterministic integrand at `p = 2`: returns the
/// terminal-to-square-function ratio and its standard error (delta method);
/// the ratio must be 1 within Monte Carlo resolution.
pub fn deterministic_isometry_ratio(
    phi: &SampledProcess,
    paths: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if phi.value_p() != 2.0 {
        return Err(Error::BadExponent {
            p: phi.value_p(),
            context: "the exact isometry holds in the p = 2 target".into(),
        });
    }
    if !phi.is_deterministic() {
        return Err(Error::Unsupported(
            "the isometry ratio check expects a deterministic integrand".into(),
        ));
    }
    let sf = square_function_norm(phi, 2.0, None)?;
    if !(sf > 0.0) {
        return Err(Error::BadParameter("degenerate integrand".into()));
    }
    let stats = chunked_multi(paths, 1, |k, out| {
        let path = sample_brownian(phi.dim_in(), phi.grid(), seed, k).expect("validated dims");
        out[0] = integrate_sampled(phi, &path)
            .expect("deterministic integrand")
            .terminal_norm()
            .powi(2);
    });
    let ratio = stats[0].mean.sqrt() / sf;
    let se = stats[0].std_error / (2.0 * stats[0].mean.sqrt() * sf);
    Ok((ratio, se))
}
