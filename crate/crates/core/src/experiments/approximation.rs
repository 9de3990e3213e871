//! Approximation study: replacing an adapted integrand by its one-block
//! delayed conditional averages (average over the previous dyadic block of
//! level `n`) produces elementary integrands whose integrals converge to the
//! original as the blocks shrink. The driver tabulates, per level `n`, the
//! mean squared `L^2` residual of the integrand and the second moment of the
//! running-integral error, both over a common set of Brownian paths.

use crate::dyadic::{delayed_average, DyadicGrid, GridFunction, Interp};
use crate::error::{Error, Result};
use crate::stochint::{integrate_values, sample_brownian, SampledProcess};
use crate::sums::{chunked_multi, MeanStats};

use super::corpus;

#[derive(Debug, Clone, serde::Serialize)]
pub struct ApproxRow {
    /// Averaging level: blocks of width `2^{-n}`.
    pub n: u32,
    /// Mean over paths of `int_0^1 ||(G_n phi - phi)(t)||^2 dt`.
    pub l2_sq: MeanStats,
    /// Square root of the above (delta-method standard error).
    pub l2_residual: MeanStats,
    /// Mean over paths of `sup_t ||int_0^t (G_n phi - phi) dW||^2`.
    pub sup_moment: MeanStats,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ApproxTable {
    pub grid_level: u32,
    pub n_max: u32,
    pub paths: u64,
    pub seed: u64,
    pub dim_out: usize,
    pub dim_in: usize,
    pub rows: Vec<ApproxRow>,
}

/// Tabulates the approximation residuals for `n = 0..=n_max` along `paths`
/// Brownian paths. The residual process `G_n phi - phi` is adapted (the
/// delayed average of block `k` uses only block `k-1`), so its integral is a
/// plain left-point sum along each path.
pub fn approximation_experiment(
    phi: &SampledProcess,
    n_max: u32,
    paths: u64,
    seed: u64,
) -> Result<ApproxTable> {
    if !phi.is_adapted() {
        return Err(Error::NotAdapted);
    }
    let grid = phi.grid();
    if n_max > grid.level() {
        return Err(Error::BadParameter(format!(
            "averaging level {n_max} exceeds grid level {}",
            grid.level()
        )));
    }
    if paths < 2 {
        return Err(Error::BadParameter("need at least 2 paths".into()));
    }
    let block = phi.dim_out() * phi.dim_in();
    let levels = n_max as usize + 1;
    let stats = chunked_multi(paths, 2 * levels, |i, out| {
        let path = sample_brownian(phi.dim_in(), grid, seed, i).expect("validated dims");
        let values = phi.operator_values(Some(&path)).expect("validated process");
        let f = GridFunction::new(grid, block, phi.value_p(), Interp::Step, values)
            .expect("finite values");
        for n in 0..=n_max {
            let g = delayed_average(&f, n).expect("level validated");
            let r = g.linear_comb(1.0, &f, -1.0).expect("common grid");
            let l2 = r.time_l2_norm();
            out[2 * n as usize] = l2 * l2;
            let integral =
                integrate_values(r.data(), phi.dim_out(), phi.dim_in(), phi.value_p(), &path);
            let sup = integral.sup_norm();
            out[2 * n as usize + 1] = sup * sup;
        }
    });
    let rows = (0..=n_max)
        .map(|n| ApproxRow {
            n,
            l2_sq: stats[2 * n as usize].clone(),
            l2_residual: stats[2 * n as usize].sqrt_stats(),
            sup_moment: stats[2 * n as usize + 1].clone(),
        })
        .collect();
    Ok(ApproxTable {
        grid_level: grid.level(),
        n_max,
        paths,
        seed,
        dim_out: phi.dim_out(),
        dim_in: phi.dim_in(),
        rows,
    })
}

/// Runs the study on the fixed Lipschitz integrand and enforces the decay
/// checks: by the last level both residual columns must fall below 5 percent
/// of their level-0 values, and no step may grow by more than 10 percent.
pub fn approximation_builtin(
    grid_level: u32,
    n_max: u32,
    paths: u64,
    seed: u64,
) -> Result<ApproxTable> {
    if n_max < 6 {
        return Err(Error::BadParameter(
            "the built-in decay checks need n_max >= 6".into(),
        ));
    }
    let grid = DyadicGrid::unit(grid_level)?;
    let phi = corpus::builtin_lipschitz(grid, 3)?;
    let table = approximation_experiment(&phi, n_max, paths, seed)?;
    let first = &table.rows[0];
    let last = table.rows.last().expect("nonempty rows");
    for (name, first_v, last_v) in [
        ("L2 residual", first.l2_sq.mean, last.l2_sq.mean),
        ("sup moment", first.sup_moment.mean, last.sup_moment.mean),
    ] {
        if !(last_v < 0.05 * first_v) {
            return Err(Error::AssertionFailed(format!(
                "{name} did not decay below 5 percent: {last_v} vs {first_v} at level 0"
            )));
        }
    }
    for w in table.rows.windows(2) {
        if w[1].l2_sq.mean > 1.10 * w[0].l2_sq.mean
            || w[1].sup_moment.mean > 1.10 * w[0].sup_moment.mean
        {
            return Err(Error::AssertionFailed(format!(
                "residuals increased by more than 10 percent from level {} to {}",
                w[0].n, w[1].n
            )));
        }
    }
    Ok(table)
}
