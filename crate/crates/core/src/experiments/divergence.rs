//! Divergence study: the exact moment roots of the counterexample integrals
//! grow like `(N+1)^{1/p}` while the grid Hoelder norms stay below the
//! uniform constant, so the moment-to-Hoelder ratio diverges. The driver
//! tabulates both columns, checks the growth exponent to near machine
//! precision, and reports the first size where the ratio exceeds one.

use crate::error::{Error, Result};

use super::counterexample::{
    moment_rate_constant, psi_grid_holder_norm, psi_holder_constant, PsiSpec,
};

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DivergenceRow {
    /// Top tent level `N`; the integrand has `N+1` levels.
    pub top_level: u32,
    /// Exact `(E||I(1)||_p^p)^{1/p} = K_p (N+1)^{1/p}`.
    pub moment_root: f64,
    /// Exact Hoelder norm of the grid samples at the table's grid level.
    pub holder_norm: f64,
    /// `moment_root / holder_norm`; strictly increasing in `N`.
    pub ratio: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DivergenceTable {
    pub p: f64,
    /// Hoelder exponent `1/p - 1/2` used for the norm column.
    pub alpha: f64,
    /// Growth constant `K_p = m_p / sqrt(12)`.
    pub rate_constant: f64,
    /// Uniform Hoelder bound; every `holder_norm` entry stays below it.
    pub holder_bound: f64,
    /// Grid level at which the Hoelder column is evaluated.
    pub holder_grid_level: u32,
    /// Mean pairwise log-log slope of `moment_root` against `N+1`; equals
    /// `1/p` to near machine precision by construction.
    pub slope: f64,
    /// Smallest tabulated `N` with `ratio > 1`, if any.
    pub first_exceeding: Option<u32>,
    pub rows: Vec<DivergenceRow>,
}

/// Builds the divergence table over the given sizes and enforces the three
/// built-in checks: exact growth exponent `1/p` (to `1e-12`), strictly
/// increasing ratio, and Hoelder norms below the uniform constant.
pub fn divergence_experiment(
    p: f64,
    top_levels: &[u32],
    holder_grid_level: u32,
) -> Result<DivergenceTable> {
    if top_levels.is_empty() {
        return Err(Error::BadParameter("divergence needs at least one size".into()));
    }
    if top_levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadParameter(
            "divergence sizes must be strictly increasing".into(),
        ));
    }
    let rate_constant = moment_rate_constant(p)?;
    let holder_bound = psi_holder_constant(p)?;
    let mut rows = Vec::with_capacity(top_levels.len());
    for &n in top_levels {
        let spec = PsiSpec::new(n, p)?;
        let moment_root = rate_constant * (n as f64 + 1.0).powf(1.0 / p);
        let holder_norm = psi_grid_holder_norm(&spec, holder_grid_level)?;
        rows.push(DivergenceRow {
            top_level: n,
            moment_root,
            holder_norm,
            ratio: moment_root / holder_norm,
        });
    }

    let mut slopes = Vec::new();
    for w in rows.windows(2) {
        let slope = (w[1].moment_root.ln() - w[0].moment_root.ln())
            / (((w[1].top_level + 1) as f64).ln() - ((w[0].top_level + 1) as f64).ln());
        if (slope - 1.0 / p).abs() > 1e-12 {
            return Err(Error::AssertionFailed(format!(
                "moment growth slope {slope} deviates from 1/p = {} beyond 1e-12 \
                 between N = {} and N = {}",
                1.0 / p,
                w[0].top_level,
                w[1].top_level
            )));
        }
        slopes.push(slope);
    }
    for w in rows.windows(2) {
        if w[1].ratio <= w[0].ratio {
            return Err(Error::AssertionFailed(format!(
                "moment-to-Hoelder ratio not strictly increasing: {} at N = {} vs \
                 {} at N = {}",
                w[0].ratio, w[0].top_level, w[1].ratio, w[1].top_level
            )));
        }
    }
    for row in &rows {
        if row.holder_norm > holder_bound {
            return Err(Error::AssertionFailed(format!(
                "Hoelder norm {} at N = {} exceeds the uniform bound {holder_bound}",
                row.holder_norm, row.top_level
            )));
        }
    }
    let slope = if slopes.is_empty() {
        1.0 / p
    } else {
        slopes.iter().sum::<f64>() / slopes.len() as f64
    };
    Ok(DivergenceTable {
        p,
        alpha: 1.0 / p - 0.5,
        rate_constant,
        holder_bound,
        holder_grid_level,
        slope,
        first_exceeding: rows.iter().find(|r| r.ratio > 1.0).map(|r| r.top_level),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_bad_sizes() {
        assert!(divergence_experiment(1.5, &[], 8).is_err());
        assert!(divergence_experiment(1.5, &[2, 2], 8).is_err());
        assert!(divergence_experiment(1.5, &[4, 2], 8).is_err());
        assert!(divergence_experiment(2.0, &[2, 4], 8).is_err());
    }

    #[test]
    fn table_checks_pass_and_slope_is_exact() {
        let table = divergence_experiment(1.5, &[1, 2, 4, 8], 10).unwrap();
        assert_relative_eq!(table.slope, 1.0 / 1.5, max_relative = 1e-12);
        assert_eq!(table.rows.len(), 4);
        for w in table.rows.windows(2) {
            assert!(w[1].ratio > w[0].ratio);
        }
        for row in &table.rows {
            assert!(row.holder_norm <= table.holder_bound);
            assert_relative_eq!(
                row.moment_root,
                table.rate_constant * (row.top_level as f64 + 1.0).powf(1.0 / 1.5),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn ratio_eventually_exceeds_one() {
        // At p = 1 the moment root is (N+1)/sqrt(12) against a Hoelder norm
        // bounded by ~11.9, so the ratio crosses 1 within the tabulated sizes.
        let table = divergence_experiment(1.0, &[1, 3, 7, 15, 31, 47], 10).unwrap();
        assert!(table.first_exceeding.is_some());
        let n_star = table.first_exceeding.unwrap();
        for row in &table.rows {
            if row.top_level < n_star {
                assert!(row.ratio <= 1.0);
            } else {
                assert!(row.ratio > 1.0);
            }
        }
    }

    #[test]
    fn holder_column_saturates_above_grid_resolution() {
        // Sizes beyond the grid resolution share the same Hoelder norm, so
        // the ratio keeps increasing purely through the moment column.
        let table = divergence_experiment(1.2, &[8, 16, 32], 8).unwrap();
        assert_eq!(table.rows[1].holder_norm, table.rows[2].holder_norm);
        assert!(table.rows[2].ratio > table.rows[1].ratio);
    }
}
