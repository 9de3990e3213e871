//! Seeded corpora of test processes shared by the experiment campaigns.
//! Every generator draws from the dedicated corpus randomness domain keyed
//! by `(seed, kind, index)`, so instance `i` of a campaign is reproducible
//! across runs, worker counts, and unrelated corpus changes. Bump
//! [`CORPUS_VERSION`] whenever generated instances change.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dyadic::{schauder, DyadicGrid};
use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::stochint::SampledProcess;

/// Version stamp of the corpus generators, embedded in reports.
pub const CORPUS_VERSION: u32 = 1;

const KIND_STEP: u64 = 1;
const KIND_SCALE: u64 = 2;
const KIND_ADAPTED: u64 = 3;
const KIND_SCHAUDER: u64 = 4;

fn corpus_rng(seed: u64, kind: u64, index: u64) -> ChaCha8Rng {
    rng::stream(seed, domain::CORPUS, (kind << 48) | (index & 0xFFFF_FFFF_FFFF))
}

/// Deterministic mixer for deriving per-instance seeds (e.g. for the Brownian
/// paths driven by instance `index`) from a campaign seed.
pub fn instance_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic step process with independent standard normal entries per
/// cell: the generic dense instance for domination and isometry campaigns.
pub fn step_process(
    seed: u64,
    index: u64,
    grid: DyadicGrid,
    dim_out: usize,
    d: usize,
    p: f64,
) -> Result<SampledProcess> {
    let mut rng = corpus_rng(seed, KIND_STEP, index);
    let mut values = vec![0.0; grid.cells() * dim_out * d];
    rng::fill_standard_normal(&mut rng, &mut values);
    SampledProcess::deterministic(grid, dim_out, d, p, values)
}

/// Per-cell scale field with entries uniform in `[-bound, bound]`; used to
/// build dominated processes `Phi = c(t) Psi`.
pub fn scale_field(seed: u64, index: u64, grid: DyadicGrid, bound: f64) -> Result<Vec<f64>> {
    if !(bound > 0.0) || !bound.is_finite() {
        return Err(Error::BadParameter(format!("scale bound {bound}")));
    }
    let mut rng = corpus_rng(seed, KIND_SCALE, index);
    Ok((0..grid.cells())
        .map(|_| rng.random_range(-bound..=bound))
        .collect())
}

/// Bounded adapted process: two fixed random matrices mixed by sinusoidal
/// drivers of the time and the running sum of the Brownian coordinates. The
/// operator values stay in a fixed ball, uniformly over paths.
pub fn adapted_process(
    seed: u64,
    index: u64,
    grid: DyadicGrid,
    dim_out: usize,
    d: usize,
    p: f64,
) -> Result<SampledProcess> {
    if dim_out == 0 || d == 0 {
        return Err(Error::BadParameter("process dimensions must be positive".into()));
    }
    let mut rng = corpus_rng(seed, KIND_ADAPTED, index);
    let block = dim_out * d;
    let mut m1 = vec![0.0; block];
    let mut m2 = vec![0.0; block];
    rng::fill_standard_normal(&mut rng, &mut m1);
    rng::fill_standard_normal(&mut rng, &mut m2);
    let w1: f64 = rng.random_range(0.5..3.0);
    let w2: f64 = rng.random_range(0.5..3.0);
    let th1: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let th2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let k1: f64 = rng.random_range(0.2..0.8);
    let k2: f64 = rng.random_range(0.2..0.8);
    let gen = Arc::new(move |_j: usize, t: f64, w_left: &[f64], out: &mut [f64]| {
        let s: f64 = w_left.iter().sum();
        let a = (w1 * t + th1 + k1 * s).sin();
        let b = (w2 * t + th2 + k2 * s).cos();
        for (o, (x, y)) in out.iter_mut().zip(m1.iter().zip(&m2)) {
            *o = a * x + b * y;
        }
    });
    SampledProcess::adapted(grid, dim_out, d, p, gen)
}

/// Deterministic scalar-input process whose coordinates are random finite
/// Schauder series (a ramp plus geometrically damped tents through level 5),
/// hence Lipschitz kernels with dyadic structure: the embedding corpus.
pub fn schauder_series(
    seed: u64,
    index: u64,
    grid_level: u32,
    dim_out: usize,
    p: f64,
) -> Result<SampledProcess> {
    if dim_out == 0 {
        return Err(Error::BadParameter("process dimensions must be positive".into()));
    }
    let grid = DyadicGrid::unit(grid_level)?;
    let top = 5u32.min(grid_level.saturating_sub(1));
    let mut rng = corpus_rng(seed, KIND_SCHAUDER, index);
    let mut ramps = vec![0.0; dim_out];
    rng::fill_standard_normal(&mut rng, &mut ramps);
    for r in &mut ramps {
        *r *= 0.5;
    }
    // coeffs[i][n][k-1], one coefficient per tent and coordinate.
    let decay = 0.55f64;
    let coeffs: Vec<Vec<Vec<f64>>> = (0..dim_out)
        .map(|_| {
            (0..=top)
                .map(|n| {
                    let mut level = vec![0.0; 1 << n];
                    rng::fill_standard_normal(&mut rng, &mut level);
                    let s = decay.powi(n as i32);
                    for c in &mut level {
                        *c *= s;
                    }
                    level
                })
                .collect()
        })
        .collect();
    let cells = grid.cells();
    let mut values = vec![0.0; cells * dim_out];
    for j in 0..cells {
        let t = grid.t_left(j);
        for (i, row) in coeffs.iter().enumerate() {
            let mut v = ramps[i] * t;
            for (n, level) in row.iter().enumerate() {
                let k_idx = j >> (grid_level - n as u32);
                v += level[k_idx] * schauder(n as u32, k_idx as u64 + 1, t)?;
            }
            values[j * dim_out + i] = v;
        }
    }
    SampledProcess::deterministic(grid, dim_out, 1, p, values)
}

/// Fixed bounded adapted process used by the approximation study: coordinate
/// `i` is `(0.8 + 0.2 sin(t + 0.4 W(t))) / (i + 1)` against a scalar
/// Brownian input, Lipschitz in both arguments.
pub fn builtin_lipschitz(grid: DyadicGrid, dim_out: usize) -> Result<SampledProcess> {
    if dim_out == 0 {
        return Err(Error::BadParameter("process dimensions must be positive".into()));
    }
    let gen = Arc::new(move |_j: usize, t: f64, w_left: &[f64], out: &mut [f64]| {
        let drive = 0.8 + 0.2 * (t + 0.4 * w_left[0]).sin();
        for (i, o) in out.iter_mut().enumerate() {
            *o = drive / (i as f64 + 1.0);
        }
    });
    SampledProcess::adapted(grid, dim_out, 1, 2.0, gen)
}
