//! Brownian path generation and stochastic integration on dyadic grids.
//!
//! Integrals are left-point Ito sums: the integrand value at a cell's left
//! endpoint multiplies that cell's Brownian increment. Elementary processes
//! (piecewise constant on a cell-aligned partition) integrate through the
//! same code path as sampled processes, so the two agree bit for bit.

use std::sync::Arc;

use crate::dyadic::{DyadicGrid, GridFunction, Interp};
use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::spaces::{check_exponent, check_finite, lp_norm_slice};
use crate::sums::{chunked_mean, chunked_multi, CompensatedSum, MeanStats};

/// A d-dimensional Brownian path stored through its per-cell increments.
/// Increment `j` holds the `d` components of `W(t_{j+1}) - W(t_j)`.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    grid: DyadicGrid,
    d: usize,
    increments: Vec<f64>,
}

impl BrownianPath {
    pub fn from_increments(grid: DyadicGrid, d: usize, increments: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::BadParameter("Brownian dimension d = 0".into()));
        }
        if increments.len() != grid.cells() * d {
            return Err(Error::LengthMismatch {
                left: increments.len(),
                right: grid.cells() * d,
                context: "Brownian increments".into(),
            });
        }
        check_finite(&increments, "Brownian increments")?;
        Ok(Self { grid, d, increments })
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Components of `W(t_{j+1}) - W(t_j)`.
    pub fn increment(&self, j: usize) -> &[f64] {
        &self.increments[j * self.d..(j + 1) * self.d]
    }

    /// `W(t_j)`, the sum of all increments before grid point `j`.
    pub fn point(&self, j: usize) -> Vec<f64> {
        let mut acc = vec![CompensatedSum::new(); self.d];
        for cell in 0..j {
            for (a, &x) in acc.iter_mut().zip(self.increment(cell)) {
                a.add(x);
            }
        }
        acc.iter().map(|a| a.total()).collect()
    }

    /// `W_H(t_j) h` for a direction `h`, exact in the sense of the defining
    /// sum of inner products.
    pub fn pairing(&self, j: usize, h: &[f64]) -> Result<f64> {
        if h.len() != self.d {
            return Err(Error::LengthMismatch {
                left: h.len(),
                right: self.d,
                context: "Brownian pairing direction".into(),
            });
        }
        let mut acc = CompensatedSum::new();
        for cell in 0..j {
            for (&dw, &hi) in self.increment(cell).iter().zip(h) {
                acc.add(dw * hi);
            }
        }
        Ok(acc.total())
    }

    /// The path of a single component as a 1-dimensional Brownian path.
    pub fn component(&self, i: usize) -> Result<BrownianPath> {
        if i >= self.d {
            return Err(Error::IndexOutOfRange(format!(
                "component {i} of a {}-dimensional path",
                self.d
            )));
        }
        let increments = (0..self.grid.cells())
            .map(|j| self.increments[j * self.d + i])
            .collect();
        BrownianPath::from_increments(self.grid, 1, increments)
    }
}

/// Draws the path with index `path_index` of the stream keyed by `seed`.
/// Increments are independent N(0, width) per component, generated cell by
/// cell; a fixed (seed, path_index) always yields the identical path.
pub fn sample_brownian(d: usize, grid: DyadicGrid, seed: u64, path_index: u64) -> Result<BrownianPath> {
    if d == 0 {
        return Err(Error::BadParameter("Brownian dimension d = 0".into()));
    }
    let mut rng = rng::stream(seed, domain::BROWNIAN, path_index);
    let mut increments = vec![0.0; grid.cells() * d];
    rng::fill_standard_normal(&mut rng, &mut increments);
    let scale = grid.width().sqrt();
    for x in &mut increments {
        *x *= scale;
    }
    Ok(BrownianPath { grid, d, increments })
}

/// Generator of adapted operator values: receives the cell index, the cell's
/// left endpoint, and the Brownian path value at that endpoint, and writes
/// the operator entries (row-major, `dim_out x dim_in`). Values depend only
/// on information available strictly before the cell.
pub type AdaptedGen = Arc<dyn Fn(usize, f64, &[f64], &mut [f64]) + Send + Sync>;

/// Generator that also peeks at the current cell's own increment; exists to
/// exercise the adaptedness check, which rejects it.
pub type LookAheadGen = Arc<dyn Fn(usize, f64, &[f64], &[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Deterministic(Vec<f64>),
    Adapted(AdaptedGen),
    LookAhead(LookAheadGen),
}

/// Operator-valued process sampled on a dyadic grid: one `dim_out x dim_in`
/// matrix per cell, constant on the cell. The deterministic variant stores
/// the values; random variants store an adapted generator evaluated per path.
#[derive(Clone)]
pub struct SampledProcess {
    grid: DyadicGrid,
    dim_out: usize,
    dim_in: usize,
    value_p: f64,
    kind: Kind,
}

impl SampledProcess {
    pub fn deterministic(
        grid: DyadicGrid,
        dim_out: usize,
        dim_in: usize,
        value_p: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_exponent(value_p)?;
        if dim_out == 0 || dim_in == 0 {
            return Err(Error::BadParameter("process dimensions must be positive".into()));
        }
        if values.len() != grid.cells() * dim_out * dim_in {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: grid.cells() * dim_out * dim_in,
                context: "process values".into(),
            });
        }
        check_finite(&values, "process values")?;
        Ok(Self {
            grid,
            dim_out,
            dim_in,
            value_p,
            kind: Kind::Deterministic(values),
        })
    }

    /// Deterministic process from a pointwise matrix-valued function of the
    /// cell's left endpoint.
    pub fn deterministic_from_fn<F>(
        grid: DyadicGrid,
        dim_out: usize,
        dim_in: usize,
        value_p: f64,
        mut f: F,
    ) -> Result<Self>
    where
        F: FnMut(f64, &mut [f64]),
    {
        let mut values = vec![0.0; grid.cells() * dim_out * dim_in];
        let block = dim_out * dim_in;
        for j in 0..grid.cells() {
            f(grid.t_left(j), &mut values[j * block..(j + 1) * block]);
        }
        Self::deterministic(grid, dim_out, dim_in, value_p, values)
    }

    /// Deterministic process whose kernel (the rows of the operator values)
    /// is a grid function with `dim = dim_out * dim_in` stacked row-major.
    pub fn from_grid_function(f: &GridFunction, dim_in: usize) -> Result<Self> {
        if dim_in == 0 || f.dim() % dim_in != 0 {
            return Err(Error::BadParameter(format!(
                "grid function dimension {} not a multiple of dim_in {dim_in}",
                f.dim()
            )));
        }
        let cells = f.grid().cells();
        let mut values = Vec::with_capacity(cells * f.dim());
        for j in 0..cells {
            values.extend_from_slice(f.value(j));
        }
        Self::deterministic(f.grid(), f.dim() / dim_in, dim_in, f.value_p(), values)
    }

    pub fn adapted(
        grid: DyadicGrid,
        dim_out: usize,
        dim_in: usize,
        value_p: f64,
        gen: AdaptedGen,
    ) -> Result<Self> {
        check_exponent(value_p)?;
        if dim_out == 0 || dim_in == 0 {
            return Err(Error::BadParameter("process dimensions must be positive".into()));
        }
        Ok(Self {
            grid,
            dim_out,
            dim_in,
            value_p,
            kind: Kind::Adapted(gen),
        })
    }

    pub fn look_ahead(
        grid: DyadicGrid,
        dim_out: usize,
        dim_in: usize,
        value_p: f64,
        gen: LookAheadGen,
    ) -> Result<Self> {
        check_exponent(value_p)?;
        Ok(Self {
            grid,
            dim_out,
            dim_in,
            value_p,
            kind: Kind::LookAhead(gen),
        })
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn value_p(&self) -> f64 {
        self.value_p
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.kind, Kind::Deterministic(_))
    }

    /// True when values on each cell use only information from strictly
    /// earlier cells; the integration entry points require it.
    pub fn is_adapted(&self) -> bool {
        !matches!(self.kind, Kind::LookAhead(_))
    }

    /// Process with every operator value multiplied by `c`; random variants
    /// wrap the generator so the scaling commutes with path evaluation.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::NonFinite {
                context: "process scale factor".into(),
            });
        }
        let kind = match &self.kind {
            Kind::Deterministic(values) => {
                Kind::Deterministic(values.iter().map(|x| c * x).collect())
            }
            Kind::Adapted(gen) => {
                let inner = Arc::clone(gen);
                Kind::Adapted(Arc::new(move |j, t, w, out: &mut [f64]| {
                    inner(j, t, w, out);
                    for x in out.iter_mut() {
                        *x *= c;
                    }
                }))
            }
            Kind::LookAhead(gen) => {
                let inner = Arc::clone(gen);
                Kind::LookAhead(Arc::new(move |j, t, w, dw, out: &mut [f64]| {
                    inner(j, t, w, dw, out);
                    for x in out.iter_mut() {
                        *x *= c;
                    }
                }))
            }
        };
        Ok(Self {
            grid: self.grid,
            dim_out: self.dim_out,
            dim_in: self.dim_in,
            value_p: self.value_p,
            kind,
        })
    }

    /// Materializes the per-cell operator values along a path (row-major
    /// `dim_out x dim_in` per cell). Deterministic processes ignore the path.
    pub fn operator_values(&self, path: Option<&BrownianPath>) -> Result<Vec<f64>> {
        let block = self.dim_out * self.dim_in;
        match &self.kind {
            Kind::Deterministic(values) => Ok(values.clone()),
            Kind::Adapted(gen) => {
                let path = path.ok_or_else(|| {
                    Error::BadParameter("random process needs a Brownian path".into())
                })?;
                self.check_path(path)?;
                let mut values = vec![0.0; self.grid.cells() * block];
                let mut w_left = vec![0.0; self.dim_in];
                for j in 0..self.grid.cells() {
                    gen(j, self.grid.t_left(j), &w_left, &mut values[j * block..(j + 1) * block]);
                    for (w, &dw) in w_left.iter_mut().zip(path.increment(j)) {
                        *w += dw;
                    }
                }
                Ok(values)
            }
            Kind::LookAhead(gen) => {
                let path = path.ok_or_else(|| {
                    Error::BadParameter("random process needs a Brownian path".into())
                })?;
                self.check_path(path)?;
                let mut values = vec![0.0; self.grid.cells() * block];
                let mut w_left = vec![0.0; self.dim_in];
                for j in 0..self.grid.cells() {
                    gen(
                        j,
                        self.grid.t_left(j),
                        &w_left,
                        path.increment(j),
                        &mut values[j * block..(j + 1) * block],
                    );
                    for (w, &dw) in w_left.iter_mut().zip(path.increment(j)) {
                        *w += dw;
                    }
                }
                Ok(values)
            }
        }
    }

    /// Deterministic kernel as a grid function (dim = dim_out * dim_in).
    pub fn kernel_grid_function(&self) -> Result<GridFunction> {
        match &self.kind {
            Kind::Deterministic(values) => GridFunction::new(
                self.grid,
                self.dim_out * self.dim_in,
                self.value_p,
                Interp::Step,
                values.clone(),
            ),
            _ => Err(Error::Unsupported(
                "kernel_grid_function requires a deterministic process".into(),
            )),
        }
    }

    fn check_path(&self, path: &BrownianPath) -> Result<()> {
        if path.grid() != self.grid {
            return Err(Error::GridMismatch(format!(
                "process at level {} vs path at level {}",
                self.grid.level(),
                path.grid().level()
            )));
        }
        if path.dim() != self.dim_in {
            return Err(Error::LengthMismatch {
                left: path.dim(),
                right: self.dim_in,
                context: "Brownian dimension vs process input dimension".into(),
            });
        }
        Ok(())
    }
}

/// Piecewise-constant operator process on a cell-aligned partition; zero
/// outside the listed segments. Each segment is (first cell, one past last
/// cell, row-major matrix).
#[derive(Debug, Clone)]
pub struct ElementaryProcess {
    grid: DyadicGrid,
    dim_out: usize,
    dim_in: usize,
    value_p: f64,
    segments: Vec<(usize, usize, Vec<f64>)>,
}

impl ElementaryProcess {
    pub fn new(
        grid: DyadicGrid,
        dim_out: usize,
        dim_in: usize,
        value_p: f64,
        segments: Vec<(usize, usize, Vec<f64>)>,
    ) -> Result<Self> {
        check_exponent(value_p)?;
        if dim_out == 0 || dim_in == 0 {
            return Err(Error::BadParameter("process dimensions must be positive".into()));
        }
        let mut prev_end = 0usize;
        for (start, end, matrix) in &segments {
            if start < &prev_end || start >= end || *end > grid.cells() {
                return Err(Error::BadParameter(format!(
                    "segment cells [{start}, {end}) overlap or leave the grid"
                )));
            }
            if matrix.len() != dim_out * dim_in {
                return Err(Error::LengthMismatch {
                    left: matrix.len(),
                    right: dim_out * dim_in,
                    context: "segment matrix".into(),
                });
            }
            check_finite(matrix, "segment matrix")?;
            prev_end = *end;
        }
        Ok(Self {
            grid,
            dim_out,
            dim_in,
            value_p,
            segments,
        })
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    /// The equivalent sampled process: each cell of a segment carries the
    /// segment's matrix, all other cells zero.
    pub fn to_sampled(&self) -> SampledProcess {
        let block = self.dim_out * self.dim_in;
        let mut values = vec![0.0; self.grid.cells() * block];
        for (start, end, matrix) in &self.segments {
            for j in *start..*end {
                values[j * block..(j + 1) * block].copy_from_slice(matrix);
            }
        }
        SampledProcess::deterministic(self.grid, self.dim_out, self.dim_in, self.value_p, values)
            .expect("validated at construction")
    }
}

/// Running stochastic integral: values at all grid points 0..=cells.
#[derive(Debug, Clone)]
pub struct IntegralPath {
    grid: DyadicGrid,
    dim: usize,
    value_p: f64,
    points: Vec<f64>,
}

impl IntegralPath {
    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value_p(&self) -> f64 {
        self.value_p
    }

    /// Value at grid point `j` for `j in 0..=cells`.
    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    pub fn terminal(&self) -> &[f64] {
        self.point(self.grid.cells())
    }

    pub fn terminal_norm(&self) -> f64 {
        lp_norm_slice(self.terminal(), self.value_p)
    }

    /// Max of the target norm over all grid points.
    pub fn sup_norm(&self) -> f64 {
        (0..=self.grid.cells())
            .map(|j| lp_norm_slice(self.point(j), self.value_p))
            .fold(0.0, f64::max)
    }
}

/// Left-point Ito sums of materialized per-cell operator values.
pub(crate) fn integrate_values(
    values: &[f64],
    dim_out: usize,
    dim_in: usize,
    value_p: f64,
    path: &BrownianPath,
) -> IntegralPath {
    let cells = path.grid().cells();
    debug_assert_eq!(values.len(), cells * dim_out * dim_in);
    let mut points = Vec::with_capacity((cells + 1) * dim_out);
    points.extend(std::iter::repeat(0.0).take(dim_out));
    let mut acc = vec![CompensatedSum::new(); dim_out];
    let block = dim_out * dim_in;
    for j in 0..cells {
        let matrix = &values[j * block..(j + 1) * block];
        let dw = path.increment(j);
        for (i, a) in acc.iter_mut().enumerate() {
            let row = &matrix[i * dim_in..(i + 1) * dim_in];
            let mut step = 0.0;
            for (&m, &x) in row.iter().zip(dw) {
                step += m * x;
            }
            a.add(step);
            points.push(a.total());
        }
    }
    IntegralPath {
        grid: path.grid(),
        dim: dim_out,
        value_p,
        points,
    }
}

/// Terminal value `I(T)` alone, without materializing the running path.
/// Exact zero steps are skipped; that leaves the compensated accumulators
/// bit-identical to the full integration, so the two entry points agree to
/// the last bit while sparse integrands integrate much faster.
pub(crate) fn integrate_terminal(
    values: &[f64],
    dim_out: usize,
    dim_in: usize,
    path: &BrownianPath,
) -> Vec<f64> {
    let cells = path.grid().cells();
    debug_assert_eq!(values.len(), cells * dim_out * dim_in);
    let mut acc = vec![CompensatedSum::new(); dim_out];
    let block = dim_out * dim_in;
    for j in 0..cells {
        let matrix = &values[j * block..(j + 1) * block];
        let dw = path.increment(j);
        for (i, a) in acc.iter_mut().enumerate() {
            let row = &matrix[i * dim_in..(i + 1) * dim_in];
            let mut step = 0.0;
            for (&m, &x) in row.iter().zip(dw) {
                step += m * x;
            }
            if step != 0.0 {
                a.add(step);
            }
        }
    }
    acc.iter().map(|a| a.total()).collect()
}

/// Integral of a sampled adapted process along one Brownian path.
pub fn integrate_sampled(phi: &SampledProcess, path: &BrownianPath) -> Result<IntegralPath> {
    if !phi.is_adapted() {
        return Err(Error::NotAdapted);
    }
    phi.check_path(path)?;
    // Deterministic values are path-independent; integrate them in place
    // instead of materializing a copy per path.
    if let Kind::Deterministic(values) = &phi.kind {
        return Ok(integrate_values(values, phi.dim_out, phi.dim_in, phi.value_p, path));
    }
    let values = phi.operator_values(Some(path))?;
    Ok(integrate_values(&values, phi.dim_out, phi.dim_in, phi.value_p, path))
}

/// Integral of an elementary process: the defining partition sum, evaluated
/// through the sampled-process path so the two agree bit for bit.
pub fn integrate_elementary(phi: &ElementaryProcess, path: &BrownianPath) -> Result<IntegralPath> {
    integrate_sampled(&phi.to_sampled(), path)
}

/// Monte Carlo moment estimates of the running integral.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MomentEstimate {
    /// Mean of `sup_t ||I(t)||^q` over paths.
    pub sup: MeanStats,
    /// Mean of `||I(T)||^q` over paths.
    pub terminal: MeanStats,
    pub q: f64,
    pub paths: u64,
    pub grid_level: u32,
    pub seed: u64,
}

fn check_moment_args(phi: &SampledProcess, q: f64, paths: u64) -> Result<()> {
    if !phi.is_adapted() {
        return Err(Error::NotAdapted);
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::BadParameter(format!("moment exponent q = {q}")));
    }
    if paths < 2 {
        return Err(Error::BadParameter("need at least 2 paths".into()));
    }
    Ok(())
}

/// Estimates `E sup_t ||int_0^t phi dW||^q` and the terminal-only moment in
/// one pass over `paths` Brownian paths from the (seed, path_index) streams.
pub fn moment_estimate(phi: &SampledProcess, q: f64, paths: u64, seed: u64) -> Result<MomentEstimate> {
    check_moment_args(phi, q, paths)?;
    let stats = chunked_multi(paths, 2, |i, out| {
        let path = sample_brownian(phi.dim_in, phi.grid, seed, i).expect("validated dims");
        let integral = integrate_sampled(phi, &path).expect("validated process");
        out[0] = integral.sup_norm().powf(q);
        out[1] = integral.terminal_norm().powf(q);
    });
    Ok(MomentEstimate {
        sup: stats[0],
        terminal: stats[1],
        q,
        paths,
        grid_level: phi.grid.level(),
        seed,
    })
}

/// Terminal-only variant; skips both the norm scan over interior grid
/// points and the materialization of the running integral.
pub fn terminal_moment_estimate(
    phi: &SampledProcess,
    q: f64,
    paths: u64,
    seed: u64,
) -> Result<MeanStats> {
    check_moment_args(phi, q, paths)?;
    Ok(chunked_mean(paths, |i| {
        let path = sample_brownian(phi.dim_in, phi.grid, seed, i).expect("validated dims");
        let terminal = match &phi.kind {
            Kind::Deterministic(values) => {
                integrate_terminal(values, phi.dim_out, phi.dim_in, &path)
            }
            _ => {
                let values = phi.operator_values(Some(&path)).expect("validated process");
                integrate_terminal(&values, phi.dim_out, phi.dim_in, &path)
            }
        };
        lp_norm_slice(&terminal, phi.value_p).powf(q)
    }))
}

/// Square-function norm of the process kernel along one realization: per
/// output coordinate the exact step integral of the squared row, then the
/// l^p norm of the square roots. Deterministic processes need no path.
pub fn square_function_norm(
    phi: &SampledProcess,
    p: f64,
    path: Option<&BrownianPath>,
) -> Result<f64> {
    if !phi.is_adapted() {
        return Err(Error::NotAdapted);
    }
    check_exponent(p)?;
    let values = phi.operator_values(if phi.is_deterministic() { None } else { path })?;
    let w = phi.grid.width();
    let block = phi.dim_out * phi.dim_in;
    let mut roots = vec![0.0; phi.dim_out];
    for (i, r) in roots.iter_mut().enumerate() {
        let mut acc = CompensatedSum::new();
        for j in 0..phi.grid.cells() {
            let row = &values[j * block + i * phi.dim_in..j * block + (i + 1) * phi.dim_in];
            for &x in row {
                acc.add(w * x * x);
            }
        }
        *r = acc.total().max(0.0).sqrt();
    }
    Ok(lp_norm_slice(&roots, p))
}
