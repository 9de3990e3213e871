//! Dyadic grids on `[0, T]`, grid step functions, the L2-normalized Haar
//! system on `[0, 1]` with its Schauder primitives, and the dyadic averaging
//! operators: conditional expectation onto level-n cells, right translation
//! by one level-n cell, and their composite.

use crate::error::{Error, Result};
use crate::spaces::{check_exponent, check_finite, lp_norm_slice};
use crate::sums::CompensatedSum;

/// Maximum grid level; bounds memory at 2^30 cells.
pub const MAX_LEVEL: u32 = 30;

/// Equipartition of `[0, T]` into `2^level` half-open cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicGrid {
    horizon: f64,
    level: u32,
}

impl DyadicGrid {
    pub fn new(horizon: f64, level: u32) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::BadParameter(format!(
                "grid horizon must be positive and finite, got {horizon}"
            )));
        }
        if level > MAX_LEVEL {
            return Err(Error::BadParameter(format!(
                "grid level {level} exceeds maximum {MAX_LEVEL}"
            )));
        }
        Ok(Self { horizon, level })
    }

    /// Unit-horizon grid; the default for all experiments.
    pub fn unit(level: u32) -> Result<Self> {
        Self::new(1.0, level)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cells(&self) -> usize {
        1usize << self.level
    }

    /// Cell width `T * 2^-L`; multiplying back by `2^L` recovers T exactly.
    pub fn width(&self) -> f64 {
        self.horizon * 0.5f64.powi(self.level as i32)
    }

    /// Left endpoint of cell `j`.
    pub fn t_left(&self, j: usize) -> f64 {
        j as f64 * self.width()
    }

    /// The grid one level finer on the same horizon.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.horizon, self.level + 1)
    }
}

/// How a grid function's per-cell values are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    /// Left-constant step function: the value holds on the whole cell.
    Step,
    /// Point samples at cell left endpoints of a piecewise-linear function.
    Linear,
}

/// `E`-valued function sampled on a dyadic grid: one `dim`-vector per cell,
/// taken at the cell's left endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: DyadicGrid,
    dim: usize,
    value_p: f64,
    interp: Interp,
    data: Vec<f64>,
}

impl GridFunction {
    pub fn new(
        grid: DyadicGrid,
        dim: usize,
        value_p: f64,
        interp: Interp,
        data: Vec<f64>,
    ) -> Result<Self> {
        check_exponent(value_p)?;
        if dim == 0 {
            return Err(Error::BadParameter("grid function dimension 0".into()));
        }
        if data.len() != grid.cells() * dim {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: grid.cells() * dim,
                context: "grid function data".into(),
            });
        }
        check_finite(&data, "grid function values")?;
        Ok(Self {
            grid,
            dim,
            value_p,
            interp,
            data,
        })
    }

    /// Samples `f` at cell left endpoints; `f(t, out)` writes the value.
    pub fn sample<F>(
        grid: DyadicGrid,
        dim: usize,
        value_p: f64,
        interp: Interp,
        mut f: F,
    ) -> Result<Self>
    where
        F: FnMut(f64, &mut [f64]),
    {
        let mut data = vec![0.0; grid.cells() * dim];
        for j in 0..grid.cells() {
            f(grid.t_left(j), &mut data[j * dim..(j + 1) * dim]);
        }
        Self::new(grid, dim, value_p, interp, data)
    }

    /// Samples a scalar function at cell left endpoints.
    pub fn sample_scalar<F>(grid: DyadicGrid, interp: Interp, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> f64,
    {
        Self::sample(grid, 1, 2.0, interp, |t, out| out[0] = f(t))
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value_p(&self) -> f64 {
        self.value_p
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn value(&self, j: usize) -> &[f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Norm of the value on cell `j` in the function's own lp norm.
    pub fn value_norm(&self, j: usize) -> f64 {
        lp_norm_slice(self.value(j), self.value_p)
    }

    /// `L^p_int` norm in time of the step function: `(sum_j w * |v_j|^p)^{1/p}`,
    /// exact for step data; `p_int = inf` takes the max cell norm.
    pub fn time_lp_norm(&self, p_int: f64) -> f64 {
        if p_int == f64::INFINITY {
            return (0..self.grid.cells())
                .map(|j| self.value_norm(j))
                .fold(0.0, f64::max);
        }
        let w = self.grid.width();
        let mut acc = CompensatedSum::new();
        for j in 0..self.grid.cells() {
            acc.add(w * self.value_norm(j).powf(p_int));
        }
        acc.total().max(0.0).powf(1.0 / p_int)
    }

    /// `L^2` norm in time.
    pub fn time_l2_norm(&self) -> f64 {
        let w = self.grid.width();
        let mut acc = CompensatedSum::new();
        for j in 0..self.grid.cells() {
            let nrm = self.value_norm(j);
            acc.add(w * nrm * nrm);
        }
        acc.total().max(0.0).sqrt()
    }

    /// Coordinatewise linear combination `a*self + b*other` on a common grid.
    pub fn linear_comb(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(Error::GridMismatch(
                "linear combination requires a common grid and dimension".into(),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        GridFunction::new(self.grid, self.dim, self.value_p, self.interp, data)
    }

    /// CSV serialization: header, then one row per cell with the cell's left
    /// endpoint followed by the coordinates. LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_left");
        for i in 1..=self.dim {
            out.push_str(&format!(",c{i}"));
        }
        out.push('\n');
        for j in 0..self.grid.cells() {
            out.push_str(&format!("{}", self.grid.t_left(j)));
            for x in self.value(j) {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the `to_csv` format. The grid is inferred from the rows, so at
    /// least two rows are required (a single cell does not determine T).
    pub fn from_csv(text: &str, value_p: f64, interp: Interp) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let cols = header.split(',').count();
        if !header.starts_with("t_left") || cols < 2 {
            return Err(Error::Parse(format!("bad CSV header: {header}")));
        }
        let dim = cols - 1;
        let mut t_lefts = Vec::new();
        let mut data = Vec::new();
        for (row, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols {
                return Err(Error::Parse(format!(
                    "row {row} has {} fields, expected {cols}",
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
            };
            t_lefts.push(parse(fields[0])?);
            for field in &fields[1..] {
                data.push(parse(field)?);
            }
        }
        let rows = t_lefts.len();
        if rows < 2 || !rows.is_power_of_two() {
            return Err(Error::Parse(format!(
                "cell count {rows} must be a power of two and at least 2"
            )));
        }
        let level = rows.ilog2();
        let width = t_lefts[1] - t_lefts[0];
        let horizon = width * rows as f64;
        let grid = DyadicGrid::new(horizon, level)?;
        for (j, &t) in t_lefts.iter().enumerate() {
            if (t - grid.t_left(j)).abs() > 1e-9 * horizon.max(1.0) {
                return Err(Error::Parse(format!(
                    "row {j}: t_left {t} is not on the inferred dyadic grid"
                )));
            }
        }
        Self::new(grid, dim, value_p, interp, data)
    }
}

fn check_haar_index(n: u32, k: u64) -> Result<()> {
    if n > 40 {
        return Err(Error::BadParameter(format!("Haar level {n} too large")));
    }
    if n == 0 && k == 0 {
        return Ok(()); // the constant element
    }
    if k == 0 || k > (1u64 << n) {
        return Err(Error::IndexOutOfRange(format!(
            "Haar index k = {k} outside 1..=2^{n}"
        )));
    }
    Ok(())
}

fn check_unit_time(t: f64) -> Result<()> {
    if !t.is_finite() || !(0.0..=1.0).contains(&t) {
        return Err(Error::BadParameter(format!(
            "time {t} outside the unit interval"
        )));
    }
    Ok(())
}

/// L2-normalized Haar function on `[0, 1]`. `(0, 0)` is the constant 1;
/// `(n, k)` with `1 <= k <= 2^n` is `2^{n/2}` on the left half of its support
/// `[(k-1)2^-n, k2^-n)` and `-2^{n/2}` on the right half. Half-open halves:
/// the value at a breakpoint comes from the interval on its right.
pub fn haar(n: u32, k: u64, t: f64) -> Result<f64> {
    check_haar_index(n, k)?;
    check_unit_time(t)?;
    if n == 0 && k == 0 {
        return Ok(1.0);
    }
    let w = 0.5f64.powi(n as i32);
    let a = (k - 1) as f64 * w;
    let mid = a + 0.5 * w;
    let b = k as f64 * w;
    let amp = ((1u64 << n) as f64).sqrt();
    Ok(if t >= a && t < mid {
        amp
    } else if t >= mid && t < b {
        -amp
    } else {
        0.0
    })
}

/// Schauder primitive of [`haar`]: `(0, 0)` integrates the constant to `t`;
/// `(n, k)` is the tent of height `2^{-n/2-1}` peaked at `(k-1/2)2^-n` and
/// supported on `[(k-1)2^-n, k2^-n]`.
pub fn schauder(n: u32, k: u64, t: f64) -> Result<f64> {
    check_haar_index(n, k)?;
    check_unit_time(t)?;
    if n == 0 && k == 0 {
        return Ok(t);
    }
    let w = 0.5f64.powi(n as i32);
    let a = (k - 1) as f64 * w;
    let b = k as f64 * w;
    if t <= a || t >= b {
        return Ok(0.0);
    }
    let amp = ((1u64 << n) as f64).sqrt();
    Ok(amp * (t - a).min(b - t))
}

/// The finite Haar system through level `m` in a fixed enumeration: the
/// constant `(0, 0)` first, then `(n, k)` for `n = 0..=m`, `k = 1..=2^n`.
/// Step functions on a level-`(m+1)` grid lie exactly in its span, so the
/// system has `2^{m+1}` elements.
pub fn haar_system(m: u32) -> Vec<(u32, u64)> {
    let mut out = Vec::with_capacity(1usize << (m + 1));
    out.push((0, 0));
    for n in 0..=m {
        for k in 1..=(1u64 << n) {
            out.push((n, k));
        }
    }
    out
}

/// `int_0^1 schauder(n,k,t)^2 dt = 2^{-2n-2}/3`, independent of `k`. The
/// closed form is cross-checked against composite Simpson quadrature, which
/// is exact for the piecewise-quadratic integrand.
pub fn schauder_l2sq(n: u32) -> f64 {
    let value = 0.25f64.powi(n as i32 + 1) / 3.0;
    // Simpson panels of width 2^{-n-2} align with the tent's kink, so the
    // quadrature is exact up to rounding.
    let h = 0.5f64.powi(n as i32 + 2);
    let sq = |t: f64| {
        let v = schauder(n, 1, t).expect("in-range Schauder evaluation");
        v * v
    };
    let quad = (h / 3.0)
        * (sq(0.0) + 4.0 * sq(h) + 2.0 * sq(2.0 * h) + 4.0 * sq(3.0 * h)
            + sq((4.0 * h).min(1.0)))
        .max(0.0);
    assert!(
        (quad - value).abs() <= 1e-12 * value,
        "Schauder L2 quadrature cross-check failed at level {n}: {quad} vs {value}"
    );
    value
}

/// Conditional expectation onto level-`n` dyadic cells: replaces values on
/// each level-n cell by their average over the finer grid. The output stays
/// on the input grid.
pub fn cond_exp(f: &GridFunction, n: u32) -> Result<GridFunction> {
    let level = f.grid().level();
    if n > level {
        return Err(Error::LevelTooCoarse {
            level: n,
            context: format!("cond_exp level exceeds grid level {level}"),
        });
    }
    let dim = f.dim();
    let block = 1usize << (level - n);
    let mut data = vec![0.0; f.data().len()];
    for coarse in 0..(1usize << n) {
        let start = coarse * block;
        for c in 0..dim {
            let mut acc = CompensatedSum::new();
            for j in start..start + block {
                acc.add(f.value(j)[c]);
            }
            let avg = acc.total() / block as f64;
            for j in start..start + block {
                data[j * dim + c] = avg;
            }
        }
    }
    GridFunction::new(f.grid(), dim, f.value_p(), f.interp(), data)
}

/// Right translation by `2^-n T`: shifts values right by a whole number of
/// cells and zero-fills `[0, 2^-n T)`. `n = 0` shifts everything out.
pub fn translate(f: &GridFunction, n: u32) -> Result<GridFunction> {
    let level = f.grid().level();
    if n > level {
        return Err(Error::LevelTooCoarse {
            level: n,
            context: format!("translate shift 2^-{n} T is below one cell at grid level {level}"),
        });
    }
    let dim = f.dim();
    let cells = f.grid().cells();
    let shift = 1usize << (level - n);
    let mut data = vec![0.0; f.data().len()];
    for j in shift..cells {
        let src = f.value(j - shift);
        data[j * dim..(j + 1) * dim].copy_from_slice(src);
    }
    GridFunction::new(f.grid(), dim, f.value_p(), f.interp(), data)
}

/// The composite operator: average over level-n cells, then delay by one
/// level-n cell so the result at time t only uses data before t.
pub fn delayed_average(f: &GridFunction, n: u32) -> Result<GridFunction> {
    translate(&cond_exp(f, n)?, n)
}
