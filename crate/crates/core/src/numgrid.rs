//! Uniform lattices, the unitary centered DFT, Riemann quadrature and norms.
//!
//! A [`Grid`] spans `[-h, h)` on every axis with `n` points per axis
//! (`n` a power of two, at least 8), so the lattice coordinates are
//! `-h + k * (2h / n)` for `k = 0..n`. Its dual grid has spacing `pi / h`
//! and half width `pi / spacing`; `dual(dual(g))` reproduces `g`.
//!
//! [`fourier`] approximates
//! `F[f](y) = (2 pi)^(-d/2) \int f(x) e^{-i y.x} dx`
//! on the dual lattice. The grid offset contributes the alternating sign
//! factors around the FFT, and the inverse transform is the exact discrete
//! inverse, so round trips and Parseval hold to rounding error.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_f64;

/// Smallest admissible number of lattice points per axis.
pub const MIN_POINTS_PER_AXIS: usize = 8;

/// Relative tolerance used when comparing grids built along different paths
/// (the dual of a dual differs from the original in the last bits).
const GRID_RTOL: f64 = 1e-12;

/// Lattice point; entries past `dim` are zero.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    points_per_axis: usize,
    half_width: Vec<f64>,
}

impl Grid {
    /// Builds a grid with the same half width on every axis.
    pub fn new(dim: usize, points_per_axis: usize, half_width: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        Self::with_half_widths(points_per_axis, vec![half_width; dim])
    }

    pub fn with_half_widths(points_per_axis: usize, half_width: Vec<f64>) -> Result<Self> {
        let dim = half_width.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if points_per_axis < MIN_POINTS_PER_AXIS || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points_per_axis must be a power of two >= {MIN_POINTS_PER_AXIS}, got {points_per_axis}"
            )));
        }
        if let Some(h) = half_width.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(Error::InvalidGrid(format!("half_width must be positive and finite, got {h}")));
        }
        Ok(Self { dim, points_per_axis, half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn half_width(&self, axis: usize) -> f64 {
        self.half_width[axis]
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_width
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_width[axis] / self.points_per_axis as f64
    }

    /// Quadrature weight of one lattice cell: the product of spacings.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Number of lattice points, `points_per_axis^dim`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, axis: usize, index: usize) -> f64 {
        -self.half_width[axis] + index as f64 * self.spacing(axis)
    }

    /// Per-axis lattice coordinates of axis `axis`.
    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.points_per_axis).map(|k| self.coord(axis, k)).collect()
    }

    /// Splits a row-major flat index into per-axis indices (axis 0 slowest).
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        let n = self.points_per_axis;
        match self.dim {
            1 => [flat, 0],
            _ => [flat / n, flat % n],
        }
    }

    pub fn flatten(&self, index: [usize; 2]) -> usize {
        match self.dim {
            1 => index[0],
            _ => index[0] * self.points_per_axis + index[1],
        }
    }

    pub fn point(&self, flat: usize) -> Point {
        let idx = self.unflatten(flat);
        let mut p = [0.0; 2];
        for (a, slot) in p.iter_mut().enumerate().take(self.dim) {
            *slot = self.coord(a, idx[a]);
        }
        p
    }

    /// All lattice points in row-major order.
    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// The frequency grid: spacing `pi / h`, half width `pi / spacing`.
    pub fn dual(&self) -> Grid {
        let half_width = (0..self.dim).map(|a| PI / self.spacing(a)).collect();
        Grid { dim: self.dim, points_per_axis: self.points_per_axis, half_width }
    }

    /// Same lattice up to rounding in the half widths.
    pub fn compatible(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && self.points_per_axis == other.points_per_axis
            && self
                .half_width
                .iter()
                .zip(&other.half_width)
                .all(|(a, b)| (a - b).abs() <= GRID_RTOL * a.abs().max(b.abs()))
    }

    pub fn ensure_compatible(&self, other: &Grid, what: &str) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {}x{} on {:?} vs {}x{} on {:?}",
                self.dim, self.points_per_axis, self.half_width, other.dim, other.points_per_axis, other.half_width
            )))
        }
    }

    /// Whether `x` lies in the half-open box `[-h, h)^dim`.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().zip(&self.half_width).all(|(v, h)| *v >= -h && *v < *h)
    }

    /// Flat index of the lattice point nearest to `x`, or `None` outside the box.
    pub fn nearest_index(&self, x: &[f64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let n = self.points_per_axis;
        let mut idx = [0usize; 2];
        for a in 0..self.dim {
            let k = ((x[a] + self.half_width[a]) / self.spacing(a)).round() as usize;
            idx[a] = k.min(n - 1);
        }
        Some(self.flatten(idx))
    }

    /// Flat index of the mirrored lattice point `-x`, with `-(-h)` wrapping
    /// onto `-h` (the DFT's periodic reflection).
    pub fn reflected_index(&self, flat: usize) -> usize {
        let n = self.points_per_axis;
        let idx = self.unflatten(flat);
        let mut out = [0usize; 2];
        for a in 0..self.dim {
            out[a] = (n - idx[a]) % n;
        }
        self.flatten(out)
    }
}

/// Complex samples of a function on every lattice point, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<C64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "grid function has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidInput(format!("non-finite grid value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = vec![C64::new(0.0, 0.0); grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> C64) -> Result<Self> {
        let dim = grid.dim();
        let values = (0..grid.len()).map(|i| f(&grid.point(i)[..dim])).collect();
        Self::new(grid, values)
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn conj(&self) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v.conj()).collect() }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        self.grid.ensure_compatible(&other.grid, "pointwise operation")?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// Values at the mirrored points `-x`.
    pub fn reflect(&self) -> Self {
        let values = (0..self.grid.len()).map(|i| self.values[self.grid.reflected_index(i)]).collect();
        Self { grid: self.grid.clone(), values }
    }

    /// Multilinear interpolation. Points in the last half-open cell of an
    /// axis use the last lattice value on that axis. `None` outside the box.
    pub fn interpolate(&self, x: &[f64]) -> Option<C64> {
        let g = &self.grid;
        if !g.contains(x) {
            return None;
        }
        let n = g.points_per_axis();
        let mut lo = [0usize; 2];
        let mut frac = [0.0f64; 2];
        for a in 0..g.dim() {
            let t = (x[a] + g.half_width(a)) / g.spacing(a);
            let k = (t.floor() as usize).min(n - 1);
            lo[a] = k;
            frac[a] = if k + 1 < n { (t - k as f64).clamp(0.0, 1.0) } else { 0.0 };
        }
        let at = |i0: usize, i1: usize| self.values[g.flatten([i0, i1])];
        match g.dim() {
            1 => {
                let a = at(lo[0], 0);
                if frac[0] == 0.0 {
                    return Some(a);
                }
                let b = at(lo[0] + 1, 0);
                Some(a * (1.0 - frac[0]) + b * frac[0])
            }
            _ => {
                let (i, j) = (lo[0], lo[1]);
                let i1 = if frac[0] > 0.0 { i + 1 } else { i };
                let j1 = if frac[1] > 0.0 { j + 1 } else { j };
                let (fx, fy) = (frac[0], frac[1]);
                Some(
                    at(i, j) * ((1.0 - fx) * (1.0 - fy))
                        + at(i1, j) * (fx * (1.0 - fy))
                        + at(i, j1) * ((1.0 - fx) * fy)
                        + at(i1, j1) * (fx * fy),
                )
            }
        }
    }

    /// CSV with columns `x1[,x2],re,im` and a header row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = self.grid.dim();
        let header: Vec<String> = (1..=dim).map(|a| format!("x{a}")).chain(["re".into(), "im".into()]).collect();
        writeln!(w, "{}", header.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let p = self.grid.point(i);
            let mut cols: Vec<String> = p[..dim].iter().map(|c| fmt_f64(*c)).collect();
            cols.push(fmt_f64(v.re));
            cols.push(fmt_f64(v.im));
            writeln!(w, "{}", cols.join(","))?;
        }
        Ok(())
    }

    /// Reads the CSV layout written by [`GridFunction::write_csv`] and
    /// recovers the grid from the coordinates.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty grid function CSV".into()))??;
        let ncols = header.split(',').count();
        if !(3..=4).contains(&ncols) {
            return Err(Error::Parse(format!("grid function CSV needs 3 or 4 columns, header is {header:?}")));
        }
        let dim = ncols - 2;
        let mut coords: Vec<[f64; 2]> = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != ncols {
                return Err(Error::Parse(format!("line {}: expected {ncols} fields", lineno + 2)));
            }
            let nums = fields
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2))))
                .collect::<Result<Vec<f64>>>()?;
            let mut p = [0.0; 2];
            p[..dim].copy_from_slice(&nums[..dim]);
            coords.push(p);
            values.push(C64::new(nums[dim], nums[dim + 1]));
        }
        let total = coords.len();
        let n = match dim {
            1 => total,
            _ => (total as f64).sqrt().round() as usize,
        };
        if n.pow(dim as u32) != total || total == 0 {
            return Err(Error::Parse(format!("{total} rows do not form a {dim}-dimensional lattice")));
        }
        let half_width: Vec<f64> =
            (0..dim).map(|a| -coords.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min)).collect();
        let grid = Grid::with_half_widths(n, half_width)?;
        for (i, p) in coords.iter().enumerate() {
            let q = grid.point(i);
            for a in 0..dim {
                if (p[a] - q[a]).abs() > 1e-9 * grid.half_width(a) {
                    return Err(Error::Parse(format!("row {i} is not on the inferred lattice")));
                }
            }
        }
        Self::new(grid, values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L2,
    Linf,
    L1,
}

/// Raw centered DFT on a row-major lattice of `n^dim` points:
/// `out_k = sum_j v_j exp(sign * 2 pi i (k - n/2)(j - n/2) / n)` per axis.
/// No normalization; callers apply the continuous-transform constants.
pub struct CenteredDft {
    n: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl CenteredDft {
    pub fn new(n: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, dim, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn for_grid(grid: &Grid) -> Self {
        Self::new(grid.points_per_axis(), grid.dim())
    }

    /// `negative = true` uses `exp(-i ...)` (the forward kernel).
    pub fn apply(&self, data: &mut [C64], negative: bool) {
        let n = self.n;
        assert_eq!(data.len(), n.pow(self.dim as u32));
        let fft = if negative { &self.forward } else { &self.inverse };
        let transform_line = |line: &mut [C64]| {
            for (j, v) in line.iter_mut().enumerate() {
                if j % 2 == 1 {
                    *v = -*v;
                }
            }
            fft.process(line);
            for (k, v) in line.iter_mut().enumerate() {
                if k % 2 == 1 {
                    *v = -*v;
                }
            }
        };
        match self.dim {
            1 => transform_line(data),
            _ => {
                for row in data.chunks_mut(n) {
                    transform_line(row);
                }
                let mut col = vec![C64::new(0.0, 0.0); n];
                for c in 0..n {
                    for r in 0..n {
                        col[r] = data[r * n + c];
                    }
                    transform_line(&mut col);
                    for r in 0..n {
                        data[r * n + c] = col[r];
                    }
                }
            }
        }
    }
}

/// Constant in front of the raw DFT when transforming data that lives on `source`.
pub(crate) fn transform_constant(source: &Grid) -> f64 {
    (0..source.dim()).map(|a| source.spacing(a) / (2.0 * PI).sqrt()).product()
}

/// Dense matrix of [`fourier`] for data on `source`: column `j` is the
/// transform of the `j`-th lattice indicator. The inverse-direction matrix
/// for the dual grid is its exact inverse.
pub fn dft_matrix(source: &Grid, direction: Direction) -> DMatrix<C64> {
    let n = source.points_per_axis() as i64;
    let half = n / 2;
    let sign = if direction == Direction::Forward { -1.0 } else { 1.0 };
    let c = transform_constant(source);
    let phases: Vec<C64> = (0..n).map(|m| C64::from_polar(c, sign * 2.0 * PI * m as f64 / n as f64)).collect();
    let unit: Vec<C64> = (0..n).map(|m| C64::from_polar(1.0, sign * 2.0 * PI * m as f64 / n as f64)).collect();
    let len = source.len();
    let dim = source.dim();
    DMatrix::from_fn(len, len, |k, j| {
        let ki = source.unflatten(k);
        let ji = source.unflatten(j);
        let m0 = ((ki[0] as i64 - half) * (ji[0] as i64 - half)).rem_euclid(n);
        if dim == 1 {
            phases[m0 as usize]
        } else {
            let m1 = ((ki[1] as i64 - half) * (ji[1] as i64 - half)).rem_euclid(n);
            phases[m0 as usize] * unit[m1 as usize]
        }
    })
}

/// Unitary continuous Fourier transform on the dual lattice.
pub fn fourier(f: &GridFunction, direction: Direction) -> GridFunction {
    let grid = f.grid();
    let dft = CenteredDft::for_grid(grid);
    let mut data = f.values().to_vec();
    dft.apply(&mut data, direction == Direction::Forward);
    let c = transform_constant(grid);
    for v in data.iter_mut() {
        *v *= c;
    }
    GridFunction { grid: grid.dual(), values: data }
}

/// Samples per deterministic partial sum in [`exp_sum`].
const EXP_SUM_CHUNK: usize = 256;

/// Restarts the phase recurrence from an exact `cis` this often.
const EXP_SUM_REANCHOR: usize = 64;

/// `sum_k w_k e^{i x.p_k}` at every lattice point `x`.
///
/// Phases along each axis follow a geometric recurrence that is re-anchored
/// periodically. Samples are summed in fixed chunks whose partial sums are
/// added in chunk order, so the result does not depend on the thread count.
pub fn exp_sum(grid: &Grid, points: &[Point], weights: &[C64]) -> Vec<C64> {
    use rayon::prelude::*;
    assert_eq!(points.len(), weights.len());
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let len = grid.len();
    let partials: Vec<Vec<C64>> = points
        .par_chunks(EXP_SUM_CHUNK)
        .zip(weights.par_chunks(EXP_SUM_CHUNK))
        .map(|(pts, ws)| {
            let mut acc = vec![C64::new(0.0, 0.0); len];
            let mut axis = vec![vec![C64::new(0.0, 0.0); n]; dim];
            for (p, w) in pts.iter().zip(ws) {
                for (a, phases) in axis.iter_mut().enumerate() {
                    axis_phases(grid.coord(a, 0), grid.spacing(a), p[a], phases);
                }
                if dim == 1 {
                    for (slot, e) in acc.iter_mut().zip(&axis[0]) {
                        *slot += w * e;
                    }
                } else {
                    for (j0, e0) in axis[0].iter().enumerate() {
                        let we = w * e0;
                        let row = &mut acc[j0 * n..(j0 + 1) * n];
                        for (slot, e1) in row.iter_mut().zip(&axis[1]) {
                            *slot += we * e1;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut out = vec![C64::new(0.0, 0.0); len];
    for part in partials {
        for (o, v) in out.iter_mut().zip(part) {
            *o += v;
        }
    }
    out
}

fn axis_phases(x0: f64, dx: f64, p: f64, out: &mut [C64]) {
    let step = C64::from_polar(1.0, dx * p);
    let mut cur = C64::new(1.0, 0.0);
    for (j, slot) in out.iter_mut().enumerate() {
        if j % EXP_SUM_REANCHOR == 0 {
            cur = C64::from_polar(1.0, (x0 + j as f64 * dx) * p);
        }
        *slot = cur;
        cur *= step;
    }
}

/// Riemann sum `sum values * cell_volume`.
pub fn integrate(f: &GridFunction) -> C64 {
    f.values().iter().sum::<C64>() * f.grid().cell_volume()
}

/// `\int conj(f) g`, conjugate-linear in `f`.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<C64> {
    f.grid().ensure_compatible(g.grid(), "inner product")?;
    let s: C64 = f.values().iter().zip(g.values()).map(|(a, b)| a.conj() * b).sum();
    Ok(s * f.grid().cell_volume())
}

pub fn norm(f: &GridFunction, which: Norm) -> f64 {
    match which {
        Norm::L2 => (f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * f.grid().cell_volume()).sqrt(),
        Norm::Linf => f.values().iter().map(|v| v.norm()).fold(0.0, f64::max),
        Norm::L1 => f.values().iter().map(|v| v.norm()).sum::<f64>() * f.grid().cell_volume(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_pdf(x: &[f64]) -> f64 {
        (-0.5 * x[0] * x[0]).exp() / (2.0 * PI).sqrt()
    }

    #[test]
    fn make_grid_examples() {
        let g = Grid::new(1, 8, 4.0).unwrap();
        assert_eq!(g.spacing(0), 1.0);
        assert_eq!(g.axis_coords(0), vec![-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);

        let g2 = Grid::new(2, 16, 8.0).unwrap();
        assert_eq!(g2.spacing(0), 1.0);
        assert_eq!(g2.spacing(1), 1.0);
        assert_eq!(g2.len(), 256);

        assert!(matches!(Grid::new(1, 6, 4.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(1, 4, 4.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(3, 8, 4.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(1, 8, 0.0), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn dual_grid_relations() {
        let g = Grid::new(1, 512, 16.0).unwrap();
        let d = g.dual();
        assert!((d.spacing(0) - PI / 16.0).abs() < 1e-15);
        assert!((d.half_width(0) - PI / g.spacing(0)).abs() < 1e-12);
        assert!(d.dual().compatible(&g));
    }

    #[test]
    fn gaussian_pdf_integrates_to_one() {
        let g = Grid::new(1, 512, 16.0).unwrap();
        let f = GridFunction::from_real_fn(g, gauss_pdf).unwrap();
        assert!((integrate(&f).re - 1.0).abs() < 1e-10);
        assert!((norm(&f, Norm::L1) - 1.0).abs() < 1e-10);
        assert!((norm(&f, Norm::Linf) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn indicator_mass_within_one_cell() {
        let g = Grid::new(1, 512, 16.0).unwrap();
        let h = g.spacing(0);
        let f = GridFunction::from_real_fn(g, |x| if x[0].abs() <= 1.0 { 1.0 } else { 0.0 }).unwrap();
        assert!((integrate(&f).re - 2.0).abs() <= h);
    }

    #[test]
    fn zero_function_has_zero_norms_and_transform() {
        let g = Grid::new(1, 64, 4.0).unwrap();
        let f = GridFunction::zeros(g);
        assert_eq!(integrate(&f), C64::new(0.0, 0.0));
        for which in [Norm::L2, Norm::Linf, Norm::L1] {
            assert_eq!(norm(&f, which), 0.0);
        }
        assert!(fourier(&f, Direction::Forward).is_zero());
    }

    #[test]
    fn odd_integrand_inner_product_vanishes() {
        let g = Grid::new(1, 512, 16.0).unwrap();
        let a = GridFunction::from_real_fn(g.clone(), |x| (-0.5 * x[0] * x[0]).exp()).unwrap();
        let b = GridFunction::from_real_fn(g, |x| x[0] * (-0.5 * x[0] * x[0]).exp()).unwrap();
        assert!(inner_product(&a, &b).unwrap().norm() < 1e-12);
        let aa = inner_product(&a, &a).unwrap();
        assert!(aa.im == 0.0 && aa.re > 0.0);
    }

    #[test]
    fn disjoint_cells_are_orthogonal() {
        let g = Grid::new(1, 16, 4.0).unwrap();
        let mut va = vec![C64::new(0.0, 0.0); 16];
        let mut vb = va.clone();
        va[3] = C64::new(1.0, 0.0);
        vb[9] = C64::new(0.0, 2.0);
        let a = GridFunction::new(g.clone(), va).unwrap();
        let b = GridFunction::new(g, vb).unwrap();
        assert_eq!(inner_product(&a, &b).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn inner_product_rejects_mismatched_grids() {
        let a = GridFunction::zeros(Grid::new(1, 16, 4.0).unwrap());
        let b = GridFunction::zeros(Grid::new(1, 16, 5.0).unwrap());
        assert!(matches!(inner_product(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn non_finite_values_rejected() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let mut v = vec![C64::new(0.0, 0.0); 8];
        v[2] = C64::new(f64::NAN, 0.0);
        assert!(GridFunction::new(g, v).is_err());
    }

    #[test]
    fn interpolation_is_exact_on_nodes_and_linear_between() {
        let g = Grid::new(1, 16, 4.0).unwrap();
        let f = GridFunction::from_real_fn(g, |x| 3.0 * x[0] + 1.0).unwrap();
        assert!((f.interpolate(&[0.5]).unwrap().re - 2.5).abs() < 1e-14);
        assert!((f.interpolate(&[-4.0]).unwrap().re + 11.0).abs() < 1e-14);
        assert!(f.interpolate(&[4.0]).is_none());
    }

    #[test]
    fn csv_round_trip_recovers_grid() {
        let g = Grid::new(2, 8, 2.0).unwrap();
        let f = GridFunction::from_fn(g, |x| C64::new(x[0], x[1] * x[0])).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("x1,x2,re,im\n"));
        let back = GridFunction::read_csv(&buf[..]).unwrap();
        assert!(back.grid().compatible(f.grid()));
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn dft_matrix_matches_fft_path() {
        for g in [Grid::new(1, 16, 3.0).unwrap(), Grid::new(2, 8, 2.0).unwrap()] {
            let f = GridFunction::from_fn(g.clone(), |x| C64::new((-x[0] * x[0]).exp(), x.iter().sum::<f64>().sin()))
                .unwrap();
            let m = dft_matrix(&g, Direction::Forward);
            let v = nalgebra::DVector::from_column_slice(f.values());
            let out = &m * v;
            let fft = fourier(&f, Direction::Forward);
            for (a, b) in out.iter().zip(fft.values()) {
                assert!((a - b).norm() < 1e-13);
            }
            let inv = dft_matrix(&g.dual(), Direction::Inverse);
            let id = &inv * &m;
            for i in 0..g.len() {
                for j in 0..g.len() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((id[(i, j)] - C64::new(want, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn exp_sum_matches_direct_phases() {
        let g = Grid::new(1, 256, 12.0).unwrap();
        let pts: Vec<Point> = (0..600).map(|k| [((k * 37) % 101) as f64 * 0.13 - 6.0, 0.0]).collect();
        let ws: Vec<C64> = (0..600).map(|k| C64::new(1.0 + k as f64 * 1e-3, -0.5)).collect();
        let fast = exp_sum(&g, &pts, &ws);
        for (j, v) in fast.iter().enumerate().step_by(7) {
            let x = g.point(j)[0];
            let direct: C64 = pts.iter().zip(&ws).map(|(p, w)| w * C64::from_polar(1.0, x * p[0])).sum();
            assert!((v - direct).norm() < 1e-10);
        }
        let g2 = Grid::new(2, 16, 3.0).unwrap();
        let pts2: Vec<Point> = vec![[0.3, -1.2], [2.0, 0.7]];
        let ws2 = vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)];
        let fast = exp_sum(&g2, &pts2, &ws2);
        for (j, v) in fast.iter().enumerate() {
            let x = g2.point(j);
            let direct: C64 =
                pts2.iter().zip(&ws2).map(|(p, w)| w * C64::from_polar(1.0, x[0] * p[0] + x[1] * p[1])).sum();
            assert!((v - direct).norm() < 1e-12);
        }
    }
}
