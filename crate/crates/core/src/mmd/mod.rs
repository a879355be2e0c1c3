//! MMD estimators, the optimal witness and local moments.
//!
//! Three routes compute the same functional
//! `MMD^2 = \int |\int F(x, y) e^{i x.y} (u - v)(y) dy|^2 dx`:
//!
//! * [`mmd_gram`] sums kernel evaluations over sample pairs;
//! * [`mmd_spectral`] evaluates the weighted empirical characteristic
//!   functions `phi_i(x) = mean g_i(Y) e^{i x.Y}` on a grid and integrates
//!   `|sum_i c_i f_i (phi_i^u - phi_i^v)|^2`;
//! * [`mmd_density`] does the same with gridded densities in place of
//!   samples.

mod moments;
mod witness;

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use moments::{local_moment, moment_field, MomentField, MomentSource};
pub use witness::{witness, WitnessFunction};

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::kernels::KernelForm;
use crate::numgrid::{exp_sum, fourier, integrate, Direction, Grid, GridFunction, Point};
use crate::symbols::{Factor, SeparableSymbol, Symbol};

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    points: Vec<Point>,
    seed: Option<u64>,
}

impl SampleSet {
    pub fn new(dim: usize, points: Vec<Point>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidInput(format!("sample dim must be 1 or 2, got {dim}")));
        }
        if points.is_empty() {
            return Err(Error::InvalidInput("a sample set needs at least one point".into()));
        }
        if let Some(i) = points.iter().position(|p| p[..dim].iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidInput(format!("sample {i} has a non-finite coordinate")));
        }
        let points = points
            .into_iter()
            .map(|mut p| {
                for v in p.iter_mut().skip(dim) {
                    *v = 0.0;
                }
                p
            })
            .collect();
        Ok(Self { dim, points, seed: None })
    }

    pub fn from_1d(values: &[f64]) -> Result<Self> {
        Self::new(1, values.iter().map(|v| [*v, 0.0]).collect())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `max_k |Y_k[a]|` for each axis.
    pub fn radius(&self) -> Vec<f64> {
        (0..self.dim).map(|a| self.points.iter().map(|p| p[a].abs()).fold(0.0, f64::max)).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.points.len() as f64;
        (0..self.dim).map(|a| self.points.iter().map(|p| p[a]).sum::<f64>() / n).collect()
    }

    /// One row per sample, comma separated, with an `x1[,x2]` header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|a| format!("x{a}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for p in &self.points {
            let cols: Vec<String> = p[..self.dim].iter().map(|v| fmt_f64(*v)).collect();
            writeln!(w, "{}", cols.join(","))?;
        }
        Ok(())
    }

    /// Reads one sample per row; a first row that does not parse as numbers
    /// is taken as a header.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut points = Vec::new();
        let mut dim = None;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let nums = match parsed {
                Ok(v) => v,
                Err(_) if lineno == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", lineno + 1))),
            };
            match dim {
                None => dim = Some(nums.len()),
                Some(d) if d != nums.len() => {
                    return Err(Error::Parse(format!("line {}: expected {d} columns, got {}", lineno + 1, nums.len())))
                }
                _ => {}
            }
            if !(1..=2).contains(&nums.len()) {
                return Err(Error::Parse(format!("line {}: samples need 1 or 2 columns", lineno + 1)));
            }
            let mut p = [0.0; 2];
            p[..nums.len()].copy_from_slice(&nums);
            points.push(p);
        }
        let dim = dim.ok_or_else(|| Error::Parse("sample file has no rows".into()))?;
        Self::new(dim, points)
    }

    /// Total order on sample sets used to make two-sample statistics symmetric.
    fn canonical_cmp(&self, other: &SampleSet) -> Ordering {
        self.points.len().cmp(&other.points.len()).then_with(|| {
            for (a, b) in self.points.iter().zip(&other.points) {
                for k in 0..2 {
                    match a[k].total_cmp(&b[k]) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                }
            }
            Ordering::Equal
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[serde(alias = "gram")]
    GramV,
    GramU,
    Spectral,
    #[serde(alias = "density")]
    DensityGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    V,
    U,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmdEstimate {
    /// `sqrt(max(squared, 0))`.
    pub value: f64,
    pub squared: f64,
    pub method: Method,
    pub n: usize,
    pub m: usize,
    pub grid: Option<Grid>,
    pub seed: Option<u64>,
    /// Sample radius times grid spacing exceeds `pi / 4`.
    pub grid_too_coarse: bool,
}

impl MmdEstimate {
    fn new(squared: f64, method: Method, n: usize, m: usize, grid: Option<Grid>) -> Self {
        Self { value: squared.max(0.0).sqrt(), squared, method, n, m, grid, seed: None, grid_too_coarse: false }
    }
}

/// `phi(x) = (1/N) sum_k g(Y_k) e^{i x.Y_k}` on `grid`.
pub fn weighted_char_fn(s: &SampleSet, g: &Factor, grid: &Grid) -> Result<GridFunction> {
    if s.dim() != grid.dim() {
        return Err(Error::GridMismatch("samples and grid differ in dimension".into()));
    }
    let n = s.len() as f64;
    let d = s.dim();
    let weights: Vec<C64> = s.points().iter().map(|p| Ok(g.eval(&p[..d])? / n)).collect::<Result<_>>()?;
    GridFunction::new(grid.clone(), exp_sum(grid, s.points(), &weights))
}

/// Aliasing heuristic for the spectral estimator.
pub fn grid_too_coarse(grid: &Grid, samples: &[&SampleSet]) -> bool {
    samples.iter().any(|s| s.radius().iter().enumerate().any(|(a, r)| r * grid.spacing(a) > PI / 4.0))
}

/// Precomputed `c_i f_i` on a grid for repeated spectral evaluations.
#[derive(Debug, Clone)]
pub struct SpectralWorkspace {
    grid: Grid,
    coefs_f: Vec<Vec<C64>>,
    features: Vec<Factor>,
}

impl SpectralWorkspace {
    pub fn new(sym: &SeparableSymbol, grid: &Grid) -> Result<Self> {
        if sym.dim() != grid.dim() {
            return Err(Error::GridMismatch("symbol and grid differ in dimension".into()));
        }
        let mut coefs_f = Vec::new();
        let mut features = Vec::new();
        for t in sym.terms() {
            let f = t.f.sample(grid)?;
            coefs_f.push(f.iter().map(|v| v * t.coef).collect());
            features.push(t.g.clone());
        }
        Ok(Self { grid: grid.clone(), coefs_f, features })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `phi_i` of every term for one sample set.
    pub fn embeddings(&self, s: &SampleSet) -> Result<Vec<Vec<C64>>> {
        self.features.iter().map(|g| Ok(weighted_char_fn(s, g, &self.grid)?.into_values())).collect()
    }

    /// `psi = sum_i c_i f_i (phi_i^u - phi_i^v)`.
    pub fn psi(&self, eu: &[Vec<C64>], ev: &[Vec<C64>]) -> Vec<C64> {
        let mut psi = vec![C64::new(0.0, 0.0); self.grid.len()];
        for ((cf, a), b) in self.coefs_f.iter().zip(eu).zip(ev) {
            for k in 0..psi.len() {
                psi[k] += cf[k] * (a[k] - b[k]);
            }
        }
        psi
    }

    pub fn squared(&self, eu: &[Vec<C64>], ev: &[Vec<C64>]) -> f64 {
        self.psi(eu, ev).iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }
}

pub fn mmd_spectral(su: &SampleSet, sv: &SampleSet, sym: &SeparableSymbol, grid: &Grid) -> Result<MmdEstimate> {
    if su.dim() != sym.dim() || sv.dim() != sym.dim() {
        return Err(Error::InvalidInput("samples and symbol differ in dimension".into()));
    }
    let ws = SpectralWorkspace::new(sym, grid)?;
    let sq = ws.squared(&ws.embeddings(su)?, &ws.embeddings(sv)?);
    let mut est = MmdEstimate::new(sq, Method::Spectral, su.len(), sv.len(), Some(grid.clone()));
    est.grid_too_coarse = grid_too_coarse(grid, &[su, sv]);
    Ok(est)
}

/// Gram-form estimate; `V` includes the diagonal, `U` excludes it.
pub fn mmd_gram(su: &SampleSet, sv: &SampleSet, kernel: &KernelForm, statistic: Statistic) -> Result<MmdEstimate> {
    if su.dim() != kernel.dim() || sv.dim() != kernel.dim() {
        return Err(Error::InvalidInput("samples and kernel differ in dimension".into()));
    }
    let order = su.canonical_cmp(sv);
    if order == Ordering::Equal && statistic == Statistic::V {
        // equal empirical measures; the sums below differ only by roundoff
        return Ok(MmdEstimate::new(0.0, Method::GramV, su.len(), sv.len(), None));
    }
    let (a, b) = if order == Ordering::Greater { (sv, su) } else { (su, sv) };
    let (n, m) = (a.len() as f64, b.len() as f64);
    let sxx = kernel.pair_sum(a.points(), None)?.re;
    let syy = kernel.pair_sum(b.points(), None)?.re;
    let sxy = kernel.pair_sum(a.points(), Some(b.points()))?.re;
    let (sq, method) = match statistic {
        Statistic::V => ((sxx / (n * n) + syy / (m * m) - 2.0 * sxy / (n * m)).max(0.0), Method::GramV),
        Statistic::U => {
            if a.len() < 2 || b.len() < 2 {
                return Err(Error::InvalidInput("the U-statistic needs at least two samples per set".into()));
            }
            let dx = kernel.diag_sum(a.points())?;
            let dy = kernel.diag_sum(b.points())?;
            ((sxx - dx) / (n * (n - 1.0)) + (syy - dy) / (m * (m - 1.0)) - 2.0 * sxy / (n * m), Method::GramU)
        }
    };
    Ok(MmdEstimate::new(sq, method, su.len(), sv.len(), None))
}

/// Checks that `u` is a density on its grid.
pub fn validate_density(u: &GridFunction, name: &str) -> Result<()> {
    let top = u.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tol = 1e-12 * top.max(1e-300);
    if u.values().iter().any(|v| v.im.abs() > tol) {
        return Err(Error::NotADensity(format!("{name} has a nonzero imaginary part")));
    }
    if let Some(v) = u.values().iter().find(|v| v.re < -tol) {
        return Err(Error::NotADensity(format!("{name} takes the negative value {:.3e}", v.re)));
    }
    let mass = integrate(u).re;
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::NotADensity(format!("{name} integrates to {mass:.9}")));
    }
    Ok(())
}

/// Quadrature MMD between gridded densities.
///
/// Separable symbols are integrated over `x` on the dual of the density grid;
/// dense symbols must have their `y` lattice equal to the density grid.
pub fn mmd_density(u: &GridFunction, v: &GridFunction, sym: &Symbol) -> Result<MmdEstimate> {
    validate_density(u, "u")?;
    validate_density(v, "v")?;
    u.grid().ensure_compatible(v.grid(), "densities")?;
    if u.grid().dim() != sym.dim() {
        return Err(Error::GridMismatch("densities and symbol differ in dimension".into()));
    }
    let w: Vec<C64> = u.values().iter().zip(v.values()).map(|(a, b)| a - b).collect();
    let sq = density_squared(u.grid(), &w, sym)?;
    Ok(MmdEstimate::new(sq, Method::DensityGrid, u.grid().len(), v.grid().len(), Some(u.grid().clone())))
}

/// `\int |\int F(x, y) e^{i x.y} w(y) dy|^2 dx` for a signed measure density `w`.
pub(crate) fn density_squared(ygrid: &Grid, w: &[C64], sym: &Symbol) -> Result<f64> {
    match sym {
        Symbol::Separable(s) => {
            let xgrid = ygrid.dual();
            let d = ygrid.dim();
            let c = (2.0 * PI).powf(d as f64 / 2.0);
            let mut psi = vec![C64::new(0.0, 0.0); xgrid.len()];
            for t in s.terms() {
                let g = t.g.sample(ygrid)?;
                let gw: Vec<C64> = g.iter().zip(w).map(|(a, b)| a * b).collect();
                let phi = fourier(&GridFunction::new(ygrid.clone(), gw)?, Direction::Inverse);
                let f = t.f.sample(&xgrid)?;
                for k in 0..psi.len() {
                    psi[k] += t.coef * f[k] * phi.values()[k] * c;
                }
            }
            Ok(psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * xgrid.cell_volume())
        }
        Symbol::Dense(dsym) => {
            dsym.grid_y().ensure_compatible(ygrid, "dense symbol y-grid vs density grid")?;
            let gx = dsym.grid_x();
            let d = gx.dim();
            let dy = ygrid.cell_volume();
            let xs = gx.points();
            let ys = ygrid.points();
            let f = dsym.values();
            let mut sq = 0.0;
            for i in 0..xs.len() {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..ys.len() {
                    if w[k] == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let phase: f64 = (0..d).map(|a| xs[i][a] * ys[k][a]).sum();
                    acc += f[(i, k)] * C64::from_polar(1.0, phase) * w[k];
                }
                sq += (acc * dy).norm_sqr();
            }
            Ok(sq * gx.cell_volume())
        }
    }
}
