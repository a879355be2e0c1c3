//! Fitting a parametric sampler to data by minimizing the spectral MMD.
//!
//! The sampler is reparameterized: standard-normal and uniform draws are fixed
//! when the model is created, so the objective is a deterministic function of
//! the parameters.

mod optim;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use optim::{fd_gradient, nelder_mead, OptimResult};

use crate::error::{Error, Result};
use crate::mmd::{grid_too_coarse, SampleSet, SpectralWorkspace};
use crate::numgrid::{Grid, Point};
use crate::symbols::{Factor, SeparableSymbol};

/// Fits stop once the simplex diameter or gradient norm falls below this.
pub const CONVERGENCE_TOL: f64 = 1e-4;
pub const MIN_BUDGET: usize = 50;
pub const MAX_PARAMS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `[mean_1.., log_std_1..]`.
    Gaussian,
    /// `[mean_a, log_std_a, mean_b, log_std_b, logit_w]` per axis blocks; the
    /// first component is chosen with probability `sigmoid(logit_w)`.
    Mixture2,
}

impl Family {
    pub fn param_count(self, dim: usize) -> usize {
        match self {
            Family::Gaussian => 2 * dim,
            Family::Mixture2 => 4 * dim + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    NelderMead,
    FdGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricModel {
    family: Family,
    dim: usize,
    params: Vec<f64>,
    noise: Vec<Point>,
    uniforms: Vec<f64>,
    seed: u64,
}

impl ParametricModel {
    pub fn new(family: Family, dim: usize, params: Vec<f64>, noise_count: usize, seed: u64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidInput(format!("model dim must be 1 or 2, got {dim}")));
        }
        let want = family.param_count(dim);
        if want > MAX_PARAMS {
            return Err(Error::InvalidInput(format!(
                "{family:?} in {dim}D has {want} parameters; at most {MAX_PARAMS}"
            )));
        }
        if params.len() != want {
            return Err(Error::InvalidInput(format!(
                "{family:?} in {dim}D needs {want} parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| p.is_nan()) {
            return Err(Error::InvalidInput("model parameters must not be NaN".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = (0..noise_count)
            .map(|_| {
                let mut p = [0.0; 2];
                for v in p.iter_mut().take(dim) {
                    *v = StandardNormal.sample(&mut rng);
                }
                p
            })
            .collect();
        let uniforms = (0..noise_count).map(|_| rng.random::<f64>()).collect();
        Ok(Self { family, dim, params, noise, uniforms, seed })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn noise_count(&self) -> usize {
        self.noise.len()
    }

    /// The standard-normal draws.
    pub fn base_noise(&self) -> &[Point] {
        &self.noise
    }

    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        if params.len() != self.params.len() {
            return Err(Error::InvalidInput("parameter count changed".into()));
        }
        Ok(Self { params, ..self.clone() })
    }

    fn sample_with(&self, params: &[f64], n: usize) -> Result<SampleSet> {
        if n > self.noise.len() {
            return Err(Error::NoiseExhausted { requested: n, available: self.noise.len() });
        }
        let d = self.dim;
        let points = match self.family {
            Family::Gaussian => {
                let (mu, ls) = params.split_at(d);
                let sd: Vec<f64> = ls.iter().map(|v| v.exp()).collect();
                self.noise[..n]
                    .iter()
                    .map(|z| {
                        let mut p = [0.0; 2];
                        for a in 0..d {
                            p[a] = mu[a] + sd[a] * z[a];
                        }
                        p
                    })
                    .collect()
            }
            Family::Mixture2 => {
                let w = 1.0 / (1.0 + (-params[4 * d]).exp());
                self.noise[..n]
                    .iter()
                    .zip(&self.uniforms)
                    .map(|(z, u)| {
                        let base = if *u < w { 0 } else { 2 * d };
                        let mut p = [0.0; 2];
                        for a in 0..d {
                            let mu = params[base + a];
                            let sd = params[base + d + a].exp();
                            p[a] = mu + sd * z[a];
                        }
                        p
                    })
                    .collect()
            }
        };
        SampleSet::new(d, points).map(|s| s.with_seed(self.seed))
    }
}

pub fn sample_model(model: &ParametricModel, n: usize) -> Result<SampleSet> {
    model.sample_with(&model.params, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: Vec<f64>,
    pub objective: f64,
    /// MMD after each accepted step.
    pub trajectory: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
    pub status: FitStatus,
    pub optimizer: Optimizer,
    pub model_samples: usize,
    pub grid: Grid,
    pub warnings: Vec<String>,
}

/// Frequency grid for spectral fits: half-width `6 / w` for the narrowest
/// Gaussian `f` width `w` (at least 4), spacing `pi / (4 R)` for a sample radius `R`.
pub fn fit_grid(sym: &SeparableSymbol, radius: f64) -> Result<Grid> {
    let w = sym
        .terms()
        .iter()
        .filter_map(|t| match &t.f {
            Factor::Analytic(a) => a.gaussian_width(),
            Factor::Grid(_) => None,
        })
        .fold(f64::INFINITY, f64::min);
    if let Some(g) = sym.terms().iter().find_map(|t| t.f.grid()) {
        return Ok(g.clone());
    }
    let half = if w.is_finite() { (6.0 / w).max(4.0) } else { 8.0 };
    let spacing = std::f64::consts::PI / (4.0 * radius.max(1.0));
    let n = ((2.0 * half / spacing).ceil() as usize).next_power_of_two();
    Grid::new(sym.dim(), n.max(crate::numgrid::MIN_POINTS_PER_AXIS), half)
}

/// Sample count drawn from the model per objective evaluation when the data
/// set is larger.
pub const MODEL_SAMPLES: usize = 5000;

pub fn fit_mmd(
    data: &SampleSet,
    model: &ParametricModel,
    sym: &SeparableSymbol,
    optimizer: Optimizer,
    budget: usize,
) -> Result<FitResult> {
    if budget < MIN_BUDGET {
        return Err(Error::InvalidInput(format!("budget must be at least {MIN_BUDGET}, got {budget}")));
    }
    if data.dim() != model.dim() || sym.dim() != model.dim() {
        return Err(Error::InvalidInput("data, model and symbol differ in dimension".into()));
    }
    let m = model.noise_count().min(MODEL_SAMPLES.max(data.len()));
    let start = sample_model(model, m)?;
    let radius = 2.0 * data.radius().into_iter().chain(start.radius()).fold(0.0, f64::max) + 1.0;
    let grid = fit_grid(sym, radius)?;
    if sym.is_zero() {
        return Ok(FitResult {
            params: model.params.clone(),
            objective: 0.0,
            trajectory: vec![0.0],
            evaluations: 1,
            converged: true,
            status: FitStatus::Converged,
            optimizer,
            model_samples: m,
            grid,
            warnings: vec!["degenerate kernel: the symbol is zero, so the objective is identically 0".into()],
        });
    }
    let ws = SpectralWorkspace::new(sym, &grid)?;
    let data_emb = ws.embeddings(data)?;
    let mut objective = |theta: &[f64]| -> Result<f64> {
        let s = model.sample_with(theta, m)?;
        Ok(ws.squared(&data_emb, &ws.embeddings(&s)?).max(0.0).sqrt())
    };
    let res = match optimizer {
        Optimizer::NelderMead => nelder_mead(&mut objective, &model.params, 0.5, budget, CONVERGENCE_TOL)?,
        Optimizer::FdGradient => fd_gradient(&mut objective, &model.params, 1.0, budget, CONVERGENCE_TOL)?,
    };
    let mut warnings = Vec::new();
    let fitted = model.sample_with(&res.x, m)?;
    if grid_too_coarse(&grid, &[data, &fitted]) {
        warnings.push("fitted samples exceed the grid's aliasing radius".into());
    }
    if !res.converged {
        warnings.push(format!("evaluation budget of {budget} exhausted before convergence"));
    }
    Ok(FitResult {
        params: res.x,
        objective: res.fx,
        trajectory: res.trajectory,
        evaluations: res.evaluations,
        converged: res.converged,
        status: if res.converged { FitStatus::Converged } else { FitStatus::BudgetExhausted },
        optimizer,
        model_samples: m,
        grid,
        warnings,
    })
}
