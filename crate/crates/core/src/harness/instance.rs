//! Reproducible random instances: symbol parameters and Gaussian-mixture pairs.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmd::SampleSet;
use crate::numgrid::{integrate, Grid, GridFunction, Point};
use crate::symbols::{from_translation_invariant, AnalyticTerm, DenseSymbol, Factor, SeparableSymbol, Symbol, Term};

/// Smallest mixture variance, resolvable on the default harness grid.
pub const MIN_VARIANCE: f64 = 0.05;

/// Largest lattice size for which dense operators are assembled.
pub const MAX_DENSE_POINTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolFamily {
    SeparableGaussHermite,
    DenseGaussianEnvelope,
    TranslationInvariant,
}

impl SymbolFamily {
    pub const ALL: [SymbolFamily; 3] =
        [SymbolFamily::SeparableGaussHermite, SymbolFamily::DenseGaussianEnvelope, SymbolFamily::TranslationInvariant];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    /// Lattice of the `x` variable; `y` lives on its dual.
    pub grid: Grid,
    /// Inclusive range of separable ranks.
    pub rank_range: (usize, usize),
    /// Inclusive range of mixture component counts.
    pub components: (usize, usize),
    /// `None` cycles through every family by trial index.
    pub family: Option<SymbolFamily>,
}

impl InstanceSpec {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let (r0, r1) = self.rank_range;
        if r0 < 1 || r0 > r1 {
            return Err(Error::SpecError(format!("rank range [{r0}, {r1}] is empty or starts below 1")));
        }
        let (c0, c1) = self.components;
        if c0 < 1 || c0 > c1 {
            return Err(Error::SpecError(format!("component range [{c0}, {c1}] is empty or starts below 1")));
        }
        if self.grid.len() > MAX_DENSE_POINTS {
            return Err(Error::SpecError(format!(
                "grid has {} points; dense operators are limited to {MAX_DENSE_POINTS}",
                self.grid.len()
            )));
        }
        Ok(())
    }
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            grid: Grid::new(1, 128, 14.0).expect("valid default grid"),
            rank_range: (1, 3),
            components: (2, 4),
            family: None,
        }
    }
}

/// Gaussian mixture with diagonal covariances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl Mixture {
    pub fn single(mean: Vec<f64>, variance: Vec<f64>) -> Self {
        Self { weights: vec![1.0], means: vec![mean], variances: vec![variance] }
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, |m| m.len())
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((w, m), v)| {
                w * m
                    .iter()
                    .zip(v)
                    .zip(x)
                    .map(|((m, v), x)| (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt())
                    .product::<f64>()
            })
            .sum()
    }

    /// The pdf sampled on `grid` and rescaled to unit lattice mass.
    pub fn density_on(&self, grid: &Grid) -> Result<GridFunction> {
        let raw = GridFunction::from_real_fn(grid.clone(), |x| self.pdf(x))?;
        let mass = integrate(&raw).re;
        if mass.is_nan() || mass <= 0.0 {
            return Err(Error::SpecError("mixture has no mass on the grid".into()));
        }
        Ok(raw.scale(C64::new(1.0 / mass, 0.0)))
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim();
        let total: f64 = self.weights.iter().sum();
        let points: Vec<Point> = (0..n)
            .map(|_| {
                let mut u = rng.random::<f64>() * total;
                let mut c = self.weights.len() - 1;
                for (i, w) in self.weights.iter().enumerate() {
                    if u < *w {
                        c = i;
                        break;
                    }
                    u -= w;
                }
                let mut p = [0.0; 2];
                for (a, v) in p.iter_mut().enumerate().take(d) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = self.means[c][a] + self.variances[c][a].sqrt() * z;
                }
                p
            })
            .collect();
        Ok(SampleSet::new(d, points)?.with_seed(seed))
    }

    pub fn random(rng: &mut ChaCha8Rng, dim: usize, components: usize) -> Self {
        let raw: Vec<f64> = (0..components).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights = raw.iter().map(|w| w / total).collect();
        let means = (0..components).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let variances =
            (0..components).map(|_| (0..dim).map(|_| rng.random_range(MIN_VARIANCE..1.5)).collect()).collect();
        Self { weights, means, variances }
    }
}

/// One Gauss-Hermite factor `He_n((x - c)/w) exp(-|x - c|^2/(2 w^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteFactor {
    pub degree: Vec<usize>,
    pub width: f64,
    pub center: Vec<f64>,
}

impl HermiteFactor {
    fn factor(&self) -> Factor {
        Factor::Analytic(AnalyticTerm::GaussHermite {
            degree: self.degree.clone(),
            width: self.width,
            center: self.center.clone(),
            scale: C64::new(1.0, 0.0),
        })
    }

    fn random(rng: &mut ChaCha8Rng, dim: usize, widths: std::ops::Range<f64>) -> Self {
        Self {
            degree: (0..dim).map(|_| rng.random_range(0..=2)).collect(),
            width: rng.random_range(widths),
            center: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteTerm {
    pub coef: C64,
    pub f: HermiteFactor,
    /// `None` is the constant 1.
    pub g: Option<HermiteFactor>,
}

/// Parameters from which a symbol is rebuilt on any grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SymbolParams {
    SeparableGaussHermite {
        terms: Vec<HermiteTerm>,
    },
    /// `amp * prod_a M_q(x_a / a, y_a / b)` with the Mehler kernel
    /// `M_q(s, t) = exp(-(1 + q^2)(s^2 + t^2)/(2(1 - q^2)) + 2 q s t/(1 - q^2))`,
    /// whose singular values fall off like `q^k`.
    DenseGaussianEnvelope {
        amp: f64,
        a: f64,
        b: f64,
        q: f64,
    },
    /// Profile `k(tau) = sum_j w_j exp(-|tau|^2 / (2 l_j^2))`.
    TranslationInvariant {
        weights: Vec<f64>,
        lengths: Vec<f64>,
    },
}

impl SymbolParams {
    pub fn family(&self) -> SymbolFamily {
        match self {
            SymbolParams::SeparableGaussHermite { .. } => SymbolFamily::SeparableGaussHermite,
            SymbolParams::DenseGaussianEnvelope { .. } => SymbolFamily::DenseGaussianEnvelope,
            SymbolParams::TranslationInvariant { .. } => SymbolFamily::TranslationInvariant,
        }
    }

    pub fn random(rng: &mut ChaCha8Rng, family: SymbolFamily, spec: &InstanceSpec) -> Self {
        let d = spec.dim();
        match family {
            SymbolFamily::SeparableGaussHermite => {
                let rank = rng.random_range(spec.rank_range.0..=spec.rank_range.1);
                let terms = (0..rank)
                    .map(|_| {
                        let coef = C64::new(rng.random_range(-1.5..1.5), rng.random_range(-0.5..0.5));
                        let f = HermiteFactor::random(rng, d, 0.6..1.5);
                        let g =
                            if rng.random_bool(0.25) { None } else { Some(HermiteFactor::random(rng, d, 0.8..2.0)) };
                        HermiteTerm { coef, f, g }
                    })
                    .collect();
                SymbolParams::SeparableGaussHermite { terms }
            }
            SymbolFamily::DenseGaussianEnvelope => SymbolParams::DenseGaussianEnvelope {
                amp: rng.random_range(0.5..2.0),
                a: rng.random_range(0.7..1.5),
                b: rng.random_range(0.7..1.5),
                q: rng.random_range(0.2..0.7),
            },
            SymbolFamily::TranslationInvariant => {
                let k = rng.random_range(1..=2);
                SymbolParams::TranslationInvariant {
                    weights: (0..k).map(|_| rng.random_range(0.3..1.5)).collect(),
                    lengths: (0..k).map(|_| rng.random_range(0.5..2.0)).collect(),
                }
            }
        }
    }

    /// The symbol with `x` on `grid` and `y` on its dual.
    pub fn build(&self, grid: &Grid) -> Result<Symbol> {
        let d = grid.dim();
        match self {
            SymbolParams::SeparableGaussHermite { terms } => {
                let terms = terms
                    .iter()
                    .map(|t| {
                        let g = t.g.as_ref().map_or_else(|| Factor::constant(1.0), |g| g.factor());
                        Term::new(t.coef, t.f.factor(), g)
                    })
                    .collect();
                Ok(Symbol::Separable(SeparableSymbol::new(d, terms)?))
            }
            SymbolParams::DenseGaussianEnvelope { amp, a, b, q } => {
                let (q, amp, a, b) = (*q, *amp, *a, *b);
                let c1 = (1.0 + q * q) / (2.0 * (1.0 - q * q));
                let c2 = 2.0 * q / (1.0 - q * q);
                let dense = DenseSymbol::from_fn(grid.clone(), grid.dual(), |x, y| {
                    let e: f64 = (0..d)
                        .map(|k| {
                            let (s, t) = (x[k] / a, y[k] / b);
                            -c1 * (s * s + t * t) + c2 * s * t
                        })
                        .sum();
                    C64::new(amp * e.exp(), 0.0)
                })?;
                Ok(Symbol::Dense(dense))
            }
            SymbolParams::TranslationInvariant { weights, lengths } => {
                let profile = GridFunction::from_real_fn(grid.dual(), |tau| {
                    let r2: f64 = tau.iter().map(|v| v * v).sum();
                    weights.iter().zip(lengths).map(|(w, l)| w * (-r2 / (2.0 * l * l)).exp()).sum()
                })?;
                Ok(Symbol::Separable(from_translation_invariant(&profile)?))
            }
        }
    }
}

/// Inputs of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub seed: u64,
    pub grid: Grid,
    /// A primary and a secondary symbol of the same family.
    pub symbols: [SymbolParams; 2],
    pub u: Mixture,
    pub v: Mixture,
}

impl Instance {
    pub fn family(&self) -> SymbolFamily {
        self.symbols[0].family()
    }

    /// Densities on the `y` lattice, the dual of the instance grid.
    pub fn densities(&self) -> Result<(GridFunction, GridFunction)> {
        let yg = self.grid.dual();
        Ok((self.u.density_on(&yg)?, self.v.density_on(&yg)?))
    }

    /// Auxiliary stream for checks that draw extra parameters.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream + 1);
        rng
    }
}

pub fn generate_instance(seed: u64, spec: &InstanceSpec, trial: usize) -> Result<Instance> {
    spec.validate()?;
    let family = spec.family.unwrap_or(SymbolFamily::ALL[trial % SymbolFamily::ALL.len()]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.dim();
    let symbols = [SymbolParams::random(&mut rng, family, spec), SymbolParams::random(&mut rng, family, spec)];
    let cu = rng.random_range(spec.components.0..=spec.components.1);
    let cv = rng.random_range(spec.components.0..=spec.components.1);
    let u = Mixture::random(&mut rng, d, cu);
    let v = Mixture::random(&mut rng, d, cv);
    Ok(Instance { seed, grid: spec.grid.clone(), symbols, u, v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let spec = InstanceSpec::default();
        assert_eq!(generate_instance(7, &spec, 0).unwrap(), generate_instance(7, &spec, 0).unwrap());
        assert_ne!(generate_instance(7, &spec, 0).unwrap(), generate_instance(8, &spec, 0).unwrap());
    }

    #[test]
    fn rank_and_component_ranges() {
        let spec = InstanceSpec {
            rank_range: (1, 1),
            components: (1, 1),
            family: Some(SymbolFamily::SeparableGaussHermite),
            ..InstanceSpec::default()
        };
        for seed in 0..5 {
            let inst = generate_instance(seed, &spec, 0).unwrap();
            match inst.symbols[0].build(&spec.grid).unwrap() {
                Symbol::Separable(s) => assert_eq!(s.rank(), 1),
                _ => panic!("separable expected"),
            }
            assert_eq!(inst.u.weights.len(), 1);
            assert_eq!(inst.v.weights.len(), 1);
        }
        let bad = InstanceSpec { rank_range: (2, 1), ..InstanceSpec::default() };
        assert!(matches!(generate_instance(0, &bad, 0), Err(Error::SpecError(_))));
    }

    #[test]
    fn densities_have_unit_mass() {
        let spec = InstanceSpec::default();
        for t in 0..6 {
            let inst = generate_instance(t as u64, &spec, t).unwrap();
            let (u, v) = inst.densities().unwrap();
            assert!((integrate(&u).re - 1.0).abs() < 1e-8);
            assert!((integrate(&v).re - 1.0).abs() < 1e-8);
            assert!(inst.u.variances.iter().flatten().all(|v| *v >= MIN_VARIANCE));
            inst.symbols[1].build(&spec.grid).unwrap();
        }
    }

    #[test]
    fn mixture_samples_match_moments() {
        let m = Mixture {
            weights: vec![0.3, 0.7],
            means: vec![vec![-1.0], vec![2.0]],
            variances: vec![vec![0.5], vec![1.0]],
        };
        let s = m.sample(20_000, 3).unwrap();
        let mean = s.mean()[0];
        assert!((mean - (0.7 * 2.0 - 0.3)).abs() < 0.05);
        assert_eq!(m.sample(10, 3).unwrap(), m.sample(10, 3).unwrap());
    }
}
