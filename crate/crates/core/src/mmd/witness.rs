use num_complex::Complex64 as C64;

use super::{grid_too_coarse, SampleSet, SpectralWorkspace};
use crate::error::{Error, Result};
use crate::numgrid::{inner_product, Grid, GridFunction};
use crate::symbols::SeparableSymbol;

/// Witnesses below this spectral MMD are undefined.
const DEGENERATE_MMD: f64 = 1e-14;

/// Unit-norm maximizer `f* = psi / ||psi||` of `Re <h, psi>` over the L2 ball,
/// with `psi = sum_i c_i f_i (phi_i^u - phi_i^v)`.
#[derive(Debug, Clone)]
pub struct WitnessFunction {
    pub f_star: GridFunction,
    pub psi: GridFunction,
    /// `<f*, psi> = ||psi||`, the spectral MMD.
    pub objective: f64,
    pub grid_too_coarse: bool,
    sym: SeparableSymbol,
}

impl WitnessFunction {
    /// `Re <h, psi>` for a competitor `h`.
    pub fn objective_of(&self, h: &GridFunction) -> Result<f64> {
        Ok(inner_product(h, &self.psi)?.re)
    }

    /// Critic on the sample side: its mean under `u` minus its mean under `v`
    /// equals the objective.
    pub fn critic_at(&self, y: &[f64]) -> Result<C64> {
        let grid = self.f_star.grid();
        let d = grid.dim();
        let dx = grid.cell_volume();
        let mut total = C64::new(0.0, 0.0);
        for t in self.sym.terms() {
            let f = t.f.sample(grid)?;
            let mut acc = C64::new(0.0, 0.0);
            for (k, (fs, fi)) in self.f_star.values().iter().zip(&f).enumerate() {
                let x = grid.point(k);
                let phase: f64 = (0..d).map(|a| x[a] * y[a]).sum();
                acc += fs.conj() * fi * C64::from_polar(1.0, phase);
            }
            total += t.coef * t.g.eval(y)? * acc * dx;
        }
        Ok(total)
    }
}

pub fn witness(su: &SampleSet, sv: &SampleSet, sym: &SeparableSymbol, grid: &Grid) -> Result<WitnessFunction> {
    let ws = SpectralWorkspace::new(sym, grid)?;
    let psi = ws.psi(&ws.embeddings(su)?, &ws.embeddings(sv)?);
    let sq: f64 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.cell_volume();
    let objective = sq.sqrt();
    if objective <= DEGENERATE_MMD {
        return Err(Error::DegenerateWitness);
    }
    let psi = GridFunction::new(grid.clone(), psi)?;
    let f_star = psi.scale(C64::new(1.0 / objective, 0.0));
    Ok(WitnessFunction { f_star, psi, objective, grid_too_coarse: grid_too_coarse(grid, &[su, sv]), sym: sym.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmd::mmd_spectral;
    use crate::numgrid::{norm, Norm};
    use crate::symbols::{AnalyticTerm, Factor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (SampleSet, SampleSet, SeparableSymbol, Grid) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u: Vec<f64> = (0..200).map(|_| rng.random_range(-2.0..2.0)).collect();
        let v: Vec<f64> = (0..150).map(|_| rng.random_range(-1.0..3.0)).collect();
        let sym = SeparableSymbol::rank_one(1, Factor::Analytic(AnalyticTerm::gaussian(1, 1.0)), Factor::constant(1.0))
            .unwrap();
        (SampleSet::from_1d(&u).unwrap(), SampleSet::from_1d(&v).unwrap(), sym, Grid::new(1, 256, 10.0).unwrap())
    }

    #[test]
    fn witness_attains_spectral_mmd() {
        let (u, v, sym, g) = setup();
        let w = witness(&u, &v, &sym, &g).unwrap();
        assert!((norm(&w.f_star, Norm::L2) - 1.0).abs() < 1e-10);
        let m = mmd_spectral(&u, &v, &sym, &g).unwrap().value;
        assert!((w.objective - m).abs() <= 1e-8 * m);
        assert!((w.objective_of(&w.f_star).unwrap() - m).abs() <= 1e-8 * m);
    }

    #[test]
    fn competitors_do_not_beat_witness() {
        let (u, v, sym, g) = setup();
        let w = witness(&u, &v, &sym, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let vals: Vec<C64> =
                (0..g.len()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let h = GridFunction::new(g.clone(), vals).unwrap();
            let h = h.scale(C64::new(1.0 / norm(&h, Norm::L2), 0.0));
            assert!(w.objective_of(&h).unwrap() <= w.objective + 1e-10);
        }
    }

    #[test]
    fn critic_mean_difference_is_objective() {
        let (u, v, sym, g) = setup();
        let w = witness(&u, &v, &sym, &g).unwrap();
        let mean = |s: &SampleSet| -> C64 {
            s.points().iter().map(|p| w.critic_at(&p[..1]).unwrap()).sum::<C64>() / s.len() as f64
        };
        let diff = mean(&u) - mean(&v);
        assert!((diff.re - w.objective).abs() < 1e-8 * w.objective);
    }

    #[test]
    fn identical_samples_are_degenerate() {
        let (u, _, sym, g) = setup();
        assert!(matches!(witness(&u, &u, &sym, &g), Err(Error::DegenerateWitness)));
    }
}
