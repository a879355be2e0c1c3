//! Local moments `m(t) = E[conj(g(x)) | x + e = t]` with noise `e ~ p`.

use num_complex::Complex64 as C64;

use super::SampleSet;
use crate::error::{Error, Result};
use crate::numgrid::{Grid, GridFunction};
use crate::symbols::{CanonicalSymbol, Factor};

/// Conditioning mass below which the moment is undefined.
const MIN_DENOMINATOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub enum MomentSource<'a> {
    Samples(&'a SampleSet),
    Density(&'a GridFunction),
}

/// Noise pdf at `z`; zero outside its grid box.
fn noise_at(p: &GridFunction, z: &[f64]) -> f64 {
    p.interpolate(z).map_or(0.0, |v| v.re)
}

fn moment_with(
    t: &[f64],
    source: MomentSource<'_>,
    feature: &dyn Fn(&[f64]) -> Result<C64>,
    p: &GridFunction,
) -> Result<C64> {
    let d = t.len();
    let mut num = C64::new(0.0, 0.0);
    let mut den = 0.0;
    let mut z = [0.0; 2];
    match source {
        MomentSource::Samples(s) => {
            for x in s.points() {
                for a in 0..d {
                    z[a] = t[a] - x[a];
                }
                let w = noise_at(p, &z[..d]);
                if w != 0.0 {
                    num += feature(&x[..d])?.conj() * w;
                    den += w;
                }
            }
            num /= s.len() as f64;
            den /= s.len() as f64;
        }
        MomentSource::Density(u) => {
            let g = u.grid();
            let dv = g.cell_volume();
            for (k, uk) in u.values().iter().enumerate() {
                if uk.re == 0.0 {
                    continue;
                }
                let x = g.point(k);
                for a in 0..d {
                    z[a] = t[a] - x[a];
                }
                let w = noise_at(p, &z[..d]) * uk.re * dv;
                if w != 0.0 {
                    num += feature(&x[..d])?.conj() * w;
                    den += w;
                }
            }
        }
    }
    if den.is_nan() || den < MIN_DENOMINATOR {
        return Err(Error::UnsupportedPoint(t.to_vec()));
    }
    Ok(num / den)
}

/// `(\int conj(g(x)) u(x) p(t - x) dx) / (\int u(x) p(t - x) dx)`, or the
/// sample average form when `source` is a sample set.
pub fn local_moment(t: &[f64], source: MomentSource<'_>, g: &Factor, p: &GridFunction) -> Result<C64> {
    if t.len() != p.grid().dim() {
        return Err(Error::InvalidInput("point and noise pdf differ in dimension".into()));
    }
    moment_with(t, source, &|x| g.eval(x), p)
}

/// `m_i(t, u) - m_i(t, v)` on a grid; `None` where either moment is undefined.
#[derive(Debug, Clone)]
pub struct MomentField {
    pub grid: Grid,
    pub values: Vec<Option<C64>>,
}

/// One field per canonical term, with the term's pdf as noise and
/// `coef_i g_i` as feature.
pub fn moment_field(su: &SampleSet, sv: &SampleSet, canon: &CanonicalSymbol, grid: &Grid) -> Result<Vec<MomentField>> {
    use rayon::prelude::*;
    let d = grid.dim();
    let mut out = Vec::with_capacity(canon.len());
    for (i, p) in canon.pdfs().iter().enumerate() {
        let feature = |y: &[f64]| canon.feature(i, y);
        let values: Vec<Option<C64>> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let t = grid.point(k);
                let a = moment_with(&t[..d], MomentSource::Samples(su), &feature, p).ok()?;
                let b = moment_with(&t[..d], MomentSource::Samples(sv), &feature, p).ok()?;
                Some(a - b)
            })
            .collect();
        out.push(MomentField { grid: grid.clone(), values });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{canonicalize, AnalyticTerm, Polynomial, SeparableSymbol};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    fn std_pdf(grid: &Grid) -> GridFunction {
        GridFunction::from_real_fn(grid.clone(), |x| (-x[0] * x[0] / 2.0).exp() / (2.0 * PI).sqrt()).unwrap()
    }

    fn coord() -> Factor {
        Factor::Analytic(AnalyticTerm::PolyGauss {
            poly: Polynomial::univariate(1, 0, &[0.0, 1.0]).unwrap(),
            width: None,
        })
    }

    #[test]
    fn constant_feature_has_constant_moment() {
        let grid = Grid::new(1, 512, 16.0).unwrap();
        let u = std_pdf(&grid);
        let m = local_moment(&[0.7], MomentSource::Density(&u), &Factor::constant(1.0), &u).unwrap();
        assert!((m - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn gaussian_conditioning_halves_the_point() {
        let grid = Grid::new(1, 512, 16.0).unwrap();
        let u = std_pdf(&grid);
        for k in [200usize, 256, 270, 300] {
            let t = grid.point(k)[0];
            let m = local_moment(&[t], MomentSource::Density(&u), &coord(), &u).unwrap();
            assert!((m.re - t / 2.0).abs() < 1e-4, "t = {t}");
        }
    }

    #[test]
    fn far_point_is_unsupported() {
        let grid = Grid::new(1, 512, 16.0).unwrap();
        let u = std_pdf(&grid);
        let s = SampleSet::from_1d(&[0.0, 0.5]).unwrap();
        assert!(matches!(
            local_moment(&[60.0], MomentSource::Samples(&s), &coord(), &u),
            Err(Error::UnsupportedPoint(_))
        ));
    }

    #[test]
    fn shifted_gaussians_give_constant_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 20_000;
        let a: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..n).map(|_| 1.0 + Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        let (su, sv) = (SampleSet::from_1d(&a).unwrap(), SampleSet::from_1d(&b).unwrap());
        // Feature x with a unit Gaussian pdf as noise.
        let sym = SeparableSymbol::rank_one(1, Factor::Analytic(AnalyticTerm::gaussian(1, 1.0)), coord()).unwrap();
        let canon = canonicalize(&sym).unwrap();
        assert_eq!(canon.len(), 1);
        let scale = canon.symbol().terms()[0].coef.re;
        let grid = Grid::new(1, 32, 4.0).unwrap();
        let fields = moment_field(&su, &sv, &canon, &grid).unwrap();
        for (k, v) in fields[0].values.iter().enumerate() {
            let t = grid.point(k)[0];
            if t.abs() <= 1.0 {
                let v = v.expect("defined in the bulk");
                assert!((v.re / scale + 0.5).abs() < 0.1, "t = {t}: {}", v.re / scale);
            }
        }
        let same = moment_field(&su, &su, &canon, &grid).unwrap();
        assert!(same[0].values.iter().flatten().all(|v| *v == C64::new(0.0, 0.0)));
    }
}
