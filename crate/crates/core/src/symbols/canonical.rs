//! Normal form in which every `f_i` is the inverse transform of a pdf.
//!
//! Each `f` is split into Hermitian-symmetric parts `h1 + i h2` (so both
//! transforms are real), and each real transform into its positive and
//! negative parts. Normalizing the parts to unit mass and moving the masses
//! into the coefficients gives at most four pdf terms per input term.

use num_complex::Complex64 as C64;

use super::{Factor, SeparableSymbol, Term};
use crate::error::{Error, Result};
use crate::numgrid::{fourier, integrate, Direction, Grid, GridFunction};

/// Parts whose pdf mass falls below this are dropped.
pub const PDF_DROP_MASS: f64 = 1e-12;

/// Probe lattice size per axis for reconstruction checks.
const PROBES_PER_AXIS: usize = 32;

#[derive(Debug, Clone)]
pub struct CanonicalSymbol {
    symbol: SeparableSymbol,
    pdfs: Vec<GridFunction>,
    masses: Vec<f64>,
    source: Vec<usize>,
    source_rank: usize,
}

impl CanonicalSymbol {
    /// Terms `coef_i h_i(x) g_i(y)` with `F[h_i] = p_i`.
    pub fn symbol(&self) -> &SeparableSymbol {
        &self.symbol
    }

    /// The pdfs `p_i` on the dual of the working grid.
    pub fn pdfs(&self) -> &[GridFunction] {
        &self.pdfs
    }

    /// L1 mass of the transform part that produced each term.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Index of the input term each output term came from.
    pub fn source_terms(&self) -> &[usize] {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.symbol.rank()
    }

    pub fn is_empty(&self) -> bool {
        self.symbol.rank() == 0
    }

    /// Set when every part was dropped.
    pub fn is_zero(&self) -> bool {
        self.is_empty()
    }

    pub fn source_rank(&self) -> usize {
        self.source_rank
    }

    /// Feature `coef_i * g_i(y)` of term `i`.
    pub fn feature(&self, i: usize, y: &[f64]) -> Result<C64> {
        let t = &self.symbol.terms()[i];
        Ok(t.coef * t.g.eval(y)?)
    }

    /// Max `|sum coef_i h_i g_i - original|` and max `|original|` over a
    /// probe lattice of `x` points on the working grid and `y` points on `y_grid`.
    pub fn reconstruction_error(&self, original: &SeparableSymbol, y_grid: &Grid) -> Result<(f64, f64)> {
        let x_grid = match self.pdfs.first() {
            Some(p) => p.grid().dual(),
            None => original.working_grid()?,
        };
        let xs = probe_points(&x_grid);
        let ys = probe_points(y_grid);
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        let d = x_grid.dim();
        for x in &xs {
            for y in &ys {
                let a = self.symbol.eval(&x[..d], &y[..d])?;
                let b = original.eval(&x[..d], &y[..d])?;
                err = err.max((a - b).norm());
                scale = scale.max(b.norm());
            }
        }
        Ok((err, scale))
    }
}

/// Every lattice point whose per-axis index is a multiple of `n / 32`.
pub(crate) fn probe_points(grid: &Grid) -> Vec<[f64; 2]> {
    let n = grid.points_per_axis();
    let stride = (n / PROBES_PER_AXIS).max(1);
    let idx: Vec<usize> = (0..n).step_by(stride).collect();
    let mut out = Vec::new();
    match grid.dim() {
        1 => {
            for &i in &idx {
                out.push(grid.point(grid.flatten([i, 0])));
            }
        }
        _ => {
            for &i in &idx {
                for &j in &idx {
                    out.push(grid.point(grid.flatten([i, j])));
                }
            }
        }
    }
    out
}

/// Canonicalizes on the symbol's working grid.
pub fn canonicalize(sym: &SeparableSymbol) -> Result<CanonicalSymbol> {
    let grid = sym.working_grid()?;
    canonicalize_on(sym, &grid)
}

pub fn canonicalize_on(sym: &SeparableSymbol, grid: &Grid) -> Result<CanonicalSymbol> {
    if grid.dim() != sym.dim() {
        return Err(Error::GridMismatch("canonicalization grid must match the symbol dimension".into()));
    }
    let mut terms = Vec::new();
    let mut pdfs = Vec::new();
    let mut masses = Vec::new();
    let mut source = Vec::new();
    let n = grid.len();
    for (ti, t) in sym.terms().iter().enumerate() {
        if t.coef == C64::new(0.0, 0.0) || t.g.is_zero() {
            continue;
        }
        let f = t.f.sample(grid)?;
        let mut h1 = Vec::with_capacity(n);
        let mut h2 = Vec::with_capacity(n);
        for j in 0..n {
            let a = f[j];
            let b = f[grid.reflected_index(j)].conj();
            h1.push((a + b) * 0.5);
            h2.push((a - b) * C64::new(0.0, -0.5));
        }
        let parts = [(h1, t.coef), (h2, t.coef * C64::new(0.0, 1.0))];
        for (h, coef) in parts {
            let hf = GridFunction::new(grid.clone(), h)?;
            if hf.is_zero() {
                continue;
            }
            let spec = fourier(&hf, Direction::Forward);
            if spec.values().iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(Error::DegenerateTerm(format!("term {ti}: transform is not finite")));
            }
            let dual = spec.grid().clone();
            for sign in [1.0, -1.0] {
                let part: Vec<C64> = spec.values().iter().map(|v| C64::new((sign * v.re).max(0.0), 0.0)).collect();
                let p = GridFunction::new(dual.clone(), part)?;
                let mass = integrate(&p).re;
                if mass < PDF_DROP_MASS {
                    continue;
                }
                let pdf = p.scale(C64::new(1.0 / mass, 0.0));
                let hi = fourier(&pdf, Direction::Inverse);
                terms.push(Term::new(coef * (sign * mass), Factor::Grid(hi), t.g.clone()));
                pdfs.push(pdf);
                masses.push(mass);
                source.push(ti);
            }
        }
    }
    Ok(CanonicalSymbol {
        symbol: SeparableSymbol::new(sym.dim(), terms)?,
        pdfs,
        masses,
        source,
        source_rank: sym.rank(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numgrid::norm;
    use crate::numgrid::Norm;
    use crate::symbols::{default_grid, AnalyticTerm, Polynomial};
    use std::f64::consts::PI;

    fn check_pdfs(c: &CanonicalSymbol) {
        for t in c.symbol().terms() {
            let Factor::Grid(h) = &t.f else { panic!("grid factor expected") };
            let p = fourier(h, Direction::Forward);
            let min_re = p.values().iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
            let max_im = p.values().iter().map(|v| v.im.abs()).fold(0.0, f64::max);
            assert!(min_re >= -1e-9 && max_im <= 1e-9);
            assert!((integrate(&p).re - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn positive_transform_gives_one_term() {
        let s = SeparableSymbol::rank_one(1, Factor::Analytic(AnalyticTerm::gaussian(1, 1.0)), Factor::constant(1.0))
            .unwrap();
        let c = canonicalize(&s).unwrap();
        assert_eq!(c.len(), 1);
        // the transform of e^{-x^2/2} is e^{-y^2/2}, of L1 mass sqrt(2 pi)
        assert!((c.masses()[0] - (2.0 * PI).sqrt()).abs() < 1e-10);
        assert!((c.symbol().terms()[0].coef.re - (2.0 * PI).sqrt()).abs() < 1e-10);
        let p = &c.pdfs()[0];
        for (i, v) in p.values().iter().enumerate() {
            let y = p.grid().point(i)[0];
            assert!((v.re - (-y * y / 2.0).exp() / (2.0 * PI).sqrt()).abs() < 1e-10);
        }
        check_pdfs(&c);
        let (err, scale) = c.reconstruction_error(&s, &default_grid(1).unwrap().dual()).unwrap();
        assert!(err <= 1e-8 * scale);
    }

    #[test]
    fn sign_changing_transform_splits_into_lobes() {
        // x^2 e^{-x^2/2} has transform (1 - y^2) e^{-y^2/2}
        let f =
            AnalyticTerm::PolyGauss { poly: Polynomial::univariate(1, 0, &[0.0, 0.0, 1.0]).unwrap(), width: Some(1.0) };
        let s = SeparableSymbol::rank_one(1, Factor::Analytic(f), Factor::constant(1.0)).unwrap();
        let c = canonicalize(&s).unwrap();
        assert_eq!(c.len(), 2);
        // each lobe has mass 2 e^{-1/2}; the lattice resolves the sign change
        // at |y| = 1 only to within a cell, while the two masses agree because
        // the transform integrates to sqrt(2 pi) f(0) = 0
        let lobe = 2.0 * (-0.5f64).exp();
        for m in c.masses() {
            assert!((m - lobe).abs() < 1e-2, "mass {m}");
        }
        assert!((c.masses()[0] - c.masses()[1]).abs() < 1e-10);
        let dual = default_grid(1).unwrap().dual();
        let direct: f64 = (0..dual.len())
            .map(|k| {
                let y = dual.point(k)[0];
                ((1.0 - y * y) * (-y * y / 2.0).exp()).max(0.0) * dual.spacing(0)
            })
            .sum();
        assert!((c.masses()[0] - direct).abs() < 1e-8);
        check_pdfs(&c);
        let (err, scale) = c.reconstruction_error(&s, &default_grid(1).unwrap().dual()).unwrap();
        assert!(err <= 1e-8 * scale);
    }

    #[test]
    fn hermite_two_transform_is_single_signed() {
        // (x^2 - 1) e^{-x^2/2} transforms to -y^2 e^{-y^2/2}
        let f =
            AnalyticTerm::GaussHermite { degree: vec![2], width: 1.0, center: vec![0.0], scale: C64::new(1.0, 0.0) };
        let s = SeparableSymbol::rank_one(1, Factor::Analytic(f), Factor::constant(1.0)).unwrap();
        let c = canonicalize(&s).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c.masses()[0] - (2.0 * PI).sqrt()).abs() < 1e-8);
        assert!(c.symbol().terms()[0].coef.re < 0.0);
    }

    #[test]
    fn zero_symbol_is_empty() {
        let c = canonicalize(&SeparableSymbol::zero(1)).unwrap();
        assert!(c.is_zero());
        assert_eq!(c.len(), 0);
    }

    #[test]
    fn off_center_complex_term_stays_within_four() {
        let f =
            AnalyticTerm::GaussHermite { degree: vec![1], width: 0.7, center: vec![0.9], scale: C64::new(0.3, -1.2) };
        let s = SeparableSymbol::rank_one(1, Factor::Analytic(f), Factor::constant(2.0)).unwrap();
        let c = canonicalize(&s).unwrap();
        assert!(c.len() <= 4 && c.len() >= 2);
        check_pdfs(&c);
        let (err, scale) = c.reconstruction_error(&s, &default_grid(1).unwrap().dual()).unwrap();
        assert!(err <= 1e-8 * scale, "err {err} scale {scale}");
        let sampled = GridFunction::new(
            default_grid(1).unwrap(),
            c.symbol().terms()[0].f.sample(&default_grid(1).unwrap()).unwrap(),
        )
        .unwrap();
        assert!(norm(&sampled, Norm::Linf) > 0.0);
    }
}
