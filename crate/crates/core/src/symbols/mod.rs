//! Symbols `F(x, y)` of pseudo-differential operators.
//!
//! A [`SeparableSymbol`] is a finite sum `sum_i c_i f_i(x) g_i(y)` whose
//! factors are analytic or sampled on a grid. A [`DenseSymbol`] stores
//! `F(x_i, y_j)` on a lattice pair. Constructions for translation-invariant
//! kernels, the universality family and the pdf normal form live in the
//! submodules.

pub mod analytic;
mod canonical;
mod universality;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub use analytic::{AnalyticTerm, MultiIndex, Polynomial};
pub use canonical::{canonicalize, canonicalize_on, CanonicalSymbol, PDF_DROP_MASS};
pub use universality::{universality_operator, universality_symbol, UniversalityParts};

use crate::error::{Error, Result};
use crate::numgrid::{fourier, Direction, Grid, GridFunction, Norm};

/// Desk-scale working grid: 1D `(512, 16)`, 2D `(64, 8)`.
pub fn default_grid(dim: usize) -> Result<Grid> {
    match dim {
        1 => Grid::new(1, 512, 16.0),
        2 => Grid::new(2, 64, 8.0),
        _ => Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}"))),
    }
}

/// One factor of a separable term.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    Analytic(AnalyticTerm),
    /// Sampled factor, evaluated off-lattice by multilinear interpolation.
    Grid(GridFunction),
}

impl Factor {
    pub fn constant(v: f64) -> Self {
        Factor::Analytic(AnalyticTerm::constant(v))
    }

    /// `None` for constants, which fit any dimension.
    pub fn dim(&self) -> Result<Option<usize>> {
        match self {
            Factor::Analytic(t) => t.validate(),
            Factor::Grid(g) => Ok(Some(g.grid().dim())),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<C64> {
        match self {
            Factor::Analytic(t) => Ok(t.eval(x)),
            Factor::Grid(g) => {
                g.interpolate(x).ok_or_else(|| Error::OutOfDomain(format!("{x:?} outside the factor's grid box")))
            }
        }
    }

    /// Values on every lattice point; direct copy when the factor lives on `grid`.
    pub fn sample(&self, grid: &Grid) -> Result<Vec<C64>> {
        if let Factor::Grid(g) = self {
            if g.grid().compatible(grid) {
                return Ok(g.values().to_vec());
            }
        }
        let dim = grid.dim();
        (0..grid.len()).map(|i| self.eval(&grid.point(i)[..dim])).collect()
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Factor::Analytic(t) => t.is_zero(),
            Factor::Grid(g) => g.is_zero(),
        }
    }

    pub fn grid(&self) -> Option<&Grid> {
        match self {
            Factor::Grid(g) => Some(g.grid()),
            Factor::Analytic(_) => None,
        }
    }
}

/// `coef * f(x) * g(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: C64,
    pub f: Factor,
    pub g: Factor,
}

impl Term {
    pub fn new(coef: C64, f: Factor, g: Factor) -> Self {
        Self { coef, f, g }
    }

    pub fn real(coef: f64, f: Factor, g: Factor) -> Self {
        Self { coef: C64::new(coef, 0.0), f, g }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableSymbol {
    dim: usize,
    terms: Vec<Term>,
}

impl SeparableSymbol {
    /// An empty term list is the zero symbol.
    pub fn new(dim: usize, terms: Vec<Term>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidInput(format!("symbol dim must be 1 or 2, got {dim}")));
        }
        for (i, t) in terms.iter().enumerate() {
            if !(t.coef.re.is_finite() && t.coef.im.is_finite()) {
                return Err(Error::InvalidInput(format!("term {i}: non-finite coefficient")));
            }
            for (which, fac) in [("f", &t.f), ("g", &t.g)] {
                if let Some(d) = fac.dim()? {
                    if d != dim {
                        return Err(Error::InvalidInput(format!("term {i}: {which} has dim {d}, symbol has {dim}")));
                    }
                }
            }
        }
        Ok(Self { dim, terms })
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    /// Rank-1 `f(x) * g(y)` with unit coefficient.
    pub fn rank_one(dim: usize, f: Factor, g: Factor) -> Result<Self> {
        Self::new(dim, vec![Term::real(1.0, f, g)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coef == C64::new(0.0, 0.0) || t.f.is_zero() || t.g.is_zero())
    }

    pub fn scale(&self, k: C64) -> Self {
        let terms = self.terms.iter().map(|t| Term { coef: t.coef * k, ..t.clone() }).collect();
        Self { dim: self.dim, terms }
    }

    pub fn neg(&self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }

    /// Grid of the first sampled `f` factor, else the default grid.
    pub fn working_grid(&self) -> Result<Grid> {
        for t in &self.terms {
            if let Factor::Grid(g) = &t.f {
                return Ok(g.grid().clone());
            }
        }
        default_grid(self.dim)
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<C64> {
        let mut s = C64::new(0.0, 0.0);
        for t in &self.terms {
            s += t.coef * t.f.eval(x)? * t.g.eval(y)?;
        }
        Ok(s)
    }

    /// Dimension of the span of the `g_i` sampled on `grid` (relative tolerance 1e-10).
    pub fn feature_dim(&self, grid: &Grid) -> Result<usize> {
        if self.terms.is_empty() {
            return Ok(0);
        }
        let cols: Vec<Vec<C64>> = self.terms.iter().map(|t| t.g.sample(grid)).collect::<Result<_>>()?;
        let m = DMatrix::from_fn(grid.len(), cols.len(), |i, j| cols[j][i]);
        let sv = m.singular_values();
        let top = sv.iter().cloned().fold(0.0, f64::max);
        Ok(sv.iter().filter(|s| **s > 1e-10 * top && top > 0.0).count())
    }
}

/// `F(x_i, y_j)` on a lattice pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymbol {
    grid_x: Grid,
    grid_y: Grid,
    values: DMatrix<C64>,
}

impl DenseSymbol {
    pub fn new(grid_x: Grid, grid_y: Grid, values: DMatrix<C64>) -> Result<Self> {
        if grid_x.dim() != grid_y.dim() {
            return Err(Error::GridMismatch("dense symbol grids differ in dimension".into()));
        }
        if values.nrows() != grid_x.len() || values.ncols() != grid_y.len() {
            return Err(Error::InvalidInput(format!(
                "dense symbol is {}x{}, grids need {}x{}",
                values.nrows(),
                values.ncols(),
                grid_x.len(),
                grid_y.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidInput("dense symbol has non-finite entries".into()));
        }
        Ok(Self { grid_x, grid_y, values })
    }

    pub fn from_fn(grid_x: Grid, grid_y: Grid, f: impl Fn(&[f64], &[f64]) -> C64) -> Result<Self> {
        let d = grid_x.dim();
        let xs = grid_x.points();
        let ys = grid_y.points();
        let values = DMatrix::from_fn(xs.len(), ys.len(), |i, j| f(&xs[i][..d], &ys[j][..d]));
        Self::new(grid_x, grid_y, values)
    }

    pub fn zeros(grid_x: Grid, grid_y: Grid) -> Self {
        let values = DMatrix::zeros(grid_x.len(), grid_y.len());
        Self { grid_x, grid_y, values }
    }

    pub fn grid_x(&self) -> &Grid {
        &self.grid_x
    }

    pub fn grid_y(&self) -> &Grid {
        &self.grid_y
    }

    pub fn values(&self) -> &DMatrix<C64> {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.grid_x.dim()
    }

    /// Nearest-lattice lookup.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<C64> {
        let i = self
            .grid_x
            .nearest_index(x)
            .ok_or_else(|| Error::OutOfDomain(format!("x = {x:?} outside the symbol's grid")))?;
        let j = self
            .grid_y
            .nearest_index(y)
            .ok_or_else(|| Error::OutOfDomain(format!("y = {y:?} outside the symbol's grid")))?;
        Ok(self.values[(i, j)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Symbol {
    Separable(SeparableSymbol),
    Dense(DenseSymbol),
}

impl Symbol {
    pub fn dim(&self) -> usize {
        match self {
            Symbol::Separable(s) => s.dim(),
            Symbol::Dense(d) => d.dim(),
        }
    }
}

impl From<SeparableSymbol> for Symbol {
    fn from(s: SeparableSymbol) -> Self {
        Symbol::Separable(s)
    }
}

impl From<DenseSymbol> for Symbol {
    fn from(d: DenseSymbol) -> Self {
        Symbol::Dense(d)
    }
}

/// Pointwise `F(x, y)`.
pub fn evaluate(sym: &Symbol, x: &[f64], y: &[f64]) -> Result<C64> {
    let d = sym.dim();
    if x.len() != d || y.len() != d {
        return Err(Error::InvalidInput(format!("points must have {d} coordinates")));
    }
    match sym {
        Symbol::Separable(s) => s.eval(x, y),
        Symbol::Dense(s) => s.eval(x, y),
    }
}

/// Samples a separable symbol on a lattice pair.
pub fn densify(sym: &SeparableSymbol, grid_x: &Grid, grid_y: &Grid) -> Result<DenseSymbol> {
    if grid_x.dim() != sym.dim() || grid_y.dim() != sym.dim() {
        return Err(Error::GridMismatch("densify grids must match the symbol dimension".into()));
    }
    let mut values = DMatrix::<C64>::zeros(grid_x.len(), grid_y.len());
    for t in sym.terms() {
        let fx = t.f.sample(grid_x)?;
        let gy = t.g.sample(grid_y)?;
        for (j, g) in gy.iter().enumerate() {
            let cg = t.coef * g;
            let mut col = values.column_mut(j);
            for (i, f) in fx.iter().enumerate() {
                col[i] += f * cg;
            }
        }
    }
    DenseSymbol::new(grid_x.clone(), grid_y.clone(), values)
}

/// Densifies onto `(grid, grid.dual())` unless the symbol is already dense,
/// in which case its grids must match.
pub fn dense_on(sym: &Symbol, grid: &Grid) -> Result<DenseSymbol> {
    let dual = grid.dual();
    match sym {
        Symbol::Separable(s) => densify(s, grid, &dual),
        Symbol::Dense(d) => {
            d.grid_x().ensure_compatible(grid, "dense symbol x-grid")?;
            d.grid_y().ensure_compatible(&dual, "dense symbol y-grid")?;
            Ok(d.clone())
        }
    }
}

/// Pointwise sum. Mixed separable/dense sums densify onto the dense grids.
pub fn add(a: &Symbol, b: &Symbol) -> Result<Symbol> {
    if a.dim() != b.dim() {
        return Err(Error::GridMismatch("symbols differ in dimension".into()));
    }
    match (a, b) {
        (Symbol::Separable(p), Symbol::Separable(q)) => {
            let mut terms = p.terms().to_vec();
            terms.extend_from_slice(q.terms());
            Ok(Symbol::Separable(SeparableSymbol::new(p.dim(), terms)?))
        }
        (Symbol::Dense(p), Symbol::Dense(q)) => {
            p.grid_x().ensure_compatible(q.grid_x(), "add x-grid")?;
            p.grid_y().ensure_compatible(q.grid_y(), "add y-grid")?;
            Ok(Symbol::Dense(DenseSymbol::new(p.grid_x().clone(), p.grid_y().clone(), p.values() + q.values())?))
        }
        (Symbol::Dense(p), Symbol::Separable(q)) => {
            let qd = densify(q, p.grid_x(), p.grid_y())?;
            Ok(Symbol::Dense(DenseSymbol::new(p.grid_x().clone(), p.grid_y().clone(), p.values() + qd.values())?))
        }
        (Symbol::Separable(_), Symbol::Dense(_)) => add(b, a),
    }
}

/// `a - b`.
pub fn sub(a: &Symbol, b: &Symbol) -> Result<Symbol> {
    let neg = match b {
        Symbol::Separable(s) => Symbol::Separable(s.neg()),
        Symbol::Dense(d) => Symbol::Dense(DenseSymbol::new(d.grid_x().clone(), d.grid_y().clone(), -d.values())?),
    };
    add(a, &neg)
}

/// Symbol `sqrt(gamma(x)) * 1` of a translation-invariant kernel
/// `K(s, t) = k(s - t)`, with `gamma = (2 pi)^{-d/2} F^{-1}[k]`.
///
/// `k` is sampled on the difference lattice; the returned `f` lives on its
/// dual grid.
pub fn from_translation_invariant(k: &GridFunction) -> Result<SeparableSymbol> {
    let dim = k.grid().dim();
    let c = (2.0 * PI).powf(-(dim as f64) / 2.0);
    let gamma = fourier(k, Direction::Inverse).scale(C64::new(c, 0.0));
    let scale = crate::numgrid::norm(&gamma, Norm::Linf);
    let tol = 1e-9 * scale;
    let min_re = gamma.values().iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    let max_im = gamma.values().iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if min_re < -tol {
        return Err(Error::NotPositiveDefinite(format!(
            "inverse transform of the profile reaches {min_re:.3e} (tolerance {tol:.1e})"
        )));
    }
    if max_im > tol {
        return Err(Error::NotPositiveDefinite(format!(
            "inverse transform of the profile has imaginary part {max_im:.3e}; profile is not Hermitian"
        )));
    }
    let f = gamma.map(|v| C64::new(v.re.max(0.0).sqrt(), 0.0))?;
    SeparableSymbol::rank_one(dim, Factor::Grid(f), Factor::constant(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_rank_one() -> SeparableSymbol {
        SeparableSymbol::rank_one(1, Factor::Analytic(AnalyticTerm::gaussian(1, 1.0)), Factor::constant(1.0)).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let z = Symbol::Separable(SeparableSymbol::zero(1));
        assert_eq!(evaluate(&z, &[0.3], &[1.0]).unwrap(), C64::new(0.0, 0.0));

        let g = Symbol::Separable(gauss_rank_one());
        assert_eq!(evaluate(&g, &[0.0], &[123.0]).unwrap(), C64::new(1.0, 0.0));

        let f = Factor::Analytic(AnalyticTerm::PolyGauss {
            poly: Polynomial::univariate(1, 0, &[0.0, 1.0]).unwrap(),
            width: Some(2f64.sqrt()),
        });
        let gy = Factor::Analytic(AnalyticTerm::PolyGauss {
            poly: Polynomial::univariate(1, 0, &[0.0, 0.0, 1.0]).unwrap(),
            width: None,
        });
        let s = Symbol::Separable(SeparableSymbol::rank_one(1, f, gy).unwrap());
        let v = evaluate(&s, &[1.0], &[2.0]).unwrap();
        assert!((v.re - 4.0 * (-0.25f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn dense_eval_out_of_domain() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let d = Symbol::Dense(DenseSymbol::zeros(g.clone(), g));
        assert!(matches!(evaluate(&d, &[2.0], &[0.0]), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn densify_rank_one_has_rank_one() {
        let g = Grid::new(1, 64, 8.0).unwrap();
        let d = densify(&gauss_rank_one(), &g, &g.dual()).unwrap();
        let sv = d.values().singular_values();
        let mut s: Vec<f64> = sv.iter().cloned().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(s[1] / s[0] < 1e-10);
        let zero = densify(&SeparableSymbol::zero(1), &g, &g).unwrap();
        assert!(zero.values().iter().all(|v| *v == C64::new(0.0, 0.0)));
    }

    #[test]
    fn add_and_subtract() {
        let a = Symbol::Separable(gauss_rank_one());
        let z = Symbol::Separable(SeparableSymbol::zero(1));
        let s = add(&a, &z).unwrap();
        assert_eq!(evaluate(&s, &[0.4], &[0.1]).unwrap(), evaluate(&a, &[0.4], &[0.1]).unwrap());
        let d = sub(&a, &a).unwrap();
        assert_eq!(evaluate(&d, &[0.4], &[0.1]).unwrap(), C64::new(0.0, 0.0));
        let other = Symbol::Dense(DenseSymbol::zeros(Grid::new(2, 8, 1.0).unwrap(), Grid::new(2, 8, 1.0).unwrap()));
        assert!(matches!(add(&a, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn translation_invariant_gaussian_profile() {
        let g = default_grid(1).unwrap();
        let k = GridFunction::from_real_fn(g, |t| PI.sqrt() * (-t[0] * t[0] / 4.0).exp()).unwrap();
        let s = from_translation_invariant(&k).unwrap();
        assert_eq!(s.rank(), 1);
        let Factor::Grid(f) = &s.terms()[0].f else { panic!("grid factor expected") };
        for (i, v) in f.values().iter().enumerate() {
            let x = f.grid().point(i)[0];
            assert!((v.re - (-x * x / 2.0).exp()).abs() < 1e-8, "x = {x}");
        }
        assert_eq!(s.terms()[0].g, Factor::constant(1.0));
    }

    #[test]
    fn translation_invariant_windowed_cosine_rejected() {
        let g = default_grid(1).unwrap();
        let k = GridFunction::from_real_fn(g, |t| if t[0].abs() <= 8.0 { t[0].cos() } else { 0.0 }).unwrap();
        assert!(matches!(from_translation_invariant(&k), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn translation_invariant_zero_profile() {
        let k = GridFunction::zeros(default_grid(1).unwrap());
        let s = from_translation_invariant(&k).unwrap();
        assert!(s.terms()[0].f.is_zero());
        assert_eq!(s.terms()[0].g, Factor::constant(1.0));
    }
}
