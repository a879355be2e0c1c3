//! Nyström discretization of symbol operators, SVD truncation and norms.
//!
//! With `x` on a grid `X` and `y` on `Y = X.dual()`, write
//! `G[i, k] = F(x_i, y_k) e^{i x_i.y_k} dy`. The three operator kinds are
//!
//! * `integral_of`: entries `F(x_i, y_k) dy`, rows on `X`, columns on `Y`;
//! * `pdo_xd`: `G * M`, where `M` is the forward transform matrix, acting on
//!   samples on `X` as `u -> \int F(x, y) u^(y) e^{i x.y} dy`;
//! * `pdo_dx`: `(dx / dy) G^H M^{-1}`, rows and columns on `Y`.
//!
//! `F = 1` gives `(2 pi)^{d/2}` times the identity for `pdo_xd`. With this
//! scaling the diagonals of `A A^H` and `B B^H`, the Hilbert-Schmidt norms
//! of all kinds, and `||pdo_dx||_{2,inf} = sup_y ||F(., y)||_2` agree exactly.
//!
//! Every matrix stores the kernel multiplied by its column quadrature weight,
//! so `matrix * samples` approximates the continuous action.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numgrid::{inner_product, norm, CenteredDft, Grid, GridFunction, Norm};
use crate::symbols::{dense_on, DenseSymbol, Factor, SeparableSymbol, Symbol, Term};

/// Singular values at or below `RANK_RTOL * sigma_1` are treated as zero.
pub const RANK_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    IntegralOf,
    PdoXd,
    PdoDx,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    kind: OperatorKind,
    grid_rows: Grid,
    grid_cols: Grid,
    entries: DMatrix<C64>,
}

impl OperatorMatrix {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn grid_rows(&self) -> &Grid {
        &self.grid_rows
    }

    pub fn grid_cols(&self) -> &Grid {
        &self.grid_cols
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn row_weight(&self) -> f64 {
        self.grid_rows.cell_volume()
    }

    pub fn col_weight(&self) -> f64 {
        self.grid_cols.cell_volume()
    }

    /// Applies the operator to samples on the column grid.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        u.grid().ensure_compatible(&self.grid_cols, "operator input")?;
        let v = nalgebra::DVector::from_column_slice(u.values());
        let out = &self.entries * v;
        GridFunction::new(self.grid_rows.clone(), out.iter().cloned().collect())
    }

    /// Diagonal of the Schwartz kernel of `op op^H` at each row point.
    pub fn diag_kernel(&self) -> Vec<f64> {
        let wc = self.col_weight();
        (0..self.entries.nrows()).map(|i| self.entries.row(i).iter().map(|v| v.norm_sqr()).sum::<f64>() / wc).collect()
    }
}

/// `G[i, k] = F(x_i, y_k) e^{i x_i.y_k} dy`.
fn phase_matrix(dense: &DenseSymbol) -> DMatrix<C64> {
    let gx = dense.grid_x();
    let gy = dense.grid_y();
    let d = gx.dim();
    let dy = gy.cell_volume();
    let xs = gx.points();
    let ys = gy.points();
    let f = dense.values();
    DMatrix::from_fn(xs.len(), ys.len(), |i, k| {
        let phase: f64 = (0..d).map(|a| xs[i][a] * ys[k][a]).sum();
        f[(i, k)] * C64::from_polar(dy, phase)
    })
}

pub fn build_operator(sym: &Symbol, kind: OperatorKind, grid: &Grid) -> Result<OperatorMatrix> {
    let dense = dense_on(sym, grid)?;
    build_operator_dense(&dense, kind)
}

/// As [`build_operator`] for a symbol already on `(X, X.dual())`.
pub fn build_operator_dense(dense: &DenseSymbol, kind: OperatorKind) -> Result<OperatorMatrix> {
    let gx = dense.grid_x().clone();
    let gy = dense.grid_y().clone();
    gy.ensure_compatible(&gx.dual(), "operator y-grid must be the dual of the x-grid")?;
    let n = gx.len();
    let dft = CenteredDft::for_grid(&gx);
    match kind {
        OperatorKind::IntegralOf => {
            let dy = gy.cell_volume();
            let entries = dense.values().map(|v| v * dy);
            Ok(OperatorMatrix { kind, grid_rows: gx, grid_cols: gy, entries })
        }
        OperatorKind::PdoXd => {
            let g = phase_matrix(dense);
            let c = crate::numgrid::transform_constant(&gx);
            let mut entries = DMatrix::<C64>::zeros(n, n);
            let mut row = vec![C64::new(0.0, 0.0); n];
            for i in 0..n {
                for k in 0..n {
                    row[k] = g[(i, k)];
                }
                dft.apply(&mut row, true);
                for j in 0..n {
                    entries[(i, j)] = row[j] * c;
                }
            }
            Ok(OperatorMatrix { kind, grid_rows: gx.clone(), grid_cols: gx, entries })
        }
        OperatorKind::PdoDx => {
            let g = phase_matrix(dense);
            let c = crate::numgrid::transform_constant(&gy) * gx.cell_volume() / gy.cell_volume();
            let mut entries = DMatrix::<C64>::zeros(n, n);
            let mut row = vec![C64::new(0.0, 0.0); n];
            for k in 0..n {
                for i in 0..n {
                    row[i] = g[(i, k)].conj();
                }
                dft.apply(&mut row, false);
                for j in 0..n {
                    entries[(k, j)] = row[j] * c;
                }
            }
            Ok(OperatorMatrix { kind, grid_rows: gy.clone(), grid_cols: gy, entries })
        }
    }
}

/// `sup_i sqrt(sum_j |kernel(x_i, y_j)|^2 w_j)`.
pub fn two_inf_norm(op: &OperatorMatrix) -> f64 {
    op.diag_kernel().into_iter().fold(0.0, f64::max).sqrt()
}

/// `sqrt(sum_ij |kernel(x_i, y_j)|^2 w_i w_j)`.
pub fn hs_norm(op: &OperatorMatrix) -> f64 {
    let s: f64 = op.entries.iter().map(|v| v.norm_sqr()).sum();
    (s * op.row_weight() / op.col_weight()).sqrt()
}

#[derive(Debug, Clone)]
pub struct SvdResult {
    pub sigmas: Vec<f64>,
    /// Left singular functions on the `x` grid.
    pub left: Vec<GridFunction>,
    /// Right singular functions on the `y` grid; `F = sum sigma_i f_i conj(g_i)`.
    pub right: Vec<GridFunction>,
    pub grid_x: Grid,
    pub grid_y: Grid,
}

impl SvdResult {
    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    /// Number of singular values above `RANK_RTOL * sigma_1`.
    pub fn numerical_rank(&self) -> usize {
        let top = self.sigmas.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return 0;
        }
        self.sigmas.iter().filter(|s| **s > RANK_RTOL * top).count()
    }

    /// `sum_{i < r} sigma_i f_i(x) conj(g_i(y))` on the lattice pair.
    pub fn reconstruct(&self, r: usize) -> Result<DenseSymbol> {
        let r = r.min(self.len());
        let nx = self.grid_x.len();
        let ny = self.grid_y.len();
        let mut m = DMatrix::<C64>::zeros(nx, ny);
        for i in 0..r {
            let f = self.left[i].values();
            let g = self.right[i].values();
            for j in 0..ny {
                let gj = g[j].conj() * self.sigmas[i];
                for k in 0..nx {
                    m[(k, j)] += f[k] * gj;
                }
            }
        }
        DenseSymbol::new(self.grid_x.clone(), self.grid_y.clone(), m)
    }
}

/// SVD of `F(x_i, y_j) sqrt(dx dy)`, with singular vectors rescaled to
/// quadrature-orthonormal functions.
pub fn nystrom_svd(sym: &DenseSymbol) -> Result<SvdResult> {
    let gx = sym.grid_x().clone();
    let gy = sym.grid_y().clone();
    if gx.len() != gy.len() {
        return Err(Error::GridMismatch(format!("SVD needs square lattices, got {} x {}", gx.len(), gy.len())));
    }
    let n = gx.len();
    let (dx, dy) = (gx.cell_volume(), gy.cell_volume());
    let w = (dx * dy).sqrt();
    let vals = sym.values();
    let fail = |e: faer::linalg::solvers::SvdError| Error::ConvergenceError(format!("SVD failed: {e:?}"));
    let (sig, u, vt): (Vec<f64>, DMatrix<C64>, DMatrix<C64>) = if vals.iter().all(|v| v.im == 0.0) {
        let a = faer::Mat::<f64>::from_fn(n, n, |i, j| vals[(i, j)].re * w);
        let svd = a.svd().map_err(fail)?;
        let (su, sv) = (svd.U(), svd.V());
        let sig = (0..n).map(|i| svd.S()[i]).collect();
        let u = DMatrix::from_fn(n, n, |i, j| C64::new(su[(i, j)], 0.0));
        let vt = DMatrix::from_fn(n, n, |i, j| C64::new(sv[(j, i)], 0.0));
        (sig, u, vt)
    } else {
        let a = faer::Mat::<C64>::from_fn(n, n, |i, j| vals[(i, j)] * w);
        let svd = a.svd().map_err(fail)?;
        let (su, sv) = (svd.U(), svd.V());
        let sig = (0..n).map(|i| svd.S()[i].re).collect();
        let u = DMatrix::from_fn(n, n, |i, j| su[(i, j)]);
        let vt = DMatrix::from_fn(n, n, |i, j| sv[(j, i)].conj());
        (sig, u, vt)
    };
    if sig.iter().any(|s| !s.is_finite()) {
        return Err(Error::ConvergenceError("SVD produced non-finite singular values".into()));
    }
    let mut order: Vec<usize> = (0..sig.len()).collect();
    order.sort_by(|&a, &b| sig[b].total_cmp(&sig[a]).then(a.cmp(&b)));
    let (sx, sy) = (dx.sqrt(), dy.sqrt());
    let mut sigmas = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for &i in &order {
        sigmas.push(sig[i].max(0.0));
        left.push(GridFunction::new(gx.clone(), u.column(i).iter().map(|v| v / sx).collect())?);
        right.push(GridFunction::new(gy.clone(), vt.row(i).iter().map(|v| v.conj() / sy).collect())?);
    }
    Ok(SvdResult { sigmas, left, right, grid_x: gx, grid_y: gy })
}

/// `nystrom_svd` of the symbol densified on `(grid, grid.dual())`.
pub fn svd_of(sym: &Symbol, grid: &Grid) -> Result<SvdResult> {
    nystrom_svd(&dense_on(sym, grid)?)
}

/// `F_r = sum_{i < min(r, numerical rank)} sigma_i f_i(x) conj(g_i(y))`.
pub fn truncate(svd: &SvdResult, r: usize) -> Result<SeparableSymbol> {
    if r > svd.len() {
        return Err(Error::RankOutOfRange { rank: r, available: svd.len() });
    }
    let k = r.min(svd.numerical_rank());
    let terms = (0..k)
        .map(|i| Term::real(svd.sigmas[i], Factor::Grid(svd.left[i].clone()), Factor::Grid(svd.right[i].conj())))
        .collect();
    SeparableSymbol::new(svd.grid_x.dim(), terms)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfConstant {
    pub value: f64,
    /// `||g_i||_inf / ||g_i||_2` for each of the first `r_max` right functions.
    pub profile: Vec<f64>,
}

pub fn c_f_constant(svd: &SvdResult, r_max: usize) -> Result<CfConstant> {
    let avail = svd.numerical_rank();
    if r_max > avail {
        return Err(Error::RankOutOfRange { rank: r_max, available: avail });
    }
    let profile: Vec<f64> = svd.right[..r_max].iter().map(|g| norm(g, Norm::Linf) / norm(g, Norm::L2)).collect();
    Ok(CfConstant { value: profile.iter().cloned().fold(0.0, f64::max), profile })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfRefinement {
    pub coarse: f64,
    pub fine: f64,
    pub growth: f64,
    /// Set when the constant more than doubles under refinement.
    pub likely_infinite: bool,
}

/// Compares `C_F` on a coarse and a refined discretization of one symbol.
pub fn c_f_refinement(coarse: &SvdResult, fine: &SvdResult, r_max: usize) -> Result<CfRefinement> {
    let a = c_f_constant(coarse, r_max)?.value;
    let b = c_f_constant(fine, r_max)?.value;
    let growth = if a > 0.0 { b / a } else { 1.0 };
    Ok(CfRefinement { coarse: a, fine: b, growth, likely_infinite: growth > 2.0 })
}

/// `sum_{i > r} sigma_i^power` (1-based `i`), without a square root.
pub fn tail_sum(svd: &SvdResult, r: usize, power: u32) -> Result<f64> {
    if r > svd.len() {
        return Err(Error::RankOutOfRange { rank: r, available: svd.len() });
    }
    if !(1..=2).contains(&power) {
        return Err(Error::InvalidInput(format!("tail power must be 1 or 2, got {power}")));
    }
    Ok(svd.sigmas[r..].iter().map(|s| s.powi(power as i32)).sum())
}

/// Max deviation of the singular functions from quadrature orthonormality.
pub fn orthonormality_error(svd: &SvdResult, count: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for fam in [&svd.left, &svd.right] {
        for i in 0..count {
            for j in 0..count {
                let ip = inner_product(&fam[i], &fam[j])?;
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - C64::new(want, 0.0)).norm());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{densify, AnalyticTerm};
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(1, 128, 10.0).unwrap()
    }

    fn gauss() -> Factor {
        Factor::Analytic(AnalyticTerm::gaussian(1, 1.0))
    }

    fn product_symbol() -> Symbol {
        Symbol::Separable(SeparableSymbol::rank_one(1, gauss(), gauss()).unwrap())
    }

    #[test]
    fn unit_symbol_pdo_scales_identity() {
        let g = grid();
        let one =
            Symbol::Separable(SeparableSymbol::rank_one(1, Factor::constant(1.0), Factor::constant(1.0)).unwrap());
        let b = build_operator(&one, OperatorKind::PdoXd, &g).unwrap();
        let f = GridFunction::from_real_fn(g, |x| (-x[0] * x[0] / 2.0).exp()).unwrap();
        let bf = b.apply(&f).unwrap();
        let c = (2.0 * PI).sqrt();
        let err: f64 = bf.values().iter().zip(f.values()).map(|(a, b)| (a - b * c).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-8 * c);
    }

    #[test]
    fn pdo_matches_direct_double_sum() {
        let g = grid();
        let op = build_operator(&product_symbol(), OperatorKind::PdoXd, &g).unwrap();
        let f = GridFunction::from_real_fn(g.clone(), |x| (-x[0] * x[0] / 2.0).exp()).unwrap();
        let out = op.apply(&f).unwrap();
        let dual = g.dual();
        let (dx, dy) = (g.spacing(0), dual.spacing(0));
        for i in 0..g.len() {
            let x = g.point(i)[0];
            let mut s = C64::new(0.0, 0.0);
            for k in 0..dual.len() {
                let y = dual.point(k)[0];
                let mut uhat = C64::new(0.0, 0.0);
                for j in 0..g.len() {
                    let z = g.point(j)[0];
                    uhat += C64::from_polar((-z * z / 2.0).exp() * dx / (2.0 * PI).sqrt(), -y * z);
                }
                s += uhat * C64::from_polar((-x * x / 2.0).exp() * (-y * y / 2.0).exp() * dy, x * y);
            }
            assert!((out.values()[i] - s).norm() < 1e-6);
        }
    }

    #[test]
    fn rank_one_integral_operator() {
        let op = build_operator(&product_symbol(), OperatorKind::IntegralOf, &grid()).unwrap();
        let mut s: Vec<f64> = op.entries().singular_values().iter().cloned().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        assert!(s[1] / s[0] < 1e-10);
    }

    #[test]
    fn norms_of_gaussian_product() {
        let g = grid();
        let op = build_operator(&product_symbol(), OperatorKind::IntegralOf, &g).unwrap();
        assert!((two_inf_norm(&op) - PI.powf(0.25)).abs() < 1e-6);
        assert!((hs_norm(&op) - PI.sqrt()).abs() < 1e-6);
        let zero = build_operator(&Symbol::Separable(SeparableSymbol::zero(1)), OperatorKind::PdoDx, &g).unwrap();
        assert_eq!(two_inf_norm(&zero), 0.0);
        assert_eq!(hs_norm(&zero), 0.0);
    }

    #[test]
    fn window_symbol_two_inf_norm() {
        let g = Grid::new(1, 512, 16.0).unwrap();
        let f = Factor::Analytic(AnalyticTerm::gaussian(1, 1.0));
        let w = Factor::Analytic(AnalyticTerm::Indicator { lo: vec![-1.0], hi: vec![1.0] });
        let sym = Symbol::Separable(SeparableSymbol::rank_one(1, f, w).unwrap());
        let op = build_operator(&sym, OperatorKind::IntegralOf, &g).unwrap();
        // oracle: sup_x sum over the dual lattice points inside [-1, 1]
        let dual = g.dual();
        let inside = (0..dual.len()).filter(|k| dual.point(*k)[0].abs() <= 1.0).count() as f64;
        let oracle = (inside * dual.spacing(0)).sqrt();
        assert!((two_inf_norm(&op) - oracle).abs() < 1e-12);
        assert!((two_inf_norm(&op) - 2f64.sqrt()).abs() < 0.1);
    }

    #[test]
    fn svd_of_gaussian_product() {
        let svd = svd_of(&product_symbol(), &grid()).unwrap();
        assert!((svd.sigmas[0] - PI.sqrt()).abs() < 1e-6);
        assert!(svd.sigmas[1] < 1e-10 * svd.sigmas[0]);
        assert_eq!(svd.numerical_rank(), 1);
        let zero = svd_of(&Symbol::Separable(SeparableSymbol::zero(1)), &grid()).unwrap();
        assert!(zero.sigmas.iter().all(|s| *s == 0.0));
        assert_eq!(zero.numerical_rank(), 0);
    }

    #[test]
    fn c_f_of_gaussian_and_constant() {
        let svd = svd_of(&product_symbol(), &grid()).unwrap();
        let cf = c_f_constant(&svd, 1).unwrap();
        assert!((cf.value - PI.powf(-0.25)).abs() < 1e-6);
        assert!(matches!(c_f_constant(&svd, 2), Err(Error::RankOutOfRange { .. })));

        let g = grid();
        let sym = SeparableSymbol::rank_one(1, gauss(), Factor::constant(1.0)).unwrap();
        let svd = nystrom_svd(&densify(&sym, &g, &g.dual()).unwrap()).unwrap();
        let cf = c_f_constant(&svd, 1).unwrap();
        let want = 1.0 / (2.0 * g.dual().half_width(0)).sqrt();
        assert!((cf.value - want).abs() < 1e-12);
    }

    #[test]
    fn tail_sums() {
        let svd = svd_of(&product_symbol(), &grid()).unwrap();
        assert_eq!(tail_sum(&svd, svd.len(), 1).unwrap(), 0.0);
        assert!(matches!(tail_sum(&svd, svd.len() + 1, 1), Err(Error::RankOutOfRange { .. })));
        assert!(truncate(&svd, 0).unwrap().is_zero());
        assert_eq!(truncate(&svd, 5).unwrap().rank(), 1);
    }
}
