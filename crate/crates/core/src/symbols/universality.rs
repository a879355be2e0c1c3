//! Symbols of the universality family.
//!
//! For polynomials `f_1..f_N` and `eps > 0` the operator
//! `L = sum_i f_i(D)^H E f_i(D)`, `E = exp(-|x|^2 / (4 eps^2))`, is assembled
//! on the grid and its principal square root `S` is taken. The returned
//! dense symbol is the one whose PDO matrix is `S`, so its kernel is close to
//! `(eps / sqrt(pi))^d sum_i conj(f_i(s)) f_i(t) exp(-eps^2 |s - t|^2)`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{DenseSymbol, Polynomial};
use crate::error::{Error, Result};
use crate::numgrid::{dft_matrix, Direction, Grid};

/// Relative eigenvalue floor below which the grid operator is rejected.
const PSD_RTOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct UniversalityParts {
    /// Grid matrix of `L` on the `x` lattice.
    pub l: DMatrix<C64>,
    /// Hermitian PSD square root of `l`.
    pub s: DMatrix<C64>,
    pub symbol: DenseSymbol,
}

pub fn universality_symbol(eps: f64, polys: &[Polynomial], grid: &Grid) -> Result<DenseSymbol> {
    Ok(universality_operator(eps, polys, grid)?.symbol)
}

pub fn universality_operator(eps: f64, polys: &[Polynomial], grid: &Grid) -> Result<UniversalityParts> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    if polys.is_empty() {
        return Err(Error::InvalidInput("at least one polynomial is required".into()));
    }
    let d = grid.dim();
    if let Some(p) = polys.iter().find(|p| p.dim() != d) {
        return Err(Error::InvalidInput(format!("polynomial of dim {} on a {d}-dimensional grid", p.dim())));
    }
    let m = polys.iter().map(|p| p.degree()).max().unwrap_or(0);
    if let Some(i) = polys.iter().position(|p| !p.has_leading_degree(m)) {
        return Err(Error::InvalidInput(format!("polynomial {i} has no nonzero coefficient of total degree {m}")));
    }

    let dual = grid.dual();
    let fwd = dft_matrix(grid, Direction::Forward);
    let inv = dft_matrix(&dual, Direction::Inverse);
    let n = grid.len();
    let envelope: Vec<f64> = (0..n)
        .map(|i| {
            let r2: f64 = grid.point(i)[..d].iter().map(|v| v * v).sum();
            (-r2 / (4.0 * eps * eps)).exp()
        })
        .collect();

    let mut l = DMatrix::<C64>::zeros(n, n);
    for p in polys {
        let mut scaled = fwd.clone();
        for k in 0..n {
            let fy = p.eval(&dual.point(k)[..d]);
            for j in 0..n {
                scaled[(k, j)] *= fy;
            }
        }
        let op = &inv * scaled;
        let mut weighted = op.clone();
        for (i, e) in envelope.iter().enumerate() {
            for j in 0..n {
                weighted[(i, j)] *= e;
            }
        }
        l += op.adjoint() * weighted;
    }
    let l = (&l + l.adjoint()) * C64::new(0.5, 0.0);

    let eig = l.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_RTOL * max_eig.max(0.0) {
        return Err(Error::NotPsd { min_eig, max_eig });
    }
    let v = &eig.eigenvectors;
    let mut vs = v.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let r = lam.max(0.0).sqrt();
        vs.column_mut(j).scale_mut(r);
    }
    let s = &vs * v.adjoint();
    let s = (&s + s.adjoint()) * C64::new(0.5, 0.0);

    let g = &s * &inv;
    let dy = dual.cell_volume();
    let xs = grid.points();
    let ys = dual.points();
    let values = DMatrix::from_fn(n, n, |i, k| {
        let phase: f64 = (0..d).map(|a| xs[i][a] * ys[k][a]).sum();
        g[(i, k)] * C64::from_polar(1.0 / dy, -phase)
    });
    let symbol = DenseSymbol::new(grid.clone(), dual, values)?;
    Ok(UniversalityParts { l, s, symbol })
}
