//! The kernel `K(s, t) = \int F(x, s)* F(x, t) e^{i x.(t - s)} dx` of a symbol.
//!
//! For separable symbols this is
//! `sum_ij conj(c_i g_i(s)) c_j g_j(t) T_ij(t - s)` with
//! `T_ij(tau) = \int conj(f_i(x)) f_j(x) e^{i x.tau} dx`, evaluated in closed
//! form for Gaussian-polynomial and box factors and by lattice quadrature
//! when one of the factors is sampled. Dense symbols give a kernel matrix on
//! their `y` lattice.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numgrid::{exp_sum, Grid, Point};
use crate::symbols::analytic::{PairTransform, Shape, TauPoly};
use crate::symbols::{DenseSymbol, Factor, SeparableSymbol, Symbol};

#[derive(Debug, Clone)]
enum PairBackend {
    Analytic(PairTransform),
    /// `conj(f_i) f_j` sampled on a lattice.
    Quadrature {
        grid: Grid,
        product: Vec<C64>,
    },
}

#[derive(Debug, Clone)]
struct Pair {
    i: usize,
    j: usize,
    backend: PairBackend,
}

/// Gaussian pairs sharing one envelope.
#[derive(Debug, Clone)]
struct Envelope {
    rate: f64,
    center: [f64; 2],
    members: Vec<(usize, usize, TauPoly)>,
}

#[derive(Debug, Clone)]
pub struct ClosedKernel {
    dim: usize,
    coefs: Vec<C64>,
    features: Vec<Factor>,
    envelopes: Vec<Envelope>,
    others: Vec<Pair>,
}

#[derive(Debug, Clone)]
pub struct GridKernel {
    pub grid: Grid,
    pub entries: DMatrix<C64>,
}

#[derive(Debug, Clone)]
pub enum KernelForm {
    Closed(ClosedKernel),
    GridMatrix(GridKernel),
}

impl ClosedKernel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.coefs.len()
    }

    /// True when some pair needs lattice quadrature.
    pub fn uses_quadrature(&self) -> bool {
        self.others.iter().any(|p| matches!(p.backend, PairBackend::Quadrature { .. }))
    }

    /// `c_i g_i(p)` for each term.
    fn features_at(&self, p: &[f64]) -> Result<Vec<C64>> {
        self.features.iter().zip(&self.coefs).map(|(g, c)| Ok(c * g.eval(p)?)).collect()
    }

    fn eval_from(&self, gs: &[C64], gt: &[C64], tau: &[f64]) -> C64 {
        let d = self.dim;
        let mut total = C64::new(0.0, 0.0);
        for env in &self.envelopes {
            let mut s = C64::new(0.0, 0.0);
            for (i, j, q) in &env.members {
                let w = gs[*i].conj() * gt[*j];
                if w != C64::new(0.0, 0.0) {
                    s += w * q.eval(tau);
                }
            }
            if s != C64::new(0.0, 0.0) {
                total += s * PairTransform::envelope(env.rate, &env.center, tau, d);
            }
        }
        for p in &self.others {
            let w = gs[p.i].conj() * gt[p.j];
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            let t = match &p.backend {
                PairBackend::Analytic(tr) => tr.eval(tau, d),
                PairBackend::Quadrature { grid, product } => {
                    let mut acc = C64::new(0.0, 0.0);
                    for (k, v) in product.iter().enumerate() {
                        let x = grid.point(k);
                        let phase: f64 = (0..d).map(|a| x[a] * tau[a]).sum();
                        acc += v * C64::from_polar(1.0, phase);
                    }
                    acc * grid.cell_volume()
                }
            };
            total += w * t;
        }
        total
    }

    pub fn eval(&self, s: &[f64], t: &[f64]) -> Result<C64> {
        let gs = self.features_at(s)?;
        let gt = self.features_at(t)?;
        let tau: Vec<f64> = (0..self.dim).map(|a| t[a] - s[a]).collect();
        Ok(self.eval_from(&gs, &gt, &tau))
    }

    /// `sum_{a in S, b in T} K(s_a, t_b)`; pass `None` for `T = S`.
    fn pair_sum(&self, s: &[Point], t: Option<&[Point]>) -> Result<C64> {
        let d = self.dim;
        let gs: Vec<Vec<C64>> = s.iter().map(|p| self.features_at(&p[..d])).collect::<Result<_>>()?;
        let gt_owned: Vec<Vec<C64>>;
        let (tp, gt): (&[Point], &[Vec<C64>]) = match t {
            Some(tp) => {
                gt_owned = tp.iter().map(|p| self.features_at(&p[..d])).collect::<Result<_>>()?;
                (tp, &gt_owned)
            }
            None => (s, &gs),
        };
        let symmetric = t.is_none();
        let analytic_only = ClosedKernel { others: self.analytic_others(), ..self.clone_without_pairs() };

        // Direct pairwise sums for closed-form transforms.
        let rows: Vec<C64> = (0..s.len())
            .into_par_iter()
            .map(|a| {
                let mut acc = C64::new(0.0, 0.0);
                let start = if symmetric { a + 1 } else { 0 };
                let mut tau = [0.0; 2];
                for b in start..tp.len() {
                    for k in 0..d {
                        tau[k] = tp[b][k] - s[a][k];
                    }
                    acc += analytic_only.eval_from(&gs[a], &gt[b], &tau[..d]);
                }
                if symmetric {
                    let diag = analytic_only.eval_from(&gs[a], &gs[a], &[0.0; 2][..d]);
                    C64::new(2.0 * acc.re + diag.re, 0.0)
                } else {
                    acc
                }
            })
            .collect();
        let mut total: C64 = C64::new(0.0, 0.0);
        for r in rows {
            total += r;
        }

        // Lattice-quadrature pairs through mean embeddings:
        // sum_ab conj(g_i(s_a)) g_j(t_b) T_ij(t_b - s_a)
        //   = sum_x dx conj(f_i) f_j conj(Phi_i^S(x)) Phi_j^T(x).
        for p in &self.others {
            if let PairBackend::Quadrature { grid, product } = &p.backend {
                let ws: Vec<C64> = gs.iter().map(|g| g[p.i]).collect();
                let wt: Vec<C64> = gt.iter().map(|g| g[p.j]).collect();
                let phi_s = exp_sum(grid, s, &ws);
                let phi_t = exp_sum(grid, tp, &wt);
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..grid.len() {
                    acc += product[k] * phi_s[k].conj() * phi_t[k];
                }
                total += acc * grid.cell_volume();
            }
        }
        Ok(total)
    }

    fn analytic_others(&self) -> Vec<Pair> {
        self.others.iter().filter(|p| matches!(p.backend, PairBackend::Analytic(_))).cloned().collect()
    }

    fn clone_without_pairs(&self) -> ClosedKernel {
        ClosedKernel {
            dim: self.dim,
            coefs: self.coefs.clone(),
            features: self.features.clone(),
            envelopes: self.envelopes.clone(),
            others: Vec::new(),
        }
    }
}

impl GridKernel {
    /// Nearest-lattice lookup.
    pub fn eval(&self, s: &[f64], t: &[f64]) -> Result<C64> {
        let a =
            self.grid.nearest_index(s).ok_or_else(|| Error::OutOfDomain(format!("{s:?} outside the kernel grid")))?;
        let b =
            self.grid.nearest_index(t).ok_or_else(|| Error::OutOfDomain(format!("{t:?} outside the kernel grid")))?;
        Ok(self.entries[(a, b)])
    }
}

impl KernelForm {
    pub fn dim(&self) -> usize {
        match self {
            KernelForm::Closed(k) => k.dim,
            KernelForm::GridMatrix(k) => k.grid.dim(),
        }
    }

    pub fn eval(&self, s: &[f64], t: &[f64]) -> Result<C64> {
        let d = self.dim();
        if s.len() != d || t.len() != d {
            return Err(Error::InvalidInput(format!("kernel points must have {d} coordinates")));
        }
        match self {
            KernelForm::Closed(k) => k.eval(s, t),
            KernelForm::GridMatrix(k) => k.eval(s, t),
        }
    }

    /// `sum_{a, b} K(s_a, t_b)`, or the symmetric sum over `S x S` when `t` is `None`.
    pub fn pair_sum(&self, s: &[Point], t: Option<&[Point]>) -> Result<C64> {
        match self {
            KernelForm::Closed(k) => k.pair_sum(s, t),
            KernelForm::GridMatrix(k) => {
                let idx = |pts: &[Point]| -> Result<Vec<usize>> {
                    let d = k.grid.dim();
                    pts.iter()
                        .map(|p| {
                            k.grid
                                .nearest_index(&p[..d])
                                .ok_or_else(|| Error::OutOfDomain(format!("{:?} outside the kernel grid", &p[..d])))
                        })
                        .collect()
                };
                let si = idx(s)?;
                let ti = match t {
                    Some(t) => idx(t)?,
                    None => si.clone(),
                };
                // Accumulate counts per lattice point, then a weighted quadratic form.
                let n = k.grid.len();
                let mut cs = vec![0.0; n];
                let mut ct = vec![0.0; n];
                for a in si {
                    cs[a] += 1.0;
                }
                for b in ti {
                    ct[b] += 1.0;
                }
                let mut total = C64::new(0.0, 0.0);
                for (a, ca) in cs.iter().enumerate() {
                    if *ca == 0.0 {
                        continue;
                    }
                    let mut row = C64::new(0.0, 0.0);
                    for (b, cb) in ct.iter().enumerate() {
                        if *cb != 0.0 {
                            row += k.entries[(a, b)] * cb;
                        }
                    }
                    total += row * ca;
                }
                if t.is_none() {
                    total = C64::new(total.re, 0.0);
                }
                Ok(total)
            }
        }
    }

    /// `sum_a K(s_a, s_a)`.
    pub fn diag_sum(&self, s: &[Point]) -> Result<f64> {
        let d = self.dim();
        let mut total = 0.0;
        for p in s {
            total += self.eval(&p[..d], &p[..d])?.re;
        }
        Ok(total)
    }
}

fn factor_shape(f: &Factor, dim: usize) -> Option<Shape> {
    match f {
        Factor::Analytic(t) => Some(t.shape(dim)),
        Factor::Grid(_) => None,
    }
}

/// Closed-form kernel of a separable symbol.
pub fn kernel_closed(sym: &SeparableSymbol) -> Result<KernelForm> {
    let dim = sym.dim();
    let live: Vec<_> =
        sym.terms().iter().filter(|t| t.coef != C64::new(0.0, 0.0) && !t.f.is_zero() && !t.g.is_zero()).collect();
    let mut envelopes: Vec<Envelope> = Vec::new();
    let mut others = Vec::new();
    for (i, ti) in live.iter().enumerate() {
        for (j, tj) in live.iter().enumerate() {
            let analytic = match (factor_shape(&ti.f, dim), factor_shape(&tj.f, dim)) {
                (Some(a), Some(b)) => PairTransform::of(&a, &b, dim),
                _ => None,
            };
            match analytic {
                Some(PairTransform::Gauss { rate, center, q }) => {
                    let q = TauPoly::new(rate, &q, dim);
                    let key = (rate.to_bits(), center[0].to_bits(), center[1].to_bits());
                    match envelopes
                        .iter_mut()
                        .find(|e| (e.rate.to_bits(), e.center[0].to_bits(), e.center[1].to_bits()) == key)
                    {
                        Some(e) => e.members.push((i, j, q)),
                        None => envelopes.push(Envelope { rate, center, members: vec![(i, j, q)] }),
                    }
                }
                Some(tr) => others.push(Pair { i, j, backend: PairBackend::Analytic(tr) }),
                None => {
                    let grid = ti.f.grid().or(tj.f.grid()).cloned().ok_or_else(|| {
                        Error::TransformUnavailable(format!("terms {i} and {j}: no closed form and no sampled factor"))
                    })?;
                    let fi = ti.f.sample(&grid)?;
                    let fj = tj.f.sample(&grid)?;
                    let product = fi.iter().zip(&fj).map(|(a, b)| a.conj() * b).collect();
                    others.push(Pair { i, j, backend: PairBackend::Quadrature { grid, product } });
                }
            }
        }
    }
    Ok(KernelForm::Closed(ClosedKernel {
        dim,
        coefs: live.iter().map(|t| t.coef).collect(),
        features: live.iter().map(|t| t.g.clone()).collect(),
        envelopes,
        others,
    }))
}

/// Kernel matrix `K[a, b] = dx sum_i conj(F(x_i, y_a)) F(x_i, y_b) e^{i x_i.(y_b - y_a)}`
/// on the `y` lattice.
pub fn kernel_grid(sym: &DenseSymbol) -> Result<KernelForm> {
    let gx = sym.grid_x();
    let gy = sym.grid_y();
    let d = gx.dim();
    let xs = gx.points();
    let ys = gy.points();
    let f = sym.values();
    let g = DMatrix::from_fn(xs.len(), ys.len(), |i, b| {
        let phase: f64 = (0..d).map(|a| xs[i][a] * ys[b][a]).sum();
        f[(i, b)] * C64::from_polar(1.0, phase)
    });
    let k = g.adjoint() * &g * C64::new(gx.cell_volume(), 0.0);
    let k = (&k + k.adjoint()) * C64::new(0.5, 0.0);
    Ok(KernelForm::GridMatrix(GridKernel { grid: gy.clone(), entries: k }))
}

pub fn kernel_of(sym: &Symbol) -> Result<KernelForm> {
    match sym {
        Symbol::Separable(s) => kernel_closed(s),
        Symbol::Dense(d) => kernel_grid(d),
    }
}

#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub points: Vec<Point>,
    pub entries: DMatrix<C64>,
}

pub fn gram(kernel: &KernelForm, points: &[Point]) -> Result<GramMatrix> {
    let d = kernel.dim();
    let n = points.len();
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|a| (a..n).map(|b| kernel.eval(&points[a][..d], &points[b][..d])).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut m = DMatrix::<C64>::zeros(n, n);
    for (a, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let b = a + off;
            if a == b {
                m[(a, a)] = C64::new(v.re, 0.0);
            } else {
                m[(a, b)] = v;
                m[(b, a)] = v.conj();
            }
        }
    }
    Ok(GramMatrix { points: points.to_vec(), entries: m })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdReport {
    pub min_eig: f64,
    pub max_eig: f64,
    pub pass: bool,
}

/// Eigenvalue extremes of a Hermitian matrix; passes iff `min >= -1e-8 max`.
pub fn psd_check(g: &GramMatrix) -> PsdReport {
    psd_check_matrix(&g.entries)
}

pub fn psd_check_matrix(m: &DMatrix<C64>) -> PsdReport {
    if m.nrows() == 0 {
        return PsdReport { min_eig: 0.0, max_eig: 0.0, pass: true };
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigenvalues();
    let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_eig = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    PsdReport { min_eig, max_eig, pass: min_eig >= -1e-8 * max_eig }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{AnalyticTerm, Polynomial, Term};
    use std::f64::consts::PI;

    fn gauss_symbol(g: Factor) -> SeparableSymbol {
        SeparableSymbol::rank_one(1, Factor::Analytic(AnalyticTerm::gaussian(1, 1.0)), g).unwrap()
    }

    fn quad_oracle(s: f64, t: f64) -> f64 {
        let h = 1e-3;
        let mut acc = 0.0;
        let mut x: f64 = -12.0;
        while x < 12.0 {
            acc += (-x * x).exp() * (x * (t - s)).cos() * h;
            x += h;
        }
        acc
    }

    #[test]
    fn gaussian_kernel_closed_form() {
        let k = kernel_closed(&gauss_symbol(Factor::constant(1.0))).unwrap();
        assert!((k.eval(&[0.0], &[0.0]).unwrap().re - PI.sqrt()).abs() < 1e-14);
        for &(s, t) in &[(0.3, -1.1), (2.0, 0.5), (-3.0, 1.0)] {
            let v = k.eval(&[s], &[t]).unwrap();
            assert!((v.re - PI.sqrt() * (-(s - t) * (s - t) / 4.0f64).exp()).abs() < 1e-14);
            assert!((v.re - quad_oracle(s, t)).abs() < 1e-9);
        }
    }

    #[test]
    fn first_moment_feature_kernel() {
        let y = Factor::Analytic(AnalyticTerm::PolyGauss {
            poly: Polynomial::univariate(1, 0, &[0.0, 1.0]).unwrap(),
            width: None,
        });
        let k = kernel_closed(&gauss_symbol(y)).unwrap();
        let (s, t) = (0.7, -1.3);
        let v = k.eval(&[s], &[t]).unwrap();
        assert!((v.re - s * t * quad_oracle(s, t)).abs() < 1e-9);
    }

    #[test]
    fn zero_symbol_kernel() {
        let k = kernel_closed(&SeparableSymbol::zero(1)).unwrap();
        assert_eq!(k.eval(&[0.1], &[0.2]).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn unavailable_transform() {
        let f = Factor::Analytic(AnalyticTerm::Indicator { lo: vec![-1.0], hi: vec![1.0] });
        let g = Factor::Analytic(AnalyticTerm::gaussian(1, 1.0));
        let s = SeparableSymbol::new(
            1,
            vec![Term::real(1.0, f, Factor::constant(1.0)), Term::real(1.0, g, Factor::constant(1.0))],
        )
        .unwrap();
        assert!(matches!(kernel_closed(&s), Err(Error::TransformUnavailable(_))));
    }

    #[test]
    fn gram_toeplitz_and_psd() {
        let k = kernel_closed(&gauss_symbol(Factor::constant(1.0))).unwrap();
        let pts = vec![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]];
        let g = gram(&k, &pts).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let d = (a as f64 - b as f64) * 0.5;
                assert!((g.entries[(a, b)].re - PI.sqrt() * (-d * d / 4.0).exp()).abs() < 1e-14);
            }
        }
        assert!(psd_check(&g).pass);
        let single = gram(&k, &pts[..1]).unwrap();
        assert!(single.entries[(0, 0)].re > 0.0 && single.entries[(0, 0)].im == 0.0);
    }

    #[test]
    fn psd_check_detects_negative_eigenvalue() {
        let zero = DMatrix::<C64>::zeros(4, 4);
        let r = psd_check_matrix(&zero);
        assert!(r.pass && r.min_eig == 0.0 && r.max_eig == 0.0);
        let mut m = DMatrix::<C64>::identity(3, 3);
        m[(2, 2)] = C64::new(-1.0, 0.0);
        assert!(!psd_check_matrix(&m).pass);
    }

    #[test]
    fn pair_sum_matches_gram_sum() {
        let k = kernel_closed(&gauss_symbol(Factor::Analytic(AnalyticTerm::GaussHermite {
            degree: vec![1],
            width: 2.0,
            center: vec![0.5],
            scale: C64::new(1.0, 0.3),
        })))
        .unwrap();
        let s: Vec<Point> = (0..7).map(|i| [i as f64 * 0.4 - 1.0, 0.0]).collect();
        let t: Vec<Point> = (0..5).map(|i| [i as f64 * 0.3 + 0.2, 0.0]).collect();
        let g = gram(&k, &s).unwrap();
        let direct: C64 = g.entries.iter().sum();
        assert!((k.pair_sum(&s, None).unwrap() - direct).norm() < 1e-12);
        let mut cross = C64::new(0.0, 0.0);
        for a in &s {
            for b in &t {
                cross += k.eval(&a[..1], &b[..1]).unwrap();
            }
        }
        assert!((k.pair_sum(&s, Some(&t)).unwrap() - cross).norm() < 1e-12);
    }
}
