//! One function per check. Each returns the trial's comparisons; the caller
//! assembles records.

use num_complex::Complex64 as C64;
use rand::Rng;

use super::instance::{Instance, SymbolFamily, SymbolParams};
use super::{Comparison, SweepPoint};
use crate::error::Result;
use crate::mmd::density_squared;
use crate::numgrid::{norm, Grid, GridFunction, Norm};
use crate::spectral::{
    build_operator, build_operator_dense, c_f_constant, hs_norm, nystrom_svd, tail_sum, truncate, two_inf_norm,
    OperatorKind,
};
use crate::symbols::{add, canonicalize_on, dense_on, sub, DenseSymbol, SeparableSymbol, Symbol};

/// Inequality tolerance relative to the instance scale.
pub const INEQUALITY_RTOL: f64 = 1e-9;
/// Relative tolerance of the grid-level identities (diagonals, HS norms).
pub const IDENTITY_RTOL: f64 = 1e-6;
/// Relative tolerance of the Eckart-Young equality.
pub const ECKART_YOUNG_RTOL: f64 = 1e-8;
/// Absolute floor of the Eckart-Young equality, relative to the symbol's HS
/// norm; residual norms below it are rounding noise.
pub const ECKART_YOUNG_FLOOR: f64 = 1e-12;
/// Largest truncation rank swept by the truncation checks.
pub const MAX_SWEEP_RANK: usize = 12;

pub(crate) struct TrialOutcome {
    pub primary: Comparison,
    pub secondary: Option<Comparison>,
    pub sweep: Vec<SweepPoint>,
    pub monotone: Option<bool>,
    pub r: Option<usize>,
}

impl TrialOutcome {
    fn single(primary: Comparison) -> Self {
        Self { primary, secondary: None, sweep: Vec::new(), monotone: None, r: None }
    }
}

struct Ctx {
    grid: Grid,
    ygrid: Grid,
    w: Vec<C64>,
}

impl Ctx {
    fn new(inst: &Instance) -> Result<Self> {
        let (u, v) = inst.densities()?;
        let w = u.values().iter().zip(v.values()).map(|(a, b)| a - b).collect();
        Ok(Self { grid: inst.grid.clone(), ygrid: inst.grid.dual(), w })
    }

    fn dense(&self, sym: &Symbol) -> Result<DenseSymbol> {
        dense_on(sym, &self.grid)
    }

    fn mmd(&self, d: &DenseSymbol) -> Result<f64> {
        Ok(density_squared(&self.ygrid, &self.w, &Symbol::Dense(d.clone()))?.max(0.0).sqrt())
    }
}

fn hs(d: &DenseSymbol) -> Result<f64> {
    Ok(hs_norm(&build_operator_dense(d, OperatorKind::IntegralOf)?))
}

fn dx_norm(d: &DenseSymbol) -> Result<f64> {
    Ok(two_inf_norm(&build_operator_dense(d, OperatorKind::PdoDx)?))
}

fn diff(a: &DenseSymbol, b: &DenseSymbol) -> Result<DenseSymbol> {
    DenseSymbol::new(a.grid_x().clone(), a.grid_y().clone(), a.values() - b.values())
}

fn scale_of(values: &[f64]) -> f64 {
    values.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE)
}

pub(crate) fn triangle(inst: &Instance) -> Result<TrialOutcome> {
    let ctx = Ctx::new(inst)?;
    let s1 = inst.symbols[0].build(&inst.grid)?;
    let s2 = inst.symbols[1].build(&inst.grid)?;
    let d1 = ctx.dense(&s1)?;
    let d2 = ctx.dense(&s2)?;
    let d12 = ctx.dense(&add(&s1, &s2)?)?;
    let tol = INEQUALITY_RTOL * scale_of(&[hs(&d1)? + hs(&d2)?]);
    Ok(TrialOutcome::single(Comparison::bound(ctx.mmd(&d12)?, ctx.mmd(&d1)? + ctx.mmd(&d2)?, tol)))
}

/// `|MMD_1 - MMD_2| <= 2 ||F_1(D, x) - F_2(D, x)||_{2,inf}`.
pub(crate) fn lipschitz_pair(inst: &Instance, s1: &Symbol, s2: &Symbol) -> Result<Comparison> {
    let ctx = Ctx::new(inst)?;
    let d1 = ctx.dense(s1)?;
    let d2 = ctx.dense(s2)?;
    let lhs = (ctx.mmd(&d1)? - ctx.mmd(&d2)?).abs();
    let rhs = 2.0 * dx_norm(&diff(&d1, &d2)?)?;
    let tol = INEQUALITY_RTOL * scale_of(&[hs(&d1)? + hs(&d2)?]);
    Ok(Comparison::bound(lhs, rhs, tol))
}

pub(crate) fn lipschitz(inst: &Instance) -> Result<TrialOutcome> {
    let s1 = inst.symbols[0].build(&inst.grid)?;
    let s2 = inst.symbols[1].build(&inst.grid)?;
    Ok(TrialOutcome::single(lipschitz_pair(inst, &s1, &s2)?))
}

fn monotone(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + tol)
}

/// Worst comparison of a sweep, by margin relative to tolerance.
fn worst(cmps: &[Comparison]) -> usize {
    let mut best = 0;
    for (i, c) in cmps.iter().enumerate() {
        if c.slack() < cmps[best].slack() {
            best = i;
        }
    }
    best
}

pub(crate) fn trunc_2inf(inst: &Instance) -> Result<TrialOutcome> {
    let ctx = Ctx::new(inst)?;
    let f = ctx.dense(&inst.symbols[0].build(&inst.grid)?)?;
    let scale = hs(&f)?;
    let tol = INEQUALITY_RTOL * scale_of(&[scale]);
    let svd = nystrom_svd(&f)?;
    let rank = svd.numerical_rank();
    let cf = c_f_constant(&svd, rank)?.value;
    let mmd_f = ctx.mmd(&f)?;
    let mut prim = Vec::new();
    let mut sec = Vec::new();
    let mut sweep = Vec::new();
    for r in 0..=rank.min(MAX_SWEEP_RANK) {
        let fr = ctx.dense(&Symbol::Separable(truncate(&svd, r)?))?;
        let rest = diff(&f, &fr)?;
        let lhs = dx_norm(&rest)?;
        let rhs = cf * tail_sum(&svd, r, 1)?;
        let mmd_diff = (mmd_f - ctx.mmd(&fr)?).abs();
        prim.push(Comparison::bound(lhs, rhs, tol));
        sec.push(Comparison::bound(mmd_diff, 2.0 * rhs, tol));
        sweep.push(SweepPoint { r, lhs, rhs });
    }
    let lhs: Vec<f64> = sweep.iter().map(|p| p.lhs).collect();
    let k = worst(&prim);
    let ks = worst(&sec);
    Ok(TrialOutcome {
        primary: prim[k].clone(),
        secondary: Some(sec[ks].clone()),
        monotone: Some(monotone(&lhs, tol)),
        sweep,
        r: Some(k),
    })
}

pub(crate) fn trunc_hs(inst: &Instance) -> Result<TrialOutcome> {
    let ctx = Ctx::new(inst)?;
    let f = ctx.dense(&inst.symbols[0].build(&inst.grid)?)?;
    let scale = hs(&f)?;
    let tol = INEQUALITY_RTOL * scale_of(&[scale]);
    let svd = nystrom_svd(&f)?;
    let rank = svd.numerical_rank();
    let mut prim = Vec::new();
    let mut eq = Vec::new();
    let mut sweep = Vec::new();
    for r in 0..=rank.min(MAX_SWEEP_RANK) {
        let fr = ctx.dense(&Symbol::Separable(truncate(&svd, r)?))?;
        let lhs = hs(&diff(&f, &fr)?)?;
        let rhs = tail_sum(&svd, r, 2)?.sqrt();
        prim.push(Comparison::bound(lhs, rhs, tol));
        eq.push(Comparison::equality(lhs, rhs, ECKART_YOUNG_RTOL * rhs + ECKART_YOUNG_FLOOR * scale));
        sweep.push(SweepPoint { r, lhs, rhs });
    }
    let lhs: Vec<f64> = sweep.iter().map(|p| p.lhs).collect();
    let k = worst(&prim);
    let ke = worst(&eq);
    Ok(TrialOutcome {
        primary: prim[k].clone(),
        secondary: Some(eq[ke].clone()),
        monotone: Some(monotone(&lhs, tol)),
        sweep,
        r: Some(k),
    })
}

pub(crate) fn diag(inst: &Instance) -> Result<TrialOutcome> {
    let sym = inst.symbols[0].build(&inst.grid)?;
    let a = build_operator(&sym, OperatorKind::IntegralOf, &inst.grid)?.diag_kernel();
    let b = build_operator(&sym, OperatorKind::PdoXd, &inst.grid)?.diag_kernel();
    let top = scale_of(&a);
    let cmps: Vec<Comparison> = a
        .iter()
        .zip(&b)
        .map(|(a, b)| Comparison::equality(*b, *a, IDENTITY_RTOL * a.max(*b) + f64::EPSILON * top))
        .collect();
    Ok(TrialOutcome::single(cmps[worst(&cmps)].clone()))
}

pub(crate) fn hs_eq(inst: &Instance) -> Result<TrialOutcome> {
    let sym = inst.symbols[0].build(&inst.grid)?;
    let a = hs_norm(&build_operator(&sym, OperatorKind::IntegralOf, &inst.grid)?);
    let b = hs_norm(&build_operator(&sym, OperatorKind::PdoXd, &inst.grid)?);
    let c = hs_norm(&build_operator(&sym, OperatorKind::PdoDx, &inst.grid)?);
    let tol = IDENTITY_RTOL * a;
    Ok(TrialOutcome {
        primary: Comparison::equality(b, a, tol),
        secondary: Some(Comparison::equality(c, a, tol)),
        sweep: Vec::new(),
        monotone: None,
        r: None,
    })
}

/// A separable form of the primary symbol: itself, or its full SVD expansion.
fn separable_form(inst: &Instance) -> Result<SeparableSymbol> {
    match inst.symbols[0].build(&inst.grid)? {
        Symbol::Separable(s) => Ok(s),
        Symbol::Dense(d) => {
            let svd = nystrom_svd(&d)?;
            truncate(&svd, svd.numerical_rank())
        }
    }
}

pub(crate) fn dual_norm_bound(inst: &Instance) -> Result<TrialOutcome> {
    let grid = &inst.grid;
    let ygrid = grid.dual();
    let canon = canonicalize_on(&separable_form(inst)?, grid)?;
    let sym = canon.symbol();
    let lhs = two_inf_norm(&build_operator(&Symbol::Separable(sym.clone()), OperatorKind::PdoDx, grid)?);
    let mut rhs = 0.0;
    for t in sym.terms() {
        let f = GridFunction::new(grid.clone(), t.f.sample(grid)?)?;
        let g = GridFunction::new(ygrid.clone(), t.g.sample(&ygrid)?)?;
        rhs += t.coef.norm() * norm(&f, Norm::L2) * norm(&g, Norm::Linf);
    }
    let tol = INEQUALITY_RTOL * scale_of(&[rhs]);
    Ok(TrialOutcome::single(Comparison::bound(lhs, rhs, tol)))
}

/// `G = F + (dF)_{n - d}` for a rank-`d` separable `F` and a dense `dF`;
/// compares `||(F + dF) - G||` with the HS tail of `dF` beyond `n - d`.
pub(crate) fn shifted(inst: &Instance) -> Result<TrialOutcome> {
    let grid = &inst.grid;
    let mut rng = inst.rng(0);
    let spec = super::instance::InstanceSpec {
        grid: grid.clone(),
        family: Some(SymbolFamily::SeparableGaussHermite),
        ..Default::default()
    };
    let f = SymbolParams::random(&mut rng, SymbolFamily::SeparableGaussHermite, &spec).build(grid)?;
    let eps: f64 = rng.random_range(0.05..0.5);
    let delta = SymbolParams::random(&mut rng, SymbolFamily::DenseGaussianEnvelope, &spec).build(grid)?;
    let delta = match delta {
        Symbol::Dense(d) => DenseSymbol::new(d.grid_x().clone(), d.grid_y().clone(), d.values() * C64::new(eps, 0.0))?,
        Symbol::Separable(_) => unreachable!("dense family builds dense symbols"),
    };
    let d = nystrom_svd(&dense_on(&f, grid)?)?.numerical_rank();
    let n = d + rng.random_range(0..=8usize);
    let dsvd = nystrom_svd(&delta)?;
    let k = (n - d).min(dsvd.len());
    let g = add(&f, &Symbol::Separable(truncate(&dsvd, k)?))?;
    let full = add(&f, &Symbol::Dense(delta))?;
    let rest = dense_on(&sub(&full, &g)?, grid)?;
    let lhs = dx_norm(&rest)?;
    let rhs = tail_sum(&dsvd, k, 2)?.sqrt();
    Ok(TrialOutcome {
        primary: Comparison::informational(lhs, rhs),
        secondary: None,
        sweep: Vec::new(),
        monotone: None,
        r: Some(n),
    })
}
