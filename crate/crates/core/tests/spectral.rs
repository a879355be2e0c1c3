use std::f64::consts::PI;

use pdommd::numgrid::{norm, Grid, Norm};
use pdommd::spectral::{
    build_operator, hs_norm, orthonormality_error, svd_of, tail_sum, truncate, two_inf_norm, OperatorKind,
};
use pdommd::symbols::{dense_on, sub, AnalyticTerm, Factor, SeparableSymbol, Symbol, Term};
use pdommd::{Error, C64};
use proptest::prelude::*;

/// Normalized Hermite function of order `k` (orders 0 and 1).
fn hermite_fn(k: usize, shift: f64) -> Factor {
    let c = PI.powf(-0.25) * if k == 1 { 2f64.sqrt() } else { 1.0 };
    Factor::Analytic(AnalyticTerm::GaussHermite {
        degree: vec![k],
        width: 1.0,
        center: vec![shift],
        scale: C64::new(c, 0.0),
    })
}

fn grid() -> Grid {
    Grid::new(1, 128, 10.0).unwrap()
}

fn orthonormal_rank_two(a: f64, b: f64) -> Symbol {
    Symbol::Separable(
        SeparableSymbol::new(
            1,
            vec![
                Term::real(a, hermite_fn(0, 0.0), hermite_fn(0, 0.0)),
                Term::real(b, hermite_fn(1, 0.0), hermite_fn(1, 0.0)),
            ],
        )
        .unwrap(),
    )
}

#[test]
fn orthonormal_rank_two_singular_values() {
    let svd = svd_of(&orthonormal_rank_two(2.0, 1.0), &grid()).unwrap();
    assert!((svd.sigmas[0] - 2.0).abs() < 1e-10 && (svd.sigmas[1] - 1.0).abs() < 1e-10, "{:?}", &svd.sigmas[..3]);
    assert!(svd.sigmas[2] < 1e-10);
    assert_eq!(svd.numerical_rank(), 2);
    assert!(orthonormality_error(&svd, 2).unwrap() < 1e-10);
    let op = build_operator(&orthonormal_rank_two(2.0, 1.0), OperatorKind::IntegralOf, &grid()).unwrap();
    assert!((hs_norm(&op) - 5f64.sqrt()).abs() < 1e-10);
}

#[test]
fn truncation_rank_bounds() {
    let svd = svd_of(&orthonormal_rank_two(2.0, 1.0), &grid()).unwrap();
    assert!(matches!(truncate(&svd, svd.len() + 1), Err(Error::RankOutOfRange { .. })));
    assert_eq!(truncate(&svd, 0).unwrap().rank(), 0);
    assert_eq!(truncate(&svd, 1).unwrap().rank(), 1);
    assert_eq!(truncate(&svd, 50).unwrap().rank(), 2);
    assert!(tail_sum(&svd, 0, 3).is_err());
}

#[test]
fn two_inf_norm_of_rank_one() {
    // u -> f <g, u> has L2 to sup norm ||f||_inf ||g||_2; 0.625 is a lattice point
    let sym = Symbol::Separable(SeparableSymbol::rank_one(1, hermite_fn(0, 0.625), hermite_fn(1, 0.0)).unwrap());
    let op = build_operator(&sym, OperatorKind::IntegralOf, &grid()).unwrap();
    let want = PI.powf(-0.25);
    assert!((two_inf_norm(&op) - want).abs() < 1e-10 * want);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eckart_young_and_reconstruction(a in 0.1f64..3.0, b in 0.1f64..3.0, c in -2.0f64..2.0, s in -1.0f64..1.0) {
        let sym = Symbol::Separable(SeparableSymbol::new(1, vec![
            Term::real(a, hermite_fn(0, s), hermite_fn(0, 0.0)),
            Term::real(b, hermite_fn(1, 0.0), hermite_fn(0, s)),
            Term::real(c, hermite_fn(1, -s), hermite_fn(1, s)),
        ]).unwrap());
        let g = grid();
        let svd = svd_of(&sym, &g).unwrap();
        prop_assert!(svd.sigmas.windows(2).all(|w| w[0] >= w[1]));
        let dense = dense_on(&sym, &g).unwrap();
        let back = svd.reconstruct(svd.len()).unwrap();
        prop_assert!((back.values() - dense.values()).norm() <= 1e-10 * dense.values().norm());
        let hs = hs_norm(&build_operator(&sym, OperatorKind::IntegralOf, &g).unwrap());
        for r in 0..=3 {
            let fr = Symbol::Separable(truncate(&svd, r).unwrap());
            let resid = build_operator(&sub(&sym, &fr).unwrap(), OperatorKind::IntegralOf, &g).unwrap();
            let tail = tail_sum(&svd, r, 2).unwrap().sqrt();
            prop_assert!((hs_norm(&resid) - tail).abs() <= 1e-8 * hs + 1e-12, "r {r}");
        }
        for f in &svd.left[..svd.numerical_rank()] {
            prop_assert!((norm(f, Norm::L2) - 1.0).abs() < 1e-10);
        }
    }
}
