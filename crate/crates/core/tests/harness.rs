use pdommd::harness::{
    aggregate, generate_instance, run_check, run_trial, trial_seed, CheckId, InstanceSpec, RunOptions, SymbolFamily,
};
use pdommd::numgrid::Grid;

fn opts(trials: usize, seed: u64) -> RunOptions {
    RunOptions { trials, seed, ..Default::default() }
}

#[test]
fn every_check_passes_small_runs() {
    let reports: Vec<_> = CheckId::ALL.iter().map(|c| run_check(*c, &opts(9, 3)).unwrap()).collect();
    for r in &reports {
        assert_eq!(r.trials, 9);
        assert_eq!(r.seeds.len(), 9);
        assert_eq!(r.runtime_ms, None);
        if !r.informational {
            assert!(r.passed(), "{}: {} violations, {} errors", r.check.name(), r.violations, r.errors);
        }
    }
    let summary = aggregate(&reports).unwrap();
    assert_eq!(summary.checks.len(), CheckId::ALL.len());
    assert!(summary.all_passed);
}

#[test]
fn runs_are_reproducible() {
    let a = serde_json::to_string(&run_check(CheckId::Triangle, &opts(6, 11)).unwrap()).unwrap();
    let b = serde_json::to_string(&run_check(CheckId::Triangle, &opts(6, 11)).unwrap()).unwrap();
    assert_eq!(a, b);
    let c = serde_json::to_string(&run_check(CheckId::Triangle, &opts(6, 12)).unwrap()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn instances_depend_only_on_seed_and_trial() {
    let spec = InstanceSpec::default();
    let a = generate_instance(trial_seed(4, 2), &spec, 2).unwrap();
    let b = generate_instance(trial_seed(4, 2), &spec, 2).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, generate_instance(trial_seed(4, 3), &spec, 2).unwrap());
    assert_ne!(trial_seed(4, 2), trial_seed(5, 2));
    let families: Vec<_> = (0..3).map(|t| generate_instance(trial_seed(4, t), &spec, t).unwrap().family()).collect();
    assert_eq!(families, SymbolFamily::ALL.to_vec());
}

#[test]
fn two_dimensional_instances() {
    let spec = InstanceSpec { grid: Grid::new(2, 32, 4.0).unwrap(), ..Default::default() };
    for t in 0..3 {
        let inst = generate_instance(trial_seed(8, t), &spec, t).unwrap();
        let rec = run_trial(CheckId::HsEq, &inst, t);
        assert!(rec.pass && rec.error.is_none(), "{rec:?}");
    }
}

#[test]
fn truncated_profile_is_an_error_record() {
    // a dual half-width near 4 cuts the Gaussian profile off and breaks positive definiteness
    let spec = InstanceSpec { grid: Grid::new(2, 16, 6.0).unwrap(), ..Default::default() };
    let inst = generate_instance(trial_seed(8, 2), &spec, 2).unwrap();
    let rec = run_trial(CheckId::HsEq, &inst, 2);
    assert!(!rec.pass && rec.lhs.is_nan());
    assert!(rec.error.unwrap().contains("positive definite"));
}

#[test]
fn invalid_spec_and_empty_aggregate() {
    let spec = InstanceSpec { rank_range: (3, 1), ..Default::default() };
    assert!(generate_instance(0, &spec, 0).is_err());
    assert!(aggregate(&[]).is_err());
}

#[test]
fn timing_is_opt_in() {
    let r = run_check(CheckId::Diag, &RunOptions { trials: 2, seed: 0, timing: true, ..Default::default() }).unwrap();
    assert!(r.runtime_ms.is_some());
}
