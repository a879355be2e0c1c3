//! Randomized checks of the operator inequalities and identities.
//!
//! Every trial draws an [`Instance`] from a seed derived from the run seed and
//! the trial index, evaluates both sides of one relation and records the
//! margin `rhs - lhs` (or `-|lhs - rhs|` for identities). A trial passes when
//! its margin is at least `-tol`, with `tol` scaled by the instance.

mod checks;
mod instance;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use checks::{ECKART_YOUNG_FLOOR, ECKART_YOUNG_RTOL, IDENTITY_RTOL, INEQUALITY_RTOL, MAX_SWEEP_RANK};
pub use instance::{
    generate_instance, HermiteFactor, HermiteTerm, Instance, InstanceSpec, Mixture, SymbolFamily, SymbolParams,
    MAX_DENSE_POINTS, MIN_VARIANCE,
};

use crate::error::{Error, Result};
use crate::symbols::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CheckId {
    #[serde(rename = "triangle")]
    Triangle,
    #[serde(rename = "lipschitz")]
    Lipschitz,
    #[serde(rename = "trunc_2inf")]
    Trunc2Inf,
    #[serde(rename = "trunc_hs")]
    TruncHs,
    #[serde(rename = "diag")]
    Diag,
    #[serde(rename = "hs_eq")]
    HsEq,
    #[serde(rename = "dual_norm_bound")]
    DualNormBound,
    #[serde(rename = "shifted")]
    Shifted,
}

impl CheckId {
    pub const ALL: [CheckId; 8] = [
        CheckId::Triangle,
        CheckId::Lipschitz,
        CheckId::Trunc2Inf,
        CheckId::TruncHs,
        CheckId::Diag,
        CheckId::HsEq,
        CheckId::DualNormBound,
        CheckId::Shifted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckId::Triangle => "triangle",
            CheckId::Lipschitz => "lipschitz",
            CheckId::Trunc2Inf => "trunc_2inf",
            CheckId::TruncHs => "trunc_hs",
            CheckId::Diag => "diag",
            CheckId::HsEq => "hs_eq",
            CheckId::DualNormBound => "dual_norm_bound",
            CheckId::Shifted => "shifted",
        }
    }

    /// Checks that report a ratio instead of pass/fail.
    pub fn informational(self) -> bool {
        self == CheckId::Shifted
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckId::ALL.iter().copied().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<&str> = CheckId::ALL.iter().map(|c| c.name()).collect();
            Error::InvalidInput(format!("unknown check '{s}'; expected one of {}", names.join(", ")))
        })
    }
}

/// One side-by-side evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Comparison {
    /// `lhs <= rhs` up to `tol`.
    pub fn bound(lhs: f64, rhs: f64, tol: f64) -> Self {
        let margin = rhs - lhs;
        Self { lhs, rhs, margin, tol, pass: margin >= -tol }
    }

    /// `lhs == rhs` up to `tol`.
    pub fn equality(lhs: f64, rhs: f64, tol: f64) -> Self {
        let margin = -(lhs - rhs).abs();
        Self { lhs, rhs, margin, tol, pass: margin >= -tol }
    }

    /// Recorded without a verdict.
    pub fn informational(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, margin: rhs - lhs, tol: 0.0, pass: true }
    }

    /// Margin in units of the tolerance; negative below `-1` fails.
    fn slack(&self) -> f64 {
        if self.tol > 0.0 {
            self.margin / self.tol
        } else if self.margin >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    }

    /// `lhs / rhs`, when `rhs` is above rounding level.
    fn ratio(&self) -> Option<f64> {
        (self.rhs > 0.0 && self.rhs > self.tol).then(|| self.lhs / self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub r: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub family: SymbolFamily,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub secondary: Option<Comparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotone: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    fn failed(trial: usize, seed: u64, family: SymbolFamily, err: &Error) -> Self {
        Self {
            trial,
            seed,
            family,
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            tol: f64::NAN,
            pass: false,
            r: None,
            secondary: None,
            monotone: None,
            sweep: Vec::new(),
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: CheckId,
    pub trials: usize,
    /// Trials whose relation failed; errored trials are counted in `errors`.
    pub violations: usize,
    pub errors: usize,
    pub informational: bool,
    pub worst_margin: f64,
    /// `max lhs / rhs` over trials whose `rhs` exceeds the tolerance.
    pub empirical_constant: f64,
    pub seeds: Vec<u64>,
    /// Wall time, only recorded on request so reports stay reproducible.
    pub runtime_ms: Option<u64>,
    pub records: Vec<TrialRecord>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.errors == 0
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub trials: usize,
    pub seed: u64,
    pub spec: InstanceSpec,
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { trials: 100, seed: 0, spec: InstanceSpec::default(), timing: false }
    }
}

/// Seed of trial `t` under run seed `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    // splitmix64 step
    let mut z = seed.wrapping_add((trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn evaluate(check: CheckId, inst: &Instance) -> Result<checks::TrialOutcome> {
    match check {
        CheckId::Triangle => checks::triangle(inst),
        CheckId::Lipschitz => checks::lipschitz(inst),
        CheckId::Trunc2Inf => checks::trunc_2inf(inst),
        CheckId::TruncHs => checks::trunc_hs(inst),
        CheckId::Diag => checks::diag(inst),
        CheckId::HsEq => checks::hs_eq(inst),
        CheckId::DualNormBound => checks::dual_norm_bound(inst),
        CheckId::Shifted => checks::shifted(inst),
    }
}

/// Runs one check on a single instance.
pub fn run_trial(check: CheckId, inst: &Instance, trial: usize) -> TrialRecord {
    match evaluate(check, inst) {
        Ok(o) => {
            let secondary_ok = o.secondary.as_ref().is_none_or(|c| c.pass);
            TrialRecord {
                trial,
                seed: inst.seed,
                family: inst.family(),
                lhs: o.primary.lhs,
                rhs: o.primary.rhs,
                margin: o.primary.margin,
                tol: o.primary.tol,
                pass: o.primary.pass && secondary_ok && o.monotone.unwrap_or(true),
                r: o.r,
                secondary: o.secondary,
                monotone: o.monotone,
                sweep: o.sweep,
                error: None,
            }
        }
        Err(e) => TrialRecord::failed(trial, inst.seed, inst.family(), &e),
    }
}

/// Lipschitz comparison for an explicit symbol pair on an instance's densities.
pub fn lipschitz_pair(inst: &Instance, s1: &Symbol, s2: &Symbol) -> Result<Comparison> {
    checks::lipschitz_pair(inst, s1, s2)
}

pub fn run_check(check: CheckId, opts: &RunOptions) -> Result<CheckReport> {
    if opts.trials < 1 {
        return Err(Error::SpecError("a check needs at least one trial".into()));
    }
    opts.spec.validate()?;
    let start = Instant::now();
    let records: Vec<TrialRecord> = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(opts.seed, t);
            match generate_instance(seed, &opts.spec, t) {
                Ok(inst) => run_trial(check, &inst, t),
                Err(e) => {
                    let family = opts.spec.family.unwrap_or(SymbolFamily::ALL[t % SymbolFamily::ALL.len()]);
                    TrialRecord::failed(t, seed, family, &e)
                }
            }
        })
        .collect();
    let runtime_ms = opts.timing.then(|| start.elapsed().as_millis() as u64);
    Ok(assemble(check, records, runtime_ms))
}

fn assemble(check: CheckId, records: Vec<TrialRecord>, runtime_ms: Option<u64>) -> CheckReport {
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    let violations = records.iter().filter(|r| r.error.is_none() && !r.pass).count();
    let informational = check.informational();
    let mut worst_margin = f64::INFINITY;
    let mut empirical_constant = 0.0f64;
    for r in records.iter().filter(|r| r.error.is_none()) {
        worst_margin = worst_margin.min(r.margin);
        let primary = Comparison { lhs: r.lhs, rhs: r.rhs, margin: r.margin, tol: r.tol, pass: r.pass };
        if let Some(c) = primary.ratio() {
            empirical_constant = empirical_constant.max(c);
        }
    }
    if !worst_margin.is_finite() {
        worst_margin = f64::NAN;
    }
    CheckReport {
        check,
        trials: records.len(),
        violations,
        errors,
        informational,
        worst_margin,
        empirical_constant,
        seeds: records.iter().map(|r| r.seed).collect(),
        runtime_ms,
        records,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub check: CheckId,
    pub trials: usize,
    pub violations: usize,
    pub errors: usize,
    pub pass_rate: f64,
    pub worst_margin: f64,
    pub empirical_constant: f64,
    pub informational: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub checks: Vec<CheckSummary>,
    pub all_passed: bool,
}

/// Merges reports per check, ordered by check id.
pub fn aggregate(reports: &[CheckReport]) -> Result<Summary> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("no reports to aggregate".into()));
    }
    let mut by_check: BTreeMap<CheckId, CheckSummary> = BTreeMap::new();
    for r in reports {
        if r.trials == 0 {
            return Err(Error::InvalidInput(format!("report for {} has no trials", r.check)));
        }
        let e = by_check.entry(r.check).or_insert(CheckSummary {
            check: r.check,
            trials: 0,
            violations: 0,
            errors: 0,
            pass_rate: 0.0,
            worst_margin: f64::INFINITY,
            empirical_constant: 0.0,
            informational: r.informational,
        });
        e.trials += r.trials;
        e.violations += r.violations;
        e.errors += r.errors;
        if !r.worst_margin.is_nan() {
            e.worst_margin = e.worst_margin.min(r.worst_margin);
        }
        e.empirical_constant = e.empirical_constant.max(r.empirical_constant);
    }
    let mut checks: Vec<CheckSummary> = by_check.into_values().collect();
    for c in &mut checks {
        c.pass_rate = (c.trials - c.violations - c.errors) as f64 / c.trials as f64;
        if !c.worst_margin.is_finite() {
            c.worst_margin = f64::NAN;
        }
    }
    let all_passed = checks.iter().all(|c| c.violations == 0 && c.errors == 0);
    Ok(Summary { checks, all_passed })
}
