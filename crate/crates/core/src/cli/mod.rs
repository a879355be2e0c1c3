//! The `pdommd` command line.
//!
//! Exit codes: 0 success, 1 numerical failure or malformed input (partial
//! reports are still written), 2 usage error.

pub mod config;
pub mod output;
pub mod schema;

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

pub use config::RunConfig;
use output::{open, read_rows, OutputDir};
pub use schema::{BuiltSymbol, GridSpec, SymbolSpec};

use crate::error::Error;
use crate::fit::{fit_grid, fit_mmd, Family, Optimizer, ParametricModel};
use crate::format::{fmt_f64, to_json_pretty, to_json_string};
use crate::harness::{aggregate, run_check, CheckId, RunOptions};
use crate::kernels::{gram, kernel_of, psd_check, KernelForm};
use crate::mmd::{mmd_density, mmd_gram, mmd_spectral, moment_field, witness, Method, SampleSet, Statistic};
use crate::numgrid::{Grid, GridFunction, Point};
use crate::spectral::{build_operator, hs_norm, svd_of, tail_sum, truncate, two_inf_norm, OperatorKind};
use crate::symbols::{canonicalize_on, SeparableSymbol, Symbol};

/// Largest lattice the CLI densifies to report operator norms or Gram matrices.
pub const MAX_DENSE_POINTS: usize = 1024;

#[derive(Debug, Parser)]
#[command(name = "pdommd", version, about = "Kernels, MMD estimates and bound checks from PDO symbols")]
#[command(arg_required_else_help = true, subcommand_required = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or canonicalize a symbol description.
    Symbol {
        #[command(subcommand)]
        action: SymbolAction,
    },
    /// Nyström SVD of the symbol on its working grid.
    Svd,
    /// Rank-`r` truncation of the SVD expansion.
    Truncate,
    /// Evaluate the kernel at point pairs or on a Gram matrix.
    Kernel {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// MMD between two samples (gram, spectral) or two gridded densities (density).
    Mmd,
    /// Witness of the MMD between two samples.
    Witness,
    /// Local moment fields of the canonical symbol.
    Moments,
    /// Run a bound check over seeded random instances (`all` runs every check).
    Verify { check: String },
    /// Fit a parametric sampler to data by minimizing the spectral MMD.
    Fit,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum SymbolAction {
    Build,
    Canonicalize,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum KernelAction {
    /// K(s, t) for each row `s..., t...` of the points file.
    Eval,
    /// Gram matrix on the `u` samples, or on the grid lattice without samples.
    Grid,
}

fn parse_serde<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// `dim,n,half_width`.
fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [d, n, h] = parts[..] else {
        return Err(format!("expected dim,n,half_width, got {s:?}"));
    };
    let e = |what: &str| format!("bad {what} in {s:?}");
    Ok(GridSpec {
        dim: d.parse().map_err(|_| e("dim"))?,
        n: n.parse().map_err(|_| e("n"))?,
        half_width: schema::HalfWidth::Uniform(h.parse().map_err(|_| e("half_width"))?),
    })
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default `.`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run seed (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Grid as `dim,n,half_width`.
    #[arg(long, global = true, value_parser = parse_grid)]
    pub grid: Option<GridSpec>,
    /// Symbol description file.
    #[arg(long = "symbol", global = true)]
    pub symbol_ref: Option<PathBuf>,
    /// First sample CSV (or density CSV for `mmd --method density`).
    #[arg(long, global = true)]
    pub u: Option<PathBuf>,
    /// Second sample CSV (or density CSV).
    #[arg(long, global = true)]
    pub v: Option<PathBuf>,
    /// Data sample CSV for `fit`.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Point-pair CSV for `kernel eval`.
    #[arg(long, global = true)]
    pub points: Option<PathBuf>,
    /// gram (or gram_v), gram_u, spectral or density (default spectral).
    #[arg(long, global = true, value_parser = parse_serde::<Method>)]
    pub method: Option<Method>,
    /// v or u, for the gram method.
    #[arg(long, global = true, value_parser = parse_serde::<Statistic>)]
    pub statistic: Option<Statistic>,
    /// Truncation rank.
    #[arg(long, global = true)]
    pub rank: Option<usize>,
    /// Trials per check (default 100).
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Record wall-clock runtimes (outputs stop being byte-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    /// gaussian or mixture2.
    #[arg(long, global = true, value_parser = parse_serde::<Family>)]
    pub family: Option<Family>,
    /// Initial parameters, comma separated (default all zeros).
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub init: Option<Vec<f64>>,
    /// nelder_mead or fd_gradient.
    #[arg(long, global = true, value_parser = parse_serde::<Optimizer>)]
    pub optimizer: Option<Optimizer>,
    /// Objective evaluation budget (default 500, at least 50).
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Base-noise draws held by the model (default: the data size).
    #[arg(long, global = true)]
    pub noise: Option<usize>,
}

impl Flags {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            seed: self.seed,
            out: self.out.clone(),
            grid: self.grid.clone(),
            symbol: None,
            symbol_ref: self.symbol_ref.clone(),
            u: self.u.clone(),
            v: self.v.clone(),
            data: self.data.clone(),
            points: self.points.clone(),
            method: self.method,
            statistic: self.statistic,
            rank: self.rank,
            trials: self.trials,
            timing: self.timing.then_some(true),
            family: self.family,
            init: self.init.clone(),
            optimizer: self.optimizer,
            budget: self.budget,
            noise: self.noise,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

/// Result of a completed command: the stdout summary, and whether the
/// numerical outcome counts as success.
pub struct Outcome {
    pub summary: Value,
    pub ok: bool,
}

type CmdResult = Result<Outcome, CliError>;

fn done(summary: Value) -> CmdResult {
    Ok(Outcome { summary, ok: true })
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match prepare(&cli).and_then(|cfg| execute(&cli.command, &cfg)) {
        Ok(out) => {
            match to_json_pretty(&out.summary) {
                Ok(s) => print!("{s}"),
                Err(e) => {
                    eprintln!("pdommd: {e}");
                    return 1;
                }
            }
            if out.ok {
                0
            } else {
                eprintln!("pdommd: numerical check failed; see the reports");
                1
            }
        }
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("pdommd: usage error: {m}"),
                CliError::Failure(m) => eprintln!("pdommd: {m}"),
            }
            e.exit_code()
        }
    }
}

pub fn main_from_env() -> i32 {
    run(std::env::args_os())
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("PDOMMD_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("PDOMMD_THREADS must be a positive integer, got {v:?}")))?;
    // a second initialization in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Resolves defaults, file and flags into one config and logs it.
pub fn prepare(cli: &Cli) -> Result<RunConfig, CliError> {
    init_threads()?;
    let file = match &cli.flags.config {
        Some(p) => RunConfig::load(p).map_err(CliError::Usage)?,
        None => RunConfig::default(),
    };
    let cfg = file.overlay(cli.flags.to_config());
    let missing = cfg.missing_inputs();
    if !missing.is_empty() {
        let names: Vec<String> = missing.iter().map(|p| p.display().to_string()).collect();
        return Err(CliError::Usage(format!("input file not found: {}", names.join(", "))));
    }
    let logged = to_json_string(&cfg).unwrap_or_default();
    eprintln!("pdommd: seed {} config {logged}", cfg.seed());
    Ok(cfg)
}

fn need<T: Clone>(v: &Option<T>, what: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Usage(format!("this command needs {what}")))
}

fn load_symbol(cfg: &RunConfig) -> Result<BuiltSymbol, CliError> {
    let spec = match (&cfg.symbol_ref, &cfg.symbol) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Failure(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<SymbolSpec>(&text).map_err(|e| CliError::Failure(format!("{}: {e}", p.display())))?
        }
        (None, Some(s)) => s.clone(),
        (None, None) => return Err(CliError::Usage("this command needs --symbol or a `symbol` config entry".into())),
    };
    Ok(spec.build()?)
}

fn grid_of(cfg: &RunConfig, sym: &BuiltSymbol) -> Result<Grid, CliError> {
    match &cfg.grid {
        Some(g) => Ok(g.build()?),
        None => Ok(sym.working_grid()?),
    }
}

fn samples(path: &Option<PathBuf>, what: &str) -> Result<SampleSet, CliError> {
    let p = need(path, what)?;
    SampleSet::read_csv(open(&p)?).map_err(|e| CliError::Failure(format!("{}: {e}", p.display())))
}

fn grid_function(path: &Option<PathBuf>, what: &str) -> Result<GridFunction, CliError> {
    let p = need(path, what)?;
    GridFunction::read_csv(open(&p)?).map_err(|e| CliError::Failure(format!("{}: {e}", p.display())))
}

/// Configured grid, else one sized to the samples and symbol.
fn sample_grid(cfg: &RunConfig, sym: &SeparableSymbol, sets: &[&SampleSet]) -> Result<Grid, CliError> {
    if let Some(g) = &cfg.grid {
        return Ok(g.build()?);
    }
    let r = sets.iter().flat_map(|s| s.radius()).fold(0.0, f64::max);
    Ok(fit_grid(sym, 2.0 * r + 1.0)?)
}

fn coords(p: &Point, dim: usize) -> impl Iterator<Item = String> + '_ {
    p[..dim].iter().map(|v| fmt_f64(*v))
}

pub fn execute(cmd: &Command, cfg: &RunConfig) -> CmdResult {
    let mut out = OutputDir::create(&cfg.out_dir())?;
    let res = match cmd {
        Command::Symbol { action: SymbolAction::Build } => symbol_build(cfg, &mut out),
        Command::Symbol { action: SymbolAction::Canonicalize } => symbol_canonicalize(cfg, &mut out),
        Command::Svd => svd_cmd(cfg, &mut out),
        Command::Truncate => truncate_cmd(cfg, &mut out),
        Command::Kernel { action } => kernel_cmd(*action, cfg, &mut out),
        Command::Mmd => mmd_cmd(cfg, &mut out),
        Command::Witness => witness_cmd(cfg, &mut out),
        Command::Moments => moments_cmd(cfg, &mut out),
        Command::Verify { check } => verify_cmd(check, cfg, &mut out),
        Command::Fit => fit_cmd(cfg, &mut out),
    }?;
    let mut summary = res.summary;
    if let Value::Object(m) = &mut summary {
        m.insert("seed".into(), json!(cfg.seed()));
        m.insert("files".into(), json!(out.written()));
    }
    Ok(Outcome { summary, ok: res.ok })
}

fn symbol_build(cfg: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let sym = load_symbol(cfg)?;
    let grid = grid_of(cfg, &sym)?;
    out.json("symbol.json", &SymbolSpec::of_symbol(&sym.symbol, sym.grid.as_ref()))?;
    let (kind, rank) = match &sym.symbol {
        Symbol::Separable(s) => ("separable", Some(s.rank())),
        Symbol::Dense(_) => ("dense", None),
    };
    let (hs, two_inf) = if grid.len() <= MAX_DENSE_POINTS || grid.dim() == 1 {
        let a = build_operator(&sym.symbol, OperatorKind::IntegralOf, &grid)?;
        let b = build_operator(&sym.symbol, OperatorKind::PdoDx, &grid)?;
        (Some(hs_norm(&a)), Some(two_inf_norm(&b)))
    } else {
        (None, None)
    };
    done(json!({
        "command": "symbol build",
        "type": kind,
        "dim": sym.symbol.dim(),
        "rank": rank,
        "grid": GridSpec::of(&grid),
        "hs_norm": hs,
        "two_inf_norm": two_inf,
    }))
}

fn symbol_canonicalize(cfg: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let sym = load_symbol(cfg)?;
    let grid = grid_of(cfg, &sym)?;
    let sep = sym.separable()?;
    let canon = canonicalize_on(sep, &grid)?;
    out.json("canonical.json", &SymbolSpec::of_separable(canon.symbol(), Some(&grid)))?;
    for (i, p) in canon.pdfs().iter().enumerate() {
        out.with_writer(&format!("pdf_{i}.csv"), |w| p.write_csv(w))?;
    }
    let (err, scale) = canon.reconstruction_error(sep, &grid.dual())?;
    let report = json!({
        "command": "symbol canonicalize",
        "terms": canon.len(),
        "source_rank": canon.source_rank(),
        "term_bound": 4 * canon.source_rank(),
        "masses": canon.masses(),
        "source_terms": canon.source_terms(),
        "reconstruction_error": err,
        "scale": scale,
    });
    out.json("canonical_report.json", &report)?;
    done(report)
}

fn svd_cmd(cfg: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let sym = load_symbol(cfg)?;
    let grid = grid_of(cfg, &sym)?;
    let svd = svd_of(&sym.symbol, &grid)?;
    out.csv_line("sigmas.csv", &svd.sigmas)?;
    let report = json!({
        "command": "svd",
        "grid_x": GridSpec::of(&svd.grid_x),
        "grid_y": GridSpec::of(&svd.grid_y),
        "numerical_rank": svd.numerical_rank(),
        "sigmas": svd.sigmas.iter().take(svd.numerical_rank().max(1)).collect::<Vec<_>>(),
    });
    out.json("svd.json", &report)?;
    done(report)
}

fn truncate_cmd(cfg: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let sym = load_symbol(cfg)?;
    let grid = grid_of(cfg, &sym)?;
    let r = need(&cfg.rank, "--rank")?;
    let svd = svd_of(&sym.symbol, &grid)?;
    let t = truncate(&svd, r)?;
    out.json("truncated.json", &SymbolSpec::of_separable(&t, Some(&grid)))?;
    let report = json!({
        "command": "truncate",
        "rank": r,
        "kept": t.rank(),
        "sigmas": &svd.sigmas[..t.rank()],
        "tail_hs": tail_sum(&svd, r, 2)?.sqrt(),
        "tail_sum": tail_sum(&svd, r, 1)?,
    });
    out.json("truncate.json", &report)?;
    done(report)
}

fn kernel_cmd(action: KernelAction, cfg: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let sym = load_symbol(cfg)?;
    let kernel = kernel_of(&sym.symbol)?;
    let d = kernel.dim();
    let form = match &kernel {
        KernelForm::Closed(_) => "closed",
        KernelForm::GridMatrix(_) => "grid_matrix",
    };
    match action {
        KernelAction::Eval => {
            let path = need(&cfg.points, "--points")?;
            let rows = read_rows(&path)?;
            if rows.first().is_some_and(|r| r.len() != 2 * d) {
                return Err(CliError::Failure(format!("{}: rows need {} columns (s..., t...)", path.display(), 2 * d)));
            }
            let vals = rows.iter().map(|r| kernel.eval(&r[..d], &r[d..])).collect::<crate::Result<Vec<_>>>()?;
            let header: Vec<String> = (1..=d)
                .map(|a| format!("s{a}"))
                .chain((1..=d).map(|a| format!("t{a}")))
                .chain(["re".into(), "im".into()])
                .collect();
            out.csv_rows(
                "kernel_eval.csv",
                &header,
                rows.iter()
                    .zip(&vals)
                    .map(|(r, v)| r.iter().map(|x| fmt_f64(*x)).chain([fmt_f64(v.re), fmt_f64(v.im)]).collect()),
            )?;
            done(json!({"command": "kernel eval", "form": form, "count": vals.len()}))
        }
        KernelAction::Grid => {
            let points: Vec<Point> = match &cfg.u {
                Some(_) => samples(&cfg.u, "--u")?.points().to_vec(),
                None => grid_of(cfg, &sym)?.points(),
            };
            if points.len() > MAX_DENSE_POINTS {
                return Err(CliError::Usage(format!(
                    "{} points exceed the Gram limit of {MAX_DENSE_POINTS}; pass a smaller --grid or sample file",
                    points.len()
                )));
            }
            let g = gram(&kernel, &points)?;
            let n = points.len();
            let header: Vec<String> = ["i", "j", "re", "im"].map(String::from).to_vec();
            out.csv_rows(
                "kernel_grid.csv",
                &header,
                (0..n).flat_map(|i| {
                    let e = &g.entries;
                    (0..n)
                        .map(move |j| vec![i.to_string(), j.to_string(), fmt_f64(e[(i, j)].re), fmt_f64(e[(i, j)].im)])
                }),
            )?;
            out.with_writer("kernel_points.csv", |w| {
                for p in &points {
                    writeln!(w, "{}", coords(p, d).collect::<Vec<_>>().join(","))?;
                }
                Ok(())
            })?;
            let psd = psd_check(&g);
            out.json("psd.json", &psd)?;
            done(json!({"command": "kernel grid", "form": form, "points": n, "psd": psd}))
        }
    }
}

fn mmd_cmd(cfg: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let sym = load_symbol(cfg)?;
    let method = match (cfg.method.unwrap_or(Method::Spectral), cfg.statistic) {
        (Method::GramV, Some(Statistic::U)) => Method::GramU,
        (m, _) => m,
    };
    let est = match method {
        Method::GramV | Method::GramU => {
            let (su, sv) = (samples(&cfg.u, "--u")?, samples(&cfg.v, "--v")?);
            let stat = if method == Method::GramU { Statistic::U } else { Statistic::V };
            mmd_gram(&su, &sv, &kernel_of(&sym.symbol)?, stat)?
        }
        Method::Spectral => {
            let (su, sv) = (samples(&cfg.u, "--u")?, samples(&cfg.v, "--v")?);
            let s = sym.separable()?;
            let grid = sample_grid(cfg, s, &[&su, &sv])?;
            mmd_spectral(&su, &sv, s, &grid)?
        }
        Method::DensityGrid => {
            let (u, v) = (grid_function(&cfg.u, "--u")?, grid_function(&cfg.v, "--v")?);
            mmd_density(&u, &v, &sym.symbol)?
        }
    };
    out.json("mmd.json", &est)?;
    done(serde_json::to_value(&est).map_err(Error::from)?)
}

fn witness_cmd(cfg: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let sym = load_symbol(cfg)?;
    let s = sym.separable()?;
    let (su, sv) = (samples(&cfg.u, "--u")?, samples(&cfg.v, "--v")?);
    let grid = sample_grid(cfg, s, &[&su, &sv])?;
    let w = witness(&su, &sv, s, &grid)?;
    out.with_writer("witness_f_star.csv", |o| w.f_star.write_csv(o))?;
    out.with_writer("witness_psi.csv", |o| w.psi.write_csv(o))?;
    let report = json!({
        "command": "witness",
        "objective": w.objective,
        "grid": GridSpec::of(&grid),
        "grid_too_coarse": w.grid_too_coarse,
    });
    out.json("witness.json", &report)?;
    done(report)
}

fn moments_cmd(cfg: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let sym = load_symbol(cfg)?;
    let s = sym.separable()?;
    let (su, sv) = (samples(&cfg.u, "--u")?, samples(&cfg.v, "--v")?);
    let canon = canonicalize_on(s, &sym.working_grid()?)?;
    let grid = match (&cfg.grid, canon.pdfs().first()) {
        (Some(g), _) => g.build()?,
        (None, Some(p)) => p.grid().clone(),
        (None, None) => return Err(CliError::Failure("the canonical symbol has no terms".into())),
    };
    let fields = moment_field(&su, &sv, &canon, &grid)?;
    let d = grid.dim();
    let header: Vec<String> = (1..=d)
        .map(|a| format!("y{a}"))
        .chain((0..fields.len()).flat_map(|i| [format!("re_{i}"), format!("im_{i}")]))
        .collect();
    let cell = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    out.csv_rows(
        "moments.csv",
        &header,
        (0..grid.len()).map(|k| {
            let p = grid.point(k);
            coords(&p, d)
                .chain(fields.iter().flat_map(|f| [cell(f.values[k].map(|c| c.re)), cell(f.values[k].map(|c| c.im))]))
                .collect()
        }),
    )?;
    let unsupported: Vec<usize> = fields.iter().map(|f| f.values.iter().filter(|v| v.is_none()).count()).collect();
    let report = json!({
        "command": "moments",
        "fields": fields.len(),
        "grid": GridSpec::of(&grid),
        "unsupported_points": unsupported,
    });
    out.json("moments.json", &report)?;
    done(report)
}

fn verify_cmd(check: &str, cfg: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let checks: Vec<CheckId> = if check == "all" {
        CheckId::ALL.to_vec()
    } else {
        vec![CheckId::from_str(check).map_err(|e| CliError::Usage(e.to_string()))?]
    };
    let mut opts = RunOptions { seed: cfg.seed(), timing: cfg.timing.unwrap_or(false), ..RunOptions::default() };
    if let Some(t) = cfg.trials {
        opts.trials = t;
    }
    if let Some(g) = &cfg.grid {
        opts.spec.grid = g.build()?;
    }
    opts.spec.validate()?;
    if opts.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let mut reports = Vec::new();
    for c in checks {
        let started = Instant::now();
        let r = run_check(c, &opts)?;
        if opts.timing {
            eprintln!("pdommd: {c} finished in {:.0} ms", started.elapsed().as_secs_f64() * 1e3);
        }
        out.json(&format!("{c}.json"), &r)?;
        reports.push(r);
    }
    let summary = aggregate(&reports)?;
    out.json("summary.json", &summary)?;
    let ok = summary.all_passed;
    Ok(Outcome { summary: serde_json::to_value(&summary).map_err(Error::from)?, ok })
}

fn fit_cmd(cfg: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let sym = load_symbol(cfg)?;
    let s = sym.separable()?;
    let data = samples(&cfg.data, "--data")?;
    let family = cfg.family.unwrap_or(Family::Gaussian);
    let init = cfg.init.clone().unwrap_or_else(|| vec![0.0; family.param_count(data.dim())]);
    let noise = cfg.noise.unwrap_or(data.len());
    let model = ParametricModel::new(family, data.dim(), init, noise, cfg.seed())?;
    let optimizer = cfg.optimizer.unwrap_or(Optimizer::NelderMead);
    let budget = cfg.budget.unwrap_or(500);
    let res = fit_mmd(&data, &model, s, optimizer, budget)?;
    for w in &res.warnings {
        eprintln!("pdommd: warning: {w}");
    }
    out.json("fit.json", &res)?;
    let ok = res.converged;
    Ok(Outcome { summary: serde_json::to_value(&res).map_err(Error::from)?, ok })
}
