use std::path::Path;
use std::process::{Command, Output};

use pdommd::harness::Mixture;
use pdommd::numgrid::Grid;
use serde_json::Value;

const GAUSS_SYM: &str =
    r#"{"type":"separable","dim":1,"terms":[{"f":{"kind":"gauss_hermite","width":1.0},"g":"const"}]}"#;

/// `2 h0(x) h0(y) + h1(x) h1(y)` with normalized Hermite functions `h_k`.
const ORTHONORMAL_RANK_TWO: &str = r#"{"type":"separable","dim":1,"terms":[
    {"coef":2.0,"f":{"kind":"gauss_hermite","width":1.0,"scale":0.7511255444649425},
                "g":{"kind":"gauss_hermite","width":1.0,"scale":0.7511255444649425}},
    {"coef":1.0,"f":{"kind":"gauss_hermite","width":1.0,"degree":[1],"scale":1.0622519320271968},
                "g":{"kind":"gauss_hermite","width":1.0,"degree":[1],"scale":1.0622519320271968}}]}"#;

fn pdommd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdommd")).current_dir(dir).args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("sym.json"), GAUSS_SYM).unwrap();
    std::fs::write(dir.path().join("a.csv"), "y1\n-1.0\n0.25\n0.5\n2.0\n").unwrap();
    std::fs::write(dir.path().join("b.csv"), "1.0\n1.5\n3.0\n").unwrap();
    dir
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(pdommd::cli::run(["pdommd"]), 2);
    assert_eq!(pdommd::cli::run(["pdommd", "frobnicate"]), 2);
    assert_eq!(pdommd::cli::run(["pdommd", "svd", "--seed", "x"]), 2);
    assert_eq!(pdommd::cli::run(["pdommd", "mmd", "--u", "/nonexistent/a.csv"]), 2);
    assert_eq!(pdommd::cli::run(["pdommd", "--help"]), 0);
}

#[test]
fn no_args_lists_commands() {
    let dir = setup();
    let o = pdommd(dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let text = String::from_utf8_lossy(&o.stderr).into_owned() + &String::from_utf8_lossy(&o.stdout);
    for c in ["symbol", "svd", "mmd", "verify", "fit"] {
        assert!(text.contains(c), "{text}");
    }
}

#[test]
fn unknown_config_key_is_named() {
    let dir = setup();
    std::fs::write(dir.path().join("cfg.json"), r#"{"bandwith": 1.0}"#).unwrap();
    let o = pdommd(dir.path(), &["svd", "--config", "cfg.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bandwith"));
}

#[test]
fn flag_seed_overrides_file() {
    let dir = setup();
    std::fs::write(dir.path().join("cfg.json"), r#"{"seed": 0, "trials": 2}"#).unwrap();
    let o = pdommd(dir.path(), &["verify", "diag", "--config", "cfg.json", "--seed", "7", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["seed"], 7);
    let o = pdommd(dir.path(), &["verify", "diag", "--config", "cfg.json", "--out", "o"]);
    assert_eq!(stdout_json(&o)["seed"], 0);
}

#[test]
fn identical_samples_have_zero_mmd() {
    let dir = setup();
    for method in ["gram_v", "gram_u", "spectral"] {
        let out = format!("o_{method}");
        let o = pdommd(
            dir.path(),
            &["mmd", "--symbol", "sym.json", "--u", "a.csv", "--v", "a.csv", "--method", method, "--out", &out],
        );
        assert_eq!(o.status.code(), Some(0), "{method}: {}", String::from_utf8_lossy(&o.stderr));
        let est = read_json(&dir.path().join(&out).join("mmd.json"));
        if method == "gram_u" {
            assert!(est["squared"].as_f64().unwrap() < 0.0);
        } else {
            assert_eq!(est["value"].as_f64(), Some(0.0), "{method}");
        }
    }
}

#[test]
fn rank_two_singular_values() {
    let dir = setup();
    std::fs::write(dir.path().join("r2.json"), ORTHONORMAL_RANK_TWO).unwrap();
    let o = pdommd(dir.path(), &["svd", "--symbol", "r2.json", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let line = std::fs::read_to_string(dir.path().join("o/sigmas.csv")).unwrap();
    let sig: Vec<f64> = line.trim().split(',').map(|s| s.parse().unwrap()).collect();
    assert!((sig[0] - 2.0).abs() < 1e-10 && (sig[1] - 1.0).abs() < 1e-10 && sig[2] < 1e-10, "{:?}", &sig[..3]);
}

#[test]
fn outputs_round_trip_through_inputs() {
    let dir = setup();
    let d = dir.path();
    let o = pdommd(d, &["truncate", "--symbol", "sym.json", "--rank", "1", "--out", "t"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = pdommd(d, &["svd", "--symbol", "t/truncated.json", "--out", "s"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = pdommd(d, &["symbol", "canonicalize", "--symbol", "sym.json", "--out", "c"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = pdommd(d, &["symbol", "build", "--symbol", "c/canonical.json", "--out", "b"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = pdommd(
        d,
        &[
            "mmd",
            "--symbol",
            "sym.json",
            "--u",
            "c/pdf_0.csv",
            "--v",
            "c/pdf_0.csv",
            "--method",
            "density",
            "--out",
            "m",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_json(&d.join("m/mmd.json"))["value"].as_f64(), Some(0.0));
}

#[test]
fn density_mmd_matches_closed_form() {
    let dir = setup();
    let g = Grid::new(1, 1024, 24.0).unwrap();
    for (name, m) in [("da.csv", 0.0), ("db.csv", 1.0)] {
        let f = Mixture::single(vec![m], vec![1.0]).density_on(&g).unwrap();
        f.write_csv(std::fs::File::create(dir.path().join(name)).unwrap()).unwrap();
    }
    let o = pdommd(
        dir.path(),
        &["mmd", "--symbol", "sym.json", "--u", "da.csv", "--v", "db.csv", "--method", "density", "--out", "o"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let sq = read_json(&dir.path().join("o/mmd.json"))["squared"].as_f64().unwrap();
    let want = (2.0 * std::f64::consts::PI).sqrt() * (1.0 - (-1.0f64 / 8.0).exp());
    assert!((sq - want).abs() < 1e-8 * want);
}

#[test]
fn malformed_input_exits_one() {
    let dir = setup();
    std::fs::write(dir.path().join("bad.csv"), "1.0\nabc\n").unwrap();
    let o = pdommd(dir.path(), &["mmd", "--symbol", "sym.json", "--u", "bad.csv", "--v", "a.csv", "--out", "o"]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::write(dir.path().join("bad.json"), r#"{"type":"separable","dim":1,"terms":[{"f":"nope","g":"const"}]}"#)
        .unwrap();
    let o = pdommd(dir.path(), &["svd", "--symbol", "bad.json", "--out", "o"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&o.stderr).contains("panicked"));
}

#[test]
fn verify_trunc_hs_has_no_violations() {
    let dir = setup();
    let o = pdommd(dir.path(), &["verify", "trunc_hs", "--trials", "100", "--seed", "1", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&dir.path().join("o/trunc_hs.json"));
    assert_eq!(r["violations"], 0);
    assert_eq!(r["trials"], 100);
    assert!(r["runtime_ms"].is_null());
}

#[test]
fn exhausted_fit_exits_one_with_report() {
    let dir = setup();
    let pts: String = (0..200).map(|i| format!("{}\n", 3.0 + ((i * 37) % 200) as f64 / 100.0 - 1.0)).collect();
    std::fs::write(dir.path().join("data.csv"), pts).unwrap();
    let o = pdommd(
        dir.path(),
        &[
            "fit",
            "--symbol",
            "sym.json",
            "--data",
            "data.csv",
            "--optimizer",
            "fd_gradient",
            "--budget",
            "50",
            "--init=-3,-1",
            "--out",
            "o",
        ],
    );
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&dir.path().join("o/fit.json"));
    assert_eq!(r["converged"], false);
    assert_eq!(r["status"], "budget_exhausted");
    assert!(r["trajectory"].as_array().unwrap().len() >= 2);
}
