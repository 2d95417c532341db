use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL_RUN: &str = "\
params.rho0 = 1
params.gamma = 1
params.alpha = 1
params.K = 1
params.theta_T = 1
params.theta_B = 0
params.L = 1
law.kind = linear
law.k = 5
solver.n_cells = 64
solver.t_end = 1
initial.kind = sine
interface.u0 = 0.3
output.stride = 1
";

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stefan-kinetic")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn small_run(tmp: &TempDir, name: &str) -> PathBuf {
    let cfg = write(tmp.path(), "small.cfg", SMALL_RUN);
    let out = tmp.path().join(name);
    let res = bin(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    out
}

#[test]
fn run_then_verify_passes() {
    let tmp = TempDir::new().unwrap();
    let dir = small_run(&tmp, "run");
    for name in ["trajectory.csv", "energy.csv", "summary.json", "field_0000.csv"] {
        assert!(dir.join(name).is_file(), "missing {name}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert!(summary["t_star"].as_f64().unwrap() < 1.0);
    assert!(summary["run_config"].as_str().unwrap().contains("law.k = 5"));

    let res = bin(&["verify", dir.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    let reports: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("verify.json")).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 6);
}

#[test]
fn identical_runs_give_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let a = small_run(&tmp, "a");
    let b = small_run(&tmp, "b");
    for name in ["trajectory.csv", "energy.csv", "summary.json", "field_0010.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let text = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert!(text.starts_with("t,u,theta_at_u,v,gate\n"));
    assert!(!text.contains('\r'));
}

#[test]
fn tampered_trajectory_fails_verification() {
    let tmp = TempDir::new().unwrap();
    let dir = small_run(&tmp, "run");
    let path = dir.join("trajectory.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    // pull one interior sample behind its predecessor
    let prev: f64 = lines[5].split(',').nth(1).unwrap().parse().unwrap();
    let mut cols: Vec<f64> = lines[6].split(',').map(|c| c.parse().unwrap()).collect();
    cols[1] = prev - 1e-3;
    lines[6] = cols.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let res = bin(&["verify", dir.to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stdout).contains("monotonicity    Fail"));
}

#[test]
fn truncated_or_missing_artifacts() {
    let tmp = TempDir::new().unwrap();
    let dir = small_run(&tmp, "run");
    let path = dir.join("trajectory.csv");
    let text = fs::read_to_string(&path).unwrap();
    let keep: Vec<&str> = text.lines().take(10).collect();
    fs::write(&path, keep.join("\n") + "\n").unwrap();
    assert_eq!(code(&bin(&["verify", dir.to_str().unwrap()])), 2);
    assert_eq!(code(&bin(&["verify", tmp.path().join("nowhere").to_str().unwrap()])), 2);
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let missing = tmp.path().join("missing.cfg");
    assert_eq!(code(&bin(&["run", "--config", missing.to_str().unwrap(), "--out", out.to_str().unwrap()])), 2);
    let bad = write(tmp.path(), "bad.cfg", &format!("{SMALL_RUN}law.bogus = 1\n"));
    assert_eq!(code(&bin(&["run", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()])), 2);
    let bad = write(tmp.path(), "neg.cfg", &SMALL_RUN.replace("params.K = 1", "params.K = -1"));
    let res = bin(&["run", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("`K`"));
}

#[test]
fn picard_divergence_exits_3() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL_RUN.replace("params.alpha = 1", "params.alpha = 100")
        + "solver.dt = 0.01\nsolver.coupling = picard\nsolver.max_iter = 20\nsolver.tol = 1e-12\n";
    let cfg = write(tmp.path(), "stiff.cfg", &text);
    let res = bin(&["run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&res), 3, "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn oracle_convergence_and_unknown_scenario() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("oracle");
    let res = bin(&["oracle", "exit-baseline", "--out", out.to_str().unwrap(), "--levels", "256,512,1024"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let table = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("oracle.json")).unwrap()).unwrap();
    assert!(json["richardson_t_star"].as_f64().is_some());
    assert!(out.join("trajectory.csv").is_file());

    assert_eq!(code(&bin(&["oracle", "no-such-scenario", "--out", out.to_str().unwrap()])), 2);
    // too coarse to be in the asymptotic range: gaps grow
    assert_eq!(code(&bin(&["oracle", "exit-baseline", "--out", out.to_str().unwrap(), "--levels", "64,128,256"])), 3);
}

const COMPATIBLE: &str = "\
laminate.A = 1, 0, 0.2, 0, 1, 0, 0, 0, 1
laminate.B = 1, 0, -0.1, 0, 1, 0.1, 0, 0, 1
laminate.lambda = 0.5
";

#[test]
fn laminate_outputs_and_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let run_dir = small_run(&tmp, "run");
    let traj = run_dir.join("trajectory.csv");
    let spec = write(tmp.path(), "spec.cfg", COMPATIBLE);
    let out = tmp.path().join("lam");
    let res = bin(&[
        "laminate",
        "--config",
        spec.to_str().unwrap(),
        "--trajectory",
        traj.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8_lossy(&res.stdout);
    for mm in ["MM1 pass", "MM2 pass", "MM3 pass", "MM4 pass"] {
        assert!(stdout.contains(mm), "{stdout}");
    }
    let deformation = fs::read_to_string(out.join("deformation.csv")).unwrap();
    let first: Vec<f64> = deformation.lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    // c1 = -a u with a = (0.05, 0.05, 0), u = 0.3
    assert!((first[2] + 0.015).abs() < 1e-15 && (first[3] + 0.015).abs() < 1e-15);
    assert!(out.join("mm_audit.json").is_file() && out.join("entropy.csv").is_file());

    let incompatible = write(tmp.path(), "bad.cfg", &COMPATIBLE.replace("0, 1, 0.1", "0.1, 1, 0"));
    let args = |spec: &Path, traj: &Path| {
        bin(&[
            "laminate",
            "--config",
            spec.to_str().unwrap(),
            "--trajectory",
            traj.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
    };
    assert_eq!(code(&args(&incompatible, &traj)), 1);
    assert_eq!(code(&args(&spec, &tmp.path().join("none.csv"))), 2);
}

#[test]
fn laminate_trials() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("trials");
    let res = bin(&["laminate", "--trials", "25", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("trials.json")).unwrap()).unwrap();
    assert_eq!(json["trials"], 25);
    assert_eq!(json["mm_failures"], 0);
}

#[test]
fn sweep_over_rate_constant() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "small.cfg", SMALL_RUN);
    let out = tmp.path().join("sweep");
    let res = Command::new(env!("CARGO_BIN_EXE_stefan-kinetic"))
        .args(["sweep", "--config", cfg.to_str().unwrap(), "--key", "law.k", "--values", "2,5,10"])
        .args(["--out", out.to_str().unwrap()])
        .env("STEFAN_KINETIC_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let t: Vec<f64> = table.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(t.len(), 3);
    // faster kinetics exit sooner
    assert!(t[0] > t[1] && t[1] > t[2]);
    assert!(out.join("law.k=5").join("summary.json").is_file());
}
