use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use stefan_kinetic::analysis::{check_all, Verdict};
use stefan_kinetic::config::{RawConfig, RunConfig};
use stefan_kinetic::io::{self, csv_document, load_result, write_result, VERIFY_FILE};
use stefan_kinetic::laminate::{
    entropy_source_identity, moving_mask_audit, randomized_trials, reconstruct_deformation, LaminateSpec,
};
use stefan_kinetic::oracle::reference::{convergence_study, neumann_comparison, scenario, STIFF_RATES};
use stefan_kinetic::{run, Error, Grid1D};

#[derive(Parser)]
#[command(name = "stefan-kinetic", version, about = "Kinetic Stefan problem in one dimension")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a configuration and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep one field snapshot every N steps.
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Check a run directory against the qualitative theory.
    Verify {
        /// Directory written by `run`.
        dir: PathBuf,
    },
    /// Run a named reference scenario.
    Oracle {
        scenario: String,
        #[arg(long, default_value = "oracle-out")]
        out: PathBuf,
        /// Grid sizes for the refinement study, comma-separated.
        #[arg(long, value_delimiter = ',')]
        levels: Vec<usize>,
    },
    /// Reconstruct the laminate deformation along an interface trajectory,
    /// or run randomized consistency trials with `--trials`.
    Laminate {
        #[arg(long, required_unless_present = "trials")]
        config: Option<PathBuf>,
        #[arg(long, required_unless_present = "trials")]
        trajectory: Option<PathBuf>,
        #[arg(long, default_value = "laminate-out")]
        out: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one configuration for several values of a key, in parallel.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Key to vary, e.g. `law.k`.
        #[arg(long)]
        key: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
        #[arg(long)]
        stride: Option<usize>,
    },
}

const EXIT_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn is_numeric(err: &Error) -> bool {
    matches!(err, Error::PicardDivergence { .. } | Error::NonFiniteState { .. } | Error::NonConverging(_))
}

fn fail(code: u8, err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<(), Error> {
    fs::write(path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn cmd_run(config: &Path, out: Option<PathBuf>, stride: Option<usize>) -> ExitCode {
    let mut cfg = match RunConfig::from_file(config) {
        Ok(cfg) => cfg,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    if let Some(stride) = stride {
        if stride == 0 {
            return fail(EXIT_INPUT, &Error::InvalidValue { key: "--stride".into(), reason: "must be >= 1".into() });
        }
        cfg.output.stride = stride;
        cfg.solver.snapshot_stride = stride;
    }
    let dir = out.or(cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let result = match run(cfg.initial_field(), cfg.u0, &cfg.params, &cfg.law, &cfg.solver) {
        Ok(r) => r,
        Err(e) if is_numeric(&e) => return fail(EXIT_NUMERIC, &e),
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    if let Err(e) = write_result(&dir, &result, Some(&cfg.raw.to_text()), cfg.output.csv, cfg.output.json) {
        return fail(EXIT_INPUT, &e);
    }
    match result.t_star() {
        Some(t) => println!("t_star = {}", io::fmt_f64(t)),
        None => println!("no exit by t = {}", cfg.solver.t_end),
    }
    ExitCode::SUCCESS
}

fn cmd_verify(dir: &Path) -> ExitCode {
    let result = match load_result(dir) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    let reports = check_all(&result);
    for r in &reports {
        println!("{:<15} {:?}  {}", r.id.as_str(), r.verdict, r.detail);
    }
    let body = serde_json::to_string_pretty(&reports).expect("serializable") + "\n";
    if let Err(e) = write(&dir.join(VERIFY_FILE), body) {
        return fail(EXIT_INPUT, &e);
    }
    if reports.iter().any(|r| r.verdict == Verdict::Fail) {
        ExitCode::from(EXIT_FAILED)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_oracle(id: &str, out: &Path, levels: &[usize]) -> ExitCode {
    let cfg = match scenario(id) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    if let Err(e) = fs::create_dir_all(out) {
        return fail(EXIT_INPUT, &e.into());
    }
    let outcome = if id == "stiff-kinetics" {
        oracle_neumann(&cfg, out)
    } else {
        let levels = if levels.is_empty() { vec![cfg.n_cells, 2 * cfg.n_cells, 4 * cfg.n_cells] } else { levels.to_vec() };
        oracle_convergence(id, &cfg, &levels, out)
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_numeric(&e) => fail(EXIT_NUMERIC, &e),
        Err(e) => fail(EXIT_INPUT, &e),
    }
}

fn oracle_neumann(cfg: &RunConfig, out: &Path) -> Result<(), Error> {
    let (sol, comparisons) = neumann_comparison(cfg, &STIFF_RATES)?;
    let mut summary = Vec::new();
    for c in &comparisons {
        let rows: Vec<[f64; 4]> = c.rows.iter().map(|r| [r.t, r.u_sim, r.u_neumann, r.gap]).collect();
        let name = format!("neumann_k{}.csv", c.k);
        write(&out.join(name), csv_document("t,u_sim,u_neumann,gap", rows.iter().map(|r| r.as_slice())))?;
        summary.push([c.k, c.sup_gap, c.horizon]);
        println!("k = {:<6} sup gap = {}  (t <= {})", c.k, io::fmt_f64(c.sup_gap), c.horizon);
    }
    write(&out.join("neumann_summary.csv"), csv_document("k,sup_gap,horizon", summary.iter().map(|r| r.as_slice())))?;
    println!("lambda = {}", io::fmt_f64(sol.lambda));
    Ok(())
}

fn oracle_convergence(id: &str, cfg: &RunConfig, levels: &[usize], out: &Path) -> Result<(), Error> {
    let report = convergence_study(id, cfg, levels)?;
    let rows: Vec<[f64; 4]> = report
        .levels
        .iter()
        .map(|l| [l.n_cells as f64, l.dt, l.t_star.unwrap_or(f64::NAN), l.final_l2])
        .collect();
    write(&out.join("convergence.csv"), csv_document("n_cells,dt,t_star,final_l2", rows.iter().map(|r| r.as_slice())))?;
    write(&out.join(io::TRAJECTORY_FILE), io::trajectory_csv(&report.finest.trajectory))?;
    let json = serde_json::json!({
        "scenario": id,
        "levels": report.levels.iter().map(|l| l.n_cells).collect::<Vec<_>>(),
        "t_star": report.levels.iter().map(|l| l.t_star).collect::<Vec<_>>(),
        "richardson_t_star": report.richardson_t_star,
        "t_star_order": report.t_star_order,
        "l2_order": report.l2_order,
    });
    write(&out.join("oracle.json"), serde_json::to_string_pretty(&json).expect("serializable") + "\n")?;
    for l in &report.levels {
        match l.t_star {
            Some(t) => println!("n = {:<6} t_star = {}", l.n_cells, io::fmt_f64(t)),
            None => println!("n = {:<6} no exit", l.n_cells),
        }
    }
    if let Some(t) = report.richardson_t_star {
        println!("extrapolated t_star = {}", io::fmt_f64(t));
    }
    Ok(())
}

fn cmd_laminate(config: &Path, trajectory: &Path, out: &Path) -> ExitCode {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())));
    let spec_text = match read(config) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    let mut entries: BTreeMap<String, String> = match RawConfig::parse(&spec_text) {
        Ok(raw) => raw.to_map(),
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    let length = match entries.remove("laminate.L").map(|v| v.parse::<f64>()) {
        None => 1.0,
        Some(Ok(l)) if l > 0.0 => l,
        Some(_) => {
            return fail(EXIT_INPUT, &Error::InvalidValue { key: "laminate.L".into(), reason: "must be positive".into() })
        }
    };
    let spec = match LaminateSpec::from_entries(&entries) {
        Ok(s) => s,
        Err(e @ Error::IncompatibleSpec { .. }) => return fail(EXIT_FAILED, &e),
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    let traj = match read(trajectory).and_then(|t| io::parse_trajectory_csv(&t, length)) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    let outcome = (|| -> Result<bool, Error> {
        fs::create_dir_all(out)?;
        let snaps = reconstruct_deformation(&traj, &spec);
        let rows: Vec<[f64; 8]> = snaps
            .iter()
            .map(|s| [s.t, s.u, s.c1[0], s.c1[1], s.c1[2], s.c2[0], s.c2[1], s.c2[2]])
            .collect();
        let header = "t,u,c1_x,c1_y,c1_z,c2_x,c2_y,c2_z";
        write(&out.join("deformation.csv"), csv_document(header, rows.iter().map(|r| r.as_slice())))?;

        let grid = Grid1D::new(1024, length)?;
        let v_max = traj.samples().iter().map(|s| s.v.abs()).fold(0.0, f64::max);
        let audit = moving_mask_audit(&traj, &[spec], &grid, v_max)?;
        write(&out.join("mm_audit.json"), serde_json::to_string_pretty(&audit).expect("serializable") + "\n")?;

        let psi: Vec<f64> = grid.nodes().map(|s| (std::f64::consts::PI * s / length).sin().powi(2)).collect();
        let residuals = entropy_source_identity(&traj, &grid, &psi)?;
        let rows: Vec<[f64; 4]> = residuals.iter().map(|r| [r.t, r.lhs, r.rhs, r.residual]).collect();
        write(&out.join("entropy.csv"), csv_document("t,lhs,rhs,residual", rows.iter().map(|r| r.as_slice())))?;

        for (name, c) in [("MM1", &audit.mm1), ("MM2", &audit.mm2), ("MM3", &audit.mm3), ("MM4", &audit.mm4)] {
            println!("{name} {} {}", if c.pass { "pass" } else { "FAIL" }, c.detail);
        }
        println!(
            "translations satisfy c2 - c1 = a u: {}; c1 - c2 = a u: {}",
            audit.continuity_convention, audit.reversed_convention
        );
        Ok(audit.all_pass())
    })();
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(e) => fail(EXIT_INPUT, &e),
    }
}

fn cmd_laminate_trials(trials: usize, seed: u64, out: &Path) -> ExitCode {
    let report = match randomized_trials(trials, seed) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_FAILED, &e),
    };
    let body = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    if let Err(e) = fs::create_dir_all(out).map_err(Error::from).and_then(|_| write(&out.join("trials.json"), body)) {
        return fail(EXIT_INPUT, &e);
    }
    println!("{report:#?}");
    let ok = report.max_round_trip_error <= 1e-10
        && report.max_continuity_defect <= 1e-12
        && report.max_lipschitz_excess <= 1e-12
        && report.mm_failures == 0;
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    }
}

fn sweep_threads() -> Option<usize> {
    std::env::var("STEFAN_KINETIC_THREADS").ok().and_then(|v| v.parse().ok()).filter(|&n| n > 0)
}

fn cmd_sweep(config: &Path, key: &str, values: &[String], out: &Path, stride: Option<usize>) -> ExitCode {
    let text = match fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_INPUT, &Error::Io(format!("{}: {e}", config.display()))),
    };
    let base_dir = config.parent().map(Path::to_path_buf).unwrap_or_default();
    let base = match RawConfig::parse(&text) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    let mut configs = Vec::new();
    for v in values {
        let mut raw = base.clone();
        raw.set(key, v.as_str());
        if let Some(s) = stride {
            raw.set("output.stride", s.to_string());
        }
        match RunConfig::from_raw(raw, &base_dir) {
            Ok(c) => configs.push((v.clone(), c)),
            Err(e) => return fail(EXIT_INPUT, &e),
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = sweep_threads() {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => return fail(EXIT_INPUT, &Error::InvalidConfig(e.to_string())),
    };
    let results: Vec<Result<(String, Option<f64>), Error>> = pool.install(|| {
        configs
            .par_iter()
            .map(|(v, cfg)| {
                let result = run(cfg.initial_field(), cfg.u0, &cfg.params, &cfg.law, &cfg.solver)?;
                let dir = out.join(format!("{key}={v}"));
                write_result(&dir, &result, Some(&cfg.raw.to_text()), cfg.output.csv, cfg.output.json)?;
                Ok((v.clone(), result.t_star()))
            })
            .collect()
    });
    let mut lines = String::from("value,t_star\n");
    for r in results {
        match r {
            Ok((v, t)) => {
                let t = t.map_or_else(|| "NaN".to_string(), io::fmt_f64);
                println!("{key} = {v}: t_star = {t}");
                lines.push_str(&format!("{v},{t}\n"));
            }
            Err(e) if is_numeric(&e) => return fail(EXIT_NUMERIC, &e),
            Err(e) => return fail(EXIT_INPUT, &e),
        }
    }
    if let Err(e) = write(&out.join("sweep.csv"), lines) {
        return fail(EXIT_INPUT, &e);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, stride } => cmd_run(&config, out, stride),
        Command::Verify { dir } => cmd_verify(&dir),
        Command::Oracle { scenario, out, levels } => cmd_oracle(&scenario, &out, &levels),
        Command::Laminate { trials: Some(n), seed, out, .. } => cmd_laminate_trials(n, seed, &out),
        Command::Laminate { config, trajectory, out, .. } => {
            cmd_laminate(&config.expect("required by clap"), &trajectory.expect("required by clap"), &out)
        }
        Command::Sweep { config, key, values, out, stride } => cmd_sweep(&config, &key, &values, &out, stride),
    }
}
