//! Run artifacts on disk: CSV tables and JSON summaries.
//!
//! Floats are written with `{:.16e}` (17 significant digits) so every file
//! re-parses to the exact values and identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, TemperatureField};
use crate::interface::{ExitSide, InterfaceTrajectory, TrajectorySample};
use crate::params::PhysicalParams;
use crate::solver::{EnergyEntry, ExitRecord, FieldStats, SimulationResult, Snapshot, SolverConfig};
use crate::velocity::VelocityLaw;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const ENERGY_FILE: &str = "energy.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const VERIFY_FILE: &str = "verify.json";

const TRAJECTORY_HEADER: &str = "t,u,theta_at_u,v,gate";
const FIELD_HEADER: &str = "s,theta_bar";
const ENERGY_HEADER: &str = "t,stored,flux_cum,latent_cum,residual";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn field_file_name(index: usize) -> String {
    format!("field_{index:04}.csv")
}

/// Build a CSV document from a header and rows of floats.
pub fn csv_document<'a>(header: &str, rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        for (i, x) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x:.16e}");
        }
        out.push('\n');
    }
    out
}

/// Parse a CSV with the expected header into rows of `width` floats.
pub fn parse_csv(text: &str, header: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().enumerate();
    let first = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if first != header {
        return Err(Error::Parse { line: 1, message: format!("expected header `{header}`, got `{first}`") });
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse { line: idx + 1, message: e.to_string() })?;
        if row.len() != width {
            return Err(Error::Parse { line: idx + 1, message: format!("expected {width} columns, got {}", row.len()) });
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn trajectory_csv(trajectory: &InterfaceTrajectory) -> String {
    let rows: Vec<[f64; 5]> = trajectory
        .samples()
        .iter()
        .map(|s| [s.t, s.u, s.theta_at_u, s.v, if s.active { 1.0 } else { 0.0 }])
        .collect();
    csv_document(TRAJECTORY_HEADER, rows.iter().map(|r| r.as_slice()))
}

pub fn parse_trajectory_csv(text: &str, length: f64) -> Result<InterfaceTrajectory> {
    let samples = parse_csv(text, TRAJECTORY_HEADER)?
        .into_iter()
        .map(|r| TrajectorySample { t: r[0], u: r[1], theta_at_u: r[2], v: r[3], active: r[4] != 0.0 })
        .collect();
    InterfaceTrajectory::from_samples(samples, length)
}

pub fn field_csv(field: &TemperatureField) -> String {
    let rows: Vec<[f64; 2]> = field.grid().nodes().zip(field.values()).map(|(s, &v)| [s, v]).collect();
    csv_document(FIELD_HEADER, rows.iter().map(|r| r.as_slice()))
}

pub fn parse_field_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    Ok(parse_csv(text, FIELD_HEADER)?.into_iter().map(|r| (r[0], r[1])).collect())
}

pub fn energy_csv(energy: &[EnergyEntry]) -> String {
    let rows: Vec<[f64; 5]> = energy.iter().map(|e| [e.t, e.stored, e.flux_cum, e.latent_cum, e.residual]).collect();
    csv_document(ENERGY_HEADER, rows.iter().map(|r| r.as_slice()))
}

pub fn parse_energy_csv(text: &str) -> Result<Vec<EnergyEntry>> {
    Ok(parse_csv(text, ENERGY_HEADER)?
        .into_iter()
        .map(|r| EnergyEntry { t: r[0], stored: r[1], flux_cum: r[2], latent_cum: r[3], forcing_cum: 0.0, residual: r[4] })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub steps: usize,
    pub samples: usize,
    pub snapshots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub t_star: Option<f64>,
    pub exit: Option<ExitRecord>,
    pub exit_side: Option<ExitSide>,
    pub params: PhysicalParams,
    pub law: VelocityLaw,
    pub config: SolverConfig,
    pub n_cells: usize,
    pub u0: f64,
    pub snapshot_times: Vec<f64>,
    pub snapshot_steps: Vec<usize>,
    pub counts: Counts,
    pub min_physical_temperature: f64,
    pub warnings: Vec<String>,
    /// The run configuration as given, one `key = value` per line.
    #[serde(default)]
    pub run_config: Option<String>,
    /// Theorem checks are filled in by `verify`.
    pub verdicts: Option<serde_json::Value>,
}

impl Summary {
    pub fn from_result(result: &SimulationResult) -> Self {
        Self {
            t_star: result.t_star(),
            exit: result.exit,
            exit_side: result.exit.map(|e| e.side),
            params: result.params,
            law: result.law.clone(),
            config: result.config,
            n_cells: result.grid.n_cells(),
            u0: result.trajectory.samples().first().map_or(f64::NAN, |s| s.u),
            snapshot_times: result.snapshots.iter().map(|s| s.t).collect(),
            snapshot_steps: result.snapshots.iter().map(|s| s.step).collect(),
            counts: Counts {
                steps: result.energy.len().saturating_sub(1),
                samples: result.trajectory.len(),
                snapshots: result.snapshots.len(),
            },
            min_physical_temperature: result.min_physical_temperature,
            warnings: result.warnings.clone(),
            run_config: None,
            verdicts: None,
        }
    }
}

/// Write every artifact of `result` into `dir`; returns the files written.
pub fn write_result(
    dir: &Path,
    result: &SimulationResult,
    run_config: Option<&str>,
    csv: bool,
    json: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
        Ok(())
    };
    if csv {
        put(TRAJECTORY_FILE, trajectory_csv(&result.trajectory))?;
        put(ENERGY_FILE, energy_csv(&result.energy))?;
        for (i, snap) in result.snapshots.iter().enumerate() {
            put(&field_file_name(i), field_csv(&snap.field))?;
        }
    }
    if json {
        let mut summary = Summary::from_result(result);
        summary.run_config = run_config.map(str::to_string);
        let summary = serde_json::to_string_pretty(&summary).expect("serializable");
        put(SUMMARY_FILE, summary + "\n")?;
    }
    Ok(written)
}

fn read_artifact(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| Error::MissingArtifacts(format!("{}: {e}", path.display())))
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let text = read_artifact(dir, SUMMARY_FILE)?;
    serde_json::from_str(&text).map_err(|e| Error::MissingArtifacts(format!("{SUMMARY_FILE}: {e}")))
}

/// Rebuild a [`SimulationResult`] from a run directory. Field statistics
/// are recomputed from the stored snapshots.
pub fn load_result(dir: &Path) -> Result<SimulationResult> {
    let summary = read_summary(dir)?;
    let p = summary.params;
    let params = PhysicalParams::new(p.rho0(), p.gamma(), p.alpha(), p.conductivity(), p.theta_t(), p.theta_b(), p.length())?;
    let grid = Grid1D::new(summary.n_cells, params.length())?;
    let trajectory = parse_trajectory_csv(&read_artifact(dir, TRAJECTORY_FILE)?, params.length())?;
    let energy = parse_energy_csv(&read_artifact(dir, ENERGY_FILE)?)?;
    if summary.snapshot_times.len() != summary.counts.snapshots || summary.snapshot_steps.len() != summary.counts.snapshots {
        return Err(Error::MissingArtifacts("snapshot index in summary is inconsistent".into()));
    }
    if trajectory.len() != summary.counts.samples || energy.len() != summary.counts.steps + 1 {
        return Err(Error::MissingArtifacts("trajectory or energy table is truncated".into()));
    }
    let mut snapshots = Vec::with_capacity(summary.counts.snapshots);
    let mut stats = Vec::with_capacity(summary.counts.snapshots);
    for (i, (&t, &step)) in summary.snapshot_times.iter().zip(&summary.snapshot_steps).enumerate() {
        let rows = parse_field_csv(&read_artifact(dir, &field_file_name(i))?)?;
        let field = TemperatureField::from_values(grid, rows.into_iter().map(|(_, v)| v).collect())?;
        stats.push(FieldStats { t, min: field.min(), max: field.max(), l2: field.l2_norm() });
        snapshots.push(Snapshot { step, t, field });
    }
    Ok(SimulationResult {
        params,
        law: summary.law,
        config: summary.config,
        grid,
        snapshots,
        trajectory,
        exit: summary.exit,
        energy,
        stats,
        min_physical_temperature: summary.min_physical_temperature,
        warnings: summary.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn csv_uses_lf_and_header() {
        let doc = csv_document("a,b", [[1.0, 2.0].as_slice()]);
        assert_eq!(doc, "a,b\n1.0000000000000000e0,2.0000000000000000e0\n");
        assert_eq!(parse_csv(&doc, "a,b").unwrap(), vec![vec![1.0, 2.0]]);
    }

    #[test]
    fn wrong_header_and_width_rejected() {
        assert!(matches!(parse_csv("x,y\n", "a,b"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_csv("a,b\n1,2,3\n", "a,b"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn field_round_trip() {
        let grid = Grid1D::new(8, 1.0).unwrap();
        let f = TemperatureField::from_fn(grid, |s| s * (1.0 - s) / 3.0).unwrap();
        let back: Vec<f64> = parse_field_csv(&field_csv(&f)).unwrap().into_iter().map(|r| r.1).collect();
        assert_eq!(back, f.values());
    }
}
