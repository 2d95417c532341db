//! Named scenarios, self-convergence studies and the comparison of stiff
//! kinetics against the similarity solution.

use std::path::Path;

use rayon::prelude::*;

use crate::config::{InitialCondition, RunConfig};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::oracle::neumann::{solve_neumann, NeumannSolution};
use crate::solver::{run, SimulationResult};
use crate::velocity::{VelocityKind, VelocityLaw};

pub const SCENARIOS: [&str; 4] = ["exit-baseline", "mirror", "equilibrium", "stiff-kinetics"];

/// Rates swept by the stiff-kinetics comparison.
pub const STIFF_RATES: [f64; 3] = [10.0, 100.0, 1000.0];

pub fn scenario_text(id: &str) -> Result<&'static str> {
    Ok(match id {
        "exit-baseline" => include_str!("../../scenarios/exit-baseline.cfg"),
        "mirror" => include_str!("../../scenarios/mirror.cfg"),
        "equilibrium" => include_str!("../../scenarios/equilibrium.cfg"),
        "stiff-kinetics" => include_str!("../../scenarios/stiff-kinetics.cfg"),
        other => return Err(Error::UnknownScenario(other.to_string())),
    })
}

pub fn scenario(id: &str) -> Result<RunConfig> {
    RunConfig::parse(scenario_text(id)?, Path::new("."))
}

/// Run `cfg` on a grid of `n_cells`, keeping the ratio `dt / ds`.
pub fn run_at_resolution(cfg: &RunConfig, n_cells: usize, snapshot_stride: usize) -> Result<SimulationResult> {
    let base = cfg.grid();
    let grid = Grid1D::new(n_cells, cfg.params.length())?;
    let mut solver = cfg.solver;
    solver.dt = cfg.solver.dt * grid.ds() / base.ds();
    solver.snapshot_stride = snapshot_stride;
    let initial = match &cfg.initial {
        InitialCondition::File { .. } if n_cells != cfg.n_cells => {
            return Err(Error::InvalidConfig("file initial data cannot be refined".into()));
        }
        ic => ic.build(grid)?,
    };
    run(initial, cfg.u0, &cfg.params, &cfg.law, &solver)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub n_cells: usize,
    pub dt: f64,
    pub t_star: Option<f64>,
    pub final_l2: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub scenario: String,
    pub levels: Vec<LevelSummary>,
    /// Extrapolated exit time from the three finest levels.
    pub richardson_t_star: Option<f64>,
    /// Observed order of the exit time from the three finest levels.
    pub t_star_order: Option<f64>,
    pub l2_order: Option<f64>,
    pub finest: SimulationResult,
}

fn observed_order(a: f64, b: f64, c: f64) -> Option<f64> {
    let (d1, d2) = ((b - a).abs(), (c - b).abs());
    (d1 > 0.0 && d2 > 0.0).then(|| (d1 / d2).log2())
}

/// Successive differences must shrink; exact agreement counts as converged.
fn check_shrinking(name: &str, values: &[f64]) -> Result<()> {
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    for pair in diffs.windows(2) {
        if pair[0] > 0.0 && pair[1] >= pair[0] {
            return Err(Error::NonConverging(format!("{name} differences {:e} then {:e}", pair[0], pair[1])));
        }
    }
    Ok(())
}

pub fn fine_grid_reference(id: &str, levels: &[usize]) -> Result<ConvergenceReport> {
    let cfg = scenario(id)?;
    convergence_study(id, &cfg, levels)
}

pub fn convergence_study(name: &str, cfg: &RunConfig, levels: &[usize]) -> Result<ConvergenceReport> {
    if levels.is_empty() {
        return Err(Error::InvalidConfig("no refinement levels".into()));
    }
    let finest_n = *levels.iter().max().expect("non-empty");
    let mut results: Vec<(usize, SimulationResult)> = levels
        .par_iter()
        .map(|&n| {
            // only the finest run keeps its field history
            let stride = if n == finest_n { cfg.solver.snapshot_stride } else { usize::MAX };
            run_at_resolution(cfg, n, stride).map(|r| (n, r))
        })
        .collect::<Result<_>>()?;
    results.sort_by_key(|(n, _)| *n);

    let summaries: Vec<LevelSummary> = results
        .iter()
        .map(|(n, r)| LevelSummary {
            n_cells: *n,
            dt: r.config.dt,
            t_star: r.t_star(),
            final_l2: r.stats.last().map_or(0.0, |s| s.l2),
        })
        .collect();

    let exits: Vec<Option<f64>> = summaries.iter().map(|s| s.t_star).collect();
    let (mut richardson, mut t_order) = (None, None);
    if exits.iter().any(Option::is_some) {
        if exits.iter().any(Option::is_none) {
            return Err(Error::NonConverging("exit occurs at some resolutions only".into()));
        }
        let t: Vec<f64> = exits.iter().map(|x| x.expect("checked")).collect();
        check_shrinking("t*", &t)?;
        if t.len() >= 3 {
            let (a, b, c) = (t[t.len() - 3], t[t.len() - 2], t[t.len() - 1]);
            t_order = observed_order(a, b, c);
            let (d1, d2) = (b - a, c - b);
            richardson = Some(if d1 != d2 { c + d2 * d2 / (d1 - d2) } else { c });
        }
    }
    let l2: Vec<f64> = summaries.iter().map(|s| s.final_l2).collect();
    check_shrinking("final L2 norm", &l2)?;
    let l2_order = (l2.len() >= 3).then(|| observed_order(l2[l2.len() - 3], l2[l2.len() - 2], l2[l2.len() - 1])).flatten();

    let finest = results.pop().expect("non-empty").1;
    Ok(ConvergenceReport {
        scenario: name.to_string(),
        levels: summaries,
        richardson_t_star: richardson,
        t_star_order: t_order,
        l2_order,
        finest,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannRow {
    pub t: f64,
    pub u_sim: f64,
    pub u_neumann: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannComparison {
    pub k: f64,
    pub horizon: f64,
    pub rows: Vec<NeumannRow>,
    pub sup_gap: f64,
}

/// Compare linear kinetics of each rate in `rates` with the similarity
/// solution for uniform far-field temperature `theta_B`, up to the
/// solution's validity horizon.
pub fn neumann_comparison(cfg: &RunConfig, rates: &[f64]) -> Result<(NeumannSolution, Vec<NeumannComparison>)> {
    if !matches!(cfg.law.kind, VelocityKind::Linear { .. }) {
        return Err(Error::InvalidConfig("Neumann comparison needs a linear law".into()));
    }
    if cfg.initial != InitialCondition::Constant(0.0) {
        return Err(Error::InvalidConfig("Neumann comparison needs uniform initial data at theta_B".into()));
    }
    let params = cfg.params;
    let far = params.theta_b();
    let sol = solve_neumann(&params, cfg.u0, far, far)?;
    let horizon = sol.validity_horizon(params.length()).min(cfg.solver.t_end);
    let grid = cfg.grid();
    let mut solver = cfg.solver;
    solver.t_end = horizon;
    solver.snapshot_stride = usize::MAX;

    let comparisons = rates
        .par_iter()
        .map(|&k| {
            let law = VelocityLaw::linear(k, params.theta_t())?;
            let res = run(cfg.initial.build(grid)?, cfg.u0, &params, &law, &solver)?;
            let rows: Vec<NeumannRow> = res
                .trajectory
                .samples()
                .iter()
                .filter(|s| s.t <= horizon * (1.0 + 1e-12))
                .map(|s| {
                    let u_neumann = sol.position(s.t);
                    NeumannRow { t: s.t, u_sim: s.u, u_neumann, gap: (s.u - u_neumann).abs() }
                })
                .collect();
            let sup_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
            Ok(NeumannComparison { k, horizon, rows, sup_gap })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((sol, comparisons))
}
