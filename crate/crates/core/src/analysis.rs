//! Checks of the qualitative properties a run must have: the temperature
//! stays between `0` and `theta_c`, the interface moves one way at bounded
//! speed and leaves the domain in finite time, after which the field decays
//! like the first Dirichlet mode, and heat is conserved step by step.
//!
//! Each checker reads a [`SimulationResult`] and never judges a property
//! outside its hypotheses: those runs get [`Verdict::HypothesisNotMet`].

use serde::{Deserialize, Serialize};

use crate::solver::SimulationResult;

/// Pointwise slack for the temperature band.
pub const BAND_TOLERANCE: f64 = 1e-10;
/// Slack for backward interface steps.
pub const MONOTONE_SLACK: f64 = 1e-14;
/// Relative tolerance on the fitted decay rate.
pub const DECAY_TOLERANCE: f64 = 0.05;
/// Post-exit samples needed for a decay fit.
pub const MIN_DECAY_SAMPLES: usize = 50;
/// Fraction of the post-exit window dropped before fitting.
pub const DECAY_TRANSIENT: f64 = 0.25;
/// Per-step energy residual relative to the energy scale.
pub const STEP_ENERGY_TOLERANCE: f64 = 1e-12;
/// Cumulative energy residual relative to the energy scale.
pub const CUMULATIVE_ENERGY_TOLERANCE: f64 = 1e-10;
/// Default multiple of the crossing time a run must cover before a missing
/// exit counts as a failure.
pub const DEFAULT_EXIT_BUDGET_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    MaxPrinciple,
    Monotonicity,
    SpeedBound,
    FiniteExit,
    L2Decay,
    EnergyBalance,
}

impl TheoremId {
    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::MaxPrinciple => "max_principle",
            TheoremId::Monotonicity => "monotonicity",
            TheoremId::SpeedBound => "speed_bound",
            TheoremId::FiniteExit => "finite_exit",
            TheoremId::L2Decay => "l2_decay",
            TheoremId::EnergyBalance => "energy_balance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    HypothesisNotMet,
    Inconclusive,
}

impl Verdict {
    pub fn is_failure(self) -> bool {
        self == Verdict::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub id: TheoremId,
    pub verdict: Verdict,
    /// Signed distance to the tolerance; non-negative on a pass.
    pub margin: f64,
    pub tolerance: f64,
    /// `(t, s)` of the worst case, when it has one.
    pub location: Option<(f64, f64)>,
    pub detail: String,
}

impl TheoremReport {
    fn new(id: TheoremId, verdict: Verdict, margin: f64, tolerance: f64, location: Option<(f64, f64)>, detail: String) -> Self {
        Self { id, verdict, margin, tolerance, location, detail }
    }

    fn judged(id: TheoremId, margin: f64, tolerance: f64, location: Option<(f64, f64)>, detail: String) -> Self {
        let verdict = if margin >= 0.0 { Verdict::Pass } else { Verdict::Fail };
        Self::new(id, verdict, margin, tolerance, location, detail)
    }

    fn skipped(id: TheoremId, verdict: Verdict, detail: String) -> Self {
        Self::new(id, verdict, f64::NAN, f64::NAN, None, detail)
    }
}

fn band(result: &SimulationResult) -> (f64, f64) {
    result.params.band()
}

/// Whether the initial field lies in the band; `Err` carries the reason.
fn initial_in_band(result: &SimulationResult) -> Result<(), String> {
    let (lo, hi) = band(result);
    let first = result.snapshots.first().ok_or("no initial snapshot")?;
    let (min, max) = (first.field.min(), first.field.max());
    if min < lo - BAND_TOLERANCE || max > hi + BAND_TOLERANCE {
        return Err(format!("initial field spans [{min:e}, {max:e}], outside [{lo}, {hi}]"));
    }
    Ok(())
}

pub fn check_max_principle(result: &SimulationResult) -> TheoremReport {
    let id = TheoremId::MaxPrinciple;
    if let Err(why) = initial_in_band(result) {
        return TheoremReport::skipped(id, Verdict::HypothesisNotMet, why);
    }
    let (lo, hi) = band(result);
    let mut worst = f64::INFINITY;
    let mut at = None;
    for snap in &result.snapshots {
        for (s, &x) in snap.field.grid().nodes().zip(snap.field.values()) {
            let inside = (x - lo).min(hi - x);
            if inside < worst {
                worst = inside;
                at = Some((snap.t, s));
            }
        }
    }
    TheoremReport::judged(
        id,
        worst + BAND_TOLERANCE,
        BAND_TOLERANCE,
        at,
        format!("band [{lo}, {hi}], closest approach {worst:e} over {} snapshots", result.snapshots.len()),
    )
}

pub fn check_monotone_interface(result: &SimulationResult) -> TheoremReport {
    let id = TheoremId::Monotonicity;
    if let Err(why) = initial_in_band(result) {
        return TheoremReport::skipped(id, Verdict::HypothesisNotMet, why);
    }
    let theta_c = result.params.theta_c();
    let samples = result.trajectory.samples();
    let mut worst = f64::INFINITY;
    let mut at = None;
    for w in samples.windows(2) {
        if !w[0].active {
            continue;
        }
        let du = w[1].u - w[0].u;
        // theta_c = 0 pins the interface
        let forward = if theta_c > 0.0 {
            du
        } else if theta_c < 0.0 {
            -du
        } else {
            -du.abs()
        };
        if forward < worst {
            worst = forward;
            at = Some((w[1].t, w[1].u));
        }
    }
    if at.is_none() {
        worst = 0.0;
    }
    let direction = if theta_c > 0.0 {
        "non-decreasing"
    } else if theta_c < 0.0 {
        "non-increasing"
    } else {
        "constant"
    };
    TheoremReport::judged(
        id,
        worst + MONOTONE_SLACK,
        MONOTONE_SLACK,
        at,
        format!("interface expected {direction}; worst signed step {worst:e}"),
    )
}

pub fn check_speed_bound(result: &SimulationResult) -> TheoremReport {
    let id = TheoremId::SpeedBound;
    if let Err(why) = initial_in_band(result) {
        return TheoremReport::skipped(id, Verdict::HypothesisNotMet, why);
    }
    let (lo, hi) = band(result);
    let tb = result.params.theta_b();
    let v_max = result.law.max_abs_on(lo + tb, hi + tb);
    let mut worst = f64::INFINITY;
    let mut at = None;
    for w in result.trajectory.samples().windows(2) {
        let bound = v_max * (w[1].t - w[0].t);
        let slack = bound * (1.0 + 1e-12) + 1e-15 - (w[1].u - w[0].u).abs();
        if slack < worst {
            worst = slack;
            at = Some((w[1].t, w[1].u));
        }
    }
    if at.is_none() {
        worst = 0.0;
    }
    TheoremReport::judged(id, worst, 1e-12, at, format!("|du/dt| <= {v_max:e} over the temperature band"))
}

/// Time a run must cover before a missing exit is a failure:
/// `factor * L / min |v|`, the minimum taken over the lower three quarters
/// of the band where the velocity is bounded away from zero.
pub fn exit_budget(result: &SimulationResult, factor: f64) -> f64 {
    let theta_c = result.params.theta_c();
    let tb = result.params.theta_b();
    let (a, b) = if theta_c > 0.0 { (0.0, 0.75 * theta_c) } else { (0.75 * theta_c, 0.0) };
    let v_min = result.law.min_abs_on(a + tb, b + tb);
    factor * result.params.length() / v_min
}

pub fn check_finite_exit(result: &SimulationResult, budget_factor: f64) -> TheoremReport {
    let id = TheoremId::FiniteExit;
    if result.params.theta_c() == 0.0 {
        return TheoremReport::skipped(id, Verdict::HypothesisNotMet, "theta_c = 0: no undercooling to drive the front".into());
    }
    if let Err(why) = initial_in_band(result) {
        return TheoremReport::skipped(id, Verdict::HypothesisNotMet, why);
    }
    let t_end = result.trajectory.samples().last().map_or(0.0, |s| s.t).max(result.config.t_end);
    match result.exit {
        Some(exit) => TheoremReport::judged(
            id,
            t_end - exit.time,
            0.0,
            Some((exit.time, if exit.side == crate::interface::ExitSide::Left { 0.0 } else { result.params.length() })),
            format!("exit at t* = {:.12e} through the {:?} end", exit.time, exit.side),
        ),
        None => {
            let budget = exit_budget(result, budget_factor);
            if t_end < budget {
                TheoremReport::skipped(
                    id,
                    Verdict::Inconclusive,
                    format!("no exit by t = {t_end}, below the budget {budget:e}"),
                )
            } else {
                TheoremReport::new(
                    id,
                    Verdict::Fail,
                    budget - t_end,
                    0.0,
                    None,
                    format!("no exit by t = {t_end} although the budget is {budget:e}"),
                )
            }
        }
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = points
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx) * (p.0 - mx)));
    num / den
}

pub fn check_l2_decay(result: &SimulationResult) -> TheoremReport {
    let id = TheoremId::L2Decay;
    let Some(exit) = result.exit else {
        return TheoremReport::skipped(id, Verdict::Inconclusive, "no exit, no post-exit regime".into());
    };
    let post: Vec<_> = result.stats.iter().filter(|s| s.t > exit.time).collect();
    if post.len() < MIN_DECAY_SAMPLES {
        return TheoremReport::skipped(
            id,
            Verdict::Inconclusive,
            format!("{} post-exit samples, need {MIN_DECAY_SAMPLES}", post.len()),
        );
    }
    if post.iter().all(|s| s.l2 == 0.0) {
        return TheoremReport::new(id, Verdict::Pass, 0.0, DECAY_TOLERANCE, None, "field identically zero".into());
    }
    let skip = (post.len() as f64 * DECAY_TRANSIENT) as usize;
    let points: Vec<(f64, f64)> = post[skip..].iter().filter(|s| s.l2 > 0.0).map(|s| (s.t, s.l2.ln())).collect();
    if points.len() < 2 {
        return TheoremReport::skipped(id, Verdict::Inconclusive, "too few non-zero norms to fit".into());
    }
    let rate = -fit_slope(&points);
    let target = result.params.first_eigenvalue();
    let rel = (rate - target).abs() / target;
    let margin = if rate > 0.0 { DECAY_TOLERANCE - rel } else { -rel.max(f64::MIN_POSITIVE) };
    TheoremReport::judged(
        id,
        margin,
        DECAY_TOLERANCE,
        points.first().map(|p| (p.0, f64::NAN)),
        format!("fitted rate {rate:.6e} against K pi^2 / (gamma rho0 L^2) = {target:.6e}, relative error {rel:.3e}"),
    )
}

pub fn check_energy_balance(result: &SimulationResult) -> TheoremReport {
    let id = TheoremId::EnergyBalance;
    let Some(first) = result.energy.first() else {
        return TheoremReport::skipped(id, Verdict::Inconclusive, "no energy ledger".into());
    };
    let scale = result.energy_scale().max(f64::MIN_POSITIVE);
    let (mut worst_step, mut worst_cum) = (0.0_f64, 0.0_f64);
    let mut at = None;
    for e in &result.energy[1..] {
        let step = e.residual.abs() / scale;
        if step > worst_step {
            worst_step = step;
            at = Some((e.t, f64::NAN));
        }
        let cum = (e.stored - first.stored + e.flux_cum - e.latent_cum - e.forcing_cum).abs() / scale;
        worst_cum = worst_cum.max(cum);
    }
    let margin = (STEP_ENERGY_TOLERANCE - worst_step).min(CUMULATIVE_ENERGY_TOLERANCE - worst_cum);
    TheoremReport::judged(
        id,
        margin,
        STEP_ENERGY_TOLERANCE,
        at,
        format!("relative residual per step {worst_step:.3e}, cumulative {worst_cum:.3e}, scale {scale:.6e}"),
    )
}

/// All six reports in a fixed order.
pub fn check_all(result: &SimulationResult) -> Vec<TheoremReport> {
    vec![
        check_max_principle(result),
        check_monotone_interface(result),
        check_speed_bound(result),
        check_finite_exit(result, DEFAULT_EXIT_BUDGET_FACTOR),
        check_l2_decay(result),
        check_energy_balance(result),
    ]
}
