//! Time stepping of the coupled heat equation and interface ODE.
//!
//! The rescaled temperature obeys `gamma rho0 theta_t - K theta_ss =
//! alpha u' delta(s - u)` with homogeneous Dirichlet data, and the interface
//! moves by `u' = chi_{u in (0, L)} v(theta(u) + theta_B)`.
//!
//! Diffusion is implicit (backward Euler or Crank-Nicolson) and solved in
//! increment form `(I + c T) delta = -r T theta^n + b`, with `-r T theta^n`
//! assembled from inter-node fluxes so that the discrete energy balance
//! telescopes to rounding level. Latent heat `alpha * du` is deposited at
//! the midpoint of the swept segment, either on the two bracketing nodes
//! (sharp) or through a mollified Dirac.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, TemperatureField};
use crate::interface::{ExitSide, InterfaceState, InterfaceTrajectory, TrajectorySample};
use crate::mollifier::{KernelProfile, MollifiedDirac};
use crate::params::PhysicalParams;
use crate::tridiag::Tridiagonal;
use crate::velocity::VelocityLaw;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SourceMode {
    #[default]
    Sharp,
    Mollified {
        epsilon: f64,
        profile: KernelProfile,
        /// Evaluate `v` at each node inside the kernel rather than at the
        /// interface temperature.
        pointwise_velocity: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "coupling", rename_all = "lowercase")]
pub enum Coupling {
    /// Explicit Euler for the interface, implicit diffusion.
    #[default]
    Imex,
    /// Fixed-point iteration on `(theta^{n+1}, u^{n+1})` with a trapezoidal
    /// interface update.
    Picard { max_iter: usize, tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionScheme {
    #[default]
    BackwardEuler,
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub source_mode: SourceMode,
    pub coupling: Coupling,
    pub interpolation: Interpolation,
    pub diffusion: DiffusionScheme,
    /// Keep one field snapshot every `snapshot_stride` steps.
    pub snapshot_stride: usize,
    /// End the run at the step where the interface leaves the domain.
    pub stop_at_exit: bool,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            source_mode: SourceMode::Sharp,
            coupling: Coupling::Imex,
            interpolation: Interpolation::Linear,
            diffusion: DiffusionScheme::BackwardEuler,
            snapshot_stride: 1,
            stop_at_exit: false,
        }
    }

    /// Default implicit step `dt = ds`.
    pub fn implicit_default(grid: &Grid1D, t_end: f64) -> Self {
        Self::new(grid.ds(), t_end)
    }

    /// Explicit-stability step `0.25 ds^2 gamma rho0 / K`, for diagnostic runs.
    pub fn explicit_diagnostic(grid: &Grid1D, params: &PhysicalParams, t_end: f64) -> Self {
        Self::new(0.25 * grid.ds() * grid.ds() / params.diffusivity(), t_end)
    }

    pub fn with_source(mut self, mode: SourceMode) -> Self {
        self.source_mode = mode;
        self
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_diffusion(mut self, scheme: DiffusionScheme) -> Self {
        self.diffusion = scheme;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_stop_at_exit(mut self, stop: bool) -> Self {
        self.stop_at_exit = stop;
        self
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Hard errors for invalid settings; returns soft warnings otherwise.
    pub fn validate(&self, grid: &Grid1D, params: &PhysicalParams, law: &VelocityLaw) -> Result<Vec<String>> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::NonPositiveParameter { key: "solver.dt".into(), value: self.dt });
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidValue { key: "solver.t_end".into(), reason: format!("{}", self.t_end) });
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidValue { key: "output.stride".into(), reason: "must be >= 1".into() });
        }
        if let Coupling::Picard { max_iter, tol } = self.coupling {
            if max_iter < 1 {
                return Err(Error::InvalidValue { key: "solver.max_iter".into(), reason: "must be >= 1".into() });
            }
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Error::NonPositiveParameter { key: "solver.tol".into(), value: tol });
            }
        }
        if let SourceMode::Mollified { epsilon, .. } = self.source_mode {
            let min = 2.0 * grid.ds();
            if !(epsilon.is_finite() && epsilon >= min * (1.0 - 1e-12)) {
                return Err(Error::UnresolvableWidth { epsilon, min });
            }
        }
        let mut warnings = Vec::new();
        let (lo, hi) = params.band();
        let v_max = law
            .v_max()
            .unwrap_or_else(|| law.max_abs_on(lo + params.theta_b(), hi + params.theta_b()));
        if self.dt * v_max > grid.ds() {
            warnings.push(format!(
                "transport guard: dt * v_max = {:.3e} exceeds ds = {:.3e}",
                self.dt * v_max,
                grid.ds()
            ));
        }
        Ok(warnings)
    }
}

/// External heat input for verification runs: a smooth volumetric source
/// plus an impulse deposited at the interface, optionally with a prescribed
/// interface path replacing the kinetic law.
pub trait Forcing {
    /// Volumetric source at `(s, t)`.
    fn volumetric(&self, s: f64, t: f64) -> f64;

    /// Heat deposited at the interface over `[t0, t1]`, spread with the same
    /// weights as the latent heat.
    fn interface_impulse(&self, _t0: f64, _t1: f64) -> f64 {
        0.0
    }

    /// Prescribed interface position, if the kinetic law is bypassed.
    fn interface_position(&self, _t: f64) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    /// Interpolated exit time within the exit step.
    pub time: f64,
    pub side: ExitSide,
    /// Index of the step during which the gate closed.
    pub step: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEntry {
    pub t: f64,
    /// `gamma rho0 * integral(theta_bar)`.
    pub stored: f64,
    /// Cumulative heat lost through both ends.
    pub flux_cum: f64,
    /// Cumulative latent heat released.
    pub latent_cum: f64,
    /// Cumulative heat from an external forcing.
    pub forcing_cum: f64,
    /// Balance residual of the step ending at `t`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub t: f64,
    pub min: f64,
    pub max: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub field: TemperatureField,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub params: PhysicalParams,
    pub law: VelocityLaw,
    pub config: SolverConfig,
    pub grid: Grid1D,
    pub snapshots: Vec<Snapshot>,
    pub trajectory: InterfaceTrajectory,
    pub exit: Option<ExitRecord>,
    pub energy: Vec<EnergyEntry>,
    /// Per time level, including `t = 0`.
    pub stats: Vec<FieldStats>,
    /// Lowest physical temperature seen; the model assumes it stays positive.
    pub min_physical_temperature: f64,
    pub warnings: Vec<String>,
}

impl SimulationResult {
    pub fn final_field(&self) -> &TemperatureField {
        &self.snapshots.last().expect("at least the initial snapshot").field
    }

    pub fn t_star(&self) -> Option<f64> {
        self.exit.map(|e| e.time)
    }

    /// Energy scale used to judge balance residuals: the larger of the
    /// maximal sensible heat `gamma rho0 L max|theta_bar|` and `alpha L`.
    pub fn energy_scale(&self) -> f64 {
        let peak = self.stats.iter().map(|s| s.min.abs().max(s.max.abs())).fold(0.0, f64::max);
        let l = self.grid.length();
        (self.params.heat_capacity() * l * peak).max(self.params.alpha() * l)
    }
}

/// Temperature at the interface by linear interpolation; exact at nodes.
pub fn interpolate_at_interface(field: &TemperatureField, u: f64) -> f64 {
    field.interpolate(u)
}

/// Deposition fractions summing to one, as `(node, fraction)` pairs on
/// interior nodes.
fn deposition_fractions(grid: &Grid1D, mode: &SourceMode, position: f64) -> Result<Vec<(usize, f64)>> {
    match *mode {
        SourceMode::Sharp => {
            let (j, xi) = grid.locate(position);
            let last = grid.n_cells();
            let fold = |i: usize| i.clamp(1, last - 1);
            let mut out: Vec<(usize, f64)> = Vec::with_capacity(2);
            for (i, f) in [(fold(j), 1.0 - xi), (fold(j + 1), xi)] {
                if f == 0.0 {
                    continue;
                }
                match out.iter_mut().find(|(k, _)| *k == i) {
                    Some(slot) => slot.1 += f,
                    None => out.push((i, f)),
                }
            }
            Ok(out)
        }
        SourceMode::Mollified { epsilon, profile, .. } => {
            let ds = grid.ds();
            Ok(MollifiedDirac::new(epsilon, position, profile)
                .sparse_weights(grid)?
                .into_iter()
                .map(|(i, w)| (i, w * ds))
                .collect())
        }
    }
}

/// One-step integrator owning the factorized diffusion operator.
pub struct Stepper<'a> {
    params: PhysicalParams,
    law: &'a VelocityLaw,
    config: SolverConfig,
    grid: Grid1D,
    matrix: Tridiagonal,
    forcing: Option<&'a dyn Forcing>,
    r: f64,
    rhs: Vec<f64>,
}

/// What a single step produced besides the new state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub exit: Option<ExitRecord>,
    pub delta_stored: f64,
    pub flux: f64,
    pub latent: f64,
    pub forcing: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(
        grid: Grid1D,
        params: PhysicalParams,
        law: &'a VelocityLaw,
        config: SolverConfig,
        forcing: Option<&'a dyn Forcing>,
    ) -> Self {
        let r = params.diffusivity() * config.dt / (grid.ds() * grid.ds());
        let c = match config.diffusion {
            DiffusionScheme::BackwardEuler => r,
            DiffusionScheme::CrankNicolson => 0.5 * r,
        };
        let interior = grid.n_cells() - 1;
        Self {
            params,
            law,
            config,
            grid,
            matrix: Tridiagonal::identity_plus_laplacian(interior, c),
            forcing,
            r,
            rhs: vec![0.0; interior],
        }
    }

    fn gated_velocity(&self, field: &TemperatureField, u: f64, active: bool) -> f64 {
        if !active {
            return 0.0;
        }
        self.law.eval(interpolate_at_interface(field, u) + self.params.theta_b())
    }

    /// Solve the diffusion step for a given interface move and return the
    /// new field and the energy bookkeeping of that step.
    fn diffuse(
        &mut self,
        old: &TemperatureField,
        u_old: f64,
        u_new: f64,
        t0: f64,
        active: bool,
        iterate: Option<&TemperatureField>,
    ) -> Result<(TemperatureField, f64, f64, f64, f64)> {
        let grid = self.grid;
        let n = grid.n_cells();
        let ds = grid.ds();
        let dt = self.config.dt;
        let cap = self.params.heat_capacity();
        let alpha = self.params.alpha();
        let th = old.values();
        let r = self.r;

        // -r T theta^n from face fluxes
        for i in 1..n {
            let right = r * (th[i + 1] - th[i]);
            let left = r * (th[i] - th[i - 1]);
            self.rhs[i - 1] = right - left;
        }

        let du = u_new - u_old;
        let mid = 0.5 * (u_old + u_new);
        let mut latent = 0.0;
        let mut forcing_heat = 0.0;
        let impulse = self.forcing.map_or(0.0, |f| f.interface_impulse(t0, t0 + dt));
        let pointwise = matches!(self.config.source_mode, SourceMode::Mollified { pointwise_velocity: true, .. });

        if du != 0.0 || impulse != 0.0 || (pointwise && active) {
            let fractions = deposition_fractions(&grid, &self.config.source_mode, mid)?;
            if pointwise {
                if active {
                    let theta_b = self.params.theta_b();
                    let picard = matches!(self.config.coupling, Coupling::Picard { .. });
                    for &(i, f) in &fractions {
                        let mut v = self.law.eval(th[i] + theta_b);
                        if let (true, Some(it)) = (picard, iterate) {
                            v = 0.5 * (v + self.law.eval(it.values()[i] + theta_b));
                        }
                        let q = alpha * dt * v * f;
                        latent += q;
                        self.rhs[i - 1] += q / (cap * ds);
                    }
                }
            } else {
                latent = alpha * du;
                for &(i, f) in &fractions {
                    self.rhs[i - 1] += alpha * du * f / (cap * ds);
                }
            }
            if impulse != 0.0 {
                forcing_heat += impulse;
                for &(i, f) in &fractions {
                    self.rhs[i - 1] += impulse * f / (cap * ds);
                }
            }
        }

        if let Some(forcing) = self.forcing {
            let t1 = t0 + dt;
            for i in 1..n {
                let s = grid.node(i);
                let q = match self.config.diffusion {
                    DiffusionScheme::BackwardEuler => forcing.volumetric(s, t1),
                    DiffusionScheme::CrankNicolson => {
                        0.5 * (forcing.volumetric(s, t0) + forcing.volumetric(s, t1))
                    }
                };
                self.rhs[i - 1] += dt * q / cap;
                forcing_heat += dt * q * ds;
            }
        }

        self.matrix.solve_in_place(&mut self.rhs);

        let mut next = old.clone();
        let mut sum_delta = 0.0;
        for (x, d) in next.interior_mut().iter_mut().zip(&self.rhs) {
            *x += d;
            sum_delta += d;
        }
        let delta_stored = cap * ds * sum_delta;
        let k = self.params.conductivity();
        let nv = next.values();
        let outflow_new = k * (nv[1] + nv[n - 1]) / ds;
        let flux = match self.config.diffusion {
            DiffusionScheme::BackwardEuler => outflow_new * dt,
            DiffusionScheme::CrankNicolson => 0.5 * (outflow_new + k * (th[1] + th[n - 1]) / ds) * dt,
        };
        Ok((next, delta_stored, flux, latent, forcing_heat))
    }

    /// Advance `(field, interface)` by one step. `step_index` is only used
    /// for diagnostics.
    pub fn step(
        &mut self,
        field: &mut TemperatureField,
        interface: &mut InterfaceState,
        step_index: usize,
    ) -> Result<StepOutcome> {
        let dt = self.config.dt;
        let t0 = interface.time();
        let t1 = t0 + dt;
        let u0 = interface.position();
        let active = interface.is_active();
        let v0 = self.gated_velocity(field, u0, active);

        let prescribed = self.forcing.and_then(|f| f.interface_position(t1));
        let mut iterations = 1;
        let (target, next, delta_stored, flux, latent, forcing_heat);

        match (prescribed, self.config.coupling) {
            (Some(p), _) => {
                target = p;
                let u1 = interface.clamp_target(p);
                (next, delta_stored, flux, latent, forcing_heat) = self.diffuse(field, u0, u1, t0, active, None)?;
            }
            (None, Coupling::Imex) => {
                target = u0 + dt * v0;
                let u1 = interface.clamp_target(target);
                (next, delta_stored, flux, latent, forcing_heat) = self.diffuse(field, u0, u1, t0, active, None)?;
            }
            (None, Coupling::Picard { max_iter, tol }) => {
                let mut guess = u0 + dt * v0;
                let mut current: Option<TemperatureField> = None;
                loop {
                    let u1 = interface.clamp_target(guess);
                    let out = self.diffuse(field, u0, u1, t0, active, current.as_ref())?;
                    let v1 = self.gated_velocity(&out.0, u1, active);
                    let update = u0 + 0.5 * dt * (v0 + v1);
                    let interface_change = (interface.clamp_target(update) - u1).abs();
                    if !interface_change.is_finite() {
                        return Err(Error::NonFiniteState { step: step_index });
                    }
                    // the first pass has no previous field to compare with
                    let field_change = current.as_ref().map(|c| {
                        c.values().iter().zip(out.0.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                    });
                    let residual = interface_change.max(field_change.unwrap_or(0.0));
                    if field_change.is_some() && residual <= tol {
                        target = guess;
                        (next, delta_stored, flux, latent, forcing_heat) = out;
                        break;
                    }
                    if iterations >= max_iter {
                        return Err(Error::PicardDivergence { step: step_index, iterations, residual });
                    }
                    iterations += 1;
                    guess = update;
                    current = Some(out.0);
                }
            }
        }

        if next.values().iter().any(|v| !v.is_finite()) || !target.is_finite() {
            return Err(Error::NonFiniteState { step: step_index });
        }

        let u1 = interface.clamp_target(target);
        let side = interface.commit(u1, t1);
        let exit = side.map(|side| {
            let boundary = match side {
                ExitSide::Left => 0.0,
                ExitSide::Right => interface.length(),
            };
            let frac = if target != u0 { ((boundary - u0) / (target - u0)).clamp(0.0, 1.0) } else { 1.0 };
            ExitRecord { time: t0 + frac * dt, side, step: step_index }
        });
        *field = next;
        let residual = delta_stored + flux - latent - forcing_heat;
        Ok(StepOutcome { exit, delta_stored, flux, latent, forcing: forcing_heat, residual, iterations })
    }
}

/// Advance one step from a fresh integrator. Convenient for tests; long runs
/// should reuse a [`Stepper`].
pub fn step(
    field: &mut TemperatureField,
    interface: &mut InterfaceState,
    params: &PhysicalParams,
    law: &VelocityLaw,
    config: &SolverConfig,
) -> Result<StepOutcome> {
    let mut stepper = Stepper::new(*field.grid(), *params, law, *config, None);
    stepper.step(field, interface, 0)
}

pub fn run(
    initial: TemperatureField,
    u0: f64,
    params: &PhysicalParams,
    law: &VelocityLaw,
    config: &SolverConfig,
) -> Result<SimulationResult> {
    run_with_forcing(initial, u0, params, law, config, None)
}

pub fn run_with_forcing(
    initial: TemperatureField,
    u0: f64,
    params: &PhysicalParams,
    law: &VelocityLaw,
    config: &SolverConfig,
    forcing: Option<&dyn Forcing>,
) -> Result<SimulationResult> {
    let grid = *initial.grid();
    if (grid.length() - params.length()).abs() > 1e-12 * params.length() {
        return Err(Error::InvalidGrid(format!(
            "grid length {} differs from L = {}",
            grid.length(),
            params.length()
        )));
    }
    let warnings = config.validate(&grid, params, law)?;
    let mut interface = InterfaceState::new(u0, params.length())?;
    let mut field = initial;
    let mut stepper = Stepper::new(grid, *params, law, *config, forcing);

    let n_steps = config.n_steps();
    let mut trajectory = InterfaceTrajectory::with_capacity(n_steps + 1);
    let mut energy = Vec::with_capacity(n_steps + 1);
    let mut stats = Vec::with_capacity(n_steps + 1);
    let mut snapshots = Vec::new();
    let mut exit = None;
    let mut min_phys = f64::INFINITY;

    let stored0 = params.heat_capacity() * field.integral();
    let (mut flux_cum, mut latent_cum, mut forcing_cum) = (0.0, 0.0, 0.0);
    let mut record = |k: usize,
                      t: f64,
                      field: &TemperatureField,
                      iface: &InterfaceState,
                      trajectory: &mut InterfaceTrajectory,
                      stats: &mut Vec<FieldStats>,
                      snapshots: &mut Vec<Snapshot>,
                      force_snapshot: bool|
     -> Result<()> {
        let theta_u = interpolate_at_interface(field, iface.position());
        let v = if iface.is_active() { law.eval(theta_u + params.theta_b()) } else { 0.0 };
        trajectory.push(
            TrajectorySample { t, u: iface.position(), theta_at_u: theta_u, v, active: iface.is_active() },
            params.length(),
        )?;
        let (lo, hi) = (field.min(), field.max());
        min_phys = min_phys.min(lo + params.theta_b());
        stats.push(FieldStats { t, min: lo, max: hi, l2: field.l2_norm() });
        if force_snapshot || k.is_multiple_of(config.snapshot_stride) {
            snapshots.push(Snapshot { step: k, t, field: field.clone() });
        }
        Ok(())
    };

    record(0, 0.0, &field, &interface, &mut trajectory, &mut stats, &mut snapshots, true)?;
    energy.push(EnergyEntry { t: 0.0, stored: stored0, flux_cum: 0.0, latent_cum: 0.0, forcing_cum: 0.0, residual: 0.0 });

    for k in 1..=n_steps {
        let out = stepper.step(&mut field, &mut interface, k)?;
        // time levels are k * dt exactly; avoids drift from repeated addition
        let t = k as f64 * config.dt;
        flux_cum += out.flux;
        latent_cum += out.latent;
        forcing_cum += out.forcing;
        energy.push(EnergyEntry {
            t,
            stored: params.heat_capacity() * field.integral(),
            flux_cum,
            latent_cum,
            forcing_cum,
            residual: out.residual,
        });
        if out.exit.is_some() && exit.is_none() {
            exit = out.exit;
        }
        let stop = exit.is_some() && config.stop_at_exit;
        let last = k == n_steps || stop;
        record(k, t, &field, &interface, &mut trajectory, &mut stats, &mut snapshots, last)?;
        if stop {
            break;
        }
    }

    let mut warnings = warnings;
    if min_phys <= 0.0 {
        warnings.push(format!("physical temperature reached {min_phys:.6e} <= 0"));
    }

    Ok(SimulationResult {
        params: *params,
        law: law.clone(),
        config: *config,
        grid,
        snapshots,
        trajectory,
        exit,
        energy,
        stats,
        min_physical_temperature: min_phys,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit(theta_b: f64) -> PhysicalParams {
        PhysicalParams::unit(1.0, theta_b).unwrap()
    }

    #[test]
    fn zero_latent_heat_decouples_transport() {
        let params = PhysicalParams::new(1.0, 1.0, 0.0, 1.0, 1.0, 0.5, 1.0).unwrap();
        let law = VelocityLaw::linear(2.0, 1.0).unwrap();
        let grid = Grid1D::new(64, 1.0).unwrap();
        let cfg = SolverConfig::new(0.01, 1.0);
        let res = run(TemperatureField::zeros(grid), 0.2, &params, &law, &cfg).unwrap();
        let v = law.eval(0.5);
        assert_eq!(v, 1.0);
        for s in res.snapshots.iter() {
            assert!(s.field.values().iter().all(|&x| x == 0.0));
        }
        let samples = res.trajectory.samples();
        // u_n = 0.2 + n dt v until the right end is hit
        for (n, smp) in samples.iter().enumerate() {
            let expected = (0.2 + n as f64 * 0.01 * v).min(1.0);
            assert!((smp.u - expected).abs() < 1e-12, "n={n} u={} expected={expected}", smp.u);
        }
        let exit = res.exit.unwrap();
        assert_eq!(exit.side, ExitSide::Right);
        assert!((exit.time - 0.8).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let params = unit(1.0);
        let law = VelocityLaw::linear(5.0, 1.0).unwrap();
        let grid = Grid1D::new(32, 1.0).unwrap();
        let res = run(TemperatureField::zeros(grid), 0.4, &params, &law, &SolverConfig::new(0.01, 1.0)).unwrap();
        assert!(res.exit.is_none());
        assert!(res.trajectory.positions().all(|u| u == 0.4));
        assert!(res.final_field().values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sharp_deposit_conserves_heat_exactly() {
        let params = unit(0.0);
        let law = VelocityLaw::linear(5.0, 1.0).unwrap();
        let grid = Grid1D::new(50, 1.0).unwrap();
        let mut field = TemperatureField::from_fn(grid, |s| (PI * s).sin()).unwrap();
        let mut iface = InterfaceState::new(0.33, 1.0).unwrap();
        for scheme in [DiffusionScheme::BackwardEuler, DiffusionScheme::CrankNicolson] {
            let cfg = SolverConfig::new(0.02, 1.0).with_diffusion(scheme);
            let out = step(&mut field, &mut iface, &params, &law, &cfg).unwrap();
            assert!(out.residual.abs() < 1e-14, "{scheme:?}: {}", out.residual);
            assert!(out.latent > 0.0);
        }
    }

    #[test]
    fn deposition_fractions_fold_boundary_nodes() {
        let grid = Grid1D::new(10, 1.0).unwrap();
        let f = deposition_fractions(&grid, &SourceMode::Sharp, 0.05).unwrap();
        assert_eq!(f, vec![(1, 1.0)]);
        let f = deposition_fractions(&grid, &SourceMode::Sharp, 0.25).unwrap();
        assert_eq!(f.len(), 2);
        assert!((f[0].1 - 0.5).abs() < 1e-12 && f[0].0 == 2);
        let f = deposition_fractions(&grid, &SourceMode::Sharp, 1.0).unwrap();
        assert_eq!(f, vec![(9, 1.0)]);
    }

    #[test]
    fn picard_matches_imex_to_first_order() {
        let params = unit(0.0);
        let law = VelocityLaw::linear(5.0, 1.0).unwrap();
        let grid = Grid1D::new(128, 1.0).unwrap();
        let init = TemperatureField::from_fn(grid, |s| (PI * s).sin()).unwrap();
        let mut gaps = Vec::new();
        for dt in [4e-3, 2e-3] {
            let base = SolverConfig::new(dt, 0.2);
            let a = run(init.clone(), 0.3, &params, &law, &base).unwrap();
            let b = run(
                init.clone(),
                0.3,
                &params,
                &law,
                &base.with_coupling(Coupling::Picard { max_iter: 50, tol: 1e-13 }),
            )
            .unwrap();
            let ua = a.trajectory.samples().last().unwrap().u;
            let ub = b.trajectory.samples().last().unwrap().u;
            gaps.push((ua - ub).abs());
        }
        assert!(gaps[0] < 0.02, "{gaps:?}");
        assert!(gaps[1] < gaps[0] * 0.7, "{gaps:?}");
    }

    #[test]
    fn picard_divergence_is_reported() {
        let params = unit(0.0);
        // large latent heat makes the fixed-point map expansive
        let params = params.with_alpha(100.0).unwrap();
        let law = VelocityLaw::linear(5.0, 1.0).unwrap();
        let grid = Grid1D::new(64, 1.0).unwrap();
        let init = TemperatureField::from_fn(grid, |s| (PI * s).sin()).unwrap();
        let cfg = SolverConfig::new(0.01, 1.0).with_coupling(Coupling::Picard { max_iter: 20, tol: 1e-12 });
        let err = run(init, 0.3, &params, &law, &cfg).unwrap_err();
        assert!(matches!(err, Error::PicardDivergence { step: 1, .. }), "{err:?}");
    }

    #[test]
    fn invalid_initial_interface() {
        let params = unit(0.0);
        let law = VelocityLaw::linear(1.0, 1.0).unwrap();
        let grid = Grid1D::new(16, 1.0).unwrap();
        let err = run(TemperatureField::zeros(grid), 1.0, &params, &law, &SolverConfig::new(0.1, 1.0)).unwrap_err();
        assert_eq!(err, Error::InvalidInitialInterface(1.0));
    }

    #[test]
    fn stop_at_exit_truncates() {
        let params = unit(0.0);
        let law = VelocityLaw::linear(5.0, 1.0).unwrap();
        let grid = Grid1D::new(64, 1.0).unwrap();
        let init = TemperatureField::from_fn(grid, |s| (PI * s).sin()).unwrap();
        let cfg = SolverConfig::new(grid.ds(), 3.0).with_stop_at_exit(true).with_stride(10);
        let res = run(init, 0.3, &params, &law, &cfg).unwrap();
        let exit = res.exit.unwrap();
        assert_eq!(res.trajectory.len(), exit.step + 1);
        assert_eq!(res.snapshots.last().unwrap().step, exit.step);
    }

    #[test]
    fn interpolation_second_order_for_sine() {
        let err = |n: usize| {
            let g = Grid1D::new(n, 1.0).unwrap();
            let f = TemperatureField::from_fn(g, |s| (PI * s).sin()).unwrap();
            // 0.5 + ds/3 is never a node
            let u = 0.5 + g.ds() / 3.0;
            (interpolate_at_interface(&f, u) - (PI * u).sin()).abs()
        };
        let ratio = err(64) / err(128);
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn transport_guard_warns() {
        let params = unit(0.0);
        let law = VelocityLaw::saturated(10.0, 0.1, 1.0).unwrap();
        let grid = Grid1D::new(100, 1.0).unwrap();
        let w = SolverConfig::new(0.01, 1.0).validate(&grid, &params, &law).unwrap();
        assert_eq!(w.len(), 1);
        let w = SolverConfig::new(0.0005, 1.0).validate(&grid, &params, &law).unwrap();
        assert!(w.is_empty());
    }
}
