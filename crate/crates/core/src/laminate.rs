//! Laminate geometry driven by the interface: a two-variant martensite
//! laminate `{A, B}` with volume fraction `lambda` on `{x.n < u}` and
//! austenite on `{x.n > u}`.
//!
//! The laminate is compatible with the austenite when the average gradient
//! `lambda A + (1 - lambda) B` is a rank-one perturbation `I + a (x) n` of
//! the identity. The deformation is then
//!
//! ```text
//! y(x) = x + a (x.n) + c1   for x.n < u
//! y(x) = x + c2             for x.n > u
//! ```
//!
//! and continuity across `x.n = u` forces `c2 - c1 = a u`. Translations
//! are fixed by the gauge `c2 = 0`.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::interface::{InterfaceTrajectory, TrajectorySample};

/// `sigma2 / sigma1` at or below which `M - I` counts as rank one.
pub const RANK_ONE_TOLERANCE: f64 = 1e-10;

/// Singular values of `m`, largest first.
pub fn singular_values(m: &Matrix3<f64>) -> [f64; 3] {
    let sv = m.singular_values();
    let mut s = [sv[0], sv[1], sv[2]];
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankOne {
    pub a: Vector3<f64>,
    /// Unit normal; its first non-zero component is positive.
    pub n: Vector3<f64>,
    /// `M = I`: no shear, `n = e1` by convention.
    pub degenerate: bool,
    pub sigma2: f64,
}

/// Write `m = I + a (x) n` when `m - I` has numerical rank at most one.
pub fn extract_rank_one(m: &Matrix3<f64>) -> Result<RankOne> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidValue { key: "matrix".into(), reason: "non-finite entry".into() });
    }
    let d = m - Matrix3::identity();
    let [s1, s2, _] = singular_values(&d);
    if s1 == 0.0 {
        return Ok(RankOne { a: Vector3::zeros(), n: Vector3::x(), degenerate: true, sigma2: 0.0 });
    }
    if s2 > RANK_ONE_TOLERANCE * s1 {
        return Err(Error::NotRankOne { sigma2: s2 });
    }
    // every row of a (x) n is a multiple of n; the longest is the most accurate
    let row = (0..3)
        .map(|i| d.row(i).transpose())
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .expect("three rows");
    let mut n = row / row.norm();
    if let Some(&first) = n.iter().find(|x| x.abs() > 1e-14) {
        if first < 0.0 {
            n = -n;
        }
    }
    let a = d * n;
    Ok(RankOne { a, n, degenerate: false, sigma2: s2 })
}

pub fn barycenter(a: &Matrix3<f64>, b: &Matrix3<f64>, lambda: f64) -> Result<Matrix3<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    Ok(a * lambda + b * (1.0 - lambda))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaminateSpec {
    pub a_variant: Matrix3<f64>,
    pub b_variant: Matrix3<f64>,
    pub lambda: f64,
    pub shear: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub degenerate: bool,
}

impl LaminateSpec {
    pub fn new(a_variant: Matrix3<f64>, b_variant: Matrix3<f64>, lambda: f64) -> Result<Self> {
        let m = barycenter(&a_variant, &b_variant, lambda)?;
        let r1 = extract_rank_one(&m).map_err(|e| match e {
            Error::NotRankOne { sigma2 } => Error::IncompatibleSpec { sigma2 },
            other => other,
        })?;
        Ok(Self { a_variant, b_variant, lambda, shear: r1.a, normal: r1.n, degenerate: r1.degenerate })
    }

    /// From `laminate.A`, `laminate.B` (nine entries each, row-major,
    /// comma-separated) and `laminate.lambda`.
    pub fn from_entries(entries: &BTreeMap<String, String>) -> Result<Self> {
        for key in entries.keys() {
            if !["laminate.A", "laminate.B", "laminate.lambda"].contains(&key.as_str()) {
                return Err(Error::UnknownKey(key.clone()));
            }
        }
        let get = |k: &str| entries.get(k).ok_or_else(|| Error::MissingKey(k.into()));
        let matrix = |k: &str| -> Result<Matrix3<f64>> {
            let vals = get(k)?
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::InvalidValue { key: k.into(), reason: e.to_string() })?;
            if vals.len() != 9 {
                return Err(Error::InvalidValue { key: k.into(), reason: format!("expected 9 entries, got {}", vals.len()) });
            }
            Ok(Matrix3::from_row_slice(&vals))
        };
        let lambda = get("laminate.lambda")?
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::InvalidValue { key: "laminate.lambda".into(), reason: e.to_string() })?;
        Self::new(matrix("laminate.A")?, matrix("laminate.B")?, lambda)
    }

    pub fn average_gradient(&self) -> Matrix3<f64> {
        self.a_variant * self.lambda + self.b_variant * (1.0 - self.lambda)
    }

    /// Operator norm of the laminate-side gradient; the austenite side has
    /// gradient `I`, so this bounds the Lipschitz constant of `y`.
    pub fn lipschitz_constant(&self) -> f64 {
        singular_values(&(Matrix3::identity() + self.shear * self.normal.transpose()))[0].max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationSnapshot {
    pub t: f64,
    pub u: f64,
    pub c1: [f64; 3],
    pub c2: [f64; 3],
}

impl DeformationSnapshot {
    /// `y(x)` on the side of `x` selected by `x.n` against `u`.
    pub fn map(&self, spec: &LaminateSpec, x: &Vector3<f64>) -> Vector3<f64> {
        let h = x.dot(&spec.normal);
        if h < self.u {
            self.laminate_side(spec, x)
        } else {
            self.austenite_side(x)
        }
    }

    pub fn laminate_side(&self, spec: &LaminateSpec, x: &Vector3<f64>) -> Vector3<f64> {
        x + spec.shear * x.dot(&spec.normal) + Vector3::from(self.c1)
    }

    pub fn austenite_side(&self, x: &Vector3<f64>) -> Vector3<f64> {
        x + Vector3::from(self.c2)
    }
}

/// Translations for every trajectory sample under the gauge `c2 = 0`.
pub fn reconstruct_deformation(trajectory: &InterfaceTrajectory, spec: &LaminateSpec) -> Vec<DeformationSnapshot> {
    trajectory
        .samples()
        .iter()
        .map(|s| {
            let c1 = -spec.shear * s.u;
            DeformationSnapshot { t: s.t, u: s.u, c1: c1.into(), c2: [0.0; 3] }
        })
        .collect()
}

/// Largest jump of `y` across the interface plane, probed at `probes`
/// points of the plane per snapshot.
pub fn continuity_defect(snapshots: &[DeformationSnapshot], spec: &LaminateSpec, probes: &[Vector3<f64>]) -> f64 {
    let n = spec.normal;
    let mut worst = 0.0_f64;
    for snap in snapshots {
        for p in probes {
            // project the probe onto the plane x.n = u
            let x = p + n * (snap.u - p.dot(&n));
            let jump = (snap.laminate_side(spec, &x) - snap.austenite_side(&x)).norm();
            worst = worst.max(jump);
        }
    }
    worst
}

/// Nodal values of the entropy barycentre `-(alpha / theta_T)` on the
/// laminate side and `0` on the austenite side. The jump sits at the node
/// nearest `u`: nodes below it are laminate.
pub fn entropy_barycenter(grid: &Grid1D, u: f64, alpha: f64, theta_t: f64) -> Vec<f64> {
    let j = grid.nearest_node(u);
    (0..grid.n_nodes()).map(|i| if i < j { -alpha / theta_t } else { 0.0 }).collect()
}

/// `int_0^u psi_h`, with `psi_h` the piecewise-linear interpolant of nodal `psi`.
pub fn integral_up_to(grid: &Grid1D, psi: &[f64], u: f64) -> f64 {
    let (j, xi) = grid.locate(u);
    let ds = grid.ds();
    let full: f64 = (0..j).map(|i| 0.5 * ds * (psi[i] + psi[i + 1])).sum();
    if j >= grid.n_cells() || xi == 0.0 {
        return full;
    }
    let end = psi[j] + xi * (psi[j + 1] - psi[j]);
    full + 0.5 * ds * xi * (psi[j] + end)
}

fn interpolate(grid: &Grid1D, psi: &[f64], u: f64) -> f64 {
    let (j, xi) = grid.locate(u);
    if j >= grid.n_cells() {
        return psi[grid.n_cells()];
    }
    psi[j] + xi * (psi[j + 1] - psi[j])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyResidual {
    pub t: f64,
    /// Difference quotient of `int_0^u psi` over `[t_k, t_{k+1}]`.
    pub lhs: f64,
    /// `u' psi(u)` at `t_k`, with `u'` the same difference quotient of `u`.
    pub rhs: f64,
    pub residual: f64,
}

/// Transport identity `d/dt int_0^u psi = u' psi(u)`, one row per step.
/// The quotient is centred at `t_{k+1/2}` and `psi` is read at `u(t_k)`,
/// so the residual is `psi'(u) u'^2 dt / 2` to leading order.
pub fn entropy_source_identity(trajectory: &InterfaceTrajectory, grid: &Grid1D, psi: &[f64]) -> Result<Vec<EntropyResidual>> {
    if psi.len() != grid.n_nodes() {
        return Err(Error::FieldSizeMismatch { expected: grid.n_nodes(), got: psi.len() });
    }
    Ok(trajectory
        .samples()
        .windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            let lhs = (integral_up_to(grid, psi, w[1].u) - integral_up_to(grid, psi, w[0].u)) / dt;
            let rhs = (w[1].u - w[0].u) / dt * interpolate(grid, psi, w[0].u);
            EntropyResidual { t: w[0].t, lhs, rhs, residual: lhs - rhs }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskCheck {
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskAudit {
    /// Laminate and austenite regions partition the grid up to the interface.
    pub mm1: MaskCheck,
    /// The austenite side is undeformed.
    pub mm2: MaskCheck,
    /// The interface is Lipschitz in time.
    pub mm3: MaskCheck,
    /// The laminate does not change in time.
    pub mm4: MaskCheck,
    /// `c2 - c1 = a u` at every sample.
    pub continuity_convention: bool,
    /// `c1 - c2 = a u` at every sample.
    pub reversed_convention: bool,
}

impl MaskAudit {
    pub fn all_pass(&self) -> bool {
        self.mm1.pass && self.mm2.pass && self.mm3.pass && self.mm4.pass
    }
}

fn check(pass: bool, detail: String) -> MaskCheck {
    MaskCheck { pass, detail }
}

/// Audit a reconstructed motion. `specs` holds one spec per trajectory
/// sample, or a single spec for a time-constant laminate.
pub fn moving_mask_audit(
    trajectory: &InterfaceTrajectory,
    specs: &[LaminateSpec],
    grid: &Grid1D,
    v_max: f64,
) -> Result<MaskAudit> {
    let samples = trajectory.samples();
    if specs.is_empty() || (specs.len() != 1 && specs.len() != samples.len()) {
        return Err(Error::InvalidValue {
            key: "specs".into(),
            reason: format!("need 1 or {} specs, got {}", samples.len(), specs.len()),
        });
    }
    let spec_at = |k: usize| if specs.len() == 1 { &specs[0] } else { &specs[k] };
    let length = grid.length();

    let mut mm1_bad = None;
    for (k, s) in samples.iter().enumerate() {
        let field = entropy_barycenter(grid, s.u, 1.0, 1.0);
        let j = grid.nearest_node(s.u);
        let two_valued = field.iter().enumerate().all(|(i, &x)| if i < j { x == -1.0 } else { x == 0.0 });
        if !(0.0..=length).contains(&s.u) || !two_valued {
            mm1_bad = Some(k);
            break;
        }
    }
    let mm1 = match mm1_bad {
        None => check(true, format!("{} samples partitioned at the interface", samples.len())),
        Some(k) => check(false, format!("sample {k} at u = {} does not split the domain", samples[k].u)),
    };

    let mut grad_err = 0.0_f64;
    let (mut cont, mut rev) = (true, true);
    for (k, snap) in reconstruct_deformation(trajectory, spec_at(0)).iter().enumerate() {
        let spec = spec_at(k);
        let au = spec.shear * snap.u;
        let c1 = Vector3::from(snap.c1);
        let c2 = Vector3::from(snap.c2);
        let tol = 1e-12 * (1.0 + au.norm());
        cont &= (c2 - c1 - au).norm() <= tol;
        rev &= (c1 - c2 - au).norm() <= tol;
        if snap.u >= length {
            // no austenite left
            continue;
        }
        // difference quotients of y on the austenite side
        let x0 = spec.normal * (snap.u + 0.5 * (length - snap.u)) + Vector3::new(0.1, -0.2, 0.3).cross(&spec.normal);
        for e in [Vector3::x(), Vector3::y(), Vector3::z()] {
            let h = 1e-3 * length;
            let dy = (snap.austenite_side(&(x0 + e * h)) - snap.austenite_side(&x0)) / h;
            grad_err = grad_err.max((dy - e).norm());
        }
    }
    let mm2 = check(grad_err <= 1e-9, format!("austenite gradient deviates from I by {grad_err:.3e}"));

    let mm3 = match trajectory.lipschitz_violation(v_max) {
        None => check(true, format!("|du/dt| <= {v_max:e} throughout")),
        Some(k) => check(false, format!("jump between samples {k} and {} exceeds {v_max:e} dt", k + 1)),
    };

    let first = spec_at(0);
    let varying = (1..samples.len()).find(|&k| {
        let s = spec_at(k);
        s.lambda != first.lambda || s.a_variant != first.a_variant || s.b_variant != first.b_variant || s.shear != first.shear
    });
    let mm4 = match varying {
        None => check(true, "laminate constant in time".into()),
        Some(k) => check(false, format!("laminate changes at sample {k}")),
    };

    Ok(MaskAudit { mm1, mm2, mm3, mm4, continuity_convention: cont, reversed_convention: rev })
}

/// Aggregate outcome of [`randomized_trials`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trials: usize,
    pub seed: u64,
    /// Largest error of `extract_rank_one(I + a (x) n)` against `(a, n)`.
    pub max_round_trip_error: f64,
    /// Largest jump of `y` across the interface.
    pub max_continuity_defect: f64,
    /// Largest `L - (1 + |a|)`; non-positive when the bound holds.
    pub max_lipschitz_excess: f64,
    /// Largest sampled difference quotient of `y` over `1 + |a|`.
    pub max_sampled_lipschitz_ratio: f64,
    pub mm_failures: usize,
    /// Smallest ratio of the entropy-identity residual at `dt` over `dt / 2`.
    pub min_entropy_ratio: f64,
    pub max_entropy_ratio: f64,
}

fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let r = v.norm();
        if r > 1e-3 && r <= 1.0 {
            return v / r;
        }
    }
}

fn random_vector(rng: &mut impl Rng, max_norm: f64) -> Vector3<f64> {
    random_unit(rng) * rng.random_range(0.0..max_norm)
}

/// Linear interface path `u0 + c t` sampled with step `dt` over `[0, 1]`.
fn linear_path(u0: f64, c: f64, dt: f64) -> InterfaceTrajectory {
    let steps = (1.0 / dt).round() as usize;
    let samples = (0..=steps)
        .map(|k| {
            let t = k as f64 * dt;
            TrajectorySample { t, u: u0 + c * t, theta_at_u: 0.0, v: c, active: true }
        })
        .collect();
    InterfaceTrajectory::from_samples(samples, 1.0).expect("path stays inside [0, 1]")
}

fn max_abs_residual(rows: &[EntropyResidual]) -> f64 {
    rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max)
}

/// Random compatible laminates `A = I + b1 (x) n`, `B = I + b2 (x) n` driven
/// along random monotone paths, checked for rank-one round trip,
/// continuity, the Lipschitz bound, the moving-mask conditions and the
/// first-order convergence of the entropy transport identity.
pub fn randomized_trials(trials: usize, seed: u64) -> Result<TrialReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Grid1D::new(64, 1.0)?;
    let psi: Vec<f64> = grid.nodes().map(|s| (std::f64::consts::PI * s).sin().powi(2)).collect();
    let mut report = TrialReport {
        trials,
        seed,
        max_round_trip_error: 0.0,
        max_continuity_defect: 0.0,
        max_lipschitz_excess: f64::NEG_INFINITY,
        max_sampled_lipschitz_ratio: 0.0,
        mm_failures: 0,
        min_entropy_ratio: f64::INFINITY,
        max_entropy_ratio: 0.0,
    };
    for _ in 0..trials {
        let n = random_unit(&mut rng);
        let a = random_vector(&mut rng, 10.0);
        let r1 = extract_rank_one(&(Matrix3::identity() + a * n.transpose()))?;
        let sign = if r1.n.dot(&n) < 0.0 { -1.0 } else { 1.0 };
        let err = (r1.n - n * sign).norm().max((r1.a - a * sign).norm());
        report.max_round_trip_error = report.max_round_trip_error.max(err);

        let b1 = random_vector(&mut rng, 10.0);
        let b2 = random_vector(&mut rng, 10.0);
        let lambda = rng.random_range(0.0..=1.0);
        let spec = LaminateSpec::new(
            Matrix3::identity() + b1 * n.transpose(),
            Matrix3::identity() + b2 * n.transpose(),
            lambda,
        )?;
        let shear_norm = spec.shear.norm();
        report.max_lipschitz_excess = report.max_lipschitz_excess.max(spec.lipschitz_constant() - (1.0 + shear_norm));

        let u0 = rng.random_range(0.05..0.4);
        let c = rng.random_range(0.05..0.5);
        let coarse = linear_path(u0, c, 2e-3);
        let fine = linear_path(u0, c, 1e-3);
        let snaps = reconstruct_deformation(&coarse, &spec);
        let probes: Vec<Vector3<f64>> = (0..4).map(|_| random_vector(&mut rng, 2.0)).collect();
        report.max_continuity_defect = report.max_continuity_defect.max(continuity_defect(&snaps, &spec, &probes));

        for snap in snaps.iter().step_by(50) {
            for _ in 0..4 {
                let x = random_vector(&mut rng, 2.0);
                let y = random_vector(&mut rng, 2.0);
                let q = (snap.map(&spec, &x) - snap.map(&spec, &y)).norm() / (x - y).norm();
                report.max_sampled_lipschitz_ratio = report.max_sampled_lipschitz_ratio.max(q / (1.0 + shear_norm));
            }
        }

        let audit = moving_mask_audit(&coarse, &[spec], &grid, c * (1.0 + 1e-12))?;
        if !(audit.all_pass() && audit.continuity_convention) {
            report.mm_failures += 1;
        }

        let rc = max_abs_residual(&entropy_source_identity(&coarse, &grid, &psi)?);
        let rf = max_abs_residual(&entropy_source_identity(&fine, &grid, &psi)?);
        report.min_entropy_ratio = report.min_entropy_ratio.min(rc / rf);
        report.max_entropy_ratio = report.max_entropy_ratio.max(rc / rf);
    }
    Ok(report)
}
