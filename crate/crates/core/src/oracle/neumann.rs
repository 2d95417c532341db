//! Two-phase similarity solution on the whole line.
//!
//! Both phases share `gamma rho0` and `K`. With far-field temperatures
//! `theta_L` (left) and `theta_R` (right) and the interface held at
//! `theta_T`, the interface moves as `u = u0 + 2 lambda sqrt(D t)` where
//! lambda solves
//!
//! ```text
//! gamma rho0 [ (theta_T - theta_L) / (1 + erf l) + (theta_T - theta_R) / erfc l ]
//!     = alpha sqrt(pi) l exp(l^2)
//! ```

use libm::erfc;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// Search interval for the growth coefficient.
pub const LAMBDA_BRACKET: (f64, f64) = (-6.0, 6.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannProblem {
    pub heat_capacity: f64,
    pub alpha: f64,
    pub diffusivity: f64,
    pub theta_t: f64,
    pub theta_left: f64,
    pub theta_right: f64,
}

impl NeumannProblem {
    pub fn new(params: &PhysicalParams, theta_left: f64, theta_right: f64) -> Self {
        Self {
            heat_capacity: params.heat_capacity(),
            alpha: params.alpha(),
            diffusivity: params.diffusivity(),
            theta_t: params.theta_t(),
            theta_left,
            theta_right,
        }
    }

    /// Left-hand side minus right-hand side of the balance at `lambda`.
    pub fn residual(&self, lambda: f64) -> f64 {
        let sensible = self.heat_capacity
            * ((self.theta_t - self.theta_left) / erfc(-lambda)
                + (self.theta_t - self.theta_right) / erfc(lambda));
        sensible - self.alpha * PI.sqrt() * lambda * (lambda * lambda).exp()
    }

    /// Scale of the terms in [`residual`](Self::residual), used to judge it.
    pub fn scale(&self) -> f64 {
        let dl = (self.theta_t - self.theta_left).abs();
        let dr = (self.theta_t - self.theta_right).abs();
        (self.heat_capacity * dl.max(dr)).max(self.alpha).max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannSolution {
    pub problem: NeumannProblem,
    pub lambda: f64,
    pub u0: f64,
    /// Balance residual at `lambda`.
    pub residual: f64,
}

impl NeumannSolution {
    pub fn position(&self, t: f64) -> f64 {
        self.u0 + 2.0 * self.lambda * (self.problem.diffusivity * t.max(0.0)).sqrt()
    }

    pub fn velocity(&self, t: f64) -> f64 {
        self.lambda * (self.problem.diffusivity / t).sqrt()
    }

    /// Physical temperature at `(s, t)`, `t > 0`.
    pub fn temperature(&self, s: f64, t: f64) -> f64 {
        let p = &self.problem;
        let eta = (s - self.u0) / (2.0 * (p.diffusivity * t).sqrt());
        if s <= self.position(t) {
            p.theta_left + (p.theta_t - p.theta_left) * erfc(-eta) / erfc(-self.lambda)
        } else {
            p.theta_right + (p.theta_t - p.theta_right) * erfc(eta) / erfc(self.lambda)
        }
    }

    /// Last time at which the diffusion length `sqrt(D t)` stays below half
    /// the distance from `u0` to the nearer wall of `[0, length]`.
    pub fn validity_horizon(&self, length: f64) -> f64 {
        let half = 0.5 * self.u0.min(length - self.u0);
        half * half / self.problem.diffusivity
    }
}

/// Solve for the growth coefficient by bisection on [`LAMBDA_BRACKET`].
pub fn solve_neumann(params: &PhysicalParams, u0: f64, theta_left: f64, theta_right: f64) -> Result<NeumannSolution> {
    let problem = NeumannProblem::new(params, theta_left, theta_right);
    let (mut lo, mut hi) = LAMBDA_BRACKET;
    let mut f_lo = problem.residual(lo);
    let f_hi = problem.residual(hi);
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
        return Err(Error::NoBracket { lo, hi });
    }
    let lambda = if f_lo == 0.0 {
        lo
    } else if f_hi == 0.0 {
        hi
    } else {
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break if problem.residual(lo).abs() < problem.residual(hi).abs() { lo } else { hi };
            }
            let f_mid = problem.residual(mid);
            if f_mid == 0.0 {
                break mid;
            }
            if f_mid.signum() == f_lo.signum() {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        }
    };
    let residual = problem.residual(lambda);
    if residual.abs() > 1e-12 * problem.scale() {
        return Err(Error::NonConverging(format!("Neumann residual {residual:e} at lambda = {lambda}")));
    }
    Ok(NeumannSolution { problem, lambda, u0, residual })
}
