//! Manufactured solutions: a prescribed smooth field and interface path,
//! with the forcing that makes them exact.

use std::f64::consts::PI;

use crate::params::PhysicalParams;
use crate::solver::Forcing;

type Fn2 = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Fn1 = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Forcing `f = gamma rho0 theta_t - K theta_ss` plus an interface impulse
/// cancelling the latent heat released along the prescribed path.
pub struct ManufacturedForcing {
    params: PhysicalParams,
    exact: Fn2,
    d_t: Fn2,
    d_ss: Fn2,
    path: Fn1,
}

impl ManufacturedForcing {
    /// `exact`, its time derivative, its second space derivative, and the
    /// interface path `u(t)`.
    pub fn new(
        params: PhysicalParams,
        exact: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        d_t: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        d_ss: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        path: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { params, exact: Box::new(exact), d_t: Box::new(d_t), d_ss: Box::new(d_ss), path: Box::new(path) }
    }

    /// `amplitude * exp(-t) sin(pi s / L)` with `u(t) = u0 + speed t`.
    pub fn decaying_sine(params: PhysicalParams, amplitude: f64, u0: f64, speed: f64) -> Self {
        let k = PI / params.length();
        Self::new(
            params,
            move |s, t| amplitude * (-t).exp() * (k * s).sin(),
            move |s, t| -amplitude * (-t).exp() * (k * s).sin(),
            move |s, t| -k * k * amplitude * (-t).exp() * (k * s).sin(),
            move |t| u0 + speed * t,
        )
    }

    pub fn exact(&self, s: f64, t: f64) -> f64 {
        (self.exact)(s, t)
    }

    pub fn path(&self, t: f64) -> f64 {
        (self.path)(t)
    }
}

impl Forcing for ManufacturedForcing {
    fn volumetric(&self, s: f64, t: f64) -> f64 {
        self.params.heat_capacity() * (self.d_t)(s, t) - self.params.conductivity() * (self.d_ss)(s, t)
    }

    fn interface_impulse(&self, t0: f64, t1: f64) -> f64 {
        -self.params.alpha() * ((self.path)(t1) - (self.path)(t0))
    }

    fn interface_position(&self, t: f64) -> Option<f64> {
        Some((self.path)(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_solution_needs_no_forcing() {
        let p = PhysicalParams::unit(1.0, 0.0).unwrap();
        let f = ManufacturedForcing::decaying_sine(p, 0.0, 0.4, 0.0);
        for (s, t) in [(0.1, 0.0), (0.5, 0.3), (0.9, 2.0)] {
            assert_eq!(f.volumetric(s, t), 0.0);
        }
        assert_eq!(f.interface_impulse(0.0, 1.0), 0.0);
    }

    #[test]
    fn decaying_sine_forcing_closed_form() {
        let p = PhysicalParams::unit(1.0, 0.0).unwrap();
        let f = ManufacturedForcing::decaying_sine(p, 1.0, 0.3, 0.0);
        for (s, t) in [(0.2, 0.0_f64), (0.5, 0.7), (0.77, 1.3)] {
            let expected = (PI * PI - 1.0) * (-t).exp() * (PI * s).sin();
            assert!((f.volumetric(s, t) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn impulse_cancels_latent_release() {
        let p = PhysicalParams::unit(1.0, 0.0).unwrap().with_alpha(2.0).unwrap();
        let f = ManufacturedForcing::decaying_sine(p, 1.0, 0.3, 0.1);
        assert!((f.interface_impulse(0.0, 0.5) + 2.0 * 0.05).abs() < 1e-15);
        assert_eq!(f.interface_position(1.0), Some(0.4));
    }
}
