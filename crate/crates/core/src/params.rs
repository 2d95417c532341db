//! Material and geometry constants.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Keys accepted by [`make_params`], in canonical order.
pub const PARAM_KEYS: [&str; 7] = ["rho0", "gamma", "alpha", "K", "theta_T", "theta_B", "L"];

/// Physical constants of the rod: density, specific heat, latent-heat
/// coefficient, conductivity, transformation and boundary temperatures,
/// and length.
///
/// All solver internals work with the rescaled temperature
/// `theta_bar = theta - theta_B`, for which the transformation temperature
/// becomes [`theta_c`](Self::theta_c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    rho0: f64,
    gamma: f64,
    alpha: f64,
    conductivity: f64,
    theta_t: f64,
    theta_b: f64,
    length: f64,
}

impl PhysicalParams {
    pub fn new(
        rho0: f64,
        gamma: f64,
        alpha: f64,
        conductivity: f64,
        theta_t: f64,
        theta_b: f64,
        length: f64,
    ) -> Result<Self> {
        let checks = [
            ("rho0", rho0, false),
            ("gamma", gamma, false),
            ("alpha", alpha, true),
            ("K", conductivity, false),
            ("theta_T", theta_t, false),
            ("theta_B", theta_b, true),
            ("L", length, false),
        ];
        for (key, value, zero_ok) in checks {
            if !value.is_finite() {
                return Err(Error::InvalidValue {
                    key: key.to_string(),
                    reason: format!("{value} is not finite"),
                });
            }
            let ok = if zero_ok { value >= 0.0 } else { value > 0.0 };
            if !ok {
                return Err(Error::NonPositiveParameter { key: key.to_string(), value });
            }
        }
        Ok(Self { rho0, gamma, alpha, conductivity, theta_t, theta_b, length })
    }

    /// Unit density, specific heat, latent heat, conductivity and length
    /// with the given temperatures.
    pub fn unit(theta_t: f64, theta_b: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, 1.0, theta_t, theta_b, 1.0)
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn conductivity(&self) -> f64 {
        self.conductivity
    }

    pub fn theta_t(&self) -> f64 {
        self.theta_t
    }

    pub fn theta_b(&self) -> f64 {
        self.theta_b
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Rescaled transformation temperature `theta_T - theta_B`.
    pub fn theta_c(&self) -> f64 {
        self.theta_t - self.theta_b
    }

    /// Volumetric heat capacity `gamma * rho0`.
    pub fn heat_capacity(&self) -> f64 {
        self.gamma * self.rho0
    }

    /// Thermal diffusivity `K / (gamma * rho0)`.
    pub fn diffusivity(&self) -> f64 {
        self.conductivity / self.heat_capacity()
    }

    /// Decay rate of the first Dirichlet mode of the plain heat equation.
    pub fn first_eigenvalue(&self) -> f64 {
        let pi = std::f64::consts::PI;
        self.diffusivity() * pi * pi / (self.length * self.length)
    }

    /// Band `[min(0, theta_c), max(0, theta_c)]` that bounds the rescaled
    /// temperature when the initial data starts inside it.
    pub fn band(&self) -> (f64, f64) {
        let c = self.theta_c();
        (c.min(0.0), c.max(0.0))
    }

    /// Replace the boundary temperature, keeping everything else.
    pub fn with_theta_b(&self, theta_b: f64) -> Result<Self> {
        Self::new(
            self.rho0,
            self.gamma,
            self.alpha,
            self.conductivity,
            self.theta_t,
            theta_b,
            self.length,
        )
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(
            self.rho0,
            self.gamma,
            alpha,
            self.conductivity,
            self.theta_t,
            self.theta_b,
            self.length,
        )
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        PARAM_KEYS
            .iter()
            .zip([
                self.rho0,
                self.gamma,
                self.alpha,
                self.conductivity,
                self.theta_t,
                self.theta_b,
                self.length,
            ])
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }
}

/// Build validated parameters from a raw key-value map.
pub fn make_params(raw: &BTreeMap<String, f64>) -> Result<PhysicalParams> {
    if let Some(unknown) = raw.keys().find(|k| !PARAM_KEYS.contains(&k.as_str())) {
        return Err(Error::UnknownKey(unknown.clone()));
    }
    let get = |key: &str| raw.get(key).copied().ok_or_else(|| Error::MissingKey(key.to_string()));
    PhysicalParams::new(
        get("rho0")?,
        get("gamma")?,
        get("alpha")?,
        get("K")?,
        get("theta_T")?,
        get("theta_B")?,
        get("L")?,
    )
}
