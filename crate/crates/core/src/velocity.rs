//! Kinetic laws `theta -> v(theta)` for the interface speed.
//!
//! Every shipped law satisfies the sign condition: positive below the
//! transformation temperature, negative above it, zero at it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monotone piecewise-linear law given by `(theta, v)` points with strictly
/// increasing `theta`; held constant beyond the end points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityTable {
    theta: Vec<f64>,
    v: Vec<f64>,
}

impl VelocityTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidTable(format!("need at least 2 points, got {}", points.len())));
        }
        if points.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidTable("non-finite entry".into()));
        }
        if let Some(i) = points.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidTable(format!(
                "theta must increase strictly (row {} -> {})",
                i + 1,
                i + 2
            )));
        }
        let (theta, v) = points.into_iter().unzip();
        Ok(Self { theta, v })
    }

    /// Parse a two-column whitespace or comma separated `theta v` listing.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> =
                line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::Parse { line: lineno + 1, message: "expected two columns".into() });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse { line: lineno + 1, message: e.to_string() })
            };
            match (parse(cols[0]), parse(cols[1])) {
                (Ok(t), Ok(v)) => points.push((t, v)),
                // tolerate a header row
                (Err(_), Err(_)) if points.is_empty() => continue,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        Self::new(points)
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.theta.iter().copied().zip(self.v.iter().copied())
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.theta.len();
        if theta <= self.theta[0] {
            return self.v[0];
        }
        if theta >= self.theta[n - 1] {
            return self.v[n - 1];
        }
        let j = self.theta.partition_point(|&t| t <= theta) - 1;
        let (t0, t1) = (self.theta[j], self.theta[j + 1]);
        let x = (theta - t0) / (t1 - t0);
        self.v[j] + x * (self.v[j + 1] - self.v[j])
    }

    /// Largest segment slope in absolute value.
    pub fn max_slope(&self) -> f64 {
        self.theta
            .windows(2)
            .zip(self.v.windows(2))
            .map(|(t, v)| ((v[1] - v[0]) / (t[1] - t[0])).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_non_increasing(&self) -> bool {
        self.v.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn theta_range(&self) -> (f64, f64) {
        (self.theta[0], self.theta[self.theta.len() - 1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VelocityKind {
    /// `v = k (theta_T - theta)`.
    Linear { k: f64 },
    /// `v = v_max tanh((theta_T - theta) / scale)`.
    Saturated { v_max: f64, scale: f64 },
    Table(VelocityTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityLaw {
    pub kind: VelocityKind,
    /// Transformation temperature in physical units.
    pub theta_t: f64,
}

/// Outcome of a successful sign-condition sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SignReport {
    pub samples: usize,
    pub half_width: f64,
    /// Smallest `(theta_T - theta) * v(theta)` away from `theta_T`.
    pub min_product: f64,
}

impl VelocityLaw {
    pub fn linear(k: f64, theta_t: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::NonPositiveParameter { key: "law.k".into(), value: k });
        }
        Ok(Self { kind: VelocityKind::Linear { k }, theta_t })
    }

    pub fn saturated(v_max: f64, scale: f64, theta_t: f64) -> Result<Self> {
        if !(v_max.is_finite() && v_max > 0.0) {
            return Err(Error::NonPositiveParameter { key: "law.v_max".into(), value: v_max });
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::NonPositiveParameter { key: "law.scale".into(), value: scale });
        }
        Ok(Self { kind: VelocityKind::Saturated { v_max, scale }, theta_t })
    }

    /// Table law without any shape check; see [`VelocityLaw::monotone_table`].
    pub fn table(table: VelocityTable, theta_t: f64) -> Self {
        Self { kind: VelocityKind::Table(table), theta_t }
    }

    /// Table law that must be non-increasing and vanish at `theta_T`, which
    /// makes the sign condition hold everywhere, not just at samples.
    pub fn monotone_table(table: VelocityTable, theta_t: f64) -> Result<Self> {
        if !table.is_non_increasing() {
            return Err(Error::InvalidTable("velocity must be non-increasing in theta".into()));
        }
        let law = Self::table(table, theta_t);
        let at_t = law.eval(theta_t);
        if at_t != 0.0 {
            return Err(Error::SignConditionViolated { theta: theta_t, velocity: at_t });
        }
        Ok(law)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let under = self.theta_t - theta;
        match &self.kind {
            VelocityKind::Linear { k } => k * under,
            VelocityKind::Saturated { v_max, scale } => v_max * (under / scale).tanh(),
            VelocityKind::Table(t) => t.eval(theta),
        }
    }

    pub fn lipschitz_constant(&self) -> f64 {
        match &self.kind {
            VelocityKind::Linear { k } => *k,
            VelocityKind::Saturated { v_max, scale } => v_max / scale,
            VelocityKind::Table(t) => t.max_slope(),
        }
    }

    /// Global speed cap, when the law has one.
    pub fn v_max(&self) -> Option<f64> {
        match &self.kind {
            VelocityKind::Linear { .. } => None,
            VelocityKind::Saturated { v_max, .. } => Some(*v_max),
            VelocityKind::Table(t) => Some(t.v.iter().map(|v| v.abs()).fold(0.0, f64::max)),
        }
    }

    /// `max |v|` over physical temperatures in `[lo, hi]`, sampled densely
    /// with both end points included.
    pub fn max_abs_on(&self, lo: f64, hi: f64) -> f64 {
        let m = 1001;
        (0..m)
            .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
            .chain([lo, hi])
            .map(|t| self.eval(t).abs())
            .fold(0.0, f64::max)
    }

    /// `min |v|` over physical temperatures in `[lo, hi]`, sampled densely.
    pub fn min_abs_on(&self, lo: f64, hi: f64) -> f64 {
        let m = 1001;
        (0..m)
            .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
            .chain([lo, hi])
            .map(|t| self.eval(t).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Default sampling half-width for [`validate_sign_condition`]: the
    /// table span for table laws, otherwise a few kinetic scales.
    ///
    /// [`validate_sign_condition`]: Self::validate_sign_condition
    pub fn default_half_width(&self) -> f64 {
        match &self.kind {
            VelocityKind::Linear { .. } => 1.0,
            VelocityKind::Saturated { scale, .. } => 10.0 * scale,
            VelocityKind::Table(t) => {
                let (lo, hi) = t.theta_range();
                (self.theta_t - lo).abs().max((hi - self.theta_t).abs())
            }
        }
    }

    /// Sample `theta_T + x` for `m` evenly spaced `x` in `[-half_width,
    /// half_width]` and check the sign pattern. The centre sample is exactly
    /// `theta_T` when `m` is odd.
    pub fn validate_sign_condition(&self, m: usize, half_width: f64) -> Result<SignReport> {
        if m < 3 {
            return Err(Error::InvalidValue { key: "samples".into(), reason: format!("need >= 3, got {m}") });
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::NonPositiveParameter { key: "half_width".into(), value: half_width });
        }
        let denom = (m - 1) as f64;
        let mut min_product = f64::INFINITY;
        for i in 0..m {
            let x = half_width * (2.0 * i as f64 - denom) / denom;
            let theta = self.theta_t + x;
            let v = self.eval(theta);
            let ok = if x < 0.0 {
                v > 0.0
            } else if x > 0.0 {
                v < 0.0
            } else {
                v == 0.0
            };
            if !ok || !v.is_finite() {
                return Err(Error::SignConditionViolated { theta, velocity: v });
            }
            if x != 0.0 {
                min_product = min_product.min(-x * v);
            }
        }
        Ok(SignReport { samples: m, half_width, min_product })
    }
}
