//! Free-boundary position, its gate, and the recorded trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExitSide {
    Left,
    Right,
}

/// Interface position `u`, the gate `chi_{u in (0, L)}` and the current time.
///
/// Once `u` reaches `0` or `L` the gate closes for good and the position is
/// frozen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceState {
    position: f64,
    active: bool,
    time: f64,
    length: f64,
}

impl InterfaceState {
    pub fn new(position: f64, length: f64) -> Result<Self> {
        if !(position.is_finite() && position > 0.0 && position < length) {
            return Err(Error::InvalidInitialInterface(position));
        }
        Ok(Self { position, active: true, time: 0.0, length })
    }

    pub fn position(&self) -> f64 {
        self.position
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Position the interface would reach from `self` when moving to
    /// `proposed`: clamped to `[0, L]`, unchanged if the gate is closed.
    pub fn clamp_target(&self, proposed: f64) -> f64 {
        if self.active {
            proposed.clamp(0.0, self.length)
        } else {
            self.position
        }
    }

    /// Commit a move and the new time. Returns the side if this move closes
    /// the gate.
    pub(crate) fn commit(&mut self, target: f64, time: f64) -> Option<ExitSide> {
        self.time = time;
        if !self.active {
            return None;
        }
        self.position = target.clamp(0.0, self.length);
        if self.position <= 0.0 {
            self.position = 0.0;
            self.active = false;
            Some(ExitSide::Left)
        } else if self.position >= self.length {
            self.position = self.length;
            self.active = false;
            Some(ExitSide::Right)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub u: f64,
    /// Rescaled temperature at the interface.
    pub theta_at_u: f64,
    /// Gated velocity at this sample.
    pub v: f64,
    pub active: bool,
}

/// Time-ordered interface samples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InterfaceTrajectory {
    samples: Vec<TrajectorySample>,
}

impl InterfaceTrajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self { samples: Vec::with_capacity(n) }
    }

    /// Append a sample; time must increase strictly and `u` stay in `[0, L]`.
    pub fn push(&mut self, sample: TrajectorySample, length: f64) -> Result<()> {
        if let Some(last) = self.samples.last() {
            // negated so that NaN is rejected too
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(sample.t > last.t) {
                return Err(Error::InvalidValue {
                    key: "trajectory.t".into(),
                    reason: format!("{} does not follow {}", sample.t, last.t),
                });
            }
        }
        if !(0.0..=length).contains(&sample.u) {
            return Err(Error::InvalidValue {
                key: "trajectory.u".into(),
                reason: format!("{} outside [0, {length}]", sample.u),
            });
        }
        self.samples.push(sample);
        Ok(())
    }

    /// Build from raw samples, validating ordering and range.
    pub fn from_samples(samples: Vec<TrajectorySample>, length: f64) -> Result<Self> {
        let mut traj = Self::with_capacity(samples.len());
        for s in samples {
            traj.push(s, length)?;
        }
        Ok(traj)
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.u)
    }

    /// First consecutive pair violating `|du| <= v_max * dt`, with a small
    /// relative slack for rounding. `None` when the discrete H1 bound holds.
    pub fn lipschitz_violation(&self, v_max: f64) -> Option<usize> {
        self.samples.windows(2).position(|w| {
            let du = (w[1].u - w[0].u).abs();
            let bound = v_max * (w[1].t - w[0].t);
            du > bound * (1.0 + 1e-12) + 1e-15
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, u: f64) -> TrajectorySample {
        TrajectorySample { t, u, theta_at_u: 0.0, v: 0.0, active: true }
    }

    #[test]
    fn initial_position_must_be_interior() {
        assert!(InterfaceState::new(0.0, 1.0).is_err());
        assert!(InterfaceState::new(1.0, 1.0).is_err());
        assert!(InterfaceState::new(f64::NAN, 1.0).is_err());
        assert!(InterfaceState::new(0.3, 1.0).is_ok());
    }

    #[test]
    fn gate_is_sticky() {
        let mut st = InterfaceState::new(0.9, 1.0).unwrap();
        assert_eq!(st.commit(1.2, 0.1), Some(ExitSide::Right));
        assert_eq!(st.position(), 1.0);
        assert!(!st.is_active());
        // a move back into the domain is ignored
        assert_eq!(st.clamp_target(0.5), 1.0);
        assert_eq!(st.commit(0.5, 0.2), None);
        assert_eq!(st.position(), 1.0);
        assert_eq!(st.time(), 0.2);
    }

    #[test]
    fn left_exit() {
        let mut st = InterfaceState::new(0.05, 1.0).unwrap();
        assert_eq!(st.commit(-0.01, 0.1), Some(ExitSide::Left));
        assert_eq!(st.position(), 0.0);
    }

    #[test]
    fn trajectory_rejects_non_increasing_time_and_out_of_range() {
        let mut tr = InterfaceTrajectory::new();
        tr.push(sample(0.0, 0.3), 1.0).unwrap();
        assert!(tr.push(sample(0.0, 0.3), 1.0).is_err());
        assert!(tr.push(sample(0.1, 1.1), 1.0).is_err());
        tr.push(sample(0.1, 0.35), 1.0).unwrap();
        assert_eq!(tr.len(), 2);
    }

    #[test]
    fn lipschitz_bound() {
        let tr = InterfaceTrajectory::from_samples(
            vec![sample(0.0, 0.3), sample(0.1, 0.35), sample(0.2, 0.5)],
            1.0,
        )
        .unwrap();
        assert_eq!(tr.lipschitz_violation(1.5), None);
        assert_eq!(tr.lipschitz_violation(1.0), Some(1));
    }
}
