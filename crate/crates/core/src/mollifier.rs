//! Smoothed Dirac masses used by the regularized source mode.
//!
//! A [`MollifiedDirac`] is a non-negative, symmetric, compactly supported
//! kernel of half-width `epsilon` centred at `c`. On a grid its nodal weights
//! are renormalized so that `sum(w_i) * ds == 1`; support hanging over a
//! domain edge is reflected back inside, and whatever would land on a
//! Dirichlet node goes to its interior neighbour.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelProfile {
    /// `exp(-1 / (1 - x^2))` on `|x| < 1`.
    #[default]
    Bump,
    /// `(1 + cos(pi x)) / 2` on `|x| < 1`.
    Cosine,
}

impl KernelProfile {
    /// Unit-mass kernel on `[-1, 1]`.
    pub fn unit_density(self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        match self {
            KernelProfile::Bump => (-1.0 / (1.0 - x * x)).exp() / bump_mass(),
            KernelProfile::Cosine => 0.5 * (1.0 + (PI * x).cos()),
        }
    }
}

/// Mass of the unnormalized bump. The integrand is flat to all orders at
/// `+-1`, so the trapezoidal rule converges spectrally.
fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let n = 8192;
        let h = 2.0 / n as f64;
        (1..n)
            .map(|i| {
                let x = -1.0 + i as f64 * h;
                (-1.0 / (1.0 - x * x)).exp()
            })
            .sum::<f64>()
            * h
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifiedDirac {
    pub epsilon: f64,
    pub center: f64,
    pub profile: KernelProfile,
}

impl MollifiedDirac {
    pub fn new(epsilon: f64, center: f64, profile: KernelProfile) -> Self {
        Self { epsilon, center, profile }
    }

    /// Continuous density `delta_eps(s)`.
    pub fn density(&self, s: f64) -> f64 {
        self.profile.unit_density((s - self.center) / self.epsilon) / self.epsilon
    }

    fn check(&self, grid: &Grid1D) -> Result<()> {
        let min = 2.0 * grid.ds();
        if !(self.epsilon.is_finite() && self.epsilon >= min * (1.0 - 1e-12)) {
            return Err(Error::UnresolvableWidth { epsilon: self.epsilon, min });
        }
        if !(0.0..=grid.length()).contains(&self.center) {
            return Err(Error::InvalidValue {
                key: "mollifier.center".into(),
                reason: format!("{} outside [0, {}]", self.center, grid.length()),
            });
        }
        Ok(())
    }

    /// Non-zero nodal weights as `(node, w)` pairs, sorted by node.
    pub fn sparse_weights(&self, grid: &Grid1D) -> Result<Vec<(usize, f64)>> {
        self.check(grid)?;
        let n = grid.n_cells() as i64;
        let ds = grid.ds();
        let centre = self.center / ds;
        let reach = self.epsilon / ds;
        let lo = (centre - reach).floor() as i64;
        let hi = (centre + reach).ceil() as i64;

        let mut acc: Vec<(usize, f64)> = Vec::with_capacity((hi - lo + 1) as usize);
        for virt in lo..=hi {
            // offset from the centre in cells keeps the weights symmetric
            let w = self.profile.unit_density((virt as f64 - centre) / reach);
            if w <= 0.0 {
                continue;
            }
            let mut idx = virt;
            if idx < 0 {
                idx = -idx;
            } else if idx > n {
                idx = 2 * n - idx;
            }
            let idx = idx.clamp(1, n - 1) as usize;
            match acc.iter_mut().find(|(i, _)| *i == idx) {
                Some(slot) => slot.1 += w,
                None => acc.push((idx, w)),
            }
        }
        acc.sort_by_key(|(i, _)| *i);
        let mass: f64 = acc.iter().map(|(_, w)| w).sum::<f64>() * ds;
        for (_, w) in acc.iter_mut() {
            *w /= mass;
        }
        Ok(acc)
    }

    /// Dense nodal weight vector with `sum(w) * ds == 1`.
    pub fn evaluate_on_grid(&self, grid: &Grid1D) -> Result<Vec<f64>> {
        let mut dense = vec![0.0; grid.n_nodes()];
        for (i, w) in self.sparse_weights(grid)? {
            dense[i] = w;
        }
        Ok(dense)
    }

    /// Discrete pairing `sum(w_i psi_i) ds`; tends to `psi(c)` as `epsilon -> 0`.
    pub fn weak_star_consistency(&self, grid: &Grid1D, psi: &[f64]) -> Result<f64> {
        if psi.len() != grid.n_nodes() {
            return Err(Error::FieldSizeMismatch { expected: grid.n_nodes(), got: psi.len() });
        }
        Ok(self.sparse_weights(grid)?.iter().map(|(i, w)| w * psi[*i]).sum::<f64>() * grid.ds())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(n, 1.0).unwrap()
    }

    #[test]
    fn unit_mass_on_grid() {
        for profile in [KernelProfile::Bump, KernelProfile::Cosine] {
            for n in [20, 64, 100, 1000] {
                let g = grid(n);
                let d = MollifiedDirac::new(0.1, 0.5, profile);
                let w = d.evaluate_on_grid(&g).unwrap();
                let mass: f64 = w.iter().sum::<f64>() * g.ds();
                assert!((mass - 1.0).abs() < 1e-14, "{profile:?} n={n} mass={mass}");
                assert!(w.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn symmetric_about_centre() {
        let g = grid(100);
        let w = MollifiedDirac::new(0.1, 0.5, KernelProfile::Bump).evaluate_on_grid(&g).unwrap();
        for k in 0..=12 {
            assert_eq!(w[50 + k], w[50 - k]);
        }
    }

    #[test]
    fn compact_support() {
        let g = grid(100);
        let w = MollifiedDirac::new(0.1, 0.5, KernelProfile::Cosine).evaluate_on_grid(&g).unwrap();
        assert_eq!(w[75], 0.0);
        for (i, wi) in w.iter().enumerate() {
            if (g.node(i) - 0.5).abs() >= 0.1 - 1e-12 {
                assert_eq!(*wi, 0.0, "node {i}");
            }
        }
    }

    #[test]
    fn continuous_density_has_unit_mass() {
        for profile in [KernelProfile::Bump, KernelProfile::Cosine] {
            let d = MollifiedDirac::new(0.2, 0.4, profile);
            let n = 200_000;
            let h = 0.4 / n as f64;
            let mass: f64 = (0..n).map(|i| d.density(0.2 + (i as f64 + 0.5) * h)).sum::<f64>() * h;
            assert!((mass - 1.0).abs() < 1e-9, "{profile:?}: {mass}");
        }
    }

    #[test]
    fn unresolvable_width() {
        let g = grid(100);
        let d = MollifiedDirac::new(0.015, 0.5, KernelProfile::Bump);
        assert!(matches!(d.evaluate_on_grid(&g), Err(Error::UnresolvableWidth { .. })));
        assert!(MollifiedDirac::new(0.02, 0.5, KernelProfile::Bump).evaluate_on_grid(&g).is_ok());
    }

    #[test]
    fn overhang_is_folded_inside() {
        let g = grid(50);
        for c in [0.0, 0.01, 0.03, 0.97, 1.0] {
            let w = MollifiedDirac::new(0.08, c, KernelProfile::Bump).evaluate_on_grid(&g).unwrap();
            assert_eq!(w[0], 0.0);
            assert_eq!(w[50], 0.0);
            let mass: f64 = w.iter().sum::<f64>() * g.ds();
            assert!((mass - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pairing_with_constants_and_linear() {
        let g = grid(200);
        let ones = vec![1.0; 201];
        let lin: Vec<f64> = g.nodes().collect();
        for eps in [0.2, 0.1, 0.05, 0.02] {
            let d = MollifiedDirac::new(eps, 0.5, KernelProfile::Bump);
            assert!((d.weak_star_consistency(&g, &ones).unwrap() - 1.0).abs() < 1e-14);
            assert!((d.weak_star_consistency(&g, &lin).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn second_moment_error_is_second_order() {
        // psi = s^2: the pairing error is the kernel's second moment, eps^2 m2
        let c = 0.5;
        let errors: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&eps| {
                let d = MollifiedDirac::new(eps, c, KernelProfile::Bump);
                let n = 1_000_000;
                let h = 2.0 * eps / n as f64;
                let lo = c - eps;
                let pairing: f64 = (0..n)
                    .map(|i| {
                        let s = lo + (i as f64 + 0.5) * h;
                        d.density(s) * s * s
                    })
                    .sum::<f64>()
                    * h;
                (pairing - c * c).abs()
            })
            .collect();
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "order {order}");
        }
    }
}
