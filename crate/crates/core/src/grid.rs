//! Uniform mesh and nodal temperature fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// Physical boundary values may differ from `theta_B` by at most this much.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Uniform grid on `[0, L]` with `n_cells + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n_cells: usize,
    length: f64,
    ds: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize, length: f64) -> Result<Self> {
        if n_cells < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4 cells, got {n_cells}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        Ok(Self { n_cells, length, ds: length / n_cells as f64 })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Position of node `i`; the last node sits exactly at `L`.
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.length
        } else {
            i as f64 * self.ds
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(move |i| self.node(i))
    }

    /// Index `j` of the cell `[s_j, s_{j+1}]` containing `x`, together with
    /// the fractional offset `xi` in `[0, 1]`. Positions outside the domain
    /// are clamped.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let x = x.clamp(0.0, self.length);
        let mut scaled = x / self.ds;
        // positions produced by `node` land exactly on their node
        let nearest = scaled.round();
        if (scaled - nearest).abs() <= 4.0 * f64::EPSILON * nearest.max(1.0) {
            scaled = nearest;
        }
        let j = (scaled.floor() as usize).min(self.n_cells - 1);
        let xi = (scaled - j as f64).clamp(0.0, 1.0);
        (j, xi)
    }

    /// Node closest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        let (j, xi) = self.locate(x);
        if xi < 0.5 {
            j
        } else {
            j + 1
        }
    }
}

/// Nodal rescaled temperature with homogeneous Dirichlet boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    grid: Grid1D,
    values: Vec<f64>,
}

impl TemperatureField {
    pub fn zeros(grid: Grid1D) -> Self {
        Self { grid, values: vec![0.0; grid.n_nodes()] }
    }

    /// Takes ownership of nodal values. Boundary entries must already vanish
    /// to within [`BOUNDARY_TOLERANCE`]; they are then set to exactly zero.
    pub fn from_values(grid: Grid1D, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::FieldSizeMismatch { expected: grid.n_nodes(), got: values.len() });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue {
                key: format!("theta_bar[{node}]"),
                reason: "not finite".into(),
            });
        }
        let last = grid.n_cells();
        for node in [0, last] {
            if values[node].abs() >= BOUNDARY_TOLERANCE {
                return Err(Error::BoundaryMismatch { node, value: values[node], expected: 0.0 });
            }
            values[node] = 0.0;
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(grid, grid.nodes().map(f).collect())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interior nodes only; the solver writes through this.
    pub(crate) fn interior_mut(&mut self) -> &mut [f64] {
        let n = self.grid.n_cells();
        &mut self.values[1..n]
    }

    /// Linear interpolation between the nodes bracketing `x`.
    pub fn interpolate(&self, x: f64) -> f64 {
        let (j, xi) = self.grid.locate(x);
        if xi == 0.0 {
            return self.values[j];
        }
        if xi == 1.0 {
            return self.values[j + 1];
        }
        (1.0 - xi) * self.values[j] + xi * self.values[j + 1]
    }

    /// Trapezoidal integral; boundary nodes are zero so this is `ds * sum`.
    pub fn integral(&self) -> f64 {
        self.grid.ds() * self.values.iter().sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.ds() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Physical temperature `theta_bar + theta_B` at every node.
    pub fn to_physical(&self, params: &PhysicalParams) -> Vec<f64> {
        self.values.iter().map(|v| v + params.theta_b()).collect()
    }
}

/// Convert a physical nodal temperature to the rescaled field.
pub fn rescale_temperature(
    grid: Grid1D,
    theta_physical: &[f64],
    params: &PhysicalParams,
) -> Result<TemperatureField> {
    if theta_physical.len() != grid.n_nodes() {
        return Err(Error::FieldSizeMismatch { expected: grid.n_nodes(), got: theta_physical.len() });
    }
    let last = grid.n_cells();
    for node in [0, last] {
        if (theta_physical[node] - params.theta_b()).abs() >= BOUNDARY_TOLERANCE {
            return Err(Error::BoundaryMismatch {
                node,
                value: theta_physical[node],
                expected: params.theta_b(),
            });
        }
    }
    let rescaled = theta_physical.iter().map(|t| t - params.theta_b()).collect();
    TemperatureField::from_values(grid, rescaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_rejects_too_few_cells() {
        assert!(matches!(Grid1D::new(3, 1.0), Err(Error::InvalidGrid(_))));
        assert!(Grid1D::new(4, 1.0).is_ok());
    }

    #[test]
    fn grid_spacing_and_endpoints() {
        for n in [4, 7, 100, 513, 4096] {
            let g = Grid1D::new(n, 0.37).unwrap();
            assert!((g.ds() * n as f64 - 0.37).abs() <= 4.0 * f64::EPSILON);
            assert_eq!(g.node(0), 0.0);
            assert_eq!(g.node(n), 0.37);
            let nodes: Vec<f64> = g.nodes().collect();
            assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn constant_boundary_temperature_rescales_to_zero() {
        let p = PhysicalParams::unit(1.0, 0.5).unwrap();
        let g = Grid1D::new(16, 1.0).unwrap();
        let f = rescale_temperature(g, &[0.5; 17], &p).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sine_profile_midpoint() {
        let p = PhysicalParams::unit(1.0, 0.5).unwrap();
        let g = Grid1D::new(16, 1.0).unwrap();
        let phys: Vec<f64> = g.nodes().map(|s| 0.5 + 0.5 * (PI * s).sin()).collect();
        let f = rescale_temperature(g, &phys, &p).unwrap();
        assert!((f.values()[8] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn boundary_mismatch_is_reported() {
        let p = PhysicalParams::unit(1.0, 0.5).unwrap();
        let g = Grid1D::new(8, 1.0).unwrap();
        let mut phys = vec![0.5; 9];
        phys[8] = 1.5;
        assert!(matches!(
            rescale_temperature(g, &phys, &p),
            Err(Error::BoundaryMismatch { node: 8, .. })
        ));
    }

    #[test]
    fn rescale_round_trip() {
        let p = PhysicalParams::unit(1.0, 0.25).unwrap();
        let g = Grid1D::new(32, 1.0).unwrap();
        let phys: Vec<f64> = g.nodes().map(|s| 0.25 + 0.7 * (PI * s).sin().powi(2)).collect();
        let back = rescale_temperature(g, &phys, &p).unwrap().to_physical(&p);
        for (a, b) in phys.iter().zip(&back) {
            assert!((a - b).abs() <= 2.0 * f64::EPSILON);
        }
    }

    #[test]
    fn interpolation_exact_at_nodes_and_for_linear_data() {
        let g = Grid1D::new(10, 1.0).unwrap();
        let f = TemperatureField::from_fn(g, |s| s * (1.0 - s)).unwrap();
        for i in 0..=10 {
            assert_eq!(f.interpolate(g.node(i)), f.values()[i]);
        }
        // piecewise-linear reproduction inside one cell
        let x = 0.43;
        let (j, _) = g.locate(x);
        let (a, b) = (f.values()[j], f.values()[j + 1]);
        let expected = a + (b - a) * (x - g.node(j)) / g.ds();
        assert!((f.interpolate(x) - expected).abs() < 1e-15);
    }

    #[test]
    fn locate_clamps_and_nearest_node() {
        let g = Grid1D::new(8, 1.0).unwrap();
        assert_eq!(g.locate(-1.0), (0, 0.0));
        assert_eq!(g.locate(1.0), (7, 1.0));
        assert_eq!(g.nearest_node(0.3), 2);
        assert_eq!(g.nearest_node(0.32), 3);
    }
}
