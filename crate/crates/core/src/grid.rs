//! Radial grids on `[0, R]` and nodal functions living on them.
//!
//! A grid carries two exact measures of `ω r^{N-1} dr`: per-cell volumes (used for
//! gradient terms) and lumped nodal weights, i.e. the measure of each P1 hat function
//! (used for pointwise terms). Both sum to `ω R^N / N`.
//!
//! For `N = 1` the surface constant is taken as `ω = 1`, so the domain is the half
//! interval `[0, R]` with a free (natural) end at `r = 0`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("radius must be positive and finite, got {0}")]
    Radius(f64),
    #[error("dimension must be at least 1")]
    Dimension,
    #[error("a grid needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("nodes must start at 0 and increase strictly (problem at index {0})")]
    Nodes(usize),
    #[error("grid function has {values} values but the grid has {nodes} nodes")]
    Length { values: usize, nodes: usize },
    #[error("grid function lives on a different grid")]
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    dimension: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cell_volumes: Vec<f64>,
    surface: f64,
}

/// Surface measure of the unit sphere in `R^N`, with the half-interval convention
/// `ω = 1` for `N = 1`.
pub fn surface_constant(dimension: usize) -> f64 {
    use std::f64::consts::PI;
    match dimension {
        0 | 1 => 1.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        n => 2.0 * PI / (n - 2) as f64 * surface_constant(n - 2),
    }
}

impl RadialGrid {
    /// Uniform grid with `n` nodes on `[0, radius]`.
    pub fn uniform(radius: f64, dimension: usize, n: usize) -> Result<Self, GridError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GridError::Radius(radius));
        }
        if n < 2 {
            return Err(GridError::TooFewNodes(n));
        }
        let h = radius / (n - 1) as f64;
        let nodes = (0..n)
            .map(|i| if i + 1 == n { radius } else { i as f64 * h })
            .collect();
        Self::from_nodes(nodes, dimension)
    }

    /// Grid from explicit (possibly graded) nodes `0 = r_0 < … < r_{n-1} = R`.
    pub fn from_nodes(nodes: Vec<f64>, dimension: usize) -> Result<Self, GridError> {
        if dimension == 0 {
            return Err(GridError::Dimension);
        }
        if nodes.len() < 2 {
            return Err(GridError::TooFewNodes(nodes.len()));
        }
        if nodes[0] != 0.0 {
            return Err(GridError::Nodes(0));
        }
        for i in 1..nodes.len() {
            if !(nodes[i].is_finite() && nodes[i] > nodes[i - 1]) {
                return Err(GridError::Nodes(i));
            }
        }
        let surface = surface_constant(dimension);
        let n = nodes.len();
        let mut weights = vec![0.0; n];
        let mut cell_volumes = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let (left, right) = hat_moments(nodes[i], nodes[i + 1], dimension);
            weights[i] += surface * left;
            weights[i + 1] += surface * right;
            cell_volumes.push(surface * (left + right));
        }
        Ok(Self {
            dimension,
            nodes,
            weights,
            cell_volumes,
            surface,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn radius(&self) -> f64 {
        *self.nodes.last().expect("grid has nodes")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Lumped nodal weights: `ω ∫ r^{N-1} hat_i(r) dr`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `ω ∫_{cell} r^{N-1} dr` per cell.
    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volumes
    }

    pub fn surface(&self) -> f64 {
        self.surface
    }

    /// `ω R^N / N`, the measure of the domain.
    pub fn measure(&self) -> f64 {
        self.surface * self.radius().powi(self.dimension as i32) / self.dimension as f64
    }

    pub fn cell_width(&self, cell: usize) -> f64 {
        self.nodes[cell + 1] - self.nodes[cell]
    }
}

/// `(∫ r^{N-1} (r1-r)/h dr, ∫ r^{N-1} (r-r0)/h dr)` over `[r0, r1]`.
///
/// Gauss-Legendre in the local coordinate, exact for the polynomial integrands up to
/// `N = 15`; above that the error is far below the rest of the discretization.
fn hat_moments(r0: f64, r1: f64, dimension: usize) -> (f64, f64) {
    const NODES: [f64; 8] = [
        -0.960_289_856_497_536_2,
        -0.796_666_477_413_626_7,
        -0.525_532_409_916_329,
        -0.183_434_642_495_649_8,
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_2,
    ];
    const WEIGHTS: [f64; 8] = [
        0.101_228_536_290_376_26,
        0.222_381_034_453_374_47,
        0.313_706_645_877_887_3,
        0.362_683_783_378_362,
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_47,
        0.101_228_536_290_376_26,
    ];
    let h = r1 - r0;
    if dimension == 1 {
        return (0.5 * h, 0.5 * h);
    }
    let mut left = 0.0;
    let mut right = 0.0;
    for (x, w) in NODES.iter().zip(WEIGHTS.iter()) {
        let t = 0.5 * (x + 1.0);
        let r = r0 + h * t;
        let rho = r.powi(dimension as i32 - 1);
        left += 0.5 * w * rho * (1.0 - t);
        right += 0.5 * w * rho * t;
    }
    (left * h, right * h)
}

/// Nodal values on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Length {
                values: values.len(),
                nodes: grid.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    /// Samples `f(r)` at the grid nodes.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Whether the Dirichlet condition `u(R) = 0` holds exactly.
    pub fn satisfies_dirichlet(&self) -> bool {
        self.values.last().copied() == Some(0.0)
    }

    /// `∫ g(u) dx` with the lumped nodal weights.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(&u, &w)| w * g(u))
            .sum()
    }

    /// Checks that `self` can be used on `grid`.
    pub fn check_grid(&self, grid: &RadialGrid) -> Result<(), GridError> {
        if std::ptr::eq(self.grid.as_ref(), grid) || *self.grid == *grid {
            Ok(())
        } else if self.values.len() != grid.len() {
            Err(GridError::Length {
                values: self.values.len(),
                nodes: grid.len(),
            })
        } else {
            Err(GridError::Mismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_ball_measure() {
        for dim in 1..=6 {
            let grid = RadialGrid::uniform(1.7, dim, 137).unwrap();
            let total: f64 = grid.weights().iter().sum();
            let cells: f64 = grid.cell_volumes().iter().sum();
            let exact = grid.measure();
            assert!((total / exact - 1.0).abs() < 1e-10, "dim {dim}");
            assert!((cells / exact - 1.0).abs() < 1e-10, "dim {dim}");
        }
    }

    #[test]
    fn graded_grid_weights_are_exact() {
        let nodes: Vec<f64> = (0..50).map(|i| (i as f64 / 49.0).powi(2)).collect();
        let grid = RadialGrid::from_nodes(nodes, 3).unwrap();
        let total: f64 = grid.weights().iter().sum();
        assert!((total - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
        assert!(grid.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn surface_constants() {
        use std::f64::consts::PI;
        assert_eq!(surface_constant(1), 1.0);
        assert!((surface_constant(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((surface_constant(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_nodes() {
        assert_eq!(
            RadialGrid::from_nodes(vec![0.0, 0.5, 0.5, 1.0], 1),
            Err(GridError::Nodes(2))
        );
        assert_eq!(
            RadialGrid::uniform(1.0, 1, 1),
            Err(GridError::TooFewNodes(1))
        );
        assert_eq!(
            RadialGrid::uniform(-1.0, 1, 5),
            Err(GridError::Radius(-1.0))
        );
    }

    #[test]
    fn grid_function_length_is_checked() {
        let grid = Arc::new(RadialGrid::uniform(1.0, 1, 5).unwrap());
        assert!(GridFunction::new(grid.clone(), vec![0.0; 4]).is_err());
        let other = RadialGrid::uniform(2.0, 1, 5).unwrap();
        let u = GridFunction::zeros(grid);
        assert_eq!(u.check_grid(&other), Err(GridError::Mismatch));
    }
}
