//! Cell grids and the per-road density state.

use crate::error::{Error, Result};
use crate::network::Network;

/// Uniform grid over every road. Vertices sit on cell interfaces, so each
/// road is an integer number of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dx: f64,
    /// Cells per look-ahead window; the kernel range is `n_eta * dx`.
    pub n_eta: usize,
    /// Cell counts aligned with the network's road order.
    pub cells: Vec<usize>,
}

impl GridSpec {
    pub fn build(net: &Network, dx: f64, n_eta: usize) -> Result<GridSpec> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::Config(format!("dx must be positive, got {dx}")));
        }
        let mut cells = Vec::with_capacity(net.roads.len());
        for road in &net.roads {
            let ratio = road.length() / dx;
            let rounded = ratio.round();
            if rounded < 1.0 || (ratio - rounded).abs() > 1e-6 * ratio.max(1.0) {
                return Err(Error::Config(format!(
                    "road {}: length {} is not an integer multiple of dx = {dx}",
                    road.id,
                    road.length()
                )));
            }
            cells.push(rounded as usize);
        }
        Ok(GridSpec { dx, n_eta, cells })
    }

    /// Midpoint of cell `i` on the given road, measured from the road start.
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }
}

/// Cell-averaged densities for every road at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub time: f64,
    pub rho: Vec<Vec<f64>>,
}

impl State {
    pub fn zero(grid: &GridSpec) -> State {
        State {
            time: 0.0,
            rho: grid.cells.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn max_density(&self) -> f64 {
        self.rho
            .iter()
            .flat_map(|r| r.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn total_mass(&self, dx: f64) -> f64 {
        self.rho
            .iter()
            .map(|r| r.iter().sum::<f64>())
            .sum::<f64>()
            * dx
    }
}
