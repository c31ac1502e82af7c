//! Node and CP placement.

use rand::Rng;

use super::config::{Scenario, SimulationConfig};
use crate::cellfree::CellFreeLayout;
use crate::error::Result;

/// Positions of one trial, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub nodes: Vec<(f64, f64)>,
    pub cps: Vec<(f64, f64)>,
    pub antennas_per_cp: usize,
}

impl Topology {
    pub fn horizontal_distance(&self, node: usize, cp: usize) -> f64 {
        let (nx, ny) = self.nodes[node];
        let (cx, cy) = self.cps[cp];
        (nx - cx).hypot(ny - cy)
    }
}

/// Area-uniform point in a disk of the given radius centered at the origin.
pub fn uniform_in_disk<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> (f64, f64) {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    (r * phi.cos(), r * phi.sin())
}

/// Uniform point in the square `[-side/2, side/2]²`.
pub fn uniform_in_square<R: Rng + ?Sized>(side: f64, rng: &mut R) -> (f64, f64) {
    let x = (rng.random::<f64>() - 0.5) * side;
    let y = (rng.random::<f64>() - 0.5) * side;
    (x, y)
}

/// Cellular: one CP at the center, nodes uniform in the disk of radius
/// `R_c`. Cell-free: CPs on a square grid, nodes uniform in the square.
pub fn sample_topology<R: Rng + ?Sized>(config: &SimulationConfig, rng: &mut R) -> Result<Topology> {
    let k = config.function.n_nodes();
    match &config.scenario {
        Scenario::Cellular { radius_m, n_antennas } => Ok(Topology {
            nodes: (0..k).map(|_| uniform_in_disk(*radius_m, rng)).collect(),
            cps: vec![(0.0, 0.0)],
            antennas_per_cp: *n_antennas,
        }),
        Scenario::CellFree {
            area_m,
            n_cps,
            total_antennas,
            ..
        } => {
            let layout = CellFreeLayout::square_grid(*area_m, *n_cps, *total_antennas)?;
            Ok(Topology {
                nodes: (0..k).map(|_| uniform_in_square(*area_m, rng)).collect(),
                cps: layout.cp_positions,
                antennas_per_cp: layout.antennas_per_cp,
            })
        }
    }
}
