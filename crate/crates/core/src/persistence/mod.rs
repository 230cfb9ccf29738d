//! Degree-0 invariants of the Rips/codensity bifiltration
//! `X_{r,t} = Rips_r { x : rho(x) <= t }` sampled on a finite grid.
//!
//! Coefficients are GF(2). The Hilbert function counts connected components
//! per cell; the Betti numbers are the Koszul homology dimensions of the
//! component module (see [`koszul`]).

mod components;
mod distance;
mod grid;
pub mod grid_format;
pub mod koszul;
mod union_find;

pub use components::{hilbert_h0, ComponentGrid};
pub use distance::{codensity, grid_scales, pairwise_distances, DistanceMatrix, FilterValues, GridScales};
pub use grid::IntGrid;
pub use koszul::{koszul_betti, BettiGrids, GradedModule};
pub use union_find::UnionFind;

use crate::error::{Error, Result};
use crate::mesh_io::PointCloud;

/// `xi0, xi1, xi2` at every cell of the grid.
pub fn betti_h0(dmat: &DistanceMatrix, rho: &FilterValues, scales: &GridScales) -> Result<BettiGrids> {
    Ok(koszul_betti(&ComponentGrid::compute(dmat, rho, scales)?.module()))
}

/// Hilbert function and Betti numbers over a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BifiltrationInvariants {
    pub hilb: IntGrid,
    pub xi0: IntGrid,
    pub xi1: IntGrid,
    pub xi2: IntGrid,
    pub scales: GridScales,
}

impl BifiltrationInvariants {
    pub const CHANNELS: usize = 4;

    /// Channels in serialization order: Hilbert, xi0, xi1, xi2.
    pub fn channels(&self) -> [&IntGrid; 4] {
        [&self.hilb, &self.xi0, &self.xi1, &self.xi2]
    }

    pub fn rows(&self) -> usize {
        self.scales.rows()
    }

    pub fn cols(&self) -> usize {
        self.scales.cols()
    }

    /// First cell where `xi0 - xi1 + xi2` differs from the second finite
    /// difference of the Hilbert function, if any.
    pub fn euler_violation(&self) -> Option<(usize, usize)> {
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                let (ii, jj) = (i as isize, j as isize);
                let h = |a, b| self.hilb.get_or_zero(a, b) as i64;
                let dd = h(ii, jj) - h(ii - 1, jj) - h(ii, jj - 1) + h(ii - 1, jj - 1);
                let euler = self.xi0.get(i, j) as i64 - self.xi1.get(i, j) as i64 + self.xi2.get(i, j) as i64;
                if dd != euler {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

/// Distances, codensity, grid and both invariants for one cloud.
pub fn featurize(cloud: &PointCloud, k: usize, bins_r: usize, bins_t: usize) -> Result<BifiltrationInvariants> {
    if cloud.len() <= k {
        return Err(Error::invalid(format!(
            "k must be < point count (k = {k}, points = {})",
            cloud.len()
        )));
    }
    let dmat = pairwise_distances(cloud)?;
    let rho = codensity(&dmat, k)?;
    let scales = grid_scales(&dmat, &rho, bins_r, bins_t)?;
    let components = ComponentGrid::compute(&dmat, &rho, &scales)?;
    let hilb = components.hilbert();
    let BettiGrids { xi0, xi1, xi2 } = koszul_betti(&components.module());
    Ok(BifiltrationInvariants {
        hilb,
        xi0,
        xi1,
        xi2,
        scales,
    })
}
