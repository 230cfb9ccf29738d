//! Connected components of every complex `X_{r,t}` on the sampled grid.

use super::distance::{DistanceMatrix, FilterValues, GridScales};
use super::grid::IntGrid;
use super::koszul::GradedModule;
use super::union_find::UnionFind;
use crate::error::{Error, Result};

pub(crate) const ABSENT: u32 = u32::MAX;

/// Component labelling at one grid cell.
///
/// Labels are dense, numbered by the lowest vertex of each component, so
/// `reps[c]` is that lowest vertex.
#[derive(Debug, Clone)]
struct Cell {
    labels: Vec<u32>,
    reps: Vec<u32>,
}

/// Component labellings for all cells of the grid.
#[derive(Debug, Clone)]
pub struct ComponentGrid {
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,
}

fn check_inputs(dmat: &DistanceMatrix, rho: &FilterValues) -> Result<()> {
    if rho.rho.len() != dmat.len() {
        return Err(Error::shape(format!(
            "{} filter values for {} points",
            rho.rho.len(),
            dmat.len()
        )));
    }
    Ok(())
}

impl ComponentGrid {
    /// Sweep each codensity column with a union-find over edges in
    /// increasing length, snapshotting at every sampled Rips scale.
    pub fn compute(dmat: &DistanceMatrix, rho: &FilterValues, scales: &GridScales) -> Result<Self> {
        check_inputs(dmat, rho)?;
        let n = dmat.len();
        let (rows, cols) = (scales.rows(), scales.cols());
        let r_max = *scales.r_values.last().unwrap();

        let mut edges: Vec<(f64, u32, u32)> = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                let d = dmat.get(u, v);
                if d <= r_max {
                    edges.push((d, u as u32, v as u32));
                }
            }
        }
        edges.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut cells = vec![
            Cell {
                labels: Vec::new(),
                reps: Vec::new()
            };
            rows * cols
        ];
        let mut root_label = vec![ABSENT; n];
        for (j, &t) in scales.t_values.iter().enumerate() {
            let included: Vec<bool> = rho.rho.iter().map(|&p| p <= t).collect();
            let mut uf = UnionFind::new(n);
            let mut next = 0;
            for (i, &r) in scales.r_values.iter().enumerate() {
                while next < edges.len() && edges[next].0 <= r {
                    let (_, u, v) = edges[next];
                    if included[u as usize] && included[v as usize] {
                        uf.union(u as usize, v as usize);
                    }
                    next += 1;
                }
                let mut labels = vec![ABSENT; n];
                let mut reps = Vec::new();
                root_label.fill(ABSENT);
                for v in (0..n).filter(|&v| included[v]) {
                    let root = uf.find(v);
                    if root_label[root] == ABSENT {
                        root_label[root] = reps.len() as u32;
                        reps.push(v as u32);
                    }
                    labels[v] = root_label[root];
                }
                cells[i * cols + j] = Cell { labels, reps };
            }
        }
        Ok(Self { rows, cols, cells })
    }

    fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[i * self.cols + j]
    }

    /// Number of components per cell.
    pub fn hilbert(&self) -> IntGrid {
        let data = self.cells.iter().map(|c| c.reps.len() as u32).collect();
        IntGrid::from_vec(self.rows, self.cols, data)
    }

    /// The degree-0 module: one basis vector per component, structure maps
    /// sending each component to the component containing it one step up.
    pub fn module(&self) -> GradedModule {
        let mut m = GradedModule::zero(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let here = self.cell(i, j);
                m.set_dim(i, j, here.reps.len());
                let push = |to: &Cell| -> Vec<Option<u32>> {
                    here.reps.iter().map(|&v| Some(to.labels[v as usize])).collect()
                };
                if i + 1 < self.rows {
                    m.set_map_r(i, j, push(self.cell(i + 1, j)));
                }
                if j + 1 < self.cols {
                    m.set_map_t(i, j, push(self.cell(i, j + 1)));
                }
            }
        }
        m
    }
}

/// Number of connected components of `X_{r_i, t_j}` at every grid cell.
pub fn hilbert_h0(dmat: &DistanceMatrix, rho: &FilterValues, scales: &GridScales) -> Result<IntGrid> {
    Ok(ComponentGrid::compute(dmat, rho, scales)?.hilbert())
}
