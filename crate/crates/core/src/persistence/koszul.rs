//! Multi-graded Betti numbers of a two-parameter module on a finite grid.
//!
//! At each grading `a` the Koszul complex over GF(2) is
//!
//! ```text
//! 0 -> M(a-e1-e2) --d2--> M(a-e1) (+) M(a-e2) --d1--> M(a) -> 0
//! ```
//!
//! with `d2(v) = (v pushed along t, v pushed along r)` and `d1(u, w) = u + w`
//! pushed into `M(a)`; signs vanish in characteristic 2. Gradings below the
//! grid contribute the zero space. Then `xi0 = dim coker d1`,
//! `xi1 = dim ker d1 / im d2` and `xi2 = dim ker d2`.
//!
//! Every structure map sends each basis vector to a basis vector or to zero,
//! so every column of `d1` and `d2` holds at most two ones. Such a matrix is
//! the incidence matrix of a graph once single-one columns are joined to an
//! extra ground node, and its GF(2) rank is the size of a spanning forest.

use super::grid::IntGrid;
use super::union_find::UnionFind;
use crate::error::{Error, Result};

/// A finite two-parameter module whose structure maps take basis vectors to
/// basis vectors or to zero.
///
/// `map_r(i, j)` goes from `(i, j)` to `(i + 1, j)`; `map_t(i, j)` goes from
/// `(i, j)` to `(i, j + 1)`. Entry `k` of a map is the image of basis vector
/// `k`, with `None` meaning zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedModule {
    rows: usize,
    cols: usize,
    dims: Vec<usize>,
    map_r: Vec<Vec<Option<u32>>>,
    map_t: Vec<Vec<Option<u32>>>,
}

impl GradedModule {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            dims: vec![0; rows * cols],
            map_r: vec![Vec::new(); rows * cols],
            map_t: vec![Vec::new(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self, i: usize, j: usize) -> usize {
        self.dims[i * self.cols + j]
    }

    /// Sets the dimension at `(i, j)`; outgoing maps default to zero.
    pub fn set_dim(&mut self, i: usize, j: usize, dim: usize) {
        let k = i * self.cols + j;
        self.dims[k] = dim;
        self.map_r[k] = vec![None; dim];
        self.map_t[k] = vec![None; dim];
    }

    pub fn set_map_r(&mut self, i: usize, j: usize, images: Vec<Option<u32>>) {
        assert_eq!(images.len(), self.dim(i, j), "map_r({i}, {j}) domain");
        self.map_r[i * self.cols + j] = images;
    }

    pub fn set_map_t(&mut self, i: usize, j: usize, images: Vec<Option<u32>>) {
        assert_eq!(images.len(), self.dim(i, j), "map_t({i}, {j}) domain");
        self.map_t[i * self.cols + j] = images;
    }

    pub fn map_r(&self, i: usize, j: usize) -> &[Option<u32>] {
        &self.map_r[i * self.cols + j]
    }

    pub fn map_t(&self, i: usize, j: usize) -> &[Option<u32>] {
        &self.map_t[i * self.cols + j]
    }

    /// Checks map targets are in range and that the two paths around every
    /// unit square agree.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i + 1 < self.rows {
                    let cod = self.dim(i + 1, j);
                    if self.map_r(i, j).iter().flatten().any(|&x| x as usize >= cod) {
                        return Err(Error::invalid(format!("map_r({i}, {j}) target out of range")));
                    }
                }
                if j + 1 < self.cols {
                    let cod = self.dim(i, j + 1);
                    if self.map_t(i, j).iter().flatten().any(|&x| x as usize >= cod) {
                        return Err(Error::invalid(format!("map_t({i}, {j}) target out of range")));
                    }
                }
                if i + 1 < self.rows && j + 1 < self.cols {
                    for v in 0..self.dim(i, j) {
                        let via_r = self.map_r(i, j)[v].and_then(|x| self.map_t(i + 1, j)[x as usize]);
                        let via_t = self.map_t(i, j)[v].and_then(|x| self.map_r(i, j + 1)[x as usize]);
                        if via_r != via_t {
                            return Err(Error::invalid(format!("square at ({i}, {j}) does not commute")));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// The three Betti grids, in order `xi0, xi1, xi2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BettiGrids {
    pub xi0: IntGrid,
    pub xi1: IntGrid,
    pub xi2: IntGrid,
}

/// GF(2) rank of a matrix whose columns have at most two ones, given as
/// pairs of optional row indices.
fn two_sparse_rank(rows: usize, columns: impl Iterator<Item = (Option<usize>, Option<usize>)>) -> usize {
    let ground = rows;
    let mut uf = UnionFind::new(rows + 1);
    let mut rank = 0;
    for col in columns {
        let (a, b) = match col {
            (Some(a), Some(b)) if a == b => continue,
            (Some(a), Some(b)) => (a, b),
            (Some(a), None) | (None, Some(a)) => (a, ground),
            (None, None) => continue,
        };
        if uf.union(a, b) {
            rank += 1;
        }
    }
    rank
}

/// Koszul homology dimensions at every cell of the grid.
pub fn koszul_betti(module: &GradedModule) -> BettiGrids {
    let (rows, cols) = (module.rows, module.cols);
    let mut out = BettiGrids {
        xi0: IntGrid::zeros(rows, cols),
        xi1: IntGrid::zeros(rows, cols),
        xi2: IntGrid::zeros(rows, cols),
    };
    for i in 0..rows {
        for j in 0..cols {
            let dim_a = module.dim(i, j);
            let dim_b1 = if i > 0 { module.dim(i - 1, j) } else { 0 };
            let dim_b2 = if j > 0 { module.dim(i, j - 1) } else { 0 };
            let dim_c = if i > 0 && j > 0 { module.dim(i - 1, j - 1) } else { 0 };

            let from_b1: &[Option<u32>] = if i > 0 { module.map_r(i - 1, j) } else { &[] };
            let from_b2: &[Option<u32>] = if j > 0 { module.map_t(i, j - 1) } else { &[] };
            let rank_d1 = two_sparse_rank(
                dim_a,
                from_b1.iter().chain(from_b2).map(|x| (x.map(|v| v as usize), None)),
            );

            let rank_d2 = if dim_c > 0 {
                // rows: M(a-e1) first, then M(a-e2)
                let to_b1 = module.map_t(i - 1, j - 1);
                let to_b2 = module.map_r(i - 1, j - 1);
                two_sparse_rank(
                    dim_b1 + dim_b2,
                    to_b1
                        .iter()
                        .zip(to_b2)
                        .map(|(x, y)| (x.map(|v| v as usize), y.map(|v| dim_b1 + v as usize))),
                )
            } else {
                0
            };

            out.xi0.set(i, j, (dim_a - rank_d1) as u32);
            out.xi1.set(i, j, (dim_b1 + dim_b2 - rank_d1 - rank_d2) as u32);
            out.xi2.set(i, j, (dim_c - rank_d2) as u32);
        }
    }
    out
}
