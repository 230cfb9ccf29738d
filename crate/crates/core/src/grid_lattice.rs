//! The finite product lattice `[m] x [n]` that indexes every grid signal.
//!
//! Elements are index pairs ordered componentwise. Meet and join are the
//! elementwise minimum and maximum; the bottom is `(0, 0)` and the top is
//! `(m, n)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    pub x: usize,
    pub y: usize,
}

impl GridPoint {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Componentwise order of the product lattice.
    pub fn le(self, other: GridPoint) -> bool {
        self.x <= other.x && self.y <= other.y
    }
}

/// Greatest lower bound.
pub fn meet(a: GridPoint, b: GridPoint) -> GridPoint {
    GridPoint::new(a.x.min(b.x), a.y.min(b.y))
}

/// Least upper bound.
pub fn join(a: GridPoint, b: GridPoint) -> GridPoint {
    GridPoint::new(a.x.max(b.x), a.y.max(b.y))
}

/// `[m] x [n]`, holding `(m + 1) * (n + 1)` elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridLattice {
    pub m: usize,
    pub n: usize,
}

impl GridLattice {
    pub const fn new(m: usize, n: usize) -> Self {
        Self { m, n }
    }

    /// The lattice indexing a `rows x cols` grid. Both must be positive.
    pub fn for_grid(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("empty grid {rows}x{cols}")));
        }
        Ok(Self::new(rows - 1, cols - 1))
    }

    pub fn rows(&self) -> usize {
        self.m + 1
    }

    pub fn cols(&self) -> usize {
        self.n + 1
    }

    pub fn len(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bottom(&self) -> GridPoint {
        GridPoint::new(0, 0)
    }

    pub fn top(&self) -> GridPoint {
        GridPoint::new(self.m, self.n)
    }

    pub fn contains(&self, p: GridPoint) -> bool {
        p.x <= self.m && p.y <= self.n
    }

    /// All elements in row-major order.
    pub fn points(&self) -> impl Iterator<Item = GridPoint> + '_ {
        (0..=self.m).flat_map(move |x| (0..=self.n).map(move |y| GridPoint::new(x, y)))
    }
}

/// Sites of a lattice-convolution kernel: the product `xs x ys`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KernelSupport {
    pub xs: Vec<usize>,
    pub ys: Vec<usize>,
}

impl KernelSupport {
    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Support sites in row-major order over `(xs, ys)`.
    pub fn sites(&self) -> impl Iterator<Item = GridPoint> + '_ {
        self.xs
            .iter()
            .flat_map(move |&x| self.ys.iter().map(move |&y| GridPoint::new(x, y)))
    }

    pub fn fits(&self, lattice: &GridLattice) -> bool {
        self.xs.iter().all(|&x| x <= lattice.m) && self.ys.iter().all(|&y| y <= lattice.n)
    }
}

/// `s` evenly spaced indices over `[0, max]`, rounded half-up and deduplicated.
fn even_indices(max: usize, s: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..s)
        .map(|i| {
            // round(i * max / (s - 1)) half-up in exact integer arithmetic
            let num = 2 * i * max + (s - 1);
            num / (2 * (s - 1))
        })
        .collect();
    out.dedup();
    out
}

/// Evenly spaced `s x s` sublattice containing both the bottom and the top.
///
/// Collisions from rounding on tiny lattices shrink the support rather than
/// failing.
pub fn kernel_support(lattice: &GridLattice, s: usize) -> Result<KernelSupport> {
    if s < 2 {
        return Err(Error::invalid(format!(
            "kernel support side {s} cannot contain both endpoints"
        )));
    }
    let limit = lattice.m.min(lattice.n) + 1;
    if s > limit {
        return Err(Error::invalid(format!(
            "kernel support side {s} exceeds lattice [{}]x[{}]",
            lattice.m, lattice.n
        )));
    }
    Ok(KernelSupport {
        xs: even_indices(lattice.m, s),
        ys: even_indices(lattice.n, s),
    })
}
