//! Oracles and harnesses shared by the integration tests.
//!
//! The homology oracles deliberately avoid the union-find and sparse-rank
//! machinery of the library: components come from breadth-first search on an
//! adjacency matrix, ranks from dense GF(2) elimination.

#![allow(dead_code)]

pub mod grad;

use std::collections::VecDeque;

use mphnet::gf2::BitMatrix;
use mphnet::mesh_io::PointCloud;
use mphnet::persistence::{codensity, grid_scales, pairwise_distances, DistanceMatrix, FilterValues, GridScales};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One random small instance: cloud, distances, codensity, grid.
pub struct Instance {
    pub cloud: PointCloud,
    pub dmat: DistanceMatrix,
    pub rho: FilterValues,
    pub scales: GridScales,
}

/// Random cloud with `n <= 12` points on a `<= 6 x 6` grid. Odd seeds use
/// integer coordinates so that equal distances and equal codensities occur.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=12);
    let integer = seed % 2 == 1;
    let points: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            if integer {
                [
                    rng.random_range(0..4) as f64,
                    rng.random_range(0..4) as f64,
                    rng.random_range(0..2) as f64,
                ]
            } else {
                [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()]
            }
        })
        .collect();
    // duplicated points would make codensity degenerate for k = 1
    let mut points = points;
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    while points.len() < 3 {
        points.push([10.0 + points.len() as f64, 0.0, 0.0]);
    }
    let cloud = PointCloud::new(points).unwrap();
    let k = rng.random_range(1..cloud.len().min(4));
    let dmat = pairwise_distances(&cloud).unwrap();
    let rho = codensity(&dmat, k).unwrap();
    let (bins_r, bins_t) = (rng.random_range(2..=6), rng.random_range(2..=6));
    let scales = if seed.is_multiple_of(3) {
        // thresholds taken from the data so that boundary cases are exact
        let mut r: Vec<f64> = (0..bins_r)
            .map(|_| dmat.get(rng.random_range(0..dmat.len()), rng.random_range(0..dmat.len())))
            .collect();
        let mut t: Vec<f64> = (0..bins_t)
            .map(|_| rho.rho[rng.random_range(0..rho.rho.len())])
            .collect();
        for v in [&mut r, &mut t] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        GridScales::new(r, t).unwrap()
    } else {
        grid_scales(&dmat, &rho, bins_r, bins_t).unwrap()
    };
    Instance {
        cloud,
        dmat,
        rho,
        scales,
    }
}

fn present(inst: &Instance, j: usize) -> Vec<usize> {
    let t = inst.scales.t_values[j];
    (0..inst.dmat.len()).filter(|&v| inst.rho.rho[v] <= t).collect()
}

fn edges(inst: &Instance, verts: &[usize], i: usize) -> Vec<(usize, usize)> {
    let r = inst.scales.r_values[i];
    let mut out = Vec::new();
    for (a, &u) in verts.iter().enumerate() {
        for &v in &verts[a + 1..] {
            if inst.dmat.get(u, v) <= r {
                out.push((u, v));
            }
        }
    }
    out
}

/// `dim H0 = |V| - rank(boundary)` at every cell, row-major.
pub fn oracle_hilbert(inst: &Instance) -> Vec<u32> {
    let mut out = Vec::new();
    for i in 0..inst.scales.rows() {
        for j in 0..inst.scales.cols() {
            let verts = present(inst, j);
            let es = edges(inst, &verts, i);
            let mut boundary = BitMatrix::zeros(inst.dmat.len(), es.len());
            for (c, &(u, v)) in es.iter().enumerate() {
                boundary.set(u, c, true);
                boundary.set(v, c, true);
            }
            out.push((verts.len() - boundary.rank()) as u32);
        }
    }
    out
}

/// Component index of every point at cell `(i, j)` by breadth-first search,
/// `None` for absent points, plus the component count.
fn bfs_components(inst: &Instance, i: usize, j: usize) -> (Vec<Option<usize>>, usize) {
    let n = inst.dmat.len();
    let verts = present(inst, j);
    let mut adj = vec![vec![false; n]; n];
    for (u, v) in edges(inst, &verts, i) {
        adj[u][v] = true;
        adj[v][u] = true;
    }
    let mut comp = vec![None; n];
    let mut count = 0;
    for &s in &verts {
        if comp[s].is_some() {
            continue;
        }
        comp[s] = Some(count);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if adj[u][v] && comp[v].is_none() {
                    comp[v] = Some(count);
                    queue.push_back(v);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

/// Dense matrix of the map `H0(from) -> H0(to)` induced by inclusion.
fn induced(from: &(Vec<Option<usize>>, usize), to: &(Vec<Option<usize>>, usize)) -> BitMatrix {
    let mut m = BitMatrix::zeros(to.1, from.1);
    let mut seen = vec![false; from.1];
    for (v, c) in from.0.iter().enumerate() {
        if let Some(c) = *c {
            if !seen[c] {
                seen[c] = true;
                m.set(to.0[v].expect("inclusion keeps points"), c, true);
            }
        }
    }
    m
}

/// Horizontal concatenation `[a | b]`.
fn hcat(a: &BitMatrix, b: &BitMatrix) -> BitMatrix {
    assert_eq!(a.rows(), b.rows());
    let mut m = BitMatrix::zeros(a.rows(), a.cols() + b.cols());
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            m.set(r, c, a.get(r, c));
        }
        for c in 0..b.cols() {
            m.set(r, a.cols() + c, b.get(r, c));
        }
    }
    m
}

/// Vertical concatenation of `a` over `b`.
fn vcat(a: &BitMatrix, b: &BitMatrix) -> BitMatrix {
    assert_eq!(a.cols(), b.cols());
    let mut m = BitMatrix::zeros(a.rows() + b.rows(), a.cols());
    for c in 0..a.cols() {
        for r in 0..a.rows() {
            m.set(r, c, a.get(r, c));
        }
        for r in 0..b.rows() {
            m.set(a.rows() + r, c, b.get(r, c));
        }
    }
    m
}

/// Koszul homology dimensions `(xi0, xi1, xi2)` at every cell, row-major,
/// from explicit dense differentials. Panics if `d1 * d2 != 0`.
pub fn oracle_betti(inst: &Instance) -> (Vec<u32>, Vec<u32>, Vec<u32>) {
    let (rows, cols) = (inst.scales.rows(), inst.scales.cols());
    let comps: Vec<Vec<_>> = (0..rows)
        .map(|i| (0..cols).map(|j| bfs_components(inst, i, j)).collect())
        .collect();
    let empty = (vec![None; inst.dmat.len()], 0);
    let at = |i: isize, j: isize| {
        if i < 0 || j < 0 {
            &empty
        } else {
            &comps[i as usize][j as usize]
        }
    };
    let (mut x0, mut x1, mut x2) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..rows as isize {
        for j in 0..cols as isize {
            let (a, b1, b2, c) = (at(i, j), at(i - 1, j), at(i, j - 1), at(i - 1, j - 1));
            let d1 = hcat(&induced(b1, a), &induced(b2, a));
            let d2 = vcat(&induced(c, b1), &induced(c, b2));
            assert!(d1.mul(&d2).is_zero(), "d1 d2 != 0 at ({i}, {j})");
            let (r1, r2) = (d1.rank(), d2.rank());
            x0.push((a.1 - r1) as u32);
            x1.push((b1.1 + b2.1 - r1 - r2) as u32);
            x2.push((c.1 - r2) as u32);
        }
    }
    (x0, x1, x2)
}

/// Second mixed finite difference of a row-major grid, with zeros off-grid.
pub fn second_difference(h: &[u32], rows: usize, cols: usize) -> Vec<i64> {
    let get = |i: isize, j: isize| {
        if i < 0 || j < 0 {
            0
        } else {
            h[i as usize * cols + j as usize] as i64
        }
    };
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows as isize {
        for j in 0..cols as isize {
            out.push(get(i, j) - get(i - 1, j) - get(i, j - 1) + get(i - 1, j - 1));
        }
    }
    out
}

pub const FD_STEP: f64 = 1e-5;

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// Largest relative error between `analytic` and central differences of `f`
/// around `x`.
pub fn fd_max_rel_err(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], analytic: &[f64]) -> f64 {
    assert_eq!(x.len(), analytic.len());
    let mut probe = x.to_vec();
    let mut worst: f64 = 0.0;
    for k in 0..x.len() {
        probe[k] = x[k] + FD_STEP;
        let up = f(&probe);
        probe[k] = x[k] - FD_STEP;
        let down = f(&probe);
        probe[k] = x[k];
        worst = worst.max(rel_err(analytic[k], (up - down) / (2.0 * FD_STEP)));
    }
    worst
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
