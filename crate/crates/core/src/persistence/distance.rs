use crate::error::{Error, Result};
use crate::mesh_io::PointCloud;

/// Symmetric matrix of pairwise distances, zero on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry, zero diagonal and finite non-negative entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("distance matrix is empty"));
        }
        let mut d = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::shape(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            d.extend_from_slice(row);
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::invalid(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                let v = d[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!(
                        "entry ({i}, {j}) = {v} is not a finite distance"
                    )));
                }
                if v != d[j * n + i] {
                    return Err(Error::invalid(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
                }
            }
        }
        Ok(Self { n, d })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    pub fn max(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }
}

/// Euclidean distances between all pairs of points.
pub fn pairwise_distances(cloud: &PointCloud) -> Result<DistanceMatrix> {
    let pts = &cloud.points;
    let n = pts.len();
    if n == 0 {
        return Err(Error::invalid("point cloud is empty"));
    }
    if let Some(i) = pts.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
        return Err(Error::NonFinite(format!("coordinates of point {i}")));
    }
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (pts[i], pts[j]);
            let v = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    Ok(DistanceMatrix { n, d })
}

/// Codensity value per point.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterValues {
    pub rho: Vec<f64>,
    pub k: usize,
}

/// Inverse mean distance to the `k` nearest other points.
///
/// Neighbors are ordered by `(distance, index)`, so ties at the k-th distance
/// go to the lower index and the sum is accumulated in a fixed order.
pub fn codensity(dmat: &DistanceMatrix, k: usize) -> Result<FilterValues> {
    let n = dmat.len();
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if k >= n {
        return Err(Error::invalid(format!(
            "k must be < point count (k = {k}, points = {n})"
        )));
    }
    let mut rho = Vec::with_capacity(n);
    let mut others: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for x in 0..n {
        others.clear();
        others.extend(
            dmat.row(x)
                .iter()
                .enumerate()
                .filter(|&(y, _)| y != x)
                .map(|(y, &d)| (d, y)),
        );
        others.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let nearest = &mut others[..k];
        nearest.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mean = nearest.iter().map(|&(d, _)| d).sum::<f64>() / k as f64;
        if mean <= 0.0 {
            return Err(Error::DegenerateCodensity { point: x, k });
        }
        rho.push(1.0 / mean);
    }
    Ok(FilterValues { rho, k })
}

/// Sampled Rips scales (`r_values`, rows) and codensity thresholds (`t_values`, columns).
#[derive(Debug, Clone, PartialEq)]
pub struct GridScales {
    pub r_values: Vec<f64>,
    pub t_values: Vec<f64>,
}

impl GridScales {
    pub fn new(r_values: Vec<f64>, t_values: Vec<f64>) -> Result<Self> {
        for (name, v) in [("r_values", &r_values), ("t_values", &t_values)] {
            if v.is_empty() {
                return Err(Error::invalid(format!("{name} is empty")));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(name.to_string()));
            }
            if !v.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::invalid(format!("{name} must be strictly increasing")));
            }
        }
        if r_values[0] < 0.0 {
            return Err(Error::invalid("r_values must be non-negative"));
        }
        Ok(Self { r_values, t_values })
    }

    pub fn rows(&self) -> usize {
        self.r_values.len()
    }

    pub fn cols(&self) -> usize {
        self.t_values.len()
    }
}

/// `bins` values from `lo` to `hi` inclusive. A zero-width range is widened
/// by a margin of a few ulps so the result stays strictly increasing.
fn linspace(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        let margin = lo.abs().max(1.0) * f64::EPSILON * 4.0 * bins as f64;
        (lo - margin, hi + margin)
    };
    let last = (bins - 1) as f64;
    (0..bins)
        .map(|i| {
            if i == bins - 1 {
                hi
            } else {
                lo + (hi - lo) * (i as f64 / last)
            }
        })
        .collect()
}

/// Even grid over `[0, max distance] x [min rho, max rho]`.
pub fn grid_scales(dmat: &DistanceMatrix, rho: &FilterValues, bins_r: usize, bins_t: usize) -> Result<GridScales> {
    if bins_r < 2 || bins_t < 2 {
        return Err(Error::invalid(format!("bins must be >= 2, got {bins_r}x{bins_t}")));
    }
    if rho.rho.len() != dmat.len() {
        return Err(Error::shape(format!(
            "{} filter values for {} points",
            rho.rho.len(),
            dmat.len()
        )));
    }
    let lo = rho.rho.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rho.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let r_values = if dmat.max() > 0.0 {
        linspace(0.0, dmat.max(), bins_r)
    } else {
        // all points coincide: widen upwards only, r stays non-negative
        linspace(0.0, f64::EPSILON * 4.0 * bins_r as f64, bins_r)
    };
    GridScales::new(r_values, linspace(lo, hi, bins_t))
}
