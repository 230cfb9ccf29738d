//! Synthetic point-cloud classes, featurized labelled datasets with a
//! stratified train/test split, and their on-disk layout.
//!
//! A dataset directory holds one `MPHGRID v1` file per item plus
//! `manifest.txt`:
//!
//! ```text
//! # mphnet dataset manifest v1
//! classes sphere torus clusters
//! seed 7
//! item_0000.mphgrid 0 train
//! item_0001.mphgrid 0 test
//! ```

use std::f64::consts::TAU;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh_io::PointCloud;
use crate::nn::Tensor;
use crate::persistence::{featurize, grid_format, BifiltrationInvariants};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticClass {
    Sphere,
    Torus,
    Clusters,
    Line,
}

impl FromStr for SyntheticClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Self::Sphere),
            "torus" => Ok(Self::Torus),
            "clusters" => Ok(Self::Clusters),
            "line" => Ok(Self::Line),
            other => Err(Error::invalid(format!(
                "unknown class {other:?} (sphere|torus|clusters|line)"
            ))),
        }
    }
}

impl fmt::Display for SyntheticClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sphere => "sphere",
            Self::Torus => "torus",
            Self::Clusters => "clusters",
            Self::Line => "line",
        })
    }
}

pub const TORUS_MAJOR: f64 = 1.0;
pub const TORUS_MINOR: f64 = 0.35;
pub const CLUSTER_CENTERS: [[f64; 3]; 3] = [[0.0, 0.0, 0.0], [3.0, 0.0, 0.0], [0.0, 3.0, 0.0]];
pub const CLUSTER_WIDTH: f64 = 0.15;

/// Sample a cloud of `n_points` from one synthetic class, with isotropic
/// Gaussian noise of standard deviation `noise_sigma` on every coordinate.
pub fn make_synthetic(class: SyntheticClass, n_points: usize, noise_sigma: f64, seed: u64) -> Result<PointCloud> {
    if n_points < 16 {
        return Err(Error::invalid(format!("n_points must be >= 16, got {n_points}")));
    }
    if !noise_sigma.is_finite() || noise_sigma < 0.0 {
        return Err(Error::invalid(format!(
            "noise sigma must be finite and >= 0, got {noise_sigma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).unwrap();
    let mut points = Vec::with_capacity(n_points);
    for idx in 0..n_points {
        let p = match class {
            SyntheticClass::Sphere => loop {
                let v: [f64; 3] = [std.sample(&mut rng), std.sample(&mut rng), std.sample(&mut rng)];
                let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if norm > 1e-12 {
                    break [v[0] / norm, v[1] / norm, v[2] / norm];
                }
            },
            SyntheticClass::Torus => {
                let theta = rng.random_range(0.0..TAU);
                let phi = rng.random_range(0.0..TAU);
                let ring = TORUS_MAJOR + TORUS_MINOR * phi.cos();
                [ring * theta.cos(), ring * theta.sin(), TORUS_MINOR * phi.sin()]
            }
            SyntheticClass::Clusters => {
                let c = CLUSTER_CENTERS[idx % 3];
                [
                    c[0] + CLUSTER_WIDTH * std.sample(&mut rng),
                    c[1] + CLUSTER_WIDTH * std.sample(&mut rng),
                    c[2] + CLUSTER_WIDTH * std.sample(&mut rng),
                ]
            }
            SyntheticClass::Line => [rng.random_range(-1.0..1.0), 0.0, 0.0],
        };
        let p = if noise_sigma > 0.0 {
            [
                p[0] + noise_sigma * std.sample(&mut rng),
                p[1] + noise_sigma * std.sample(&mut rng),
                p[2] + noise_sigma * std.sample(&mut rng),
            ]
        } else {
            p
        };
        points.push(p);
    }
    PointCloud::new(points)
}

/// splitmix64 finalizer, used to derive independent per-item seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    mix(mix(mix(seed) ^ a) ^ b)
}

const SPLIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n_points: usize,
    pub noise_sigma: f64,
    pub k: usize,
    pub bins_r: usize,
    pub bins_t: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn tag(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub invariants: BifiltrationInvariants,
    pub label: usize,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub items: Vec<Item>,
    pub class_names: Vec<String>,
    pub split_seed: u64,
}

/// An item whose cloud could not be featurized.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub class: String,
    pub seed: u64,
    pub error: String,
}

/// Number of test items for a class of `count` items: `round(count * fraction)`, half up.
pub fn test_count(count: usize, fraction: f64) -> usize {
    ((count as f64 * fraction + 0.5).floor() as usize).min(count)
}

/// Stratified split: within each class, `test_count` items chosen by a
/// seeded draw without replacement go to the test set.
pub fn stratified_split(labels: &[usize], classes: usize, test_fraction: f64, seed: u64) -> Vec<Split> {
    let mut split = vec![Split::Train; labels.len()];
    for c in 0..classes {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SPLIT_STREAM, c as u64));
        let n_test = test_count(members.len(), test_fraction);
        for pick in rand::seq::index::sample(&mut rng, members.len(), n_test) {
            split[members[pick]] = Split::Test;
        }
    }
    split
}

/// Generate `per_class` clouds per class, featurize them, and split.
///
/// Items are ordered class-major. Each item's cloud seed depends only on
/// `(seed, class index, item index)`, so the result does not depend on
/// `threads`. Failed items are dropped and returned alongside the dataset.
pub fn build_dataset(
    classes: &[SyntheticClass],
    per_class: usize,
    params: &SynthParams,
    test_fraction: f64,
    seed: u64,
    threads: usize,
) -> Result<(LabeledDataset, Vec<Failure>)> {
    if per_class < 2 {
        return Err(Error::invalid(format!("per_class must be >= 2, got {per_class}")));
    }
    if classes.is_empty() {
        return Err(Error::invalid("no classes given"));
    }
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::invalid(format!(
            "test fraction must be in [0,1], got {test_fraction}"
        )));
    }
    let jobs: Vec<(usize, u64)> = (0..classes.len())
        .flat_map(|c| (0..per_class).map(move |i| (c, derive_seed(seed, c as u64, i as u64))))
        .collect();
    let run = |&(c, item_seed): &(usize, u64)| {
        make_synthetic(classes[c], params.n_points, params.noise_sigma, item_seed)
            .and_then(|cloud| featurize(&cloud, params.k, params.bins_r, params.bins_t))
    };
    let results: Vec<Result<BifiltrationInvariants>> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect())
    } else {
        jobs.iter().map(run).collect()
    };

    let mut kept = Vec::new();
    let mut failures = Vec::new();
    for ((c, item_seed), res) in jobs.into_iter().zip(results) {
        match res {
            Ok(inv) => kept.push((inv, c)),
            Err(e) => failures.push(Failure {
                class: classes[c].to_string(),
                seed: item_seed,
                error: e.to_string(),
            }),
        }
    }
    let labels: Vec<usize> = kept.iter().map(|&(_, c)| c).collect();
    let split = stratified_split(&labels, classes.len(), test_fraction, seed);
    let items = kept
        .into_iter()
        .zip(split)
        .map(|((invariants, label), split)| Item {
            invariants,
            label,
            split,
        })
        .collect();
    Ok((
        LabeledDataset {
            items,
            class_names: classes.iter().map(|c| c.to_string()).collect(),
            split_seed: seed,
        },
        failures,
    ))
}

const MANIFEST: &str = "manifest.txt";
const MANIFEST_HEADER: &str = "# mphnet dataset manifest v1";

fn item_file(i: usize) -> String {
    format!("item_{i:04}.mphgrid")
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn split(&self, which: Split) -> impl Iterator<Item = &Item> {
        self.items.iter().filter(move |it| it.split == which)
    }

    pub fn shape(&self) -> Option<(usize, usize)> {
        self.items
            .first()
            .map(|it| (it.invariants.rows(), it.invariants.cols()))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifest = format!(
            "{MANIFEST_HEADER}\nclasses {}\nseed {}\n",
            self.class_names.join(" "),
            self.split_seed
        );
        for (i, item) in self.items.iter().enumerate() {
            let name = item_file(i);
            grid_format::write(&dir.join(&name), &item.invariants)?;
            manifest.push_str(&format!("{name} {} {}\n", item.label, item.split.tag()));
        }
        let path = dir.join(MANIFEST);
        fs::write(&path, manifest).map_err(|e| Error::io(path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, h)) if h == MANIFEST_HEADER => {}
            _ => return Err(Error::parse(1, "missing dataset manifest header")),
        }
        let (n, cl) = lines.next().ok_or_else(|| Error::parse(2, "missing classes line"))?;
        let class_names: Vec<String> = cl
            .strip_prefix("classes ")
            .ok_or_else(|| Error::parse(n, "expected classes line"))?
            .split_whitespace()
            .map(String::from)
            .collect();
        let (n, sl) = lines.next().ok_or_else(|| Error::parse(3, "missing seed line"))?;
        let split_seed = sl
            .strip_prefix("seed ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::parse(n, "expected seed line"))?;
        let mut items = Vec::new();
        for (n, line) in lines.filter(|(_, l)| !l.is_empty()) {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::parse(n, "manifest entry must be: <file> <label> <train|test>"));
            }
            let label: usize = toks[1]
                .parse()
                .map_err(|_| Error::parse(n, format!("bad label {:?}", toks[1])))?;
            if label >= class_names.len() {
                return Err(Error::parse(n, format!("label {label} out of range")));
            }
            let split = match toks[2] {
                "train" => Split::Train,
                "test" => Split::Test,
                other => return Err(Error::parse(n, format!("bad split tag {other:?}"))),
            };
            let invariants = grid_format::read(&dir.join(toks[0]))?;
            items.push(Item {
                invariants,
                label,
                split,
            });
        }
        let ds = LabeledDataset {
            items,
            class_names,
            split_seed,
        };
        if let Some((r, c)) = ds.shape() {
            if ds
                .items
                .iter()
                .any(|it| (it.invariants.rows(), it.invariants.cols()) != (r, c))
            {
                return Err(Error::shape("dataset items have different grid shapes"));
            }
        }
        Ok(ds)
    }
}

/// `log(1 + v)` per cell, divided by the per-channel maximum over the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub scale: Vec<f64>,
}

impl Normalizer {
    pub fn fit<'a>(items: impl IntoIterator<Item = &'a Item>) -> Self {
        let mut scale = vec![0.0f64; BifiltrationInvariants::CHANNELS];
        for it in items {
            for (s, g) in scale.iter_mut().zip(it.invariants.channels()) {
                *s = s.max((g.max() as f64).ln_1p());
            }
        }
        for s in &mut scale {
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Self { scale }
    }

    pub fn apply(&self, inv: &BifiltrationInvariants) -> Tensor {
        let (r, c) = (inv.rows(), inv.cols());
        let mut data = Vec::with_capacity(4 * r * c);
        for (g, s) in inv.channels().into_iter().zip(&self.scale) {
            data.extend(g.as_slice().iter().map(|&v| (v as f64).ln_1p() / s));
        }
        Tensor::from_vec(&[BifiltrationInvariants::CHANNELS, r, c], data).expect("signal shape")
    }
}
