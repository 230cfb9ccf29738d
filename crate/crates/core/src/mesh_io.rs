//! ASCII OFF meshes and point-cloud sampling.
//!
//! Randomness comes from `ChaCha8Rng` seeded with the caller's seed, so a
//! sample is a pure function of `(mesh, count, mode, seed)` on every platform.
//! Vertices are not deduplicated before sampling.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("point cloud is empty"));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::NonFinite(format!("coordinates of point {i}")));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Center on the centroid and scale so the farthest point is at distance 1.
    pub fn normalized(&self) -> PointCloud {
        let n = self.points.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.points {
            for k in 0..3 {
                c[k] += p[k];
            }
        }
        for v in &mut c {
            *v /= n;
        }
        let radius = self
            .points
            .iter()
            .map(|p| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt())
            .fold(0.0, f64::max);
        let scale = if radius > 0.0 { 1.0 / radius } else { 1.0 };
        let points = self
            .points
            .iter()
            .map(|p| [(p[0] - c[0]) * scale, (p[1] - c[1]) * scale, (p[2] - c[2]) * scale])
            .collect();
        PointCloud { points }
    }

    /// Plain text, one `x y z` triple per line; `#` comments and blank lines skipped.
    pub fn parse_xyz(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = strip_comment(line);
            if line.is_empty() {
                continue;
            }
            let vals = parse_numbers::<f64>(line, i + 1)?;
            if vals.len() != 3 {
                return Err(Error::parse(
                    i + 1,
                    format!("expected 3 coordinates, found {}", vals.len()),
                ));
            }
            points.push([vals[0], vals[1], vals[2]]);
        }
        PointCloud::new(points)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

fn parse_numbers<T: FromStr>(line: &str, lineno: usize) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<T>()
                .map_err(|_| Error::parse(lineno, format!("non-numeric token {tok:?}")))
        })
        .collect()
}

/// Parse an ASCII OFF file. Polygons with more than three vertices are
/// fan-triangulated around their first vertex.
pub fn parse_off(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l)))
        .filter(|(_, l)| !l.is_empty());

    let (lineno, header) = lines.next().ok_or_else(|| Error::parse(1, "missing OFF header"))?;
    // Some exporters glue the counts onto the header line ("OFF8 6 0").
    let rest = match header.strip_prefix("OFF") {
        Some(rest)
            if rest.is_empty()
                || rest.starts_with(char::is_whitespace)
                || rest.starts_with(|c: char| c.is_ascii_digit()) =>
        {
            rest.trim()
        }
        _ => {
            return Err(Error::parse(
                lineno,
                format!("incorrect header {header:?}, expected OFF"),
            ))
        }
    };

    let (count_line, counts) = if rest.is_empty() {
        let (n, l) = lines
            .next()
            .ok_or_else(|| Error::parse(lineno + 1, "missing counts line"))?;
        (n, parse_numbers::<usize>(l, n)?)
    } else {
        (lineno, parse_numbers::<usize>(rest, lineno)?)
    };
    if counts.len() < 2 {
        return Err(Error::parse(count_line, "counts line must hold V F [E]"));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = lines
            .next()
            .ok_or_else(|| Error::parse(count_line, format!("expected {nv} vertices, found {}", vertices.len())))?;
        let v = parse_numbers::<f64>(l, n)?;
        if v.len() < 3 {
            return Err(Error::parse(n, "vertex needs 3 coordinates"));
        }
        if v[..3].iter().any(|c| !c.is_finite()) {
            return Err(Error::parse(n, "non-finite vertex coordinate"));
        }
        vertices.push([v[0], v[1], v[2]]);
    }

    let mut faces = Vec::with_capacity(nf);
    for f in 0..nf {
        let (n, l) = lines
            .next()
            .ok_or_else(|| Error::parse(count_line, format!("expected {nf} faces, found {f}")))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        let k: usize = toks[0]
            .parse()
            .map_err(|_| Error::parse(n, format!("non-numeric token {:?}", toks[0])))?;
        if k < 3 {
            return Err(Error::parse(n, format!("face with {k} vertices")));
        }
        if toks.len() < k + 1 {
            return Err(Error::parse(
                n,
                format!("face declares {k} vertices, found {}", toks.len() - 1),
            ));
        }
        // trailing tokens after the indices are per-face colors; ignored
        let idx = parse_numbers::<usize>(&toks[1..=k].join(" "), n)?;
        if let Some(&bad) = idx.iter().find(|&&i| i >= nv) {
            return Err(Error::parse(n, format!("face index out of range: {bad} >= {nv}")));
        }
        for w in 1..k - 1 {
            faces.push([idx[0], idx[w], idx[w + 1]]);
        }
    }

    if let Some((n, _)) = lines.next() {
        return Err(Error::parse(
            n,
            format!("counts mismatch: data beyond {nv} vertices and {nf} faces"),
        ));
    }

    Ok(Mesh { vertices, faces })
}

pub fn read_off(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_off(&text)
}

/// Serialize as ASCII OFF. Coordinates use the shortest round-trip decimal form.
pub fn write_off(mesh: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "OFF").unwrap();
    writeln!(s, "{} {} 0", mesh.vertices.len(), mesh.faces.len()).unwrap();
    for v in &mesh.vertices {
        writeln!(s, "{} {} {}", v[0], v[1], v[2]).unwrap();
    }
    for f in &mesh.faces {
        writeln!(s, "3 {} {} {}", f[0], f[1], f[2]).unwrap();
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Vertices,
    Surface,
}

impl FromStr for SampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertices" => Ok(SampleMode::Vertices),
            "surface" => Ok(SampleMode::Surface),
            other => Err(Error::invalid(format!("unknown sample mode {other:?}"))),
        }
    }
}

fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn triangle_area(a: Point3, b: Point3, c: Point3) -> f64 {
    let n = cross(sub(b, a), sub(c, a));
    0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
}

pub fn sample_points(mesh: &Mesh, count: usize, mode: SampleMode, seed: u64) -> Result<PointCloud> {
    if count == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = match mode {
        SampleMode::Vertices => {
            if mesh.vertices.len() < count {
                return Err(Error::invalid(format!(
                    "not enough vertices: mesh has {}, requested {count}",
                    mesh.vertices.len()
                )));
            }
            rand::seq::index::sample(&mut rng, mesh.vertices.len(), count)
                .into_iter()
                .map(|i| mesh.vertices[i])
                .collect()
        }
        SampleMode::Surface => {
            let tri = |f: &[usize; 3]| (mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
            let areas: Vec<f64> = mesh
                .faces
                .iter()
                .map(|f| {
                    let (a, b, c) = tri(f);
                    triangle_area(a, b, c)
                })
                .collect();
            let total: f64 = areas.iter().sum();
            if !total.is_finite() || total <= 0.0 {
                return Err(Error::invalid("degenerate mesh: total surface area is zero"));
            }
            let pick = WeightedIndex::new(&areas).map_err(|e| Error::invalid(format!("degenerate mesh: {e}")))?;
            (0..count)
                .map(|_| {
                    let (a, b, c) = tri(&mesh.faces[pick.sample(&mut rng)]);
                    let mut u: f64 = rng.random();
                    let mut v: f64 = rng.random();
                    if u + v > 1.0 {
                        u = 1.0 - u;
                        v = 1.0 - v;
                    }
                    let w = 1.0 - u - v;
                    [
                        w * a[0] + u * b[0] + v * c[0],
                        w * a[1] + u * b[1] + v * c[1],
                        w * a[2] + u * b[2] + v * c[2],
                    ]
                })
                .collect()
        }
    };
    PointCloud::new(points)
}

/// Vertex sampling when the mesh is large enough, surface sampling otherwise.
pub fn sample_points_auto(mesh: &Mesh, count: usize, seed: u64) -> Result<PointCloud> {
    let mode = if mesh.vertices.len() >= count {
        SampleMode::Vertices
    } else {
        SampleMode::Surface
    };
    sample_points(mesh, count, mode, seed)
}
