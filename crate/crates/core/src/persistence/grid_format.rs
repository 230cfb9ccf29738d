//! `MPHGRID v1`: text serialization of the four invariant grids.
//!
//! ```text
//! MPHGRID v1 channels=4 rows=<R> cols=<T>
//! r_values <R floats>
//! t_values <T floats>
//! <R lines for Hilb> <R lines for xi0> <R lines for xi1> <R lines for xi2>
//! ```
//!
//! Floats use Rust's shortest round-trip decimal form, so the output is
//! byte-identical across platforms and parses back to the same bits.

use std::fmt::Write as _;
use std::path::Path;

use super::{BifiltrationInvariants, GridScales, IntGrid};
use crate::error::{Error, Result};

pub fn to_string(inv: &BifiltrationInvariants) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "MPHGRID v1 channels={} rows={} cols={}",
        BifiltrationInvariants::CHANNELS,
        inv.rows(),
        inv.cols()
    )
    .unwrap();
    let floats = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    writeln!(s, "r_values {}", floats(&inv.scales.r_values)).unwrap();
    writeln!(s, "t_values {}", floats(&inv.scales.t_values)).unwrap();
    for grid in inv.channels() {
        for i in 0..grid.rows() {
            let row: Vec<String> = grid.row(i).iter().map(u32::to_string).collect();
            writeln!(s, "{}", row.join(" ")).unwrap();
        }
    }
    s
}

fn header_field(tok: Option<&str>, key: &str) -> Result<usize> {
    tok.and_then(|t| t.strip_prefix(key))
        .and_then(|t| t.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::parse(1, format!("malformed MPHGRID header: expected {key}=<int>")))
}

pub fn parse(text: &str) -> Result<BifiltrationInvariants> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty MPHGRID file"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("MPHGRID") {
        return Err(Error::parse(1, "missing MPHGRID magic"));
    }
    if toks.next() != Some("v1") {
        return Err(Error::parse(1, "unsupported MPHGRID version"));
    }
    let channels = header_field(toks.next(), "channels")?;
    let rows = header_field(toks.next(), "rows")?;
    let cols = header_field(toks.next(), "cols")?;
    if channels != BifiltrationInvariants::CHANNELS {
        return Err(Error::parse(1, format!("expected 4 channels, found {channels}")));
    }

    let mut values = |name: &str, count: usize| -> Result<Vec<f64>> {
        let (n, line) = lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("missing {name} line")))?;
        let mut toks = line.split_whitespace();
        if toks.next() != Some(name) {
            return Err(Error::parse(n, format!("expected {name}")));
        }
        let v: Vec<f64> = toks
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::parse(n, format!("non-numeric token {t:?}")))
            })
            .collect::<Result<_>>()?;
        if v.len() != count {
            return Err(Error::parse(
                n,
                format!("{name}: expected {count} values, found {}", v.len()),
            ));
        }
        Ok(v)
    };
    let r_values = values("r_values", rows)?;
    let t_values = values("t_values", cols)?;
    let scales = GridScales::new(r_values, t_values)?;

    let mut grids = Vec::with_capacity(channels);
    for _ in 0..channels {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (n, line) = lines
                .next()
                .ok_or_else(|| Error::parse(0, "truncated MPHGRID grid data"))?;
            let before = data.len();
            for t in line.split_whitespace() {
                data.push(
                    t.parse::<u32>()
                        .map_err(|_| Error::parse(n, format!("non-integer token {t:?}")))?,
                );
            }
            if data.len() - before != cols {
                return Err(Error::parse(n, format!("expected {cols} values")));
            }
        }
        grids.push(IntGrid::from_vec(rows, cols, data));
    }
    if let Some((n, l)) = lines.next() {
        if !l.trim().is_empty() {
            return Err(Error::parse(n, "trailing data after grids"));
        }
    }
    let mut it = grids.into_iter();
    Ok(BifiltrationInvariants {
        hilb: it.next().unwrap(),
        xi0: it.next().unwrap(),
        xi1: it.next().unwrap(),
        xi2: it.next().unwrap(),
        scales,
    })
}

pub fn write(path: &Path, inv: &BifiltrationInvariants) -> Result<()> {
    std::fs::write(path, to_string(inv)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<BifiltrationInvariants> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text)
}
