//! Plain CSV serialization of grid fields with a JSON sidecar.
//!
//! A field named `name` is written as `name.csv` with header
//! `x1,...,xd,f1,...,fc` and one row per node in row-major order, plus
//! `name.json` holding `{dim, L, n, t, name, seed}`. Floats use Rust's
//! shortest round-trip formatting, so the files are byte-stable.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::{Grid, GridField};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub dim: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
    pub t: f64,
    pub name: String,
    pub seed: Option<u64>,
}

pub fn to_csv_string<const D: usize>(field: &GridField<D>) -> String {
    let mut s = String::with_capacity(field.grid.len() * (D + field.ncomp) * 12);
    let header: Vec<String> = (1..=D)
        .map(|a| format!("x{a}"))
        .chain((1..=field.ncomp).map(|c| format!("f{c}")))
        .collect();
    s.push_str(&header.join(","));
    s.push('\n');
    for node in 0..field.grid.len() {
        let x = field.grid.coords(node);
        let mut first = true;
        for v in x.iter().chain(field.node(node)) {
            if !first {
                s.push(',');
            }
            first = false;
            write!(s, "{v}").unwrap();
        }
        s.push('\n');
    }
    s
}

/// Writes `dir/name.csv` and `dir/name.json`, returning the CSV path.
pub fn write_field<const D: usize>(
    dir: &Path,
    name: &str,
    field: &GridField<D>,
    t: f64,
    seed: Option<u64>,
) -> Result<PathBuf> {
    let csv = dir.join(format!("{name}.csv"));
    fs::write(&csv, to_csv_string(field))?;
    let meta = FieldMeta {
        dim: D,
        half_width: field.grid.half_width,
        n: field.grid.n,
        t,
        name: name.to_string(),
        seed,
    };
    fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(csv)
}

/// Reads a field written by [`write_field`] given the path of its CSV.
pub fn read_field<const D: usize>(csv: &Path) -> Result<(GridField<D>, FieldMeta)> {
    let meta: FieldMeta = serde_json::from_str(&fs::read_to_string(csv.with_extension("json"))?)?;
    if meta.dim != D {
        return Err(Error::DimensionMismatch { expected: D, got: meta.dim });
    }
    let text = fs::read_to_string(csv)?;
    let field = parse_csv(&text, Grid::new(meta.n, meta.half_width))?;
    Ok((field, meta))
}

pub fn parse_csv<const D: usize>(text: &str, grid: Grid<D>) -> Result<GridField<D>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))?
        .split(',')
        .collect();
    if header.len() <= D || header[..D].iter().enumerate().any(|(a, h)| *h != format!("x{}", a + 1)) {
        return Err(Error::Format(format!("unexpected header {header:?}")));
    }
    let ncomp = header.len() - D;
    for (c, h) in header[D..].iter().enumerate() {
        if *h != format!("f{}", c + 1) {
            return Err(Error::Format(format!("unexpected column {h:?}")));
        }
    }
    let mut field = GridField::zeros(grid, ncomp);
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        if rows >= grid.len() {
            return Err(Error::Format(format!("more than {} rows", grid.len())));
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", i + 2)))?;
        if values.len() != D + ncomp {
            return Err(Error::Format(format!("line {}: expected {} columns", i + 2, D + ncomp)));
        }
        field.node_mut(rows).copy_from_slice(&values[D..]);
        rows += 1;
    }
    if rows != grid.len() {
        return Err(Error::Format(format!("expected {} rows, got {rows}", grid.len())));
    }
    Ok(field)
}
