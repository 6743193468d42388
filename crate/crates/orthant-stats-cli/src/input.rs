//! Readers for spaces, points, measures and directions.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use orthant_stats::frechet::DiscreteMeasure;
use orthant_stats::logmap::TangentVector;
use orthant_stats::{build_space, AxisSet, OrthantSpace, Point};
use serde::Deserialize;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    ambient_dim: usize,
    maximal_orthants: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct CoordsFile {
    coords: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct AtomFile {
    coords: BTreeMap<String, f64>,
    weight: f64,
}

#[derive(Deserialize)]
struct MeasureFile {
    atoms: Vec<AtomFile>,
}

/// Coordinates of one row, with its weight if the table has one.
type Row = (Vec<(usize, f64)>, Option<f64>);

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// The raw description of a space, before validation.
pub fn read_space_file(path: &Path) -> Result<(usize, Vec<AxisSet>)> {
    let file: SpaceFile =
        serde_json::from_str(&read(path)?).with_context(|| format!("{} is not a space file", path.display()))?;
    let tops = file.maximal_orthants.into_iter().map(AxisSet::from_axes).collect();
    Ok((file.ambient_dim, tops))
}

pub fn load_space(path: &Path) -> Result<OrthantSpace> {
    let (dim, tops) = read_space_file(path)?;
    build_space(dim, &tops).with_context(|| format!("invalid space in {}", path.display()))
}

fn parse_coords(coords: &BTreeMap<String, f64>) -> Result<Vec<(usize, f64)>> {
    coords
        .iter()
        .map(|(k, v)| {
            let axis = k.trim().parse::<usize>().with_context(|| format!("axis key {k:?} is not an index"))?;
            Ok((axis, *v))
        })
        .collect()
}

/// Rows of a CSV table whose header names axes, plus an optional
/// `weight` column.
fn read_table(path: &Path) -> Result<Vec<Row>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let mut columns = Vec::new();
    for h in headers.iter() {
        let h = h.trim();
        if h.eq_ignore_ascii_case("weight") {
            columns.push(None);
        } else {
            columns.push(Some(h.parse::<usize>().with_context(|| format!("column {h:?} is not an axis index"))?));
        }
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let mut coords = Vec::new();
        let mut weight = None;
        for (col, field) in columns.iter().zip(record.iter()) {
            let field = field.trim();
            if field.is_empty() {
                continue;
            }
            let v: f64 = field.parse().with_context(|| format!("row {}: {field:?} is not a number", line + 1))?;
            match col {
                Some(a) => coords.push((*a, v)),
                None => weight = Some(v),
            }
        }
        rows.push((coords, weight));
    }
    Ok(rows)
}

pub fn load_point(space: &OrthantSpace, path: &Path) -> Result<Point> {
    let coords = if is_csv(path) {
        let mut rows = read_table(path)?;
        if rows.len() != 1 {
            bail!("{} must hold exactly one row, found {}", path.display(), rows.len());
        }
        rows.remove(0).0
    } else {
        let file: CoordsFile =
            serde_json::from_str(&read(path)?).with_context(|| format!("{} is not a point file", path.display()))?;
        parse_coords(&file.coords)?
    };
    space.point(coords).with_context(|| format!("invalid point in {}", path.display()))
}

/// A measure from JSON atoms, or from CSV rows (uniform when the table
/// has no `weight` column).
pub fn load_measure(space: &OrthantSpace, path: &Path) -> Result<DiscreteMeasure> {
    let atoms: Vec<Row> = if is_csv(path) {
        read_table(path)?
    } else {
        let file: MeasureFile =
            serde_json::from_str(&read(path)?).with_context(|| format!("{} is not a measure file", path.display()))?;
        file.atoms.iter().map(|a| Ok((parse_coords(&a.coords)?, Some(a.weight)))).collect::<Result<_>>()?
    };
    if atoms.is_empty() {
        bail!("{} has no atoms", path.display());
    }
    let uniform = 1.0 / atoms.len() as f64;
    let mut out = Vec::with_capacity(atoms.len());
    for (i, (coords, weight)) in atoms.into_iter().enumerate() {
        let p = space.point(coords).with_context(|| format!("atom {i} in {}", path.display()))?;
        out.push((p, weight.unwrap_or(uniform)));
    }
    DiscreteMeasure::new(out).with_context(|| format!("invalid measure in {}", path.display()))
}

/// A tangent vector at `base`; axes outside the base stratum with nonzero
/// coordinates form its normal part.
pub fn load_direction(space: &OrthantSpace, base: &Point, path: &Path) -> Result<TangentVector> {
    let file: CoordsFile =
        serde_json::from_str(&read(path)?).with_context(|| format!("{} is not a direction file", path.display()))?;
    let coords = parse_coords(&file.coords)?;
    let e = base.support();
    let mut dense = nalgebra::DVector::zeros(space.ambient_dim());
    let mut extra = AxisSet::EMPTY;
    for (a, v) in coords {
        if a >= space.ambient_dim() {
            bail!("direction axis {a} is outside 0..{}", space.ambient_dim());
        }
        dense[a] = v;
        if !e.contains(a) && v != 0.0 {
            extra = extra.with(a);
        }
    }
    TangentVector::new(space, e, extra, dense).with_context(|| format!("invalid direction in {}", path.display()))
}

/// Parses `0,4` or `{0,4}` into an axis set.
pub fn parse_axes(text: &str) -> Result<AxisSet> {
    let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
    let mut axes = Vec::new();
    for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        axes.push(part.parse::<usize>().with_context(|| format!("{part:?} is not an axis index"))?);
    }
    Ok(AxisSet::from_axes(axes))
}
