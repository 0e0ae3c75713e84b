//! Reading and writing datasets, curves and ledgers.
//!
//! Datasets come as CSV coordinate rows (an optional header whose last
//! column is `weight` carries the measure) or as a JSON object
//! `{"matrix": [[...]], "weights": [...]}`. JSON may give `"points"`
//! instead of a matrix. Missing weights default to `d(X) / n` per point.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curve::{Curve, StepRecord};
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, Measure, PointId, Subset};

fn parse_err(line: usize, field: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field,
        message: message.into(),
    }
}

fn default_measure(space: &FiniteMetricSpace) -> Result<Measure> {
    let n = space.len();
    Measure::uniform(n, space.space_diameter() / n.max(1) as f64)
}

/// Parses coordinate rows. A first row that is not numeric is a header; a
/// header ending in `weight` marks the last column as weights.
pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut weighted = false;
    let mut width: Option<usize> = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(i + 1, |p| p.line() as usize);
            parse_err(line, 0, e.to_string())
        })?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let header = rows.is_empty() && width.is_none() && rec.iter().any(|f| f.parse::<f64>().is_err());
        if header {
            weighted = rec
                .iter()
                .next_back()
                .is_some_and(|f| f.eq_ignore_ascii_case("weight"));
            width = Some(rec.len());
            continue;
        }
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(parse_err(
                line,
                rec.len().min(expected) + 1,
                format!("expected {expected} fields, found {}", rec.len()),
            ));
        }
        let mut row = Vec::with_capacity(rec.len());
        for (j, f) in rec.iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(line, j + 1, format!("`{f}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, j + 1, "value is not finite"));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty("input"));
    }
    let weights = if weighted {
        if width == Some(1) {
            return Err(parse_err(1, 1, "a weight column needs at least one coordinate"));
        }
        Some(rows.iter_mut().map(|r| r.pop().unwrap()).collect::<Vec<_>>())
    } else {
        None
    };
    let space = FiniteMetricSpace::from_coordinates(rows)?;
    let measure = match weights {
        Some(w) => Measure::new(w)?,
        None => default_measure(&space)?,
    };
    Ok(Dataset { space, measure })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDataset {
    matrix: Option<Vec<Vec<f64>>>,
    points: Option<Vec<Vec<f64>>>,
    weights: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct JsonDatasetOut<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<&'a [Vec<f64>]>,
    matrix: Vec<&'a [f64]>,
    weights: &'a [f64],
}

/// Parses `{"matrix": ..., "weights": ...}`; `"points"` may replace or
/// accompany the matrix.
pub fn parse_json(text: &str) -> Result<Dataset> {
    let raw: JsonDataset = serde_json::from_str(text)
        .map_err(|e| parse_err(e.line(), e.column(), e.to_string()))?;
    let space = match (raw.matrix, raw.points) {
        (Some(m), Some(p)) => FiniteMetricSpace::from_matrix_with_coordinates(m, p)?,
        (Some(m), None) => FiniteMetricSpace::from_matrix(m)?,
        (None, Some(p)) => FiniteMetricSpace::from_coordinates(p)?,
        (None, None) => return Err(parse_err(1, 1, "expected a `matrix` or `points` field")),
    };
    if space.is_empty() {
        return Err(Error::Empty("input"));
    }
    let report = space.validate_with(1e-9, space.len() <= crate::metric::TRIANGLE_CHECK_LIMIT);
    if !report.is_valid() {
        return Err(Error::InvalidMetric(format!(
            "{} violations, first: {:?}",
            report.count,
            report.violations.first()
        )));
    }
    let measure = match raw.weights {
        Some(w) => {
            if w.len() != space.len() {
                return Err(parse_err(
                    1,
                    1,
                    format!("{} weights for {} points", w.len(), space.len()),
                ));
            }
            Measure::new(w)?
        }
        None => default_measure(&space)?,
    };
    Ok(Dataset { space, measure })
}

/// Reads a `.json` file as JSON and anything else as CSV.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        parse_json(&text)
    } else {
        parse_csv(&text)
    }
}

/// CSV with columns `x0, x1, ..., weight`. Needs coordinates.
pub fn write_csv(data: &Dataset) -> Result<String> {
    let coords = data
        .space
        .coordinates()
        .ok_or_else(|| Error::InvalidArgument("CSV output needs coordinates; use JSON".into()))?;
    let dim = coords.first().map_or(0, Vec::len);
    let mut out = String::new();
    let header: Vec<String> = (0..dim).map(|i| format!("x{i}")).chain(["weight".into()]).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (row, w) in coords.iter().zip(data.measure.weights()) {
        for v in row {
            write!(out, "{v},").unwrap();
        }
        writeln!(out, "{w}").unwrap();
    }
    Ok(out)
}

pub fn write_json(data: &Dataset) -> Result<String> {
    let out = JsonDatasetOut {
        points: data.space.coordinates(),
        matrix: data.space.matrix_rows().collect(),
        weights: data.measure.weights(),
    };
    Ok(serde_json::to_string(&out)?)
}

/// Ledger rows `scale, step, kind, lambda, delta`.
pub fn ledger_csv(history: &[StepRecord]) -> String {
    let mut out = String::from("scale,step,kind,lambda,delta\n");
    for r in history {
        let lambda = r.lambda.map(|l| l.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", r.scale, r.step, r.kind, lambda, r.length_delta).unwrap();
    }
    out
}

/// Rows `id, distance`.
pub fn distances_csv(distances: &[f64]) -> String {
    let mut out = String::from("id,distance\n");
    for (i, d) in distances.iter().enumerate() {
        writeln!(out, "{i},{d}").unwrap();
    }
    out
}

#[derive(Deserialize)]
struct CurveIn {
    vertices: Vec<PointId>,
    edges: Vec<[PointId; 2]>,
    #[serde(default)]
    scale: i32,
}

/// Reads a curve from its JSON form, or from a build report holding one
/// under `"curve"`.
pub fn parse_curve(text: &str, points: usize) -> Result<Curve> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| parse_err(e.line(), e.column(), e.to_string()))?;
    let inner = value.get("curve").cloned().unwrap_or(value);
    let raw: CurveIn = serde_json::from_value(inner).map_err(|e| parse_err(1, 1, e.to_string()))?;
    if let Some(v) = raw.vertices.iter().find(|v| v.0 >= points) {
        return Err(Error::OutOfRange { id: v.0, size: points });
    }
    let vertices = Subset::new(raw.vertices);
    let curve = Curve::from_edges(&vertices, &raw.edges, raw.scale)?;
    if curve.is_empty() {
        return Err(Error::Empty("curve"));
    }
    Ok(curve)
}
