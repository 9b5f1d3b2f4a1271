//! CSV/JSON output formats. Node rows always carry the original labels from
//! the input edge list. Floats are written in shortest round-trip form, so
//! reading a file back yields bit-identical values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::ClusterAssignment;
use crate::model::{EpochLog, Matrix};
use crate::walk::Walk;

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn header(first: &str, dims: usize) -> String {
    let mut h = first.to_string();
    for i in 0..dims {
        let _ = write!(h, ",x_{i}");
    }
    h.push('\n');
    h
}

fn matrix_csv(first: &str, labels: impl Iterator<Item = String>, m: &Matrix) -> String {
    let mut out = header(first, m.cols());
    for (i, label) in labels.enumerate() {
        out.push_str(&label);
        for x in m.row(i) {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    out
}

/// `id,x_0,...,x_{d-1}`.
pub fn write_embeddings(path: &Path, embeddings: &Matrix, original_ids: &[i64]) -> Result<()> {
    if original_ids.len() != embeddings.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} ids for {} embedding rows",
            original_ids.len(),
            embeddings.rows()
        )));
    }
    write_file(
        path,
        &matrix_csv("id", original_ids.iter().map(i64::to_string), embeddings),
    )
}

/// `cluster,x_0,...,x_{d-1}`.
pub fn write_centers(path: &Path, centers: &Matrix) -> Result<()> {
    write_file(
        path,
        &matrix_csv("cluster", (0..centers.rows()).map(|c| c.to_string()), centers),
    )
}

/// `id,cluster`.
pub fn write_assignment(path: &Path, assignment: &ClusterAssignment, original_ids: &[i64]) -> Result<()> {
    let mut out = String::from("id,cluster\n");
    for (id, c) in original_ids.iter().zip(&assignment.assignment) {
        let _ = writeln!(out, "{id},{c}");
    }
    write_file(path, &out)
}

/// `epoch,loss,gamma,alpha,seconds`.
pub fn write_training_log(path: &Path, log: &[EpochLog]) -> Result<()> {
    let mut out = String::from("epoch,loss,gamma,alpha,seconds\n");
    for e in log {
        let _ = writeln!(out, "{},{},{},{},{}", e.epoch, e.loss, e.gamma, e.alpha, e.seconds);
    }
    write_file(path, &out)
}

/// JSON object mapping original labels (as strings) to dense ids.
pub fn write_id_map(path: &Path, original_ids: &[i64]) -> Result<()> {
    let map: BTreeMap<String, usize> = original_ids
        .iter()
        .enumerate()
        .map(|(dense, orig)| (orig.to_string(), dense))
        .collect();
    write_file(path, &serde_json::to_string_pretty(&map)?)
}

/// One walk per line, space-separated dense ids.
pub fn write_corpus(path: &Path, walks: &[Walk]) -> Result<()> {
    let mut out = String::new();
    for w in walks {
        let line: Vec<String> = w.nodes().iter().map(usize::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_file(path, &s)
}

/// Rows of a labelled matrix CSV (embeddings or centers).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledMatrix {
    pub labels: Vec<i64>,
    pub values: Matrix,
}

pub fn read_labelled_matrix(path: &Path) -> Result<LabelledMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
    let width = head.split(',').count().saturating_sub(1);
    if width == 0 {
        return Err(parse_err(1, "header has no value columns".into()));
    }
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let mut fields = line.split(',').map(str::trim);
        let label = fields
            .next()
            .and_then(|t| t.parse::<i64>().ok())
            .ok_or_else(|| parse_err(i + 1, format!("bad row label in `{line}`")))?;
        let values: Vec<f64> = fields
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(i + 1, e.to_string()))?;
        if values.len() != width {
            return Err(parse_err(
                i + 1,
                format!("expected {width} values, found {}", values.len()),
            ));
        }
        labels.push(label);
        rows.push(values);
    }
    Ok(LabelledMatrix {
        labels,
        values: Matrix::from_rows(&rows)?,
    })
}
