//! Serialization helpers: `%.17g` JSON numbers, atomic file writes and the
//! Gramian report table.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::Result;
use crate::fmt::{g12, g17};
use crate::gramian::{self, GramianReport};

/// JSON number printed with `%.17g`; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(g17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

/// Row-major nested arrays.
pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<Num>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Num(m[(i, j)])).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || rows.iter().any(|r| r.len() != cols) {
        return None;
    }
    Some(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, contents)?;
    if let Err(e) = std::fs::rename(&tmp, path) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

pub fn output_path(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

/// One row of the Gramian table: traces and descending eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub gramian: GramianReport,
}

impl ReportRow {
    pub fn from_gramian(label: &str, w: &DMatrix<f64>) -> Self {
        Self {
            label: label.to_string(),
            gramian: gramian::eigen_report(w),
        }
    }
}

fn sig(x: f64) -> String {
    crate::fmt::general(x, 4)
}

/// Aligned text table with columns `tr(W)`, `tr(W^-1)` and `lambda_1..n`.
pub fn format_table(rows: &[ReportRow]) -> String {
    let n = rows.iter().map(|r| r.gramian.eigenvalues.len()).max().unwrap_or(0);
    let mut header = vec![String::new(), "tr(W)".to_string(), "tr(W^-1)".to_string()];
    header.extend((1..=n).map(|i| format!("lambda_{i}")));
    let mut cells: Vec<Vec<String>> = vec![header];
    for r in rows {
        let mut line = vec![
            r.label.clone(),
            sig(r.gramian.trace_w),
            r.gramian.trace_w_inv.map_or_else(|| "unbounded".to_string(), sig),
        ];
        line.extend(r.gramian.eigenvalues.iter().map(|&v| sig(v)));
        cells.push(line);
    }
    let widths: Vec<usize> = (0..n + 3)
        .map(|j| {
            cells
                .iter()
                .filter_map(|l| l.get(j))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for line in &cells {
        let padded: Vec<String> = line
            .iter()
            .enumerate()
            .map(|(j, c)| format!("{c:>w$}", w = widths[j]))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// `label,trace_W,trace_W_inv,lambda_1..lambda_n` in `%.12g`.
pub fn report_csv(rows: &[ReportRow]) -> String {
    let n = rows.iter().map(|r| r.gramian.eigenvalues.len()).max().unwrap_or(0);
    let mut out = String::from("label,trace_W,trace_W_inv");
    for i in 1..=n {
        out.push_str(&format!(",lambda_{i}"));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&r.label);
        out.push(',');
        out.push_str(&g12(r.gramian.trace_w));
        out.push(',');
        out.push_str(&r.gramian.trace_w_inv.map_or_else(|| "unbounded".to_string(), g12));
        for v in &r.gramian.eigenvalues {
            out.push(',');
            out.push_str(&g12(*v));
        }
        out.push('\n');
    }
    out
}
