//! Plot-ready tables in CSV or JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::Format;
use crate::stats::{Histogram, VarianceCurve};

/// Named numeric columns of equal length.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn column(mut self, name: &str, values: Vec<f64>) -> Self {
        self.columns.push((name.to_string(), values));
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.1.len())
    }

    pub fn histogram(h: &Histogram) -> Self {
        let lo = h.bin_edges[..h.bins()].to_vec();
        let hi = h.bin_edges[1..].to_vec();
        Self::new()
            .column("bin_lo", lo)
            .column("bin_hi", hi)
            .column("pdf", h.values())
            .column("count", h.counts.iter().map(|&c| c as f64).collect())
    }

    pub fn variance(c: &VarianceCurve) -> Self {
        Self::new()
            .column("n_mean", c.n_mean.clone())
            .column("sigma2", c.sigma2.clone())
            .column("stderr", c.stderr.clone())
            .column("observed_mean", c.observed_mean.clone())
    }

    /// Header row, then 17-significant-digit rows, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let names: Vec<&str> = self.columns.iter().map(|c| c.0.as_str()).collect();
        s.push_str(&names.join(","));
        s.push('\n');
        for r in 0..self.rows() {
            for (i, (_, col)) in self.columns.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{}", fmt_f64(col[r]));
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map = self
            .columns
            .iter()
            .map(|(name, col)| (name.clone(), serde_json::Value::from(col.clone())))
            .collect::<serde_json::Map<_, _>>();
        serde_json::Value::Object(map)
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `table` as `<dir>/<stem>.csv` or `<dir>/<stem>.json`.
pub fn write_table(dir: &Path, stem: &str, table: &Table, format: Format) -> std::io::Result<PathBuf> {
    let (path, body) = match format {
        Format::Csv => (dir.join(format!("{stem}.csv")), table.to_csv()),
        Format::Json => {
            let mut body = serde_json::to_string_pretty(&table.to_json()).map_err(std::io::Error::other)?;
            body.push('\n');
            (dir.join(format!("{stem}.json")), body)
        }
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, body)?;
    Ok(path)
}
