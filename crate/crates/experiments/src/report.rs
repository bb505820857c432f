//! Report assembly and serialization: a CSV of per-check rows plus a JSON
//! summary. Row values print in shortest round-trip form so a rerun with the
//! same config and seed reproduces the files byte-for-byte.

use anyhow::{Context, Result};
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub check_id: &'static str,
    /// Grid inputs; empty cells when the check has no such coordinate.
    pub t: Option<f64>,
    pub x: Option<f64>,
    pub value: f64,
    /// Threshold the value is compared against (empty for informational rows).
    pub bound: Option<f64>,
    /// Signed margin, nonnegative iff the row passes.
    pub slack: Option<f64>,
    pub pass: bool,
}

impl Row {
    /// A row certifying value ≤ bound.
    pub fn upper(check_id: &'static str, t: Option<f64>, x: Option<f64>, value: f64, bound: f64) -> Self {
        Self { check_id, t, x, value, bound: Some(bound), slack: Some(bound - value), pass: value <= bound }
    }

    /// A row certifying value ≥ bound.
    pub fn lower(check_id: &'static str, t: Option<f64>, x: Option<f64>, value: f64, bound: f64) -> Self {
        Self { check_id, t, x, value, bound: Some(bound), slack: Some(value - bound), pass: value >= bound }
    }

    /// A reported quantity with no pass criterion of its own.
    pub fn info(check_id: &'static str, t: Option<f64>, x: Option<f64>, value: f64) -> Self {
        Self { check_id, t, x, value, bound: None, slack: None, pass: true }
    }
}

pub struct Report {
    pub experiment: &'static str,
    pub seed: u64,
    pub rows: Vec<Row>,
    started: Instant,
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    version: &'a str,
    seed: u64,
    rows: usize,
    failed: usize,
    pass: bool,
    wall_s: f64,
}

impl Report {
    pub fn new(experiment: &'static str, seed: u64) -> Self {
        Self { experiment, seed, rows: Vec::new(), started: Instant::now() }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    /// Write report.csv and summary.json into `out`, returning overall pass.
    pub fn write(&self, out: &Path) -> Result<bool> {
        std::fs::create_dir_all(out)
            .with_context(|| format!("creating output directory {}", out.display()))?;
        let csv_path = out.join("report.csv");
        let mut wtr = csv::Writer::from_path(&csv_path)
            .with_context(|| format!("opening {}", csv_path.display()))?;
        wtr.write_record(["check_id", "t", "x", "value", "bound", "slack", "pass"])?;
        for r in &self.rows {
            wtr.write_record([
                r.check_id.to_string(),
                opt(r.t),
                opt(r.x),
                format!("{}", r.value),
                opt(r.bound),
                opt(r.slack),
                r.pass.to_string(),
            ])?;
        }
        wtr.flush()?;

        let failed = self.rows.iter().filter(|r| !r.pass).count();
        let summary = Summary {
            experiment: self.experiment,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            rows: self.rows.len(),
            failed,
            pass: failed == 0,
            wall_s: self.started.elapsed().as_secs_f64(),
        };
        let json_path = out.join("summary.json");
        std::fs::write(&json_path, serde_json::to_string_pretty(&summary)?)
            .with_context(|| format!("writing {}", json_path.display()))?;
        Ok(failed == 0)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Write an auxiliary CSV table (map.csv, oracle.csv) with the given header.
pub fn write_table(out: &Path, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let path = out.join(name);
    let mut wtr =
        csv::Writer::from_path(&path).with_context(|| format!("opening {}", path.display()))?;
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(row.iter().map(|v| format!("{v}")))?;
    }
    wtr.flush()?;
    Ok(())
}
