//! CSV reports.
//!
//! Header: `method,dataset,tau,precision,recall,F1,TPR,FPR,AP,rank`. Empty
//! cells mark values that do not apply to a row.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use skinbench_core::eval::Metrics;

pub const HEADER: [&str; 10] = ["method", "dataset", "tau", "precision", "recall", "F1", "TPR", "FPR", "AP", "rank"];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub method: String,
    pub dataset: String,
    pub tau: Option<f64>,
    pub metrics: Option<Metrics>,
    pub ap: Option<f64>,
    pub rank: Option<f64>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write(path: &Path, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(HEADER)?;
    for r in rows {
        let m = r.metrics.as_ref();
        w.write_record([
            r.method.clone(),
            r.dataset.clone(),
            cell(r.tau),
            cell(m.map(|m| m.precision)),
            cell(m.map(|m| m.recall)),
            cell(m.map(|m| m.f1)),
            cell(m.map(|m| m.tpr)),
            cell(m.map(|m| m.fpr)),
            cell(r.ap),
            cell(r.rank),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A report row as read back; only the fields `compare` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub method: String,
    pub dataset: String,
    pub f1: Option<f64>,
    pub ap: Option<f64>,
}

pub fn read(path: &Path) -> Result<Vec<Score>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("{}: missing column `{name}`", path.display()))
    };
    let (method, dataset, f1, ap) = (col("method")?, col("dataset")?, col("F1")?, col("AP")?);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |c: usize| -> Result<Option<f64>> {
            let s = rec.get(c).unwrap_or("").trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .with_context(|| format!("{} row {}: `{s}` is not a number", path.display(), i + 2))
        };
        out.push(Score {
            method: rec.get(method).unwrap_or("").to_string(),
            dataset: rec.get(dataset).unwrap_or("").to_string(),
            f1: num(f1)?,
            ap: num(ap)?,
        });
    }
    Ok(out)
}
