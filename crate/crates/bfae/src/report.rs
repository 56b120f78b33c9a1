//! Long-format result tables.
//!
//! One row per (method, dataset, cell, replication, split, metric). Summary
//! rows carry `replication = "mean"` and the arithmetic mean of the matching
//! replication rows.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Result};
use crate::io::fmt_f64;

pub const MEAN: &str = "mean";
pub const FAILED: &str = "failed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub dataset: String,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub m_latent: usize,
    pub r_latent: usize,
    /// Replication index, `"mean"` for summaries or `"failed"` for the
    /// marker written when a run aborts.
    pub replication: String,
    pub split: String,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
    pub config_hash: String,
}

impl ReportRow {
    fn group_key(&self) -> (String, String, usize, usize, usize, usize, usize, String, String) {
        (
            self.method.clone(),
            self.dataset.clone(),
            self.n,
            self.m,
            self.r,
            self.m_latent,
            self.r_latent,
            self.split.clone(),
            self.metric.clone(),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

pub const CSV_HEADER: &str = "method,dataset,n,m,r,m_latent,r_latent,replication,split,metric,value,seed,config_hash";

impl ExperimentReport {
    pub fn replication_rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.replication != MEAN && r.replication != FAILED)
    }

    /// Append one mean row per group of replication rows, in order of first
    /// appearance.
    pub fn add_summaries(&mut self, master_seed: u64) {
        let mut order = Vec::new();
        let mut groups: BTreeMap<_, (Vec<f64>, ReportRow)> = BTreeMap::new();
        for row in self.replication_rows() {
            let key = row.group_key();
            groups
                .entry(key.clone())
                .or_insert_with(|| {
                    order.push(key);
                    (Vec::new(), row.clone())
                })
                .0
                .push(row.value);
        }
        for key in order {
            let (values, template) = &groups[&key];
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            self.rows.push(ReportRow {
                replication: MEAN.into(),
                value: mean,
                seed: master_seed,
                ..template.clone()
            });
        }
    }

    pub fn summaries(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.replication == MEAN)
    }

    /// Mean value for a method/metric/split in the first matching cell.
    pub fn mean(&self, method: &str, split: &str, metric: &str) -> Option<f64> {
        self.summaries().find(|r| r.method == method && r.split == split && r.metric == metric).map(|r| r.value)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.method,
                r.dataset,
                r.n,
                r.m,
                r.r,
                r.m_latent,
                r.r_latent,
                r.replication,
                r.split,
                r.metric,
                fmt_f64(r.value),
                r.seed,
                r.config_hash
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(io_err(path))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(io_err(path))
    }

    /// Methods as rows, `(N, M)` cells as columns: the layout of the
    /// reconstruction tables. Uses mean test values of `metric`.
    pub fn table(&self, metric: &str, methods: &[&str]) -> String {
        let mut cells: Vec<(usize, usize)> = Vec::new();
        for r in self.summaries().filter(|r| r.metric == metric && r.split == "test") {
            if !cells.contains(&(r.n, r.m)) {
                cells.push((r.n, r.m));
            }
        }
        let mut out = String::from("method");
        for (n, m) in &cells {
            out.push_str(&format!(",N={n} M={m}"));
        }
        out.push('\n');
        for method in methods {
            let values: Vec<Option<f64>> = cells
                .iter()
                .map(|&(n, m)| {
                    self.summaries()
                        .find(|r| r.method == *method && r.metric == metric && r.split == "test" && r.n == n && r.m == m)
                        .map(|r| r.value)
                })
                .collect();
            if values.iter().all(Option::is_none) {
                continue;
            }
            out.push_str(method);
            for v in values {
                out.push(',');
                if let Some(v) = v {
                    out.push_str(&format!("{v:.3}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, rep: usize, value: f64) -> ReportRow {
        ReportRow {
            method: method.into(),
            dataset: "sim1".into(),
            n: 100,
            m: 50,
            r: 1,
            m_latent: 50,
            r_latent: 1,
            replication: rep.to_string(),
            split: "test".into(),
            metric: "rmse".into(),
            value,
            seed: rep as u64,
            config_hash: "abc".into(),
        }
    }

    #[test]
    fn summary_equals_replication_mean() {
        let mut rep = ExperimentReport { rows: vec![row("pca", 0, 0.5), row("bfae", 0, 0.2), row("pca", 1, 0.7), row("bfae", 1, 0.1)] };
        rep.add_summaries(9);
        assert_eq!(rep.rows.len(), 6);
        assert_eq!(rep.mean("pca", "test", "rmse"), Some(0.6));
        assert!((rep.mean("bfae", "test", "rmse").unwrap() - 0.15).abs() < 1e-15);
        assert_eq!(rep.summaries().next().unwrap().method, "pca");
        let t = rep.table("rmse", &["pca", "ae", "bfae"]);
        assert_eq!(t, "method,N=100 M=50\npca,0.600\nbfae,0.150\n");
    }

    #[test]
    fn csv_has_header_and_one_line_per_row() {
        let rep = ExperimentReport { rows: vec![row("pca", 0, 0.5)] };
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with(CSV_HEADER));
        assert!(csv.contains(",5.0000000000000000e-1,"));
    }
}
