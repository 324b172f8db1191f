//! Evaluation reports and the combined sweep tables, as CSV and Markdown.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fgts_core::metrics::{mean_triple, GeneratorMetrics, MetricTriple};
use fgts_core::TokenStrategy;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Row label in combined tables, e.g. `Patch (196 tokens)` or `JPEG (70)`.
    pub name: String,
    pub token_strategy: TokenStrategy,
    pub selection: String,
    pub k: usize,
    pub protocol: String,
    pub token_indices: Vec<usize>,
    pub n_reference: usize,
    pub rows: Vec<GeneratorMetrics>,
    pub aggregate: MetricTriple,
    /// Digest of the result-determining config, inputs, ranking and model.
    pub fingerprint: String,
}

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).expect("in-memory csv write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

impl EvalReport {
    /// The aggregate row recomputed from the generator rows.
    pub fn recomputed_aggregate(&self) -> MetricTriple {
        mean_triple(self.rows.iter().map(|r| r.metrics))
    }

    pub fn generator_acc(&self, generator: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.generator == generator)
            .map(|r| r.metrics.acc)
    }

    /// One line per generator plus an `Avg` line; values are fractions
    /// written at full precision.
    pub fn to_csv(&self) -> String {
        csv_string(|w| {
            w.write_record(["generator", "n_real", "n_fake", "acc", "auc", "ap", "fingerprint"])?;
            for r in &self.rows {
                let m = r.metrics;
                w.write_record([
                    r.generator.clone(),
                    r.n_real.to_string(),
                    r.n_fake.to_string(),
                    m.acc.to_string(),
                    m.auc.to_string(),
                    m.ap.to_string(),
                    self.fingerprint.clone(),
                ])?;
            }
            let a = self.aggregate;
            let n_fake: usize = self.rows.iter().map(|r| r.n_fake).sum();
            let n_real = self.rows.first().map_or(0, |r| r.n_real);
            w.write_record([
                "Avg".to_string(),
                n_real.to_string(),
                n_fake.to_string(),
                a.acc.to_string(),
                a.auc.to_string(),
                a.ap.to_string(),
                self.fingerprint.clone(),
            ])
        })
    }

    /// Percentages to two decimals.
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "## {}\n", self.name);
        let _ = writeln!(
            s,
            "Tokens: {} | selection: {} | K = {} | protocol: {} | reference samples: {} | positive class: fake\n",
            self.token_strategy, self.selection, self.k, self.protocol, self.n_reference
        );
        s.push_str("| Generator | Real | Fake | Acc | AUC | AP |\n|---|---:|---:|---:|---:|---:|\n");
        for r in &self.rows {
            let m = r.metrics;
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} |",
                r.generator,
                r.n_real,
                r.n_fake,
                pct(m.acc),
                pct(m.auc),
                pct(m.ap)
            );
        }
        let a = self.aggregate;
        let _ = writeln!(
            s,
            "| **Avg** | | | {} | {} | {} |",
            pct(a.acc),
            pct(a.auc),
            pct(a.ap)
        );
        let _ = writeln!(s, "\nSelected tokens: {:?}\n", self.token_indices);
        let _ = writeln!(s, "Fingerprint: `{}`", self.fingerprint);
        s
    }

    /// Writes `report.csv`, `report.md` and `report.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        write_file(&dir.join("report.csv"), &self.to_csv())?;
        write_file(&dir.join("report.md"), &self.to_markdown())?;
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| HarnessError::stage(Stage::Report, e))?;
        write_file(&dir.join("report.json"), &json)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::invalid(Stage::Report, e))
    }
}

/// Generators appearing in any report, in first-seen order.
fn generator_columns(reports: &[&EvalReport]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for r in reports {
        for row in &r.rows {
            if !cols.contains(&row.generator) {
                cols.push(row.generator.clone());
            }
        }
    }
    cols
}

/// Table with one row per report: per-generator accuracy, then the average
/// accuracy, AUC and AP.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub title: String,
    pub row_header: String,
    pub rows: Vec<(String, EvalReport)>,
}

impl ComparisonTable {
    pub fn new(title: impl Into<String>, row_header: impl Into<String>) -> Self {
        ComparisonTable {
            title: title.into(),
            row_header: row_header.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, report: EvalReport) {
        self.rows.push((label.into(), report));
    }

    fn columns(&self) -> Vec<String> {
        generator_columns(&self.rows.iter().map(|(_, r)| r).collect::<Vec<_>>())
    }

    pub fn to_csv(&self) -> String {
        let cols = self.columns();
        csv_string(|w| {
            let mut header = vec![self.row_header.clone()];
            header.extend(cols.iter().cloned());
            header.extend(["avg_acc", "avg_auc", "avg_ap", "fingerprint"].map(String::from));
            w.write_record(&header)?;
            for (label, r) in &self.rows {
                let mut line = vec![label.clone()];
                line.extend(cols.iter().map(|g| r.generator_acc(g).map_or(String::new(), |v| v.to_string())));
                line.extend([
                    r.aggregate.acc.to_string(),
                    r.aggregate.auc.to_string(),
                    r.aggregate.ap.to_string(),
                    r.fingerprint.clone(),
                ]);
                w.write_record(&line)?;
            }
            Ok(())
        })
    }

    pub fn to_markdown(&self) -> String {
        let cols = self.columns();
        let mut s = format!("## {}\n\n| {} |", self.title, self.row_header);
        for g in &cols {
            let _ = write!(s, " {g} |");
        }
        s.push_str(" Avg-acc | Avg-AUC | Avg-AP |\n|---|");
        s.push_str(&"---:|".repeat(cols.len() + 3));
        s.push('\n');
        for (label, r) in &self.rows {
            let _ = write!(s, "| {label} |");
            for g in &cols {
                let _ = write!(s, " {} |", r.generator_acc(g).map_or("-".into(), pct));
            }
            let a = r.aggregate;
            let _ = writeln!(s, " {} | {} | {} |", pct(a.acc), pct(a.auc), pct(a.ap));
        }
        s
    }

    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        write_file(&dir.join(format!("{stem}.csv")), &self.to_csv())?;
        write_file(&dir.join(format!("{stem}.md")), &self.to_markdown())
    }
}
