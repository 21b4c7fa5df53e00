use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Result;

/// Per-(trial, target) leakage bookkeeping, checked by [`audit`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditRecord {
    pub trial: usize,
    pub target: String,
    /// (task, season) keys of the seasons used to train the base model.
    pub train_keys: Vec<(String, String)>,
    /// Keys of the target auxiliary seasons handed to the TAL methods.
    pub aux_keys: Vec<(String, String)>,
    /// Keys of the held-out evaluation seasons.
    pub holdout_keys: Vec<(String, String)>,
    /// LTE cells present in the auxiliary data; must be zero.
    pub aux_lte_cells: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditSummary {
    pub records: usize,
    pub ok: bool,
}

/// Verify holdout discipline over a full run: auxiliary data carries no
/// LTE, no held-out season was trained on or used as auxiliary data, and
/// the target never contributed to base-model training.
pub fn audit(records: &[AuditRecord]) -> Result<AuditSummary> {
    for r in records {
        if r.aux_lte_cells != 0 {
            return Err(crate::Error::Other(format!(
                "audit: trial {} target {}: {} LTE cells reached auxiliary data",
                r.trial, r.target, r.aux_lte_cells
            )));
        }
        for key in &r.holdout_keys {
            if r.train_keys.contains(key) || r.aux_keys.contains(key) {
                return Err(crate::Error::Other(format!(
                    "audit: trial {} target {}: held-out season {}/{} leaked",
                    r.trial, r.target, key.0, key.1
                )));
            }
        }
        if r.train_keys.iter().any(|(task, _)| *task == r.target) {
            return Err(crate::Error::Other(format!(
                "audit: trial {} target {}: target season trained on",
                r.trial, r.target
            )));
        }
    }
    Ok(AuditSummary {
        records: records.len(),
        ok: true,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportMeta {
    pub master_seed: u64,
    pub trials: usize,
    /// Base-model fingerprint per "trial/target"; every method of a cell
    /// ran on the model with this fingerprint.
    pub model_fingerprints: BTreeMap<String, String>,
    pub method_configs: serde_json::Value,
    pub train_config: serde_json::Value,
    pub audit: AuditSummary,
    pub audit_records: Vec<AuditRecord>,
}

/// Per-target-task, per-method RMSE table averaged over trials, plus the
/// mean row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub methods: Vec<String>,
    pub targets: Vec<String>,
    /// rmse[target_idx][method_idx], deg C.
    pub rmse: Vec<Vec<f64>>,
    pub mean_row: Vec<f64>,
    pub meta: ReportMeta,
}

impl ExperimentReport {
    pub fn method_index(&self, name: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == name)
    }

    pub fn mean_of(&self, name: &str) -> Option<f64> {
        self.method_index(name).map(|i| self.mean_row[i])
    }

    /// Full-precision CSV; identical runs produce identical bytes.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        s.push_str("target");
        for m in &self.methods {
            s.push(',');
            s.push_str(&m.replace(',', ";"));
        }
        s.push('\n');
        for (t, row) in self.targets.iter().zip(&self.rmse) {
            s.push_str(t);
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s.push_str("MEAN");
        for v in &self.mean_row {
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
        s
    }

    /// Rounded text table for reading; oracle columns carry an asterisk
    /// in their method name.
    pub fn to_text_table(&self) -> String {
        let width = self
            .methods
            .iter()
            .map(|m| m.len())
            .max()
            .unwrap_or(8)
            .max(8);
        let tcol = self
            .targets
            .iter()
            .map(|t| t.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let mut s = String::new();
        s.push_str(&format!("{:tcol$}", "target"));
        for m in &self.methods {
            s.push_str(&format!("  {m:>width$}"));
        }
        s.push('\n');
        for (t, row) in self.targets.iter().zip(&self.rmse) {
            s.push_str(&format!("{t:tcol$}"));
            for v in row {
                s.push_str(&format!("  {v:>width$.2}"));
            }
            s.push('\n');
        }
        s.push_str(&format!("{:tcol$}", "MEAN"));
        for v in &self.mean_row {
            s.push_str(&format!("  {v:>width$.2}"));
        }
        s.push('\n');
        s
    }

    /// Write report.csv, report.txt, and meta.json under a directory.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut csv = std::fs::File::create(dir.join("report.csv"))?;
        csv.write_all(self.to_csv_string().as_bytes())?;
        let mut txt = std::fs::File::create(dir.join("report.txt"))?;
        txt.write_all(self.to_text_table().as_bytes())?;
        let meta = std::fs::File::create(dir.join("meta.json"))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(meta), &self.meta)?;
        Ok(())
    }

    /// Keep only the named method columns (for per-axis-value sweep
    /// reports).
    pub fn project(&self, methods: &[String]) -> ExperimentReport {
        let idx: Vec<usize> = methods
            .iter()
            .filter_map(|m| self.method_index(m))
            .collect();
        ExperimentReport {
            methods: idx.iter().map(|&i| self.methods[i].clone()).collect(),
            targets: self.targets.clone(),
            rmse: self
                .rmse
                .iter()
                .map(|row| idx.iter().map(|&i| row[i]).collect())
                .collect(),
            mean_row: idx.iter().map(|&i| self.mean_row[i]).collect(),
            meta: self.meta.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dummy_report() -> ExperimentReport {
        ExperimentReport {
            methods: vec!["A".into(), "B*".into()],
            targets: vec!["t1".into(), "t2".into()],
            rmse: vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            mean_row: vec![2.0, 3.0],
            meta: ReportMeta {
                master_seed: 0,
                trials: 1,
                model_fingerprints: BTreeMap::new(),
                method_configs: serde_json::json!([]),
                train_config: serde_json::json!({}),
                audit: AuditSummary { records: 0, ok: true },
                audit_records: Vec::new(),
            },
        }
    }

    #[test]
    fn csv_layout() {
        let r = dummy_report();
        let csv = r.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "target,A,B*");
        assert_eq!(lines[1], "t1,1,2");
        assert_eq!(lines[3], "MEAN,2,3");
    }

    #[test]
    fn audit_catches_leak() {
        let rec = AuditRecord {
            trial: 0,
            target: "t".into(),
            train_keys: vec![("a".into(), "2000".into())],
            aux_keys: vec![("t".into(), "2001".into())],
            holdout_keys: vec![("t".into(), "2001".into())],
            aux_lte_cells: 0,
        };
        assert!(audit(&[rec]).is_err());
        let rec2 = AuditRecord {
            trial: 0,
            target: "t".into(),
            train_keys: vec![("a".into(), "2000".into())],
            aux_keys: vec![("t".into(), "2002".into())],
            holdout_keys: vec![("t".into(), "2001".into())],
            aux_lte_cells: 3,
        };
        assert!(audit(&[rec2]).is_err());
        let ok = AuditRecord {
            trial: 0,
            target: "t".into(),
            train_keys: vec![("a".into(), "2000".into())],
            aux_keys: vec![("t".into(), "2002".into())],
            holdout_keys: vec![("t".into(), "2001".into())],
            aux_lte_cells: 0,
        };
        assert!(audit(&[ok]).unwrap().ok);
    }

    #[test]
    fn projection_keeps_columns() {
        let r = dummy_report();
        let p = r.project(&["B*".to_string()]);
        assert_eq!(p.methods, vec!["B*"]);
        assert_eq!(p.rmse, vec![vec![2.0], vec![4.0]]);
        assert_eq!(p.mean_row, vec![3.0]);
    }
}
