//! Run reports: a JSON document plus flat CSV tables for plotting.
//!
//! Output files in the report directory:
//!
//! | file              | columns                                                                     |
//! |-------------------|-----------------------------------------------------------------------------|
//! | `report.json`     | full [`RunReport`]                                                          |
//! | `records.csv`     | `suite,seed,check,inputs_digest,lhs,rhs,gap,relative_gap,tolerance,pass`    |
//! | `gaps.csv`        | `check,gap` (check label is `suite/check/seed`)                            |
//! | `convergence.csv` | `check,level,value,residual,ratio` (only when tables are present)           |
//!
//! Wall times live only in the JSON report so that the CSV files of two runs of
//! the same config are byte-identical.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use capmix_core::functionals::{InequalityReport, SCALE_FLOOR};

/// One check outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub suite: String,
    pub seed: Option<u64>,
    pub check: String,
    pub inputs_digest: String,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub relative_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Error text when the check could not be evaluated.
    pub error: Option<String>,
    pub wall_ms: f64,
}

impl CheckRecord {
    pub fn from_inequality(suite: &str, seed: Option<u64>, check: &str, r: &InequalityReport) -> Self {
        Self {
            suite: suite.into(),
            seed,
            check: check.into(),
            inputs_digest: String::new(),
            lhs: r.lhs,
            rhs: r.rhs,
            gap: r.gap,
            relative_gap: r.relative_gap,
            tolerance: r.tolerance,
            pass: r.pass,
            error: None,
            wall_ms: 0.0,
        }
    }

    /// `|lhs - rhs| <= tolerance * max(|lhs|, |rhs|)`.
    pub fn identity(suite: &str, seed: Option<u64>, check: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let gap = lhs - rhs;
        let scale = lhs.abs().max(rhs.abs()).max(SCALE_FLOOR);
        Self {
            suite: suite.into(),
            seed,
            check: check.into(),
            inputs_digest: String::new(),
            lhs,
            rhs,
            gap,
            relative_gap: gap / scale,
            tolerance,
            pass: gap.abs() <= tolerance * scale,
            error: None,
            wall_ms: 0.0,
        }
    }

    /// A deviation that should stay below `tolerance`; `rhs` is zero.
    pub fn bound(suite: &str, seed: Option<u64>, check: &str, deviation: f64, tolerance: f64) -> Self {
        Self {
            suite: suite.into(),
            seed,
            check: check.into(),
            inputs_digest: String::new(),
            lhs: deviation,
            rhs: 0.0,
            gap: deviation,
            relative_gap: deviation,
            tolerance,
            pass: deviation <= tolerance,
            error: None,
            wall_ms: 0.0,
        }
    }

    pub fn failed(suite: &str, seed: Option<u64>, check: &str, error: String) -> Self {
        Self {
            suite: suite.into(),
            seed,
            check: check.into(),
            inputs_digest: String::new(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            gap: f64::NAN,
            relative_gap: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
            error: Some(error),
            wall_ms: 0.0,
        }
    }

    pub fn label(&self) -> String {
        match self.seed {
            Some(s) => format!("{}/{}/{}", self.suite, self.check, s),
            None => format!("{}/{}", self.suite, self.check),
        }
    }
}

/// Hex SHA-256 prefix identifying the inputs of a check.
pub fn digest(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: u32,
    pub value: f64,
    pub residual: f64,
    /// `residual(level - 1) / residual(level)`; absent on the first row.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub check: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn from_levels(check: &str, levels: &[(u32, f64, f64)]) -> Self {
        let rows = levels
            .iter()
            .enumerate()
            .map(|(i, &(level, value, residual))| ConvergenceRow {
                level,
                value,
                residual,
                ratio: (i > 0).then(|| levels[i - 1].2 / residual),
            })
            .collect();
        Self { check: check.into(), rows }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

/// Numerical health of a run. Informational only; nothing here passes or fails.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Largest spectral condition number of `A_F` over the mesh nodes.
    pub max_condition_a_f: Option<f64>,
    /// Largest relative asymmetry of `tau` before symmetrisation, over all bodies.
    pub max_tau_asymmetry: Option<f64>,
    /// Boundary nodes left out of the Robin residual because `<mu, E_{n+1}>` is tiny.
    pub robin_skipped: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: serde_json::Value,
    pub records: Vec<CheckRecord>,
    pub summary: Summary,
    pub convergence: Vec<ConvergenceTable>,
    pub diagnostics: Diagnostics,
}

impl RunReport {
    pub fn new(config: serde_json::Value, records: Vec<CheckRecord>, convergence: Vec<ConvergenceTable>) -> Self {
        let passed = records.iter().filter(|r| r.pass).count();
        let summary = Summary { total: records.len(), passed, failed: records.len() - passed };
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config,
            records,
            summary,
            convergence,
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    /// Writes `report.json`, `records.csv`, `gaps.csv` and, when present,
    /// `convergence.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(dir.join("report.json"), json + "\n")?;

        let mut records = csv::Writer::from_path(dir.join("records.csv"))?;
        records.write_record(["suite", "seed", "check", "inputs_digest", "lhs", "rhs", "gap", "relative_gap", "tolerance", "pass"])?;
        for r in &self.records {
            records.write_record([
                r.suite.clone(),
                r.seed.map(|s| s.to_string()).unwrap_or_default(),
                r.check.clone(),
                r.inputs_digest.clone(),
                num(r.lhs),
                num(r.rhs),
                num(r.gap),
                num(r.relative_gap),
                num(r.tolerance),
                r.pass.to_string(),
            ])?;
        }
        records.flush()?;

        let mut gaps = csv::Writer::from_path(dir.join("gaps.csv"))?;
        gaps.write_record(["check", "gap"])?;
        for r in &self.records {
            gaps.write_record([r.label(), num(r.gap)])?;
        }
        gaps.flush()?;

        if !self.convergence.is_empty() {
            write_convergence(&dir.join("convergence.csv"), &self.convergence)?;
        }
        Ok(())
    }
}

pub fn write_convergence(path: &Path, tables: &[ConvergenceTable]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["check", "level", "value", "residual", "ratio"])?;
    for t in tables {
        for row in &t.rows {
            w.write_record([
                t.check.clone(),
                row.level.to_string(),
                num(row.value),
                num(row.residual),
                row.ratio.map(num).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()
}

/// Shortest round-trip decimal form.
fn num(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_matches_records() {
        let recs = vec![
            CheckRecord::bound("s", Some(1), "a", 0.5, 1.0),
            CheckRecord::bound("s", Some(2), "a", 2.0, 1.0),
            CheckRecord::identity("s", None, "b", 1.0, 1.0 + 1e-12, 1e-10),
        ];
        let r = RunReport::new(serde_json::Value::Null, recs, Vec::new());
        assert_eq!(r.summary, Summary { total: 3, passed: 2, failed: 1 });
        assert!(!r.all_pass());
    }

    #[test]
    fn convergence_ratios() {
        let t = ConvergenceTable::from_levels("x", &[(2, 1.0, 1e-2), (3, 1.0, 2.5e-3)]);
        assert_eq!(t.rows[0].ratio, None);
        assert_eq!(t.rows[1].ratio, Some(4.0));
    }

    #[test]
    fn digest_is_stable_and_separated() {
        assert_eq!(digest(&["a", "bc"]), digest(&["a", "bc"]));
        assert_ne!(digest(&["a", "bc"]), digest(&["ab", "c"]));
        assert_eq!(digest(&["a"]).len(), 16);
    }
}
