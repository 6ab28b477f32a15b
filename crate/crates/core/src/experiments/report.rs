//! Experiment reports: fitted quantities against theory targets, with
//! explicit pass/fail/inconclusive verdicts, plus deterministic JSON/CSV
//! emission.

use crate::Result;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// One fitted quantity with its target and the tolerance the verdict used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedQuantity {
    pub name: String,
    pub estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Where the target comes from (eigenvalue, rate profile, fixed point).
    pub provenance: String,
    pub verdict: Verdict,
}

impl FittedQuantity {
    /// Verdict by absolute distance to the target: monotone in `tolerance`
    /// (loosening can only flip Fail to Pass).
    pub fn against_target(
        name: impl Into<String>,
        estimate: f64,
        std_error: Option<f64>,
        target: f64,
        tolerance: f64,
        provenance: impl Into<String>,
    ) -> Self {
        let verdict = if !estimate.is_finite() {
            Verdict::Inconclusive
        } else if (estimate - target).abs() <= tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        FittedQuantity {
            name: name.into(),
            estimate,
            std_error,
            target: Some(target),
            tolerance: Some(tolerance),
            provenance: provenance.into(),
            verdict,
        }
    }

    pub fn informational(
        name: impl Into<String>,
        estimate: f64,
        std_error: Option<f64>,
        provenance: impl Into<String>,
    ) -> Self {
        FittedQuantity {
            name: name.into(),
            estimate,
            std_error,
            target: None,
            tolerance: None,
            provenance: provenance.into(),
            verdict: Verdict::Inconclusive,
        }
    }
}

/// Scenario-stamped experiment outcome. The wall-clock runtime is kept out
/// of the serialized form so identical (config, seed) runs emit
/// byte-identical reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub scenario_digest: String,
    pub seed: u64,
    pub replica_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub survivor_count: Option<u64>,
    pub quantities: Vec<FittedQuantity>,
    pub notes: Vec<String>,
    #[serde(skip, default)]
    pub runtime: Duration,
}

impl ExperimentReport {
    /// Fail if any quantity failed; otherwise Pass if at least one passed;
    /// otherwise Inconclusive.
    pub fn overall(&self) -> Verdict {
        if self.quantities.iter().any(|q| q.verdict == Verdict::Fail) {
            Verdict::Fail
        } else if self.quantities.iter().any(|q| q.verdict == Verdict::Pass) {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,estimate,std_error,target,tolerance,verdict\n");
        for q in &self.quantities {
            let se = q.std_error.map_or(String::new(), |v| v.to_string());
            let target = q.target.map_or(String::new(), |v| v.to_string());
            let tol = q.tolerance.map_or(String::new(), |v| v.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{:?}\n",
                q.name, q.estimate, se, target, tol, q.verdict
            ));
        }
        out
    }
}

/// Write `<experiment>.json` and `<experiment>.csv` under `dir`.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let json_path = dir.join(format!("{}.json", report.experiment));
    let csv_path = dir.join(format!("{}.csv", report.experiment));
    std::fs::write(&json_path, report.to_json())?;
    std::fs::write(&csv_path, report.to_csv())?;
    Ok((json_path, csv_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> ExperimentReport {
        ExperimentReport {
            experiment: "sample".into(),
            scenario_digest: "abcd".into(),
            seed: 7,
            replica_count: 10,
            survivor_count: Some(9),
            quantities: vec![
                FittedQuantity::against_target("slope", 0.48, Some(0.01), 0.5, 0.05, "rate profile"),
                FittedQuantity::informational("exponent", 1.2, None, "diagnostic"),
            ],
            notes: vec!["note".into()],
            runtime: Duration::from_secs(1),
        }
    }

    #[test]
    fn json_round_trip() {
        let r = sample_report();
        let parsed: ExperimentReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(parsed.experiment, r.experiment);
        assert_eq!(parsed.quantities, r.quantities);
        assert_eq!(parsed.overall(), Verdict::Pass);
    }

    #[test]
    fn csv_row_count_matches_quantities() {
        let r = sample_report();
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 1 + r.quantities.len());
    }

    #[test]
    fn runtime_never_serialized() {
        let r = sample_report();
        assert!(!r.to_json().contains("runtime"));
    }

    #[test]
    fn verdicts_monotone_in_tolerance() {
        let tight = FittedQuantity::against_target("x", 0.6, None, 0.5, 0.05, "p");
        let loose = FittedQuantity::against_target("x", 0.6, None, 0.5, 0.2, "p");
        assert_eq!(tight.verdict, Verdict::Fail);
        assert_eq!(loose.verdict, Verdict::Pass);
    }

    #[test]
    fn overall_fail_dominates() {
        let mut r = sample_report();
        r.quantities
            .push(FittedQuantity::against_target("bad", 2.0, None, 0.5, 0.05, "p"));
        assert_eq!(r.overall(), Verdict::Fail);
    }

    #[test]
    fn emit_writes_both_files() {
        let dir = std::env::temp_dir().join(format!("bbm-report-test-{}", std::process::id()));
        let r = sample_report();
        let (j, c) = emit_report(&r, &dir).unwrap();
        assert!(j.exists() && c.exists());
        let again = emit_report(&r, &dir).unwrap();
        assert_eq!(std::fs::read(&j).unwrap(), std::fs::read(&again.0).unwrap());
        std::fs::remove_dir_all(&dir).ok();
    }
}
