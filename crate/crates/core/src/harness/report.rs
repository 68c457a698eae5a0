use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::stabilization::{DiscrepancyEstimate, TailPoint};
use crate::stats::{CovarianceReport, LinearFit};

use super::spec::{ExperimentKind, ExperimentSpec, OutputFormat};

/// Column names of the CSV report.
pub const CSV_HEADER: &str = "experiment,n,replicas,mean,variance,var_per_volume,d_k,d_w,psi_sup,notes";

/// Counts from the paired MST traces of a two-arm campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoArmSummary {
    /// (replica, site) pairs examined.
    pub pairs: usize,
    /// Pairs with at least one removed-edge mismatch.
    pub pairs_with_mismatch: usize,
    /// Paired steps with `|f_i| < |f~_i|`.
    pub mismatched_steps: usize,
    /// Scales `u` at which the two-arm event was evaluated.
    pub checks: usize,
    pub fired: usize,
    /// Checks where the event did not fire.
    pub violations: usize,
}

/// One row per window scale (and per coordinate for vector campaigns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: f64,
    pub inner_scale: f64,
    pub replicas: usize,
    #[serde(default)]
    pub component: Option<usize>,
    pub mean: f64,
    pub variance: f64,
    pub var_per_volume: f64,
    pub d_k: Option<f64>,
    pub d_w: Option<f64>,
    /// Bootstrap standard error of `d_k`.
    #[serde(default)]
    pub d_k_std_err: Option<f64>,
    pub psi_sup: Option<f64>,
    #[serde(default)]
    pub psi_std_err: Option<f64>,
    #[serde(default)]
    pub radius_tail: Option<Vec<TailPoint>>,
    #[serde(default)]
    pub censored: Option<usize>,
    #[serde(default)]
    pub discrepancy: Option<DiscrepancyEstimate>,
    #[serde(default)]
    pub covariance: Option<CovarianceReport>,
    #[serde(default)]
    pub two_arm: Option<TwoArmSummary>,
    pub notes: String,
}

/// Campaign output. Every byte is a function of the spec alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub spec_hash: String,
    pub seed: u64,
    pub version: String,
    pub spec: ExperimentSpec,
    pub rows: Vec<ReportRow>,
    /// Fit of `log variance` on `log n` across rows (scalar campaigns).
    pub variance_fit: Option<LinearFit>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let notes = r.notes.replace([',', '\n', '\r'], ";");
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                self.experiment.name(),
                num(r.n),
                r.replicas,
                num(r.mean),
                num(r.variance),
                num(r.var_per_volume),
                opt(r.d_k),
                opt(r.d_w),
                opt(r.psi_sup),
                notes
            )
            .expect("string write");
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Report> {
        serde_json::from_str(text).map_err(|e| GeoError::param("report", e.to_string()))
    }

    /// File name `<experiment>-<first 16 hex digits of the spec hash>.<ext>`.
    pub fn file_name(&self, format: OutputFormat) -> String {
        report_file_name(self.experiment, &self.spec_hash, format)
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

pub fn report_file_name(kind: ExperimentKind, hash: &str, format: OutputFormat) -> String {
    let ext = match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    format!("{}-{}.{ext}", kind.name(), &hash[..16.min(hash.len())])
}

fn io_err(path: &Path, e: std::io::Error) -> GeoError {
    GeoError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes the report into `dir` (created if missing) and returns the path.
pub fn write_report(report: &Report, dir: &Path, format: OutputFormat) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(report.file_name(format));
    fs::write(&path, report.render(format)).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// A JSON report for `spec` previously written to `dir`, if its embedded
/// hash matches the spec.
pub fn load_cached(spec: &ExperimentSpec, dir: &Path) -> Option<Report> {
    let hash = spec.hash();
    let path = dir.join(report_file_name(spec.experiment, &hash, OutputFormat::Json));
    let text = fs::read_to_string(path).ok()?;
    let r = Report::from_json(&text).ok()?;
    (r.spec_hash == hash && &r.spec == spec).then_some(r)
}
