use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ParseEnumError;

/// Modality or signal label of pooled rows.
pub const POOLED: &str = "all";

pub const CSV_HEADER: &str = "modality,signal,mean_random,mean_clustered,delta,n,p";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub modality: String,
    pub signal: String,
    pub mean_random: f64,
    pub mean_clustered: f64,
    /// `mean_clustered - mean_random`.
    pub delta: f64,
    /// Number of folds contributing.
    pub n: usize,
    /// Two-sided sign test on per-fold differences.
    pub sign_test_p: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub rows: Vec<AlignmentRow>,
}

impl AlignmentReport {
    pub fn row(&self, modality: &str, signal: &str) -> Option<&AlignmentRow> {
        self.rows.iter().find(|r| r.modality == modality && r.signal == signal)
    }

    pub fn overall(&self) -> Option<&AlignmentRow> {
        self.row(POOLED, POOLED)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(ParseEnumError { kind: "report format", value: other.to_owned() }),
        }
    }
}

pub fn summarize(report: &AlignmentReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("reports serialise") + "\n",
        ReportFormat::Csv => {
            let mut out = format!("{CSV_HEADER}\n");
            for r in &report.rows {
                writeln!(
                    out,
                    "{},{},{:.6},{:.6},{:.6},{},{:.6}",
                    r.modality, r.signal, r.mean_random, r.mean_clustered, r.delta, r.n, r.sign_test_p
                )
                .unwrap();
            }
            out
        }
        ReportFormat::Text => {
            let mut out = format!(
                "{:<9} {:<16} {:>11} {:>14} {:>9} {:>4} {:>8}\n",
                "modality", "signal", "random", "clustered", "delta", "n", "p"
            );
            for r in &report.rows {
                writeln!(
                    out,
                    "{:<9} {:<16} {:>11.4} {:>14.4} {:>+9.4} {:>4} {:>8.4}",
                    r.modality, r.signal, r.mean_random, r.mean_clustered, r.delta, r.n, r.sign_test_p
                )
                .unwrap();
            }
            out
        }
    }
}

/// Exact two-sided sign test: zero differences are dropped, the smaller of
/// the positive and negative counts is compared against Binomial(n, 1/2).
pub fn sign_test(differences: &[f64]) -> f64 {
    let pos = differences.iter().filter(|&&d| d > 0.0).count();
    let neg = differences.iter().filter(|&&d| d < 0.0).count();
    let n = pos + neg;
    if n == 0 {
        return 1.0;
    }
    let tail = pos.min(neg);
    let ln_half_n = n as f64 * 0.5f64.ln();
    let mut ln_choose = 0.0;
    let mut cdf = 0.0;
    for i in 0..=tail {
        if i > 0 {
            ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        cdf += (ln_choose + ln_half_n).exp();
    }
    (2.0 * cdf).min(1.0)
}
