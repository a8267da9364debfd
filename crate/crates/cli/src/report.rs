//! Plot-ready CSV and JSON reports.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;
use shellkit_core::eval::PrPoint;
use shellkit_core::verify::{CheckStatus, Comparison, VerificationReport};
use shellkit_core::HistogramReport;

pub const HIST_FORMAT: &str = "shellkit-hist-v1";
pub const EVAL_FORMAT: &str = "shellkit-eval-v1";
pub const VERIFY_FORMAT: &str = "shellkit-verify-v1";

/// `bin_center,count,log_count` rows.
pub fn write_hist_csv<W: Write>(w: W, h: &HistogramReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["bin_center", "count", "log_count"])?;
    for ((c, n), l) in h.bin_centers().zip(&h.counts).zip(&h.log_counts) {
        out.write_record([c.to_string(), n.to_string(), l.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// `threshold,precision,recall` rows.
pub fn write_pr_csv<W: Write>(w: W, pr: &[PrPoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["threshold", "precision", "recall"])?;
    for p in pr {
        out.write_record([p.threshold.to_string(), p.precision.to_string(), p.recall.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct SpreadJson {
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
    pub ratio: f64,
}

#[derive(Debug, Serialize)]
pub struct HistJson {
    pub format: &'static str,
    pub kind: String,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub log_counts: Vec<f64>,
    pub mode: f64,
    pub total: u64,
    pub below_range: u64,
    pub above_range: u64,
    pub beyond_sqrt2_band: u64,
    pub fraction_beyond_sqrt2_band: f64,
    pub spread: Option<SpreadJson>,
}

impl HistJson {
    pub fn new(kind: &str, h: &HistogramReport) -> Self {
        HistJson {
            format: HIST_FORMAT,
            kind: kind.into(),
            edges: h.edges.clone(),
            counts: h.counts.clone(),
            log_counts: h.log_counts.clone(),
            mode: h.mode,
            total: h.total,
            below_range: h.below_range,
            above_range: h.above_range,
            beyond_sqrt2_band: h.beyond_sqrt2_band,
            fraction_beyond_sqrt2_band: h.fraction_beyond_sqrt2_band(),
            spread: h.spread.map(|s| SpreadJson { p10: s.p10, p50: s.p50, p90: s.p90, ratio: s.ratio() }),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EvalJson {
    pub format: &'static str,
    pub auroc: f64,
    pub positives: usize,
    pub negatives: usize,
    pub pr_points: usize,
}

#[derive(Debug, Serialize)]
pub struct CheckJson {
    pub name: String,
    pub status: &'static str,
    pub measured: Option<f64>,
    pub bound: Option<f64>,
    pub comparison: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct VerifyJson {
    pub format: &'static str,
    pub passed: bool,
    pub checks: Vec<CheckJson>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl VerifyJson {
    pub fn new(r: &VerificationReport) -> Self {
        VerifyJson {
            format: VERIFY_FORMAT,
            passed: r.all_passed(),
            checks: r
                .checks
                .iter()
                .map(|c| CheckJson {
                    name: c.name.clone(),
                    status: status_word(&c.status),
                    measured: finite(c.measured),
                    bound: finite(c.bound),
                    comparison: match c.comparison {
                        Comparison::AtMost => "<=",
                        Comparison::AtLeast => ">=",
                    },
                    reason: match &c.status {
                        CheckStatus::Skipped(r) => Some(r.clone()),
                        _ => None,
                    },
                })
                .collect(),
        }
    }
}

fn status_word(s: &CheckStatus) -> &'static str {
    match s {
        CheckStatus::Pass => "PASS",
        CheckStatus::Fail => "FAIL",
        CheckStatus::Skipped(_) => "SKIP",
    }
}

/// One line per check.
pub fn write_verify_table<W: Write>(mut w: W, r: &VerificationReport) -> Result<()> {
    for c in &r.checks {
        match &c.status {
            CheckStatus::Skipped(reason) => writeln!(w, "SKIP  {}: {reason}", c.name)?,
            s => {
                let op = if c.comparison == Comparison::AtMost { "<=" } else { ">=" };
                writeln!(w, "{:<4}  {}: {:.6} (need {op} {})", status_word(s), c.name, c.measured, c.bound)?
            }
        }
    }
    let failed = r.checks.iter().filter(|c| c.failed()).count();
    writeln!(w, "{} checks, {} failed", r.checks.len(), failed)?;
    Ok(())
}
