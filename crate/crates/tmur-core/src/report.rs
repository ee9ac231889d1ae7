//! Deterministic artifact files: `key=value` metrics, CSV tables, and
//! training traces.
//!
//! Artifacts never contain timestamps or wall-clock data, and every float is
//! written with 17 significant digits, so rerunning a seeded experiment
//! reproduces each file byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::metrics::{HistogramBin, MetricsReport, ReliabilityBin};
use crate::train::EpochStats;

/// Canonical float formatting for artifacts (17 significant digits).
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Mean and sample standard deviation (n − 1 denominator; 0 for n = 1).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n > 0, "mean_std needs at least one value");
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Write `key=value` lines in the given order.
pub fn write_keyvalues(path: impl AsRef<Path>, entries: &[(String, String)]) -> Result<()> {
    let mut text = String::new();
    for (k, v) in entries {
        let _ = writeln!(text, "{k}={v}");
    }
    fs::write(path, text)?;
    Ok(())
}

/// The scalar metrics of a report, in fixed order.
pub fn metrics_entries(report: &MetricsReport) -> Vec<(String, String)> {
    vec![
        ("num_samples".into(), report.num_samples.to_string()),
        ("num_classes".into(), report.num_classes.to_string()),
        ("bins".into(), report.bins.to_string()),
        ("accuracy".into(), fmt_float(report.accuracy)),
        ("prob_ece".into(), fmt_float(report.prob_ece)),
        ("u_ece".into(), fmt_float(report.u_ece)),
        (
            "mean_uncertainty".into(),
            fmt_float(report.mean_uncertainty),
        ),
    ]
}

pub fn write_reliability_csv(path: impl AsRef<Path>, bins: &[ReliabilityBin]) -> Result<()> {
    let mut text = String::from("bin_lo,bin_hi,count,mean_axis,accuracy\n");
    for b in bins {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            fmt_float(b.lo),
            fmt_float(b.hi),
            b.count,
            fmt_float(b.mean_axis),
            fmt_float(b.accuracy)
        );
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_histogram_csv(path: impl AsRef<Path>, bins: &[HistogramBin]) -> Result<()> {
    let mut text = String::from("bin_lo,bin_hi,count\n");
    for b in bins {
        let _ = writeln!(text, "{},{},{}", fmt_float(b.lo), fmt_float(b.hi), b.count);
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_trace_csv(path: impl AsRef<Path>, trace: &[EpochStats]) -> Result<()> {
    let mut text = String::from(
        "epoch,lr,loss_total,loss_fused,loss_view,loss_balance,loss_diversity,train_accuracy,test_accuracy\n",
    );
    for e in trace {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{}",
            e.epoch,
            fmt_float(e.lr),
            fmt_float(e.loss.total),
            fmt_float(e.loss.fused),
            fmt_float(e.loss.view),
            fmt_float(e.loss.balance),
            fmt_float(e.loss.diversity),
            fmt_float(e.train_accuracy),
            fmt_float(e.test_accuracy)
        );
    }
    fs::write(path, text)?;
    Ok(())
}

/// Write the full evaluation bundle into `dir`: `metrics.txt` plus the
/// reliability and histogram tables. Extra entries are appended to the
/// metrics file after the standard ones.
pub fn write_metrics_bundle(
    dir: impl AsRef<Path>,
    report: &MetricsReport,
    extra: &[(String, String)],
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut entries = metrics_entries(report);
    entries.extend_from_slice(extra);
    write_keyvalues(dir.join("metrics.txt"), &entries)?;
    write_reliability_csv(
        dir.join("reliability_confidence.csv"),
        &report.reliability_confidence,
    )?;
    write_reliability_csv(
        dir.join("reliability_uncertainty.csv"),
        &report.reliability_uncertainty,
    )?;
    write_histogram_csv(dir.join("uncertainty_histogram.csv"), &report.histogram)?;
    Ok(())
}
