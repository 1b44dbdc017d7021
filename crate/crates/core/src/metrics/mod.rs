//! Lifelong-learning metrics computed from lifetime logs.
//!
//! The [`PerformanceTable`] condenses a lifetime into per-(task, eval block)
//! performance values and per-task training curves. Table-level metrics
//! (PM, MTP, MEP, FT, BT) are evaluated in exact rational arithmetic on the
//! shortest decimal form of each logged reward, so a reward of `0.8` is
//! treated as 4/5 rather than its binary approximation; results are rounded
//! to `f64` once at the end. Curve metrics (RP, SE) compare a lifetime's
//! training curves against single-task experts and use plain `f64`.
//!
//! Truncated episodes (cut off by a step limit) never contribute to any
//! metric.

mod compute;
mod curves;
mod report;
mod ste;
mod table;

use std::path::PathBuf;

use num::{BigInt, BigRational, ToPrimitive, Zero};
use thiserror::Error;

use crate::eventlog::LogError;

pub use compute::{
    compute_bt, compute_ft, compute_mep, compute_mtp, compute_pm, compute_rp, compute_se,
    MetricResult,
};
pub use curves::{saturation, smooth_curve, trapezoid_auc, SATURATION_FRACTION, SMOOTHING_WINDOW};
pub use report::{
    aggregate_report, curve_rows, lifetime_dirs, lifetime_report, lifetime_report_from_dir,
    run_curve_rows, run_report, write_curve_csv, write_report_csv, write_report_json,
    AggregateStat, CurveRow, LifetimeReport, MetricSet, MetricsReport, TaskBreakdown, METRIC_NAMES,
};
pub use ste::{SteRun, SteStore};
pub use table::{BlockInfo, PerformanceTable};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("episode {episode_id}: reward {reward} is not finite")]
    NonFinite { episode_id: u64, reward: f64 },
    #[error("{}: {message}", path.display())]
    Store { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: no lifetime directories found", .0.display())]
    NoLifetimes(PathBuf),
}

/// The exact value of `x`'s shortest round-trip decimal representation.
pub fn exact_decimal(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    // `Display` for f64 prints the shortest round-trip digits without an
    // exponent, e.g. "-0.2", "3", "0.0000001".
    let text = format!("{x}");
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt = format!("{int}{frac}").parse().ok()?;
    let denom = num::pow(BigInt::from(10), frac.len());
    let value = BigRational::new(numer, denom);
    Some(if negative { -value } else { value })
}

/// Exact mean; `None` for an empty slice.
pub(crate) fn exact_mean(values: &[BigRational]) -> Option<BigRational> {
    if values.is_empty() {
        return None;
    }
    let sum = values.iter().fold(BigRational::zero(), |acc, v| acc + v);
    Some(sum / BigInt::from(values.len()))
}

pub(crate) fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}
