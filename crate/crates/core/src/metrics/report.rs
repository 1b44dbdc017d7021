use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num::{BigInt, BigRational, Zero};
use serde::{Deserialize, Serialize};

use super::compute::{
    compute_bt, compute_ft, compute_mep, compute_mtp, compute_pm, compute_rp, compute_se,
    MetricResult,
};
use super::{exact_decimal, exact_mean, to_f64, MetricsError, PerformanceTable, SteStore};
use crate::eventlog::{self, LifetimeMetadata, LifetimeStatus};

pub const METRIC_NAMES: [&str; 7] = ["pm", "mtp", "mep", "ft", "bt", "rp", "se"];

/// One value per metric, in a fixed order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet<T> {
    pub pm: T,
    pub mtp: T,
    pub mep: T,
    pub ft: T,
    pub bt: T,
    pub rp: T,
    pub se: T,
}

impl<T> MetricSet<T> {
    pub fn entries(&self) -> [(&'static str, &T); 7] {
        [
            ("pm", &self.pm),
            ("mtp", &self.mtp),
            ("mep", &self.mep),
            ("ft", &self.ft),
            ("bt", &self.bt),
            ("rp", &self.rp),
            ("se", &self.se),
        ]
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> MetricSet<U> {
        MetricSet {
            pm: f(&self.pm),
            mtp: f(&self.mtp),
            mep: f(&self.mep),
            ft: f(&self.ft),
            bt: f(&self.bt),
            rp: f(&self.rp),
            se: f(&self.se),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskBreakdown {
    pub metrics: MetricSet<Option<f64>>,
    /// Eval block number -> P(task, block).
    pub eval_performance: BTreeMap<usize, f64>,
    pub training_episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeReport {
    pub lifetime: String,
    pub metrics: MetricSet<Option<f64>>,
    pub per_task: BTreeMap<String, TaskBreakdown>,
    /// Why metric terms (or whole metrics) are missing, keyed by metric.
    pub notes: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateStat {
    pub mean: Option<f64>,
    /// Sample standard deviation; needs at least two lifetimes.
    pub std: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub lifetimes: Vec<LifetimeReport>,
    pub aggregate: MetricSet<AggregateStat>,
    pub notes: Vec<String>,
}

/// All seven metrics for one lifetime. RP and SE need an expert store.
pub fn lifetime_report(
    label: &str,
    table: &PerformanceTable,
    ste: Option<&SteStore>,
) -> LifetimeReport {
    let none = || MetricResult {
        value: None,
        per_task: BTreeMap::new(),
        notes: vec!["no single-task expert store given".to_string()],
    };
    let results = MetricSet {
        pm: compute_pm(table),
        mtp: compute_mtp(table),
        mep: compute_mep(table),
        ft: compute_ft(table),
        bt: compute_bt(table),
        rp: ste.map_or_else(none, |s| compute_rp(table, s)),
        se: ste.map_or_else(none, |s| compute_se(table, s)),
    };

    let mut per_task: BTreeMap<String, TaskBreakdown> = table
        .tasks()
        .into_iter()
        .map(|task| {
            let eval_performance = table
                .eval_blocks()
                .into_iter()
                .filter_map(|e| table.performance_f64(&task, e).map(|p| (e, p)))
                .collect();
            let breakdown = TaskBreakdown {
                metrics: MetricSet::default(),
                eval_performance,
                training_episodes: table.training_curve(&task).len(),
            };
            (task, breakdown)
        })
        .collect();
    for (task, breakdown) in per_task.iter_mut() {
        breakdown.metrics = results.map(|r| r.per_task.get(task).copied());
    }

    let notes = results
        .entries()
        .into_iter()
        .filter(|(_, r)| !r.notes.is_empty())
        .map(|(name, r)| (name.to_string(), r.notes.clone()))
        .collect();

    LifetimeReport {
        lifetime: label.to_string(),
        metrics: results.map(|r| r.value),
        per_task,
        notes,
    }
}

pub fn lifetime_report_from_dir(
    dir: &Path,
    ste: Option<&SteStore>,
) -> Result<LifetimeReport, MetricsError> {
    let records = eventlog::read_episodes(dir)?;
    let table = PerformanceTable::from_records(&records)?;
    Ok(lifetime_report(&dir_label(dir), &table, ste))
}

fn dir_label(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn aggregate(values: &[f64]) -> AggregateStat {
    let exact: Vec<BigRational> = values.iter().filter_map(|&v| exact_decimal(v)).collect();
    let Some(mean) = exact_mean(&exact) else {
        return AggregateStat::default();
    };
    let std = (exact.len() >= 2).then(|| {
        let ss = exact
            .iter()
            .map(|v| (v - &mean) * (v - &mean))
            .fold(BigRational::zero(), |acc, x| acc + x);
        to_f64(&(ss / BigInt::from(exact.len() - 1))).sqrt()
    });
    AggregateStat {
        mean: Some(to_f64(&mean)),
        std,
        count: exact.len(),
    }
}

/// Mean and sample standard deviation of each metric over the lifetimes
/// where it is present.
pub fn aggregate_report(lifetimes: Vec<LifetimeReport>) -> MetricsReport {
    let collect = |pick: fn(&MetricSet<Option<f64>>) -> Option<f64>| -> AggregateStat {
        let present: Vec<f64> = lifetimes.iter().filter_map(|l| pick(&l.metrics)).collect();
        aggregate(&present)
    };
    let aggregate = MetricSet {
        pm: collect(|m| m.pm),
        mtp: collect(|m| m.mtp),
        mep: collect(|m| m.mep),
        ft: collect(|m| m.ft),
        bt: collect(|m| m.bt),
        rp: collect(|m| m.rp),
        se: collect(|m| m.se),
    };
    MetricsReport {
        lifetimes,
        aggregate,
        notes: Vec::new(),
    }
}

/// Lifetime directories under `log_dir`, numerically ordered. A directory
/// that is itself a lifetime yields just itself.
pub fn lifetime_dirs(log_dir: &Path) -> Result<Vec<PathBuf>, MetricsError> {
    if log_dir.join(eventlog::LIFETIME_METADATA_FILE).is_file()
        || !eventlog::block_files(log_dir)?.is_empty()
    {
        return Ok(vec![log_dir.to_path_buf()]);
    }
    let io = |source| MetricsError::Io {
        path: log_dir.to_path_buf(),
        source,
    };
    let mut found: Vec<(usize, PathBuf)> = Vec::new();
    for entry in fs::read_dir(log_dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let index = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("lifetime_"))
            .and_then(|n| n.parse().ok());
        if let (Some(index), true) = (index, path.is_dir()) {
            found.push((index, path));
        }
    }
    if found.is_empty() {
        return Err(MetricsError::NoLifetimes(log_dir.to_path_buf()));
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

/// Reports every completed lifetime under `log_dir`; failed lifetimes are
/// left out with a note.
pub fn run_report(log_dir: &Path, ste: Option<&SteStore>) -> Result<MetricsReport, MetricsError> {
    let mut reports = Vec::new();
    let mut notes = Vec::new();
    for dir in lifetime_dirs(log_dir)? {
        let meta_path = dir.join(eventlog::LIFETIME_METADATA_FILE);
        if meta_path.is_file() {
            let meta: LifetimeMetadata = eventlog::read_json(&meta_path)?;
            if meta.status == LifetimeStatus::Failed {
                notes.push(format!("{} failed and is excluded", dir_label(&dir)));
                continue;
            }
        }
        reports.push(lifetime_report_from_dir(&dir, ste)?);
    }
    let mut report = aggregate_report(reports);
    report.notes = notes;
    Ok(report)
}

pub fn write_report_json(report: &MetricsReport, path: &Path) -> Result<(), MetricsError> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cell(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per lifetime plus an `aggregate` row of means; absent values
/// are empty cells.
pub fn write_report_csv(report: &MetricsReport, path: &Path) -> Result<(), MetricsError> {
    let csv_err = |source| MetricsError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["lifetime"];
    header.extend(METRIC_NAMES);
    w.write_record(&header).map_err(csv_err)?;
    for l in &report.lifetimes {
        let mut row = vec![l.lifetime.clone()];
        row.extend(l.metrics.entries().iter().map(|(_, v)| cell(**v)));
        w.write_record(&row).map_err(csv_err)?;
    }
    let mut row = vec!["aggregate".to_string()];
    row.extend(report.aggregate.entries().iter().map(|(_, s)| cell(s.mean)));
    w.write_record(&row).map_err(csv_err)?;
    w.flush().map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Eval performance of one task in one eval block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub lifetime: String,
    pub task: String,
    pub block_num: usize,
    /// 0-based position among the lifetime's eval blocks.
    pub eval_index: usize,
    pub performance: f64,
}

pub fn curve_rows(label: &str, table: &PerformanceTable) -> Vec<CurveRow> {
    let mut rows = Vec::new();
    for task in table.tasks() {
        for (eval_index, block_num) in table.eval_blocks().into_iter().enumerate() {
            if let Some(performance) = table.performance_f64(&task, block_num) {
                rows.push(CurveRow {
                    lifetime: label.to_string(),
                    task: task.clone(),
                    block_num,
                    eval_index,
                    performance,
                });
            }
        }
    }
    rows
}

/// Curve rows for every lifetime under `log_dir`.
pub fn run_curve_rows(log_dir: &Path) -> Result<Vec<CurveRow>, MetricsError> {
    let mut rows = Vec::new();
    for dir in lifetime_dirs(log_dir)? {
        let table = PerformanceTable::from_records(&eventlog::read_episodes(&dir)?)?;
        rows.extend(curve_rows(&dir_label(&dir), &table));
    }
    Ok(rows)
}

pub fn write_curve_csv(rows: &[CurveRow], path: &Path) -> Result<(), MetricsError> {
    let csv_err = |source| MetricsError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["lifetime", "task", "block_num", "eval_index", "performance"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.lifetime.clone(),
            r.task.clone(),
            r.block_num.to_string(),
            r.eval_index.to_string(),
            r.performance.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })
}
