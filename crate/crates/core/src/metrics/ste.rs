use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::MetricsError;
use crate::curriculum::BlockType;
use crate::eventlog::{self, EpisodeRecord};

/// One single-task training log reduced to its learning curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SteRun {
    pub source: String,
    pub curve: Vec<f64>,
}

impl SteRun {
    /// Training episodes recorded in this run.
    pub fn budget(&self) -> usize {
        self.curve.len()
    }
}

/// Single-task expert reference curves, keyed by task.
///
/// On disk: `<root>/<task>/<run>/` where each run directory is an ordinary
/// lifetime directory containing learning episodes of that task only.
#[derive(Debug, Clone, Default)]
pub struct SteStore {
    runs: BTreeMap<String, Vec<SteRun>>,
}

impl SteStore {
    pub fn new() -> Self {
        SteStore::default()
    }

    /// Directory a new expert run for `task` under `seed` is written to.
    pub fn run_dir(root: &Path, task: &str, seed: u64) -> PathBuf {
        root.join(task).join(format!("seed_{seed}"))
    }

    pub fn insert(&mut self, task: &str, run: SteRun) {
        self.runs.entry(task.to_string()).or_default().push(run);
    }

    pub fn tasks(&self) -> impl Iterator<Item = &str> {
        self.runs.keys().map(String::as_str)
    }

    pub fn runs(&self, task: &str) -> &[SteRun] {
        self.runs.get(task).map_or(&[], Vec::as_slice)
    }

    /// The reference curve for `task`: the elementwise mean of its runs,
    /// truncated to the shortest run.
    pub fn curve(&self, task: &str) -> Option<Vec<f64>> {
        let runs = self.runs.get(task).filter(|r| !r.is_empty())?;
        let n = runs.iter().map(|r| r.curve.len()).min()?;
        Some(
            (0..n)
                .map(|i| runs.iter().map(|r| r.curve[i]).sum::<f64>() / runs.len() as f64)
                .collect(),
        )
    }

    /// Reduces a single-task log to a run; fails if it trains another task.
    pub fn run_from_records(
        task: &str,
        source: &str,
        records: &[EpisodeRecord],
    ) -> Result<SteRun, String> {
        let mut curve = Vec::new();
        for rec in records.iter().filter(|r| r.block_type == BlockType::Learn) {
            if rec.task_name != task {
                return Err(format!(
                    "expert log for {task} contains learning episodes of {}",
                    rec.task_name
                ));
            }
            if !rec.truncated {
                curve.push(rec.reward);
            }
        }
        Ok(SteRun {
            source: source.to_string(),
            curve,
        })
    }

    pub fn load(root: &Path) -> Result<Self, MetricsError> {
        let mut store = SteStore::new();
        for task_dir in sorted_subdirs(root)? {
            let task = file_name(&task_dir);
            for run_dir in sorted_subdirs(&task_dir)? {
                if eventlog::block_files(&run_dir)?.is_empty() {
                    continue;
                }
                let records = eventlog::read_episodes(&run_dir)?;
                let run = SteStore::run_from_records(&task, &file_name(&run_dir), &records)
                    .map_err(|message| MetricsError::Store {
                        path: run_dir.clone(),
                        message,
                    })?;
                store.insert(&task, run);
            }
        }
        Ok(store)
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<PathBuf>, MetricsError> {
    let io = |source| MetricsError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut dirs = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_averages_and_truncates() {
        let mut store = SteStore::new();
        store.insert(
            "A",
            SteRun {
                source: "a".into(),
                curve: vec![1.0, 0.0, 1.0],
            },
        );
        store.insert(
            "A",
            SteRun {
                source: "b".into(),
                curve: vec![0.0, 1.0],
            },
        );
        assert_eq!(store.curve("A"), Some(vec![0.5, 0.5]));
        assert_eq!(store.curve("B"), None);
        assert_eq!(store.runs("A")[0].budget(), 3);
    }

    #[test]
    fn foreign_task_is_rejected() {
        let rec = EpisodeRecord {
            block_num: 0,
            block_type: BlockType::Learn,
            task_name: "B".into(),
            variant_name: "v".into(),
            episode_id: 0,
            steps: 1,
            reward: 1.0,
            truncated: false,
            env_seed: 0,
        };
        assert!(SteStore::run_from_records("A", "x", &[rec]).is_err());
    }
}
