//! On-disk experiment records.
//!
//! ```text
//! <log_root>/<run_name>/run_metadata.json
//! <log_root>/<run_name>/lifetime_<i>/lifetime_metadata.json
//! <log_root>/<run_name>/lifetime_<i>/curriculum.json
//! <log_root>/<run_name>/lifetime_<i>/block_<nnnn>.jsonl
//! ```
//!
//! Block files hold one [`EpisodeRecord`] per line with a fixed key order
//! and shortest round-trip float formatting, so identical runs produce
//! byte-identical files. Timestamps only appear in the metadata files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curriculum::BlockType;

pub const RUN_METADATA_FILE: &str = "run_metadata.json";
pub const LIFETIME_METADATA_FILE: &str = "lifetime_metadata.json";
pub const CURRICULUM_FILE: &str = "curriculum.json";

pub fn block_file_name(block_num: usize) -> String {
    format!("block_{block_num:04}.jsonl")
}

pub fn lifetime_dir_name(index: usize) -> String {
    format!("lifetime_{index}")
}

/// One finished (or cut-off) episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeRecord {
    pub block_num: usize,
    pub block_type: BlockType,
    pub task_name: String,
    pub variant_name: String,
    /// Per-lifetime, assigned in completion order.
    pub episode_id: u64,
    pub steps: u64,
    /// Sum of the true environment rewards, even when hidden from the agent.
    pub reward: f64,
    pub truncated: bool,
    pub env_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LifetimeStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeMetadata {
    pub lifetime_index: usize,
    pub master_seed: u64,
    pub lifetime_seed: u64,
    pub curriculum_seed: u64,
    pub agent_seed: u64,
    pub curriculum_name: String,
    pub agent_name: String,
    pub harness_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub status: LifetimeStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeSummary {
    pub index: usize,
    pub dir: String,
    pub status: LifetimeStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// The experiment configuration, minus the agent factory, plus outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub run_name: String,
    pub harness_version: String,
    pub curriculum: serde_json::Value,
    pub agent: String,
    pub num_lifetimes: usize,
    pub master_seed: u64,
    pub num_parallel_envs: Option<usize>,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub lifetimes: Vec<LifetimeSummary>,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: record {index}: {message}", file.display())]
    Schema {
        file: PathBuf,
        index: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LogError + '_ {
    move |source| LogError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LogError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, LogError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| LogError::Parse {
        file: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Append-only writer for one lifetime's block files.
pub struct LifetimeLog {
    dir: PathBuf,
    current: Option<(usize, BufWriter<File>)>,
    episodes: u64,
}

impl LifetimeLog {
    pub fn create(dir: &Path) -> Result<Self, LogError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(LifetimeLog {
            dir: dir.to_path_buf(),
            current: None,
            episodes: 0,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Episodes written so far.
    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn append_episode(&mut self, rec: &EpisodeRecord) -> Result<(), LogError> {
        if self.current.as_ref().map(|(n, _)| *n) != Some(rec.block_num) {
            self.flush()?;
            let path = self.dir.join(block_file_name(rec.block_num));
            let file = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(io_err(&path))?;
            self.current = Some((rec.block_num, BufWriter::new(file)));
        }
        let (n, writer) = self.current.as_mut().expect("opened above");
        let mut line = serde_json::to_string(rec).expect("serializable");
        line.push('\n');
        let path = self.dir.join(block_file_name(*n));
        writer.write_all(line.as_bytes()).map_err(io_err(&path))?;
        self.episodes += 1;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), LogError> {
        if let Some((n, mut writer)) = self.current.take() {
            let path = self.dir.join(block_file_name(n));
            writer.flush().map_err(io_err(&path))?;
        }
        Ok(())
    }
}

impl Drop for LifetimeLog {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}

/// Block files of a lifetime directory, ordered by block number.
pub fn block_files(dir: &Path) -> Result<Vec<(usize, PathBuf)>, LogError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(num) = name
            .strip_prefix("block_")
            .and_then(|rest| rest.strip_suffix(".jsonl"))
            .and_then(|digits| digits.parse::<usize>().ok())
        else {
            continue;
        };
        files.push((num, path));
    }
    files.sort();
    Ok(files)
}

/// Reads every episode record of a lifetime, in (block, file) order.
pub fn read_episodes(dir: &Path) -> Result<Vec<EpisodeRecord>, LogError> {
    let mut records: Vec<EpisodeRecord> = Vec::new();
    for (block_num, path) in block_files(dir)? {
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        for (i, line) in text.lines().enumerate() {
            let rec: EpisodeRecord = serde_json::from_str(line).map_err(|e| LogError::Parse {
                file: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            let schema = |message: String| LogError::Schema {
                file: path.clone(),
                index: i,
                message,
            };
            if rec.block_num != block_num {
                return Err(schema(format!(
                    "block_num {} in file for block {block_num}",
                    rec.block_num
                )));
            }
            if rec.steps == 0 {
                return Err(schema("episode with zero steps".into()));
            }
            if let Some(prev) = records.last() {
                if rec.episode_id <= prev.episode_id {
                    return Err(schema(format!(
                        "episode_id {} does not increase past {}",
                        rec.episode_id, prev.episode_id
                    )));
                }
            }
            records.push(rec);
        }
    }
    Ok(records)
}

pub fn read_lifetime(dir: &Path) -> Result<(LifetimeMetadata, Vec<EpisodeRecord>), LogError> {
    let meta = read_json(&dir.join(LIFETIME_METADATA_FILE))?;
    let records = read_episodes(dir)?;
    Ok((meta, records))
}
