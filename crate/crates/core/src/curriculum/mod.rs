//! The curriculum hierarchy: blocks of task blocks of task variants.

mod file;
mod generate;
mod validate;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridworld::Params;

pub use file::{from_json_str, load_curriculum_file, save_curriculum_file, to_json_string};
pub use generate::{
    builtin_variants, generate_condensed, generate_dispersed, generate_interleaved, single_task,
    BuiltinCurriculum, DEFAULT_EVAL_EPISODES, DEFAULT_LEARN_EPISODES,
};
pub use validate::{validate_curriculum, validate_with, Finding, RegisteredTask, TaskRegistry};

/// Cap on the experience an agent gets from one task variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperienceLimit {
    Episodes(u64),
    Steps(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LimitKind {
    Episodes,
    Steps,
}

impl ExperienceLimit {
    pub fn kind(&self) -> LimitKind {
        match self {
            ExperienceLimit::Episodes(_) => LimitKind::Episodes,
            ExperienceLimit::Steps(_) => LimitKind::Steps,
        }
    }

    pub fn amount(&self) -> u64 {
        match *self {
            ExperienceLimit::Episodes(n) | ExperienceLimit::Steps(n) => n,
        }
    }
}

impl fmt::Display for ExperienceLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperienceLimit::Episodes(n) => write!(f, "{n} episodes"),
            ExperienceLimit::Steps(n) => write!(f, "{n} steps"),
        }
    }
}

/// A task family with concrete parameters; defines one environment setup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskVariantSpec {
    pub task_name: String,
    pub variant_name: String,
    pub params: Params,
    pub limit: ExperienceLimit,
    /// Reuse the layout generated at construction for every episode.
    pub fixed_layout: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskBlock {
    pub task_name: String,
    pub variants: Vec<TaskVariantSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockType {
    Learn,
    Eval,
}

impl BlockType {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockType::Learn => "learn",
            BlockType::Eval => "eval",
        }
    }

    pub fn is_learning_allowed(self) -> bool {
        self == BlockType::Learn
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub block_type: BlockType,
    pub task_blocks: Vec<TaskBlock>,
}

impl Block {
    pub fn variants(&self) -> impl Iterator<Item = &TaskVariantSpec> {
        self.task_blocks.iter().flat_map(|tb| tb.variants.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Curriculum {
    pub name: String,
    pub blocks: Vec<Block>,
    pub num_parallel_envs: usize,
    /// Seed of the shuffle that ordered the variants, when one was used.
    pub order_seed: Option<u64>,
}

impl Curriculum {
    pub fn variants(&self) -> impl Iterator<Item = &TaskVariantSpec> {
        self.blocks.iter().flat_map(|b| b.variants())
    }

    pub fn count_blocks(&self, block_type: BlockType) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.block_type == block_type)
            .count()
    }
}

#[derive(Debug, Error)]
pub enum CurriculumError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("cannot resolve task `{name}` at {location}")]
    Resolution { location: String, name: String },
    #[error("invalid curriculum: {}", findings.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { findings: Vec<Finding> },
    #[error("no learning content")]
    NoLearningContent,
    #[error("block {index} should be a {expected} block")]
    WrongBlockType {
        index: usize,
        expected: &'static str,
    },
}
