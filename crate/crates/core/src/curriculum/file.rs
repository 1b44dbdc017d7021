//! JSON form of a curriculum.
//!
//! ```json
//! {"name": "...", "num_parallel_envs": 1, "order_seed": 7 | null,
//!  "blocks": [{"type": "learn" | "eval",
//!              "task_blocks": [{"task": "DoorKey",
//!                               "variants": [{"variant": "S6", "params": {"size": 6},
//!                                             "limit": {"episodes": 300} | {"steps": 1000},
//!                                             "fixed_layout": false}]}]}]}
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    validate_curriculum, Block, BlockType, Curriculum, CurriculumError, ExperienceLimit, TaskBlock,
    TaskVariantSpec,
};
use crate::gridworld::{Params, TaskKind};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurriculumFile {
    name: String,
    num_parallel_envs: usize,
    order_seed: Option<u64>,
    blocks: Vec<BlockFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockFile {
    #[serde(rename = "type")]
    block_type: BlockType,
    task_blocks: Vec<TaskBlockFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskBlockFile {
    task: String,
    variants: Vec<VariantFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariantFile {
    variant: String,
    params: Params,
    limit: ExperienceLimit,
    fixed_layout: bool,
}

impl From<&Curriculum> for CurriculumFile {
    fn from(c: &Curriculum) -> Self {
        CurriculumFile {
            name: c.name.clone(),
            num_parallel_envs: c.num_parallel_envs,
            order_seed: c.order_seed,
            blocks: c
                .blocks
                .iter()
                .map(|b| BlockFile {
                    block_type: b.block_type,
                    task_blocks: b
                        .task_blocks
                        .iter()
                        .map(|tb| TaskBlockFile {
                            task: tb.task_name.clone(),
                            variants: tb
                                .variants
                                .iter()
                                .map(|v| VariantFile {
                                    variant: v.variant_name.clone(),
                                    params: v.params.clone(),
                                    limit: v.limit,
                                    fixed_layout: v.fixed_layout,
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl CurriculumFile {
    fn into_curriculum(self) -> Result<Curriculum, CurriculumError> {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (bi, b) in self.blocks.into_iter().enumerate() {
            let mut task_blocks = Vec::with_capacity(b.task_blocks.len());
            for (ti, tb) in b.task_blocks.into_iter().enumerate() {
                let tb_path = format!("blocks[{bi}].task_blocks[{ti}]");
                if tb.task.parse::<TaskKind>().is_err() {
                    return Err(CurriculumError::Resolution {
                        location: format!("{tb_path}.task"),
                        name: tb.task,
                    });
                }
                let mut variants = Vec::with_capacity(tb.variants.len());
                for (vi, v) in tb.variants.into_iter().enumerate() {
                    if v.limit.amount() == 0 {
                        return Err(CurriculumError::Schema {
                            location: format!("{tb_path}.variants[{vi}].limit"),
                            message: "limit amount must be a positive integer".into(),
                        });
                    }
                    variants.push(TaskVariantSpec {
                        task_name: tb.task.clone(),
                        variant_name: v.variant,
                        params: v.params,
                        limit: v.limit,
                        fixed_layout: v.fixed_layout,
                    });
                }
                task_blocks.push(TaskBlock {
                    task_name: tb.task,
                    variants,
                });
            }
            blocks.push(Block {
                block_type: b.block_type,
                task_blocks,
            });
        }
        if self.num_parallel_envs == 0 {
            return Err(CurriculumError::Schema {
                location: "num_parallel_envs".into(),
                message: "must be a positive integer".into(),
            });
        }
        Ok(Curriculum {
            name: self.name,
            blocks,
            num_parallel_envs: self.num_parallel_envs,
            order_seed: self.order_seed,
        })
    }
}

/// Pretty-printed JSON; identical curricula give identical bytes.
pub fn to_json_string(c: &Curriculum) -> String {
    let mut s = serde_json::to_string_pretty(&CurriculumFile::from(c)).expect("serializable");
    s.push('\n');
    s
}

/// Parses and validates a curriculum document.
pub fn from_json_str(text: &str) -> Result<Curriculum, CurriculumError> {
    // Syntax first, so a broken document is never reported as a schema
    // problem at whatever point the typed parse happened to give up.
    serde_json::from_str::<serde::de::IgnoredAny>(text).map_err(|e| CurriculumError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let file: CurriculumFile = serde_json::from_str(text).map_err(|e| CurriculumError::Schema {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let curriculum = file.into_curriculum()?;
    let findings = validate_curriculum(&curriculum);
    if !findings.is_empty() {
        return Err(CurriculumError::Invalid { findings });
    }
    Ok(curriculum)
}

pub fn load_curriculum_file(path: &Path) -> Result<Curriculum, CurriculumError> {
    let text = fs::read_to_string(path).map_err(|source| CurriculumError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_json_str(&text)
}

pub fn save_curriculum_file(c: &Curriculum, path: &Path) -> Result<(), CurriculumError> {
    fs::write(path, to_json_string(c)).map_err(|source| CurriculumError::Io {
        path: path.to_path_buf(),
        source,
    })
}
