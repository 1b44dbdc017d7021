//! Built-in curricula over the 18 registered task variants.

use std::fmt;
use std::str::FromStr;

use super::{
    Block, BlockType, Curriculum, CurriculumError, ExperienceLimit, TaskBlock, TaskVariantSpec,
};
use crate::gridworld::TaskKind;
use crate::prng::Pcg32;

/// Episodes per condensed learning block.
pub const DEFAULT_LEARN_EPISODES: u64 = 300;
/// Episodes per variant in each evaluation block.
pub const DEFAULT_EVAL_EPISODES: u64 = 20;

const SUPERBLOCKS: usize = 3;

/// All registered variants in task order, each with the given limit.
pub fn builtin_variants(limit: ExperienceLimit) -> Vec<TaskVariantSpec> {
    TaskKind::ALL
        .into_iter()
        .flat_map(|kind| {
            kind.default_variants()
                .into_iter()
                .map(move |(name, params)| TaskVariantSpec {
                    task_name: kind.name().to_string(),
                    variant_name: name.to_string(),
                    params,
                    limit,
                    fixed_layout: false,
                })
        })
        .collect()
}

/// One evaluation block covering every variant, grouped by task.
fn full_eval_block(eval_episodes: u64) -> Block {
    let task_blocks = TaskKind::ALL
        .into_iter()
        .map(|kind| TaskBlock {
            task_name: kind.name().to_string(),
            variants: builtin_variants(ExperienceLimit::Episodes(eval_episodes))
                .into_iter()
                .filter(|v| v.task_name == kind.name())
                .collect(),
        })
        .collect();
    Block {
        block_type: BlockType::Eval,
        task_blocks,
    }
}

fn single_variant_block(variant: TaskVariantSpec) -> Block {
    Block {
        block_type: BlockType::Learn,
        task_blocks: vec![TaskBlock {
            task_name: variant.task_name.clone(),
            variants: vec![variant],
        }],
    }
}

/// `[E, L1, E, L2, …, Ln, E]`.
pub fn generate_interleaved(
    learn_blocks: Vec<Block>,
    eval_block: Block,
) -> Result<Curriculum, CurriculumError> {
    if learn_blocks.is_empty() {
        return Err(CurriculumError::NoLearningContent);
    }
    if eval_block.block_type != BlockType::Eval {
        return Err(CurriculumError::WrongBlockType {
            index: 0,
            expected: "eval",
        });
    }
    if let Some(index) = learn_blocks
        .iter()
        .position(|b| b.block_type != BlockType::Learn)
    {
        return Err(CurriculumError::WrongBlockType {
            index,
            expected: "learn",
        });
    }
    let mut blocks = Vec::with_capacity(2 * learn_blocks.len() + 1);
    blocks.push(eval_block.clone());
    for lb in learn_blocks {
        blocks.push(lb);
        blocks.push(eval_block.clone());
    }
    Ok(Curriculum {
        name: "interleaved".to_string(),
        blocks,
        num_parallel_envs: 1,
        order_seed: None,
    })
}

/// Each of the 18 variants trained once, in a seeded random order.
pub fn generate_condensed(episodes_per_lb: u64, eval_episodes: u64, seed: u64) -> Curriculum {
    let mut rng = Pcg32::from_seed(seed);
    let mut variants = builtin_variants(ExperienceLimit::Episodes(episodes_per_lb));
    rng.shuffle(&mut variants);
    let learn = variants.into_iter().map(single_variant_block).collect();
    let mut c =
        generate_interleaved(learn, full_eval_block(eval_episodes)).expect("18 learning blocks");
    c.name = BuiltinCurriculum::Condensed.name().to_string();
    c.order_seed = Some(seed);
    c
}

/// Three superblocks, each a fresh permutation of all 18 variants with
/// learning blocks a third as long as the condensed ones (rounded up).
pub fn generate_dispersed(episodes_per_lb: u64, eval_episodes: u64, seed: u64) -> Curriculum {
    let mut rng = Pcg32::from_seed(seed);
    let short = episodes_per_lb.div_ceil(SUPERBLOCKS as u64);
    let mut learn = Vec::new();
    let mut orders: Vec<Vec<TaskVariantSpec>> = Vec::with_capacity(SUPERBLOCKS);
    for _ in 0..SUPERBLOCKS {
        let mut variants = builtin_variants(ExperienceLimit::Episodes(short));
        // Superblocks must differ; a repeat (odds about 1 in 18!) is redrawn.
        loop {
            rng.shuffle(&mut variants);
            if !orders.contains(&variants) {
                break;
            }
        }
        orders.push(variants.clone());
        learn.extend(variants.into_iter().map(single_variant_block));
    }
    let mut c =
        generate_interleaved(learn, full_eval_block(eval_episodes)).expect("54 learning blocks");
    c.name = BuiltinCurriculum::Dispersed.name().to_string();
    c.order_seed = Some(seed);
    c
}

/// One learning block over every variant of a single task, used to train
/// single-task experts.
pub fn single_task(task: TaskKind, episodes_per_variant: u64) -> Curriculum {
    let variants = builtin_variants(ExperienceLimit::Episodes(episodes_per_variant))
        .into_iter()
        .filter(|v| v.task_name == task.name())
        .collect();
    Curriculum {
        name: format!("ste-{}", task.name()),
        blocks: vec![Block {
            block_type: BlockType::Learn,
            task_blocks: vec![TaskBlock {
                task_name: task.name().to_string(),
                variants,
            }],
        }],
        num_parallel_envs: 1,
        order_seed: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinCurriculum {
    Condensed,
    Dispersed,
}

impl BuiltinCurriculum {
    pub fn name(self) -> &'static str {
        match self {
            BuiltinCurriculum::Condensed => "condensed",
            BuiltinCurriculum::Dispersed => "dispersed",
        }
    }

    pub fn generate(self, episodes_per_lb: u64, eval_episodes: u64, seed: u64) -> Curriculum {
        match self {
            BuiltinCurriculum::Condensed => {
                generate_condensed(episodes_per_lb, eval_episodes, seed)
            }
            BuiltinCurriculum::Dispersed => {
                generate_dispersed(episodes_per_lb, eval_episodes, seed)
            }
        }
    }
}

impl fmt::Display for BuiltinCurriculum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinCurriculum {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "condensed" => Ok(BuiltinCurriculum::Condensed),
            "dispersed" => Ok(BuiltinCurriculum::Dispersed),
            other => Err(format!("unknown curriculum `{other}`")),
        }
    }
}
