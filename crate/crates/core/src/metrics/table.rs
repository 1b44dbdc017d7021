use std::collections::{BTreeMap, BTreeSet};

use num::BigRational;

use super::{exact_decimal, exact_mean, to_f64, MetricsError};
use crate::curriculum::BlockType;
use crate::eventlog::EpisodeRecord;

/// A block as seen in the log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockInfo {
    pub block_num: usize,
    pub block_type: BlockType,
    pub tasks: BTreeSet<String>,
}

/// Per-(task, eval block) performance plus per-task training curves.
///
/// `P(t, E)` is the mean completed-episode reward of each of `t`'s variants
/// in eval block `E`, averaged with equal weight per variant.
#[derive(Debug, Clone, Default)]
pub struct PerformanceTable {
    blocks: Vec<BlockInfo>,
    eval: BTreeMap<(String, usize), BigRational>,
    training: BTreeMap<String, Vec<f64>>,
    training_exact: BTreeMap<String, Vec<BigRational>>,
}

impl PerformanceTable {
    /// Builds the table from records in log order.
    pub fn from_records(records: &[EpisodeRecord]) -> Result<Self, MetricsError> {
        let mut blocks: BTreeMap<usize, BlockInfo> = BTreeMap::new();
        // (task, block) -> variant -> rewards
        let mut eval_rewards: BTreeMap<(String, usize), BTreeMap<String, Vec<BigRational>>> =
            BTreeMap::new();
        let mut table = PerformanceTable::default();

        for rec in records {
            let block = blocks.entry(rec.block_num).or_insert_with(|| BlockInfo {
                block_num: rec.block_num,
                block_type: rec.block_type,
                tasks: BTreeSet::new(),
            });
            block.tasks.insert(rec.task_name.clone());
            if rec.truncated {
                continue;
            }
            let exact = exact_decimal(rec.reward).ok_or(MetricsError::NonFinite {
                episode_id: rec.episode_id,
                reward: rec.reward,
            })?;
            match rec.block_type {
                BlockType::Eval => eval_rewards
                    .entry((rec.task_name.clone(), rec.block_num))
                    .or_default()
                    .entry(rec.variant_name.clone())
                    .or_default()
                    .push(exact),
                BlockType::Learn => {
                    table
                        .training
                        .entry(rec.task_name.clone())
                        .or_default()
                        .push(rec.reward);
                    table
                        .training_exact
                        .entry(rec.task_name.clone())
                        .or_default()
                        .push(exact);
                }
            }
        }

        for (key, variants) in eval_rewards {
            let means: Vec<BigRational> = variants
                .values()
                .filter_map(|rewards| exact_mean(rewards))
                .collect();
            if let Some(p) = exact_mean(&means) {
                table.eval.insert(key, p);
            }
        }
        table.blocks = blocks.into_values().collect();
        Ok(table)
    }

    pub fn blocks(&self) -> &[BlockInfo] {
        &self.blocks
    }

    /// Every task appearing anywhere in the log.
    pub fn tasks(&self) -> BTreeSet<String> {
        self.blocks
            .iter()
            .flat_map(|b| b.tasks.iter().cloned())
            .collect()
    }

    /// Tasks with at least one completed training episode.
    pub fn trained_tasks(&self) -> impl Iterator<Item = &str> {
        self.training.keys().map(String::as_str)
    }

    pub fn eval_blocks(&self) -> Vec<usize> {
        self.blocks_of_type(BlockType::Eval, None)
    }

    /// Learning blocks that train `task`, in order.
    pub fn learn_blocks(&self, task: &str) -> Vec<usize> {
        self.blocks_of_type(BlockType::Learn, Some(task))
    }

    fn blocks_of_type(&self, block_type: BlockType, task: Option<&str>) -> Vec<usize> {
        self.blocks
            .iter()
            .filter(|b| b.block_type == block_type)
            .filter(|b| task.is_none_or(|t| b.tasks.contains(t)))
            .map(|b| b.block_num)
            .collect()
    }

    /// The last eval block strictly before `block`.
    pub fn eval_before(&self, block: usize) -> Option<usize> {
        self.eval_blocks().into_iter().rev().find(|&e| e < block)
    }

    /// The first eval block strictly after `block`.
    pub fn eval_after(&self, block: usize) -> Option<usize> {
        self.eval_blocks().into_iter().find(|&e| e > block)
    }

    pub fn performance(&self, task: &str, eval_block: usize) -> Option<&BigRational> {
        self.eval.get(&(task.to_string(), eval_block))
    }

    pub fn performance_f64(&self, task: &str, eval_block: usize) -> Option<f64> {
        self.performance(task, eval_block).map(to_f64)
    }

    /// Completed training-episode rewards for `task` across all learning
    /// blocks, in log order.
    pub fn training_curve(&self, task: &str) -> &[f64] {
        self.training.get(task).map_or(&[], Vec::as_slice)
    }

    pub(crate) fn training_exact(&self, task: &str) -> &[BigRational] {
        self.training_exact.get(task).map_or(&[], Vec::as_slice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(
        block_num: usize,
        block_type: BlockType,
        task: &str,
        variant: &str,
        reward: f64,
    ) -> EpisodeRecord {
        EpisodeRecord {
            block_num,
            block_type,
            task_name: task.into(),
            variant_name: variant.into(),
            episode_id: 0,
            steps: 1,
            reward,
            truncated: false,
            env_seed: 0,
        }
    }

    #[test]
    fn variants_weigh_equally() {
        let records = vec![
            rec(0, BlockType::Eval, "A", "v1", 1.0),
            rec(0, BlockType::Eval, "A", "v1", 1.0),
            rec(0, BlockType::Eval, "A", "v1", 1.0),
            rec(0, BlockType::Eval, "A", "v2", 0.0),
        ];
        let t = PerformanceTable::from_records(&records).unwrap();
        assert_eq!(t.performance_f64("A", 0), Some(0.5));
    }

    #[test]
    fn truncated_episodes_are_ignored() {
        let mut cut = rec(1, BlockType::Learn, "A", "v", 0.0);
        cut.truncated = true;
        let records = vec![rec(1, BlockType::Learn, "A", "v", 0.5), cut];
        let t = PerformanceTable::from_records(&records).unwrap();
        assert_eq!(t.training_curve("A"), &[0.5]);
        assert_eq!(t.learn_blocks("A"), vec![1]);
    }

    #[test]
    fn block_navigation() {
        let records = vec![
            rec(0, BlockType::Eval, "A", "v", 0.0),
            rec(1, BlockType::Learn, "A", "v", 0.0),
            rec(2, BlockType::Eval, "A", "v", 0.0),
            rec(3, BlockType::Learn, "B", "v", 0.0),
            rec(4, BlockType::Eval, "A", "v", 0.0),
        ];
        let t = PerformanceTable::from_records(&records).unwrap();
        assert_eq!(t.eval_blocks(), vec![0, 2, 4]);
        assert_eq!(t.learn_blocks("B"), vec![3]);
        assert_eq!(t.eval_before(3), Some(2));
        assert_eq!(t.eval_after(3), Some(4));
        assert_eq!(t.eval_after(4), None);
        assert_eq!(t.eval_before(0), None);
        assert!(t.performance("B", 2).is_none());
    }
}
