use std::collections::BTreeMap;

use num::BigRational;
use serde::Serialize;

use super::curves::{saturation, smooth_curve, trapezoid_auc, SMOOTHING_WINDOW};
use super::{exact_mean, to_f64, PerformanceTable, SteStore};

/// A metric value with its per-task breakdown and notes on skipped terms.
///
/// `value` is `None` whenever no term could be formed; it is never filled
/// with a placeholder.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricResult {
    pub value: Option<f64>,
    pub per_task: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

/// Collects exact terms per task and reduces them to means.
#[derive(Default)]
struct Terms {
    all: Vec<BigRational>,
    per_task: BTreeMap<String, Vec<BigRational>>,
    notes: Vec<String>,
}

impl Terms {
    fn push(&mut self, task: &str, term: BigRational) {
        self.per_task
            .entry(task.to_string())
            .or_default()
            .push(term.clone());
        self.all.push(term);
    }

    fn note(&mut self, note: String) {
        self.notes.push(note);
    }

    fn finish(mut self, empty_note: &str) -> MetricResult {
        let value = exact_mean(&self.all).map(|m| to_f64(&m));
        if value.is_none() {
            self.notes.push(empty_note.to_string());
        }
        MetricResult {
            value,
            per_task: self
                .per_task
                .iter()
                .filter_map(|(t, v)| exact_mean(v).map(|m| (t.clone(), to_f64(&m))))
                .collect(),
            notes: self.notes,
        }
    }
}

fn perf_diff(
    table: &PerformanceTable,
    task: &str,
    later: usize,
    earlier: usize,
    terms: &mut Terms,
) -> Option<BigRational> {
    match (
        table.performance(task, later),
        table.performance(task, earlier),
    ) {
        (Some(a), Some(b)) => Some(a - b),
        (a, _) => {
            let missing = if a.is_none() { later } else { earlier };
            terms.note(format!("no evaluation of {task} in block {missing}"));
            None
        }
    }
}

/// Performance maintenance: how eval performance on each task drifts after
/// the evaluation that immediately follows its most recent training.
///
/// For task `t` and eval block `E`, the reference is the first eval block
/// after `t`'s latest learning block before `E`; every `E` strictly after
/// its reference contributes `P(t,E) - P(t,ref)`.
pub fn compute_pm(table: &PerformanceTable) -> MetricResult {
    let mut terms = Terms::default();
    for task in table.tasks() {
        let learn = table.learn_blocks(&task);
        for e in table.eval_blocks() {
            let Some(&last_lb) = learn.iter().rev().find(|&&lb| lb < e) else {
                continue;
            };
            let Some(reference) = table.eval_after(last_lb) else {
                continue;
            };
            if e > reference {
                if let Some(d) = perf_diff(table, &task, e, reference, &mut terms) {
                    terms.push(&task, d);
                }
            }
        }
    }
    terms.finish("no evaluation follows a post-training reference")
}

/// Mean training reward per task, averaged over tasks.
pub fn compute_mtp(table: &PerformanceTable) -> MetricResult {
    let mut terms = Terms::default();
    for task in table.tasks() {
        if let Some(m) = exact_mean(table.training_exact(&task)) {
            terms.push(&task, m);
        }
    }
    terms.finish("no completed training episodes")
}

/// Mean eval performance per task over eval blocks, averaged over tasks.
pub fn compute_mep(table: &PerformanceTable) -> MetricResult {
    let mut terms = Terms::default();
    for task in table.tasks() {
        let values: Vec<BigRational> = table
            .eval_blocks()
            .into_iter()
            .filter_map(|e| table.performance(&task, e).cloned())
            .collect();
        if let Some(m) = exact_mean(&values) {
            terms.push(&task, m);
        }
    }
    terms.finish("no evaluation blocks")
}

/// Forward transfer as a jumpstart difference.
///
/// For tasks `A`, `B` with `A` first trained before `B`: the change in
/// `B`'s eval performance across `A`'s first learning block, using only
/// eval blocks before `B`'s first learning block. Breakdown is by `B`.
pub fn compute_ft(table: &PerformanceTable) -> MetricResult {
    let mut terms = Terms::default();
    let firsts: Vec<(String, usize)> = table
        .tasks()
        .into_iter()
        .filter_map(|t| table.learn_blocks(&t).first().map(|&lb| (t, lb)))
        .collect();
    for (a, a_first) in &firsts {
        for (b, b_first) in &firsts {
            if a == b || a_first >= b_first {
                continue;
            }
            let (Some(before), Some(after)) =
                (table.eval_before(*a_first), table.eval_after(*a_first))
            else {
                continue;
            };
            if after >= *b_first {
                continue;
            }
            if let Some(d) = perf_diff(table, b, after, before, &mut terms) {
                terms.push(b, d);
            }
        }
    }
    terms.finish("no task pair with evaluations around the earlier task's first training")
}

/// Backward transfer as a difference.
///
/// For every learning block `L` of task `B`, and each other task `A` trained
/// before `L`: `P(A, eval after L) - P(A, eval after A's latest learning
/// block before L)`, provided that reference eval precedes `L`. Breakdown
/// is by `A`.
pub fn compute_bt(table: &PerformanceTable) -> MetricResult {
    let mut terms = Terms::default();
    let tasks = table.tasks();
    for b in &tasks {
        for l in table.learn_blocks(b) {
            let Some(after) = table.eval_after(l) else {
                continue;
            };
            for a in &tasks {
                if a == b {
                    continue;
                }
                let Some(&a_last) = table.learn_blocks(a).iter().rev().find(|&&lb| lb < l) else {
                    continue;
                };
                let Some(reference) = table.eval_after(a_last) else {
                    continue;
                };
                if reference >= l {
                    continue;
                }
                if let Some(d) = perf_diff(table, a, after, reference, &mut terms) {
                    terms.push(a, d);
                }
            }
        }
    }
    terms.finish("no task trained after another task's post-training evaluation")
}

fn f64_result(
    per_task: BTreeMap<String, f64>,
    mut notes: Vec<String>,
    empty: &str,
) -> MetricResult {
    let value = if per_task.is_empty() {
        notes.push(empty.to_string());
        None
    } else {
        Some(per_task.values().sum::<f64>() / per_task.len() as f64)
    };
    MetricResult {
        value,
        per_task,
        notes,
    }
}

/// Relative performance: training-curve area against the single-task
/// expert over the same number of training episodes.
pub fn compute_rp(table: &PerformanceTable, ste: &SteStore) -> MetricResult {
    let mut per_task = BTreeMap::new();
    let mut notes = Vec::new();
    for task in table.trained_tasks() {
        let Some(expert) = ste.curve(task) else {
            notes.push(format!("no single-task expert for {task}"));
            continue;
        };
        let lifetime = table.training_curve(task);
        let n = lifetime.len().min(expert.len());
        if n == 0 {
            notes.push(format!(
                "single-task expert for {task} has no training episodes"
            ));
            continue;
        }
        let expert_auc = trapezoid_auc(&expert[..n]);
        if expert_auc == 0.0 {
            notes.push(format!("single-task expert area for {task} is zero"));
            continue;
        }
        per_task.insert(task.to_string(), trapezoid_auc(&lifetime[..n]) / expert_auc);
    }
    f64_result(per_task, notes, "no task has a usable single-task expert")
}

/// Sample efficiency: `(sat_LL / sat_STE) * (exp_STE / exp_LL)` on smoothed
/// training curves.
pub fn compute_se(table: &PerformanceTable, ste: &SteStore) -> MetricResult {
    let mut per_task = BTreeMap::new();
    let mut notes = Vec::new();
    for task in table.trained_tasks() {
        let Some(expert) = ste.curve(task) else {
            notes.push(format!("no single-task expert for {task}"));
            continue;
        };
        let ll = saturation(&smooth_curve(table.training_curve(task), SMOOTHING_WINDOW));
        let st = saturation(&smooth_curve(&expert, SMOOTHING_WINDOW));
        let (Some((sat_ll, exp_ll)), Some((sat_st, exp_st))) = (ll, st) else {
            notes.push(format!(
                "single-task expert for {task} has no training episodes"
            ));
            continue;
        };
        if sat_st == 0.0 {
            notes.push(format!("single-task expert saturation for {task} is zero"));
            continue;
        }
        let se = (sat_ll / sat_st) * (exp_st as f64 / exp_ll as f64);
        per_task.insert(task.to_string(), se);
    }
    f64_result(per_task, notes, "no task has a usable single-task expert")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curriculum::BlockType;
    use crate::eventlog::EpisodeRecord;
    use crate::metrics::SteRun;

    fn rec(block_num: usize, block_type: BlockType, task: &str, reward: f64) -> EpisodeRecord {
        EpisodeRecord {
            block_num,
            block_type,
            task_name: task.into(),
            variant_name: "v".into(),
            episode_id: 0,
            steps: 1,
            reward,
            truncated: false,
            env_seed: 0,
        }
    }

    fn table(records: &[EpisodeRecord]) -> PerformanceTable {
        PerformanceTable::from_records(records).unwrap()
    }

    #[test]
    fn single_eval_block_has_no_pm_ft_bt() {
        let t = table(&[
            rec(0, BlockType::Learn, "A", 1.0),
            rec(1, BlockType::Eval, "A", 1.0),
        ]);
        assert_eq!(compute_pm(&t).value, None);
        assert_eq!(compute_ft(&t).value, None);
        assert_eq!(compute_bt(&t).value, None);
        assert!(!compute_pm(&t).notes.is_empty());
    }

    #[test]
    fn single_learning_block_mtp() {
        let t = table(&[
            rec(0, BlockType::Learn, "A", 0.0),
            rec(0, BlockType::Learn, "A", 1.0),
        ]);
        assert_eq!(compute_mtp(&t).value, Some(0.5));
        assert_eq!(compute_mep(&t).value, None);
    }

    #[test]
    fn constant_performance_has_zero_pm() {
        let mut records = Vec::new();
        for (i, kind) in [
            BlockType::Eval,
            BlockType::Learn,
            BlockType::Eval,
            BlockType::Learn,
            BlockType::Eval,
            BlockType::Eval,
        ]
        .into_iter()
        .enumerate()
        {
            let task = if i == 3 { "B" } else { "A" };
            records.push(rec(i, kind, task, 0.3));
            if kind == BlockType::Eval {
                records.push(rec(i, kind, "B", 0.3));
            }
        }
        let t = table(&records);
        assert_eq!(compute_pm(&t).value, Some(0.0));
        assert_eq!(compute_bt(&t).value, Some(0.0));
    }

    #[test]
    fn missing_evaluations_are_noted() {
        let t = table(&[
            rec(0, BlockType::Eval, "A", 0.0),
            rec(1, BlockType::Learn, "A", 0.0),
            rec(2, BlockType::Eval, "A", 0.5),
            rec(3, BlockType::Learn, "B", 0.0),
            rec(4, BlockType::Eval, "B", 0.5),
        ]);
        let pm = compute_pm(&t);
        assert_eq!(pm.value, None);
        assert!(pm
            .notes
            .iter()
            .any(|n| n.contains("no evaluation of A in block 4")));
    }

    #[test]
    fn rp_doubles_with_doubled_curve() {
        let t = table(&[
            rec(0, BlockType::Learn, "A", 0.4),
            rec(0, BlockType::Learn, "A", 0.6),
        ]);
        let mut ste = SteStore::new();
        ste.insert(
            "A",
            SteRun {
                source: "x".into(),
                curve: vec![0.2, 0.3, 0.9],
            },
        );
        assert_eq!(compute_rp(&t, &ste).value, Some(2.0));
    }

    #[test]
    fn missing_expert_skips_task() {
        let t = table(&[
            rec(0, BlockType::Learn, "A", 0.4),
            rec(1, BlockType::Learn, "B", 0.6),
        ]);
        let mut ste = SteStore::new();
        ste.insert(
            "A",
            SteRun {
                source: "x".into(),
                curve: vec![0.4],
            },
        );
        let rp = compute_rp(&t, &ste);
        assert_eq!(rp.value, Some(1.0));
        assert_eq!(rp.per_task.len(), 1);
        assert!(rp.notes.iter().any(|n| n.contains("B")));
        assert_eq!(compute_se(&t, &SteStore::new()).value, None);
    }
}
