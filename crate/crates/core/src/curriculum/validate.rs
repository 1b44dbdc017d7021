use std::collections::BTreeMap;
use std::fmt;

use super::Curriculum;
use crate::gridworld::{EnvError, Params, SpaceDescriptor, TaskKind};

/// One violated rule, located by its path inside the curriculum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub path: String,
    pub rule: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.rule)
    }
}

type ParamCheck = Box<dyn Fn(&Params) -> Result<(), EnvError> + Send + Sync>;

pub struct RegisteredTask {
    pub spaces: SpaceDescriptor,
    check: ParamCheck,
}

impl RegisteredTask {
    pub fn new(
        spaces: SpaceDescriptor,
        check: impl Fn(&Params) -> Result<(), EnvError> + Send + Sync + 'static,
    ) -> Self {
        RegisteredTask {
            spaces,
            check: Box::new(check),
        }
    }
}

/// Task names a curriculum may reference, with their spaces and parameter
/// checks.
pub struct TaskRegistry {
    tasks: BTreeMap<String, RegisteredTask>,
}

impl TaskRegistry {
    pub fn empty() -> Self {
        TaskRegistry {
            tasks: BTreeMap::new(),
        }
    }

    /// The six gridworld task families.
    pub fn builtin() -> Self {
        let mut registry = Self::empty();
        for kind in TaskKind::ALL {
            registry.register(
                kind.name(),
                RegisteredTask::new(SpaceDescriptor::GRIDWORLD, move |p| {
                    kind.configure(p).map(|_| ())
                }),
            );
        }
        registry
    }

    pub fn register(&mut self, name: &str, task: RegisteredTask) {
        self.tasks.insert(name.to_string(), task);
    }

    pub fn get(&self, name: &str) -> Option<&RegisteredTask> {
        self.tasks.get(name)
    }
}

/// Checks a curriculum against the built-in task registry.
pub fn validate_curriculum(c: &Curriculum) -> Vec<Finding> {
    validate_with(c, &TaskRegistry::builtin())
}

pub fn validate_with(c: &Curriculum, registry: &TaskRegistry) -> Vec<Finding> {
    let mut findings = Vec::new();
    let mut push = |path: String, rule: String| findings.push(Finding { path, rule });

    if c.num_parallel_envs == 0 {
        push("num_parallel_envs".into(), "must be at least 1".into());
    }
    if c.blocks.is_empty() {
        push("blocks".into(), "curriculum has no blocks".into());
    }

    let mut reference: Option<(String, SpaceDescriptor)> = None;
    for (bi, block) in c.blocks.iter().enumerate() {
        let block_path = format!("blocks[{bi}]");
        if block.task_blocks.is_empty() {
            push(block_path.clone(), "block has no task blocks".into());
        }
        for (ti, tb) in block.task_blocks.iter().enumerate() {
            let tb_path = format!("{block_path}.task_blocks[{ti}]");
            if tb.variants.is_empty() {
                push(tb_path.clone(), "task block has no variants".into());
            }
            for (vi, v) in tb.variants.iter().enumerate() {
                let path = format!("{tb_path}.variants[{vi}]");
                if v.task_name != tb.task_name {
                    push(
                        path.clone(),
                        format!(
                            "task_name mismatch: variant is `{}` but its task block is `{}`",
                            v.task_name, tb.task_name
                        ),
                    );
                }
                if v.variant_name.is_empty() {
                    push(path.clone(), "variant name is empty".into());
                }
                if v.limit.amount() == 0 {
                    push(path.clone(), "experience limit must be at least 1".into());
                }
                let Some(task) = registry.get(&v.task_name) else {
                    push(path.clone(), format!("unknown task `{}`", v.task_name));
                    continue;
                };
                if let Err(e) = (task.check)(&v.params) {
                    push(path.clone(), e.to_string());
                }
                match &reference {
                    None => reference = Some((path.clone(), task.spaces)),
                    Some((first, spaces)) if *spaces != task.spaces => push(
                        path.clone(),
                        format!(
                            "space mismatch with {first}: {:?} vs {:?}",
                            task.spaces, spaces
                        ),
                    ),
                    Some(_) => {}
                }
            }
        }
    }
    findings
}
