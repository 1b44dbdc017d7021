//! Tile-grid environments for the six evaluation task families.
//!
//! Each task variant is a [`TaskKind`] plus integer parameters. Layouts are
//! generated from a [`Pcg32`](crate::prng::Pcg32) stream so an environment
//! seed fully determines every episode for a given action sequence.

mod env;
mod grid;
mod observation;
mod tasks;

use thiserror::Error;

pub use env::{GridWorld, StepResult, STEP_PENALTY};
pub use grid::{Action, Color, Direction, DoorState, Grid, ObjectType, Tile};
pub use observation::{Observation, VIEW_SIZE};
pub use tasks::{Layout, Objective, Params, TaskConfig, TaskKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("task {task} requires parameter `{param}`")]
    MissingParam { task: String, param: String },
    #[error("task {task} has no parameter `{param}`")]
    UnknownParam { task: String, param: String },
    #[error("parameter `{param}` = {value} is outside [{min}, {max}]")]
    ParamOutOfBounds {
        param: String,
        value: i64,
        min: i64,
        max: i64,
    },
    #[error("parameter `{param}` = {value} {rule}")]
    ParamConstraint {
        param: String,
        value: i64,
        rule: String,
    },
    #[error("action {0} is outside 0..=6")]
    InvalidAction(u8),
    #[error("episode finished")]
    EpisodeFinished,
}

/// Action and observation shapes shared by every variant in a curriculum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceDescriptor {
    pub num_actions: u32,
    pub view: [u32; 3],
}

impl SpaceDescriptor {
    pub const GRIDWORLD: SpaceDescriptor = SpaceDescriptor {
        num_actions: Action::COUNT as u32,
        view: [VIEW_SIZE as u32, VIEW_SIZE as u32, 3],
    };
}

/// Builds the environment for `task` with `params`.
pub fn make_env(
    task: &str,
    params: &Params,
    fixed_layout: bool,
    env_seed: u64,
) -> Result<GridWorld, EnvError> {
    let kind: TaskKind = task.parse()?;
    let config = kind.configure(params)?;
    Ok(GridWorld::new(config, fixed_layout, env_seed))
}
