//! The contract every evaluated agent implements, plus two baselines.
//!
//! Each lockstep round the runner hands the agent one optional observation
//! per environment slot and expects one optional action back; a slot is
//! `None` on both sides once its variant's budget no longer needs it. The
//! resulting transitions come back in the same positions. Curriculum events
//! bracket every block, task block and task variant.

mod random;
mod tabular_q;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curriculum::ExperienceLimit;
use crate::gridworld::Observation;
use crate::protocol::ProtocolError;

pub use random::RandomAgent;
pub use tabular_q::{fnv1a64, QConfig, TabularQAgent};

/// Result of applying one action in one environment.
///
/// `reward` is `None` inside evaluation blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transition {
    pub observation: Observation,
    pub action: u8,
    pub reward: Option<f64>,
    pub done: bool,
    pub next_observation: Observation,
}

/// Curriculum callbacks, delivered properly nested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentEvent {
    BlockStart {
        is_learning_allowed: bool,
    },
    BlockEnd,
    TaskStart {
        task_name: String,
    },
    TaskEnd,
    TaskVariantStart {
        task_name: String,
        variant_name: String,
        limit: ExperienceLimit,
    },
    TaskVariantEnd,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("agent contract violation: {0}")]
    ContractViolation(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{0}")]
    Other(String),
}

pub trait Agent {
    fn name(&self) -> String;

    fn on_event(&mut self, _event: &AgentEvent) -> Result<(), AgentError> {
        Ok(())
    }

    fn choose_actions(
        &mut self,
        observations: &[Option<Observation>],
    ) -> Result<Vec<Option<u8>>, AgentError>;

    fn receive_transitions(&mut self, transitions: &[Option<Transition>])
        -> Result<(), AgentError>;

    /// Called once after the last event of a lifetime.
    fn shutdown(&mut self) -> Result<(), AgentError> {
        Ok(())
    }
}

/// What a freshly created agent is told about its lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentInit {
    pub agent_seed: u64,
    pub num_envs: usize,
}

/// Builds one fresh agent per lifetime.
pub trait AgentFactory: Send + Sync {
    fn name(&self) -> String;

    fn create(&self, init: &AgentInit) -> Result<Box<dyn Agent>, AgentError>;
}

/// The in-process baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinAgent {
    Random,
    TabularQ,
}

impl BuiltinAgent {
    pub fn parse(name: &str) -> Option<BuiltinAgent> {
        match name {
            "random" => Some(BuiltinAgent::Random),
            "qlearn" | "tabular-q" => Some(BuiltinAgent::TabularQ),
            _ => None,
        }
    }

    pub fn build(self, init: &AgentInit) -> Box<dyn Agent> {
        match self {
            BuiltinAgent::Random => Box::new(RandomAgent::new(init.agent_seed)),
            BuiltinAgent::TabularQ => {
                Box::new(TabularQAgent::new(init.agent_seed, QConfig::default()))
            }
        }
    }
}

impl AgentFactory for BuiltinAgent {
    fn name(&self) -> String {
        match self {
            BuiltinAgent::Random => "random".into(),
            BuiltinAgent::TabularQ => "qlearn".into(),
        }
    }

    fn create(&self, init: &AgentInit) -> Result<Box<dyn Agent>, AgentError> {
        Ok(self.build(init))
    }
}
