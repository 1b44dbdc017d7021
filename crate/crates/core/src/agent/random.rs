use super::{Agent, AgentError, Transition};
use crate::gridworld::{Action, Observation};
use crate::prng::Pcg32;

/// Picks uniformly among the seven actions; never learns.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    rng: Pcg32,
}

impl RandomAgent {
    pub fn new(agent_seed: u64) -> Self {
        RandomAgent {
            rng: Pcg32::from_seed(agent_seed),
        }
    }
}

impl Agent for RandomAgent {
    fn name(&self) -> String {
        "random".into()
    }

    fn choose_actions(
        &mut self,
        observations: &[Option<Observation>],
    ) -> Result<Vec<Option<u8>>, AgentError> {
        Ok(observations
            .iter()
            .map(|o| {
                o.as_ref()
                    .map(|_| self.rng.below(Action::COUNT as u32) as u8)
            })
            .collect())
    }

    fn receive_transitions(
        &mut self,
        _transitions: &[Option<Transition>],
    ) -> Result<(), AgentError> {
        Ok(())
    }
}
