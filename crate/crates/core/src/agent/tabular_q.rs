use std::collections::HashMap;

use super::{Agent, AgentError, AgentEvent, Transition};
use crate::gridworld::{Action, Observation};
use crate::prng::Pcg32;

const N_ACTIONS: usize = Action::COUNT;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Learning transitions over which epsilon decays linearly.
    pub anneal_steps: u64,
}

impl Default for QConfig {
    fn default() -> Self {
        QConfig {
            alpha: 0.1,
            gamma: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            anneal_steps: 50_000,
        }
    }
}

/// Epsilon-greedy tabular Q-learning over hashed observations.
///
/// Evaluation blocks act with the final epsilon and never update the table.
#[derive(Debug, Clone)]
pub struct TabularQAgent {
    config: QConfig,
    q: HashMap<u64, [f64; N_ACTIONS]>,
    rng: Pcg32,
    learning_allowed: bool,
    learn_steps: u64,
}

impl TabularQAgent {
    pub fn new(agent_seed: u64, config: QConfig) -> Self {
        TabularQAgent {
            config,
            q: HashMap::new(),
            rng: Pcg32::from_seed(agent_seed),
            learning_allowed: false,
            learn_steps: 0,
        }
    }

    pub fn state_key(obs: &Observation) -> u64 {
        fnv1a64(&obs.to_bytes())
    }

    pub fn q_table(&self) -> &HashMap<u64, [f64; N_ACTIONS]> {
        &self.q
    }

    pub fn learn_steps(&self) -> u64 {
        self.learn_steps
    }

    pub fn epsilon(&self) -> f64 {
        let c = &self.config;
        if !self.learning_allowed {
            return c.epsilon_end;
        }
        if self.learn_steps >= c.anneal_steps {
            return c.epsilon_end;
        }
        let frac = self.learn_steps as f64 / c.anneal_steps as f64;
        c.epsilon_start + (c.epsilon_end - c.epsilon_start) * frac
    }

    /// Highest-valued action, or `None` when several tie.
    pub fn greedy_action(&self, obs: &Observation) -> Option<u8> {
        let values = self
            .q
            .get(&Self::state_key(obs))
            .copied()
            .unwrap_or([0.0; N_ACTIONS]);
        let best = argmax_ties(&values);
        (best.len() == 1).then(|| best[0] as u8)
    }

    /// One Q-learning backup.
    pub fn update(&mut self, state: u64, action: u8, reward: f64, next_state: u64, terminal: bool) {
        let bootstrap = if terminal {
            0.0
        } else {
            self.q
                .get(&next_state)
                .map(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .unwrap_or(0.0)
        };
        let QConfig { alpha, gamma, .. } = self.config;
        let entry = self.q.entry(state).or_insert([0.0; N_ACTIONS]);
        let q = &mut entry[action as usize];
        *q += alpha * (reward + gamma * bootstrap - *q);
    }

    fn act(&mut self, obs: &Observation) -> u8 {
        if self.rng.next_f64() < self.epsilon() {
            return self.rng.below(N_ACTIONS as u32) as u8;
        }
        let values = self
            .q
            .get(&Self::state_key(obs))
            .copied()
            .unwrap_or([0.0; N_ACTIONS]);
        let best = argmax_ties(&values);
        let pick = if best.len() == 1 {
            0
        } else {
            self.rng.index(best.len())
        };
        best[pick] as u8
    }
}

fn argmax_ties(values: &[f64; N_ACTIONS]) -> Vec<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..N_ACTIONS).filter(|&a| values[a] == max).collect()
}

impl Agent for TabularQAgent {
    fn name(&self) -> String {
        "qlearn".into()
    }

    fn on_event(&mut self, event: &AgentEvent) -> Result<(), AgentError> {
        if let AgentEvent::BlockStart {
            is_learning_allowed,
        } = event
        {
            self.learning_allowed = *is_learning_allowed;
        }
        Ok(())
    }

    fn choose_actions(
        &mut self,
        observations: &[Option<Observation>],
    ) -> Result<Vec<Option<u8>>, AgentError> {
        Ok(observations
            .iter()
            .map(|o| o.as_ref().map(|obs| self.act(obs)))
            .collect())
    }

    fn receive_transitions(
        &mut self,
        transitions: &[Option<Transition>],
    ) -> Result<(), AgentError> {
        if !self.learning_allowed {
            return Ok(());
        }
        for t in transitions.iter().flatten() {
            let Some(reward) = t.reward else { continue };
            if t.action as usize >= N_ACTIONS {
                return Err(AgentError::ContractViolation(format!(
                    "transition carries action {}",
                    t.action
                )));
            }
            let s = Self::state_key(&t.observation);
            let s_next = Self::state_key(&t.next_observation);
            self.update(s, t.action, reward, s_next, t.done);
            self.learn_steps += 1;
        }
        Ok(())
    }
}
