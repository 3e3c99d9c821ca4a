//! Command-conditioned episode collection and the outer training loop.
//!
//! An agent is asked to achieve a desired return `d_r` within `d_t` steps.
//! Episodes are collected with an epsilon-greedy behavior function, stored in
//! a return-ranked replay buffer, and turned into supervised samples by
//! relabelling each episode's trailing segment with the return it actually
//! achieved.

mod buffer;
mod collect;
mod training;

use serde::{Deserialize, Serialize};

pub use buffer::ReplayBuffer;
pub use collect::{build_training_set, collect_episode, sample_commands};
pub use training::{run_training, run_training_with, EpisodeRecord, TrainingConfig, TrainingLog, TrainingOutcome};

use crate::env::State;

/// Desired return and desired horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub d_r: f64,
    pub d_t: u32,
}

impl Command {
    /// Builds a command, clamping the horizon to at least one step.
    pub fn new(d_r: f64, d_t: u32) -> Self {
        Command { d_r, d_t: d_t.max(1) }
    }

    /// The command after observing `reward`: `d_r - r`, `max(d_t - 1, 1)`.
    pub fn advance(self, reward: f64) -> Self {
        Command {
            d_r: self.d_r - reward,
            d_t: self.d_t.saturating_sub(1).max(1),
        }
    }

    /// `state ++ [d_r, d_t]`.
    pub fn feature_vector(&self, state: &State) -> Vec<f64> {
        let mut x = Vec::with_capacity(state.len() + 2);
        x.extend_from_slice(state.values());
        x.push(self.d_r);
        x.push(self.d_t as f64);
        x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: State,
    pub action: usize,
    pub reward: f64,
    /// The command in force when the action was chosen.
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub transitions: Vec<Transition>,
    pub total_return: f64,
    /// Seed of the environment reset.
    pub seed: u64,
}

impl Episode {
    pub fn new(transitions: Vec<Transition>, seed: u64) -> Self {
        let total_return = transitions.iter().map(|t| t.reward).sum();
        Episode {
            transitions,
            total_return,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.transitions.iter().map(|t| t.reward)
    }
}
