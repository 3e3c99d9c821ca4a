use rand::Rng;

use super::{Command, Episode, ReplayBuffer, Transition};
use crate::env::{spec, EnvKind, Environment};
use crate::error::{Result, UdrlError};
use crate::models::{BehaviorFunction, Dataset};

/// Runs one episode from a fresh reset (seed drawn from `rng`).
///
/// Each step feeds `state ++ [d_r, d_t]` to `model`; with probability
/// `epsilon`, or always when `model` is `None`, a uniform random action is
/// taken instead. After each reward the command advances by
/// [`Command::advance`].
pub fn collect_episode<R: Rng>(
    kind: EnvKind,
    model: Option<&dyn BehaviorFunction>,
    command: Command,
    epsilon: f64,
    rng: &mut R,
) -> Result<Episode> {
    let seed = rng.gen::<u64>();
    let mut env = Environment::new(kind, seed);
    let n_actions = env.spec().action_count;
    let mut command = Command::new(command.d_r, command.d_t);
    let mut transitions = Vec::new();
    loop {
        let explore = match model {
            None => true,
            Some(_) => epsilon > 0.0 && rng.gen::<f64>() < epsilon,
        };
        let action = match model {
            Some(m) if !explore => m.predict(&command.feature_vector(env.state()))?,
            _ => rng.gen_range(0..n_actions),
        };
        let state = env.state().clone();
        let result = env.step(action)?;
        transitions.push(Transition {
            state,
            action,
            reward: result.reward,
            command,
        });
        command = command.advance(result.reward);
        if result.done() {
            break;
        }
    }
    Ok(Episode::new(transitions, seed))
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Draws an exploratory command from the `k_best` highest-return episodes:
/// the horizon is their rounded mean length, the desired return is uniform on
/// `[mean, mean + std]` of their returns (population deviation).
pub fn sample_commands<R: Rng>(buffer: &ReplayBuffer, k_best: usize, rng: &mut R) -> Result<Command> {
    if buffer.is_empty() {
        return Err(UdrlError::NoData("cannot sample commands from an empty buffer".into()));
    }
    let best = buffer.best(k_best.max(1));
    let returns: Vec<f64> = best.iter().map(|e| e.total_return).collect();
    let lengths: Vec<f64> = best.iter().map(|e| e.len() as f64).collect();
    let (mean_return, std_return) = mean_std(&returns);
    let (mean_length, _) = mean_std(&lengths);
    let d_r = mean_return + rng.gen::<f64>() * std_return;
    Ok(Command::new(d_r, mean_length.round() as u32))
}

/// The supervised sample of the trailing segment starting at `t1`: input
/// `state_t1 ++ [Σ rewards t1..T, T - t1]`, label `action_t1`.
pub fn trailing_segment(episode: &Episode, t1: usize) -> (Vec<f64>, usize) {
    let tail = &episode.transitions[t1..];
    let remaining: f64 = tail.iter().map(|t| t.reward).sum();
    let horizon = tail.len() as f64;
    let first = &tail[0];
    let mut x = first.state.values().to_vec();
    x.push(remaining);
    x.push(horizon);
    (x, first.action)
}

/// Draws `segments_per_episode` trailing segments from every buffered episode.
pub fn build_training_set<R: Rng>(
    buffer: &ReplayBuffer,
    segments_per_episode: usize,
    n_classes: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if buffer.is_empty() {
        return Err(UdrlError::NoData("cannot build a training set from an empty buffer".into()));
    }
    let mut inputs = Vec::with_capacity(buffer.len() * segments_per_episode);
    let mut labels = Vec::with_capacity(buffer.len() * segments_per_episode);
    for episode in buffer.episodes() {
        for _ in 0..segments_per_episode {
            let t1 = rng.gen_range(0..episode.len());
            let (x, y) = trailing_segment(episode, t1);
            inputs.push(x);
            labels.push(y);
        }
    }
    Dataset::new(inputs, labels, n_classes)
}

/// Number of actions of `kind`, the class count of its behavior functions.
pub(crate) fn n_actions(kind: EnvKind) -> usize {
    spec(kind).action_count
}
