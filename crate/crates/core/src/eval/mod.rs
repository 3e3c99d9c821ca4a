//! Greedy inference runs, command selection from training logs, feature
//! importances and plot-data export.

mod export;
mod importance;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use export::{
    export_importance_dat, export_seed_csv, export_training_csv, parse_importance_dat, smoothed, SMOOTHING_WINDOW,
};
pub use importance::{global_mdi, local_path_importance, ImportanceKind, ImportanceVector};

use crate::env::EnvKind;
use crate::error::{Result, UdrlError};
use crate::models::BehaviorFunction;
use crate::rng;
use crate::udrl::{collect_episode, Command, TrainingLog};

/// Number of final training episodes whose commands are pooled.
pub const COMMAND_WINDOW: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceSpec {
    pub env: EnvKind,
    pub command: Command,
    pub n_episodes: usize,
    pub greedy: bool,
}

impl InferenceSpec {
    pub fn new(env: EnvKind, command: Command) -> Self {
        InferenceSpec {
            env,
            command,
            n_episodes: 100,
            greedy: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub per_episode_returns: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl EvalStats {
    pub fn from_returns(per_episode_returns: Vec<f64>) -> Self {
        let n = per_episode_returns.len().max(1) as f64;
        let mean = per_episode_returns.iter().sum::<f64>() / n;
        let var = per_episode_returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        EvalStats {
            per_episode_returns,
            mean,
            std: var.sqrt(),
        }
    }
}

/// The command to query a trained agent with.
///
/// CartPole always uses `(200, 200)`. Other tasks use the most frequent
/// rounded command of the last [`COMMAND_WINDOW`] logged episodes, preferring
/// the larger `d_r` on ties. Warm-up episodes carry no command and are skipped.
pub fn choose_inference_command(log: &TrainingLog, env: EnvKind) -> Result<Command> {
    if log.is_empty() {
        return Err(UdrlError::NoData("training log is empty".into()));
    }
    if env == EnvKind::CartPole {
        return Ok(Command::new(200.0, 200));
    }
    let start = log.len().saturating_sub(COMMAND_WINDOW);
    let mut counts: HashMap<(i64, u32), usize> = HashMap::new();
    for c in log.records[start..].iter().filter_map(|r| r.command) {
        *counts.entry((c.d_r.round() as i64, c.d_t)).or_default() += 1;
    }
    let ((d_r, d_t), _) = counts
        .into_iter()
        .max_by(|(ka, na), (kb, nb)| na.cmp(nb).then(ka.0.cmp(&kb.0)).then(ka.1.cmp(&kb.1)))
        .ok_or_else(|| UdrlError::NoData("no commands issued in the last episodes".into()))?;
    Ok(Command::new(d_r as f64, d_t))
}

/// Runs `spec.n_episodes` rollouts, episode `i` drawing its reset from
/// `rng::stream(seed, i)`. Rollouts are independent and run in parallel.
pub fn evaluate(model: &dyn BehaviorFunction, spec: &InferenceSpec, seed: u64) -> Result<EvalStats> {
    if spec.n_episodes == 0 {
        return Err(UdrlError::InvalidConfig("n_episodes must be positive".into()));
    }
    let expected = spec.env.spec().input_dim();
    if model.input_dim() != expected {
        return Err(UdrlError::Dimension {
            expected,
            got: model.input_dim(),
        });
    }
    let epsilon = if spec.greedy { 0.0 } else { 0.2 };
    let returns = (0..spec.n_episodes as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i);
            collect_episode(spec.env, Some(model), spec.command, epsilon, &mut rng).map(|e| e.total_return)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(EvalStats::from_returns(returns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::udrl::EpisodeRecord;

    fn log_with(commands: &[(f64, u32)]) -> TrainingLog {
        let records = commands
            .iter()
            .enumerate()
            .map(|(i, &(d_r, d_t))| EpisodeRecord {
                episode: i,
                total_return: 0.0,
                length: 1,
                command: Some(Command::new(d_r, d_t)),
                epsilon: 0.2,
                wall_time_s: 0.0,
            })
            .collect();
        TrainingLog { seed: 0, records }
    }

    #[test]
    fn cartpole_command_is_fixed() {
        let log = log_with(&[(3.0, 4)]);
        assert_eq!(choose_inference_command(&log, EnvKind::CartPole).unwrap(), Command::new(200.0, 200));
    }

    #[test]
    fn mode_of_last_hundred() {
        let mut cmds = vec![(5.0, 5); 150];
        cmds.extend(vec![(-79.2, 82); 100]);
        let c = choose_inference_command(&log_with(&cmds), EnvKind::Acrobot).unwrap();
        assert_eq!(c, Command::new(-79.0, 82));
    }

    #[test]
    fn tie_prefers_higher_return() {
        let cmds = [(-70.0, 60), (-50.0, 60), (-50.0, 60), (-70.0, 60)];
        let c = choose_inference_command(&log_with(&cmds), EnvKind::SimpleLander).unwrap();
        assert_eq!(c, Command::new(-50.0, 60));
    }

    #[test]
    fn empty_log_is_no_data() {
        let log = TrainingLog::default();
        assert!(matches!(
            choose_inference_command(&log, EnvKind::CartPole),
            Err(UdrlError::NoData(_))
        ));
    }

    #[test]
    fn stats_recomputable() {
        let s = EvalStats::from_returns(vec![1.0, 2.0, 3.0, 4.0]);
        assert!((s.mean - 2.5).abs() < 1e-12);
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-12);
    }
}
