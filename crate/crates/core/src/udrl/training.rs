use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::collect::{build_training_set, collect_episode, n_actions, sample_commands};
use super::{Command, Episode, ReplayBuffer};
use crate::env::{spec, EnvKind};
use crate::error::{Result, UdrlError};
use crate::models::{self, Family, ModelBody, ModelConfig, TrainedModel};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub env: EnvKind,
    pub model: ModelConfig,
    pub n_episodes: usize,
    pub epsilon: f64,
    pub buffer_capacity: usize,
    pub n_warmup_episodes: usize,
    /// Episodes averaged when sampling exploratory commands.
    pub k_best: usize,
    pub segments_per_episode: usize,
    /// Episodes between refits of the behavior function.
    pub refit_period: usize,
    pub seed: u64,
}

impl TrainingConfig {
    pub fn new(env: EnvKind, family: Family, seed: u64) -> Self {
        TrainingConfig {
            env,
            model: ModelConfig::new(family, seed),
            n_episodes: 500,
            epsilon: 0.2,
            buffer_capacity: 700,
            n_warmup_episodes: 30,
            k_best: 25,
            segments_per_episode: 1,
            refit_period: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(UdrlError::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.epsilon) {
            return fail(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        for (name, value) in [
            ("n_episodes", self.n_episodes),
            ("buffer_capacity", self.buffer_capacity),
            ("n_warmup_episodes", self.n_warmup_episodes),
            ("k_best", self.k_best),
            ("segments_per_episode", self.segments_per_episode),
            ("refit_period", self.refit_period),
        ] {
            if value == 0 {
                return fail(format!("{name} must be positive"));
            }
        }
        self.model.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub total_return: f64,
    pub length: usize,
    /// `None` for warm-up episodes, which ignore commands.
    pub command: Option<Command>,
    pub epsilon: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub seed: u64,
    pub records: Vec<EpisodeRecord>,
}

impl TrainingLog {
    pub fn returns(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.total_return).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Mean return of records `range`.
    pub fn mean_return(&self, range: std::ops::Range<usize>) -> f64 {
        let slice = &self.records[range];
        slice.iter().map(|r| r.total_return).sum::<f64>() / slice.len() as f64
    }
}

#[derive(Clone, Debug)]
pub struct TrainingOutcome {
    pub model: TrainedModel,
    pub log: TrainingLog,
    pub buffer: ReplayBuffer,
}

struct Learner<'a> {
    config: &'a TrainingConfig,
    n_fits: u64,
}

impl Learner<'_> {
    fn fresh_fit(&mut self, data: &models::Dataset) -> Result<TrainedModel> {
        let mut model_config = self.config.model.clone();
        model_config.seed = rng::derive_seed(self.config.model.seed, self.n_fits);
        self.n_fits += 1;
        let names = spec(self.config.env).input_feature_names();
        Ok(models::fit(&model_config, data)?.with_feature_names(names))
    }

    /// Tree, boosting and neighbour models are refit from scratch; an MLP
    /// keeps its weights and optimizer state and takes further Adam steps.
    fn update<R: rand::Rng>(&mut self, model: &mut TrainedModel, data: &models::Dataset, rng: &mut R) -> Result<()> {
        if let ModelBody::Mlp(_) = model.body {
            let steps = self.config.model.mlp.update_steps;
            return models::mlp_train_steps(model, data, steps, rng);
        }
        *model = self.fresh_fit(data)?;
        Ok(())
    }
}

/// Runs the full single-seed loop. See [`run_training_with`].
pub fn run_training(config: &TrainingConfig) -> Result<TrainingOutcome> {
    run_training_with(config, |_| {})
}

/// Warm-up with fully random episodes, fit, then alternate command sampling,
/// epsilon-greedy collection and refitting until `n_episodes` episodes have
/// been collected. `on_episode` sees every record as it is logged.
pub fn run_training_with<F: FnMut(&EpisodeRecord)>(config: &TrainingConfig, mut on_episode: F) -> Result<TrainingOutcome> {
    config.validate()?;
    let start = Instant::now();
    let mut rng = rng::stream(config.seed, 0);
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut log = TrainingLog {
        seed: config.seed,
        records: Vec::with_capacity(config.n_episodes),
    };
    let n_classes = n_actions(config.env);
    let mut learner = Learner { config, n_fits: 0 };

    let mut record = |log: &mut TrainingLog, episode: &Episode, command: Option<Command>, epsilon: f64| {
        let r = EpisodeRecord {
            episode: log.records.len(),
            total_return: episode.total_return,
            length: episode.len(),
            command,
            epsilon,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        on_episode(&r);
        log.records.push(r);
    };

    let n_warmup = config.n_warmup_episodes.min(config.n_episodes);
    for _ in 0..n_warmup {
        let episode = collect_episode(config.env, None, Command::new(0.0, 1), 1.0, &mut rng)?;
        record(&mut log, &episode, None, 1.0);
        buffer.push(episode);
    }

    let data = build_training_set(&buffer, config.segments_per_episode, n_classes, &mut rng)?;
    let mut model = learner.fresh_fit(&data)?;

    for i in n_warmup..config.n_episodes {
        let command = sample_commands(&buffer, config.k_best, &mut rng)?;
        let episode = collect_episode(config.env, Some(&model), command, config.epsilon, &mut rng)?;
        record(&mut log, &episode, Some(command), config.epsilon);
        buffer.push(episode);
        if (i + 1 - n_warmup).is_multiple_of(config.refit_period) {
            let data = build_training_set(&buffer, config.segments_per_episode, n_classes, &mut rng)?;
            learner.update(&mut model, &data, &mut rng)?;
        }
    }

    Ok(TrainingOutcome { model, log, buffer })
}
