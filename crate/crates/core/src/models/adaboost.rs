//! Multi-class AdaBoost (SAMME) over shallow weighted trees.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::config::{AdaBoostParams, TreeParams};
use super::dataset::Dataset;
use super::tree::DecisionTree;
use crate::rng::StreamRng;

/// Stage weight used when a stage classifies the training set perfectly.
pub const PERFECT_STAGE_ALPHA: f64 = 20.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostStage {
    pub tree: DecisionTree,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostEnsemble {
    pub stages: Vec<AdaBoostStage>,
    /// Training class frequencies; the prediction when no stage was kept.
    pub prior: Vec<f64>,
    pub n_classes: usize,
    pub input_dim: usize,
}

/// Diagnostics of one boosting round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundTrace {
    pub error: f64,
    pub alpha: f64,
    pub kept: bool,
    /// Normalized sample weights after the round's update.
    pub weights: Vec<f64>,
}

/// `ln((1 - err) / err) + ln(K - 1)`.
pub fn samme_alpha(error: f64, n_classes: usize) -> f64 {
    ((1.0 - error) / error).ln() + ((n_classes - 1) as f64).ln()
}

impl AdaBoostEnsemble {
    pub fn fit(data: &Dataset, params: &AdaBoostParams) -> Self {
        Self::fit_traced(data, params).0
    }

    pub fn fit_traced(data: &Dataset, params: &AdaBoostParams) -> (Self, Vec<RoundTrace>) {
        let n = data.len();
        let k = data.n_classes;
        let mut weights = vec![1.0 / n as f64; n];
        let tree_params = TreeParams {
            max_depth: Some(params.max_depth),
            ..TreeParams::cart()
        };
        // exhaustive splits over all features never touch the generator
        let mut rng = StreamRng::seed_from_u64(0);
        let mut stages = Vec::new();
        let mut trace = Vec::new();

        for _ in 0..params.n_stages {
            let tree = DecisionTree::fit_weighted(data, &weights, &tree_params, &mut rng);
            let wrong: Vec<bool> = data
                .inputs
                .iter()
                .zip(&data.labels)
                .map(|(x, &y)| tree.predict(x) != y)
                .collect();
            let error: f64 = weights.iter().zip(&wrong).filter(|(_, &w)| w).map(|(p, _)| p).sum();

            if error <= 0.0 {
                stages.push(AdaBoostStage {
                    tree,
                    alpha: PERFECT_STAGE_ALPHA,
                });
                trace.push(RoundTrace {
                    error,
                    alpha: PERFECT_STAGE_ALPHA,
                    kept: true,
                    weights: weights.clone(),
                });
                break;
            }
            if error >= 1.0 - 1.0 / k as f64 {
                trace.push(RoundTrace {
                    error,
                    alpha: 0.0,
                    kept: false,
                    weights: weights.clone(),
                });
                break;
            }

            let alpha = samme_alpha(error, k);
            let boost = alpha.exp();
            for (w, &bad) in weights.iter_mut().zip(&wrong) {
                if bad {
                    *w *= boost;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            stages.push(AdaBoostStage { tree, alpha });
            trace.push(RoundTrace {
                error,
                alpha,
                kept: true,
                weights: weights.clone(),
            });
        }

        let mut prior = vec![0.0; k];
        for &y in &data.labels {
            prior[y] += 1.0 / n as f64;
        }
        let model = AdaBoostEnsemble {
            stages,
            prior,
            n_classes: k,
            input_dim: data.input_dim(),
        };
        (model, trace)
    }

    /// Stage votes weighted by alpha, normalized to a distribution.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        if self.stages.is_empty() {
            return self.prior.clone();
        }
        let mut votes = vec![0.0; self.n_classes];
        for stage in &self.stages {
            votes[stage.tree.predict(x)] += stage.alpha;
        }
        let total: f64 = votes.iter().sum();
        votes.iter_mut().for_each(|v| *v /= total);
        votes
    }
}
