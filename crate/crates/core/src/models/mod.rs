//! Behavior-function learners: six supervised multi-class families behind a
//! single fit / predict interface.

pub mod adaboost;
pub mod config;
pub mod dataset;
pub mod forest;
pub mod gbt;
pub mod knn;
pub mod mlp;
pub mod tree;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adaboost::AdaBoostEnsemble;
pub use config::{Family, ModelConfig};
pub use dataset::Dataset;
pub use forest::{Forest, ForestKind};
pub use gbt::GradientBoostedEnsemble;
pub use knn::KnnModel;
pub use mlp::MlpModel;
pub use tree::DecisionTree;

use crate::error::{Result, UdrlError};
use crate::rng;

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Anything that maps a feature vector (state ++ command) to action probabilities.
pub trait BehaviorFunction: Send + Sync {
    fn input_dim(&self) -> usize;

    fn n_classes(&self) -> usize;

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Most probable action, lowest index on ties.
    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    /// The underlying forest, for importance computations.
    fn as_forest(&self) -> Option<&Forest> {
        None
    }

    fn family_name(&self) -> &str;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelBody {
    /// Fitted on a dataset with a single label.
    Constant { class: usize },
    Forest(Forest),
    AdaBoost(AdaBoostEnsemble),
    GradientBoosted(GradientBoostedEnsemble),
    Knn(KnnModel),
    Mlp(MlpModel),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub family: Family,
    pub n_classes: usize,
    pub input_dim: usize,
    pub feature_names: Vec<String>,
    pub body: ModelBody,
}

impl TrainedModel {
    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = names;
        self
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(UdrlError::Dimension {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

impl BehaviorFunction for TrainedModel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(match &self.body {
            ModelBody::Constant { class } => {
                let mut p = vec![0.0; self.n_classes];
                p[*class] = 1.0;
                p
            }
            ModelBody::Forest(m) => m.predict_proba(x),
            ModelBody::AdaBoost(m) => m.predict_proba(x),
            ModelBody::GradientBoosted(m) => m.predict_proba(x),
            ModelBody::Knn(m) => m.predict_proba(x),
            ModelBody::Mlp(m) => m.predict_proba(x),
        })
    }

    fn as_forest(&self) -> Option<&Forest> {
        match &self.body {
            ModelBody::Forest(f) => Some(f),
            _ => None,
        }
    }

    fn family_name(&self) -> &str {
        self.family.name()
    }
}

fn default_feature_names(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("f{i}")).collect()
}

/// Fits a fresh model of `config.family`; never reuses a previous model.
pub fn fit(config: &ModelConfig, data: &Dataset) -> Result<TrainedModel> {
    config.validate()?;
    data.require_fit_ready()?;
    let body = match data.single_class() {
        Some(class) => ModelBody::Constant { class },
        None => match config.family {
            Family::RandomForest => ModelBody::Forest(Forest::fit(ForestKind::RandomForest, data, &config.forest, config.seed)),
            Family::ExtraTrees => ModelBody::Forest(Forest::fit(ForestKind::ExtraTrees, data, &config.forest, config.seed)),
            Family::AdaBoost => ModelBody::AdaBoost(AdaBoostEnsemble::fit(data, &config.adaboost)),
            Family::GradientBoosting => ModelBody::GradientBoosted(GradientBoostedEnsemble::fit(data, &config.gbt)),
            Family::Knn => ModelBody::Knn(KnnModel::fit(data, config.knn.k)),
            Family::Mlp => ModelBody::Mlp(MlpModel::fit(data, &config.mlp, config.seed)),
        },
    };
    Ok(TrainedModel {
        family: config.family,
        n_classes: data.n_classes,
        input_dim: data.input_dim(),
        feature_names: default_feature_names(data.input_dim()),
        body,
    })
}

/// A single exhaustive or randomized classification tree.
pub fn fit_cart_tree(data: &Dataset, params: &config::TreeParams, seed: u64) -> Result<DecisionTree> {
    data.require_fit_ready()?;
    Ok(DecisionTree::fit(data, params, &mut rng::stream(seed, 0)))
}

/// Continues training an MLP-backed model for `n_steps` minibatch updates.
pub fn mlp_train_steps<R: Rng>(model: &mut TrainedModel, data: &Dataset, n_steps: usize, rng: &mut R) -> Result<()> {
    data.require_fit_ready()?;
    if data.input_dim() != model.input_dim {
        return Err(UdrlError::Dimension {
            expected: model.input_dim,
            got: data.input_dim(),
        });
    }
    match &mut model.body {
        ModelBody::Mlp(m) => {
            m.train_steps(data, n_steps, rng);
            Ok(())
        }
        _ => Err(UdrlError::UnsupportedModel(format!(
            "incremental training needs an MLP, got {}",
            model.family
        ))),
    }
}
