use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, UdrlError};

/// The six learner families a behavior function can be drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "rf")]
    RandomForest,
    #[serde(rename = "et")]
    ExtraTrees,
    #[serde(rename = "adaboost")]
    AdaBoost,
    #[serde(rename = "gbt")]
    GradientBoosting,
    #[serde(rename = "knn")]
    Knn,
    #[serde(rename = "mlp")]
    Mlp,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::RandomForest,
        Family::ExtraTrees,
        Family::AdaBoost,
        Family::GradientBoosting,
        Family::Knn,
        Family::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::RandomForest => "rf",
            Family::ExtraTrees => "et",
            Family::AdaBoost => "adaboost",
            Family::GradientBoosting => "gbt",
            Family::Knn => "knn",
            Family::Mlp => "mlp",
        }
    }

    pub fn is_forest(self) -> bool {
        matches!(self, Family::RandomForest | Family::ExtraTrees)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = UdrlError;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                UdrlError::InvalidConfig(format!(
                    "unknown model '{s}' (expected rf, et, adaboost, gbt, knn or mlp)"
                ))
            })
    }
}

/// How many features a tree node considers when searching for a split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    All,
    Sqrt,
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
        }
    }
}

/// Threshold search rule of a tree node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitter {
    /// Every midpoint between consecutive distinct values.
    Best,
    /// One uniform threshold per candidate feature.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub splitter: Splitter,
}

impl TreeParams {
    /// A single exhaustive CART tree grown until pure.
    pub fn cart() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::All,
            splitter: Splitter::Best,
        }
    }

    pub fn stump() -> Self {
        TreeParams {
            max_depth: Some(1),
            ..TreeParams::cart()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl ForestParams {
    pub fn random_forest() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
        }
    }

    pub fn extra_trees() -> Self {
        ForestParams {
            bootstrap: false,
            ..ForestParams::random_forest()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostParams {
    pub n_stages: usize,
    pub max_depth: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams {
            n_stages: 50,
            max_depth: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Minimum gain for a split.
    pub gamma: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_rounds: 100,
            max_depth: 6,
            learning_rate: 0.3,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    /// Minibatch updates run by a from-scratch fit.
    pub fit_steps: usize,
    /// Minibatch updates per incremental training call.
    pub update_steps: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: vec![64, 64, 64],
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 64,
            fit_steps: 100,
            update_steps: 100,
        }
    }
}

/// Family selector plus the hyperparameters of every family. Only the block
/// matching `family` is read by [`crate::models::fit`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub family: Family,
    pub seed: u64,
    pub forest: ForestParams,
    #[serde(default)]
    pub adaboost: AdaBoostParams,
    #[serde(default)]
    pub gbt: GbtParams,
    #[serde(default)]
    pub knn: KnnParams,
    #[serde(default)]
    pub mlp: MlpParams,
}

impl ModelConfig {
    /// Library-default hyperparameters for `family`.
    pub fn new(family: Family, seed: u64) -> Self {
        let forest = match family {
            Family::ExtraTrees => ForestParams::extra_trees(),
            _ => ForestParams::random_forest(),
        };
        ModelConfig {
            family,
            seed,
            forest,
            adaboost: AdaBoostParams::default(),
            gbt: GbtParams::default(),
            knn: KnnParams::default(),
            mlp: MlpParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(UdrlError::InvalidConfig(msg.to_string()));
        match self.family {
            Family::RandomForest | Family::ExtraTrees => {
                if self.forest.n_trees == 0 {
                    return fail("n_trees must be positive");
                }
                if self.forest.max_depth == Some(0) {
                    return fail("max_depth must be positive");
                }
                if self.forest.min_samples_split < 2 {
                    return fail("min_samples_split must be at least 2");
                }
            }
            Family::AdaBoost => {
                if self.adaboost.n_stages == 0 || self.adaboost.max_depth == 0 {
                    return fail("AdaBoost stages and depth must be positive");
                }
            }
            Family::GradientBoosting => {
                let g = &self.gbt;
                if g.n_rounds == 0 || g.max_depth == 0 {
                    return fail("boosting rounds and depth must be positive");
                }
                if !(g.learning_rate >= 0.0) || !(g.lambda >= 0.0) || !(g.gamma >= 0.0) {
                    return fail("learning_rate, lambda and gamma must be non-negative");
                }
            }
            Family::Knn => {
                if self.knn.k == 0 {
                    return fail("k must be positive");
                }
            }
            Family::Mlp => {
                let m = &self.mlp;
                if m.hidden.contains(&0) || m.batch_size == 0 {
                    return fail("hidden sizes and batch size must be positive");
                }
                if !(m.learning_rate > 0.0) {
                    return fail("learning rate must be positive");
                }
            }
        }
        Ok(())
    }
}
