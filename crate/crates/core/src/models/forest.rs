//! Random forests and extremely randomized trees.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ForestParams, Splitter, TreeParams};
use super::dataset::Dataset;
use super::tree::DecisionTree;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForestKind {
    RandomForest,
    ExtraTrees,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub kind: ForestKind,
    pub trees: Vec<DecisionTree>,
    pub n_classes: usize,
    pub input_dim: usize,
}

impl Forest {
    /// Fits `params.n_trees` trees in parallel; tree `i` draws from its own
    /// stream derived from `(seed, i)`, so the result does not depend on
    /// scheduling.
    pub fn fit(kind: ForestKind, data: &Dataset, params: &ForestParams, seed: u64) -> Self {
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_samples_split: params.min_samples_split,
            max_features: params.max_features,
            splitter: match kind {
                ForestKind::RandomForest => Splitter::Best,
                ForestKind::ExtraTrees => Splitter::Random,
            },
        };
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng::stream(seed, i as u64);
                let weights = if params.bootstrap {
                    bootstrap_counts(data.len(), &mut rng)
                } else {
                    vec![1.0; data.len()]
                };
                DecisionTree::fit_weighted(data, &weights, &tree_params, &mut rng)
            })
            .collect();
        Forest {
            kind,
            trees,
            n_classes: data.n_classes,
            input_dim: data.input_dim(),
        }
    }

    /// Mean of the leaf class distributions reached in each tree.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut proba = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (p, d) in proba.iter_mut().zip(tree.leaf_distribution(x)) {
                *p += d;
            }
        }
        let n = self.trees.len() as f64;
        proba.iter_mut().for_each(|p| *p /= n);
        proba
    }
}

/// Multiplicity of each of `n` samples in a bootstrap draw of size `n`.
fn bootstrap_counts<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut counts = vec![0.0; n];
    for _ in 0..n {
        counts[rng.gen_range(0..n)] += 1.0;
    }
    counts
}
