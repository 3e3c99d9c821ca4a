//! Second-order gradient boosting with a softmax objective: one regression
//! tree per class per round, grown by exact greedy search on the
//! gradient/hessian statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::GbtParams;
use super::dataset::Dataset;
use super::tree::midpoint;
use super::softmax;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RegNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegNode>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                RegNode::Leaf { value } => return *value,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => idx = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostedEnsemble {
    /// `rounds[r][c]` is the tree for class `c` in round `r`.
    pub rounds: Vec<Vec<RegressionTree>>,
    pub learning_rate: f64,
    pub base_score: f64,
    pub n_classes: usize,
    pub input_dim: usize,
}

/// `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ`.
pub fn split_gain(g_left: f64, h_left: f64, g_right: f64, h_right: f64, lambda: f64, gamma: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + lambda);
    let g = g_left + g_right;
    let h = h_left + h_right;
    0.5 * (score(g_left, h_left) + score(g_right, h_right) - score(g, h)) - gamma
}

/// Optimal leaf value `−G/(H+λ)`.
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    -g / (h + lambda)
}

/// Softmax gradients and hessians of the cross-entropy for class `class`.
pub fn class_gradients(probs: &[Vec<f64>], labels: &[usize], class: usize) -> (Vec<f64>, Vec<f64>) {
    probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| {
            let pc = p[class];
            let target = if y == class { 1.0 } else { 0.0 };
            (pc - target, pc * (1.0 - pc))
        })
        .unzip()
}

struct RegGrower<'a> {
    inputs: &'a [Vec<f64>],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbtParams,
    nodes: Vec<RegNode>,
}

impl RegGrower<'_> {
    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let g: f64 = indices.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = indices.iter().map(|&i| self.hess[i]).sum();
        let idx = self.nodes.len();
        self.nodes.push(RegNode::Leaf {
            value: leaf_weight(g, h, self.params.lambda),
        });
        if depth >= self.params.max_depth || indices.len() < 2 {
            return idx;
        }
        let Some((feature, threshold, gain)) = self.best_split(&indices, g, h) else {
            return idx;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            indices.iter().partition(|&&i| self.inputs[i][feature] <= threshold);
        let left = self.grow(left_idx, depth + 1);
        let right = self.grow(right_idx, depth + 1);
        self.nodes[idx] = RegNode::Split {
            feature,
            threshold,
            left,
            right,
            gain,
        };
        idx
    }

    fn best_split(&self, indices: &[usize], g: f64, h: f64) -> Option<(usize, f64, f64)> {
        let p = self.params;
        let n_features = self.inputs[indices[0]].len();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = indices.to_vec();
        for feature in 0..n_features {
            order.sort_by(|&a, &b| self.inputs[a][feature].total_cmp(&self.inputs[b][feature]));
            let (mut gl, mut hl) = (0.0, 0.0);
            for pair in order.windows(2) {
                let (i, next) = (pair[0], pair[1]);
                gl += self.grad[i];
                hl += self.hess[i];
                let (v, v_next) = (self.inputs[i][feature], self.inputs[next][feature]);
                if v_next <= v {
                    continue;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl < p.min_child_weight || hr < p.min_child_weight {
                    continue;
                }
                let gain = split_gain(gl, hl, gr, hr, p.lambda, p.gamma);
                if gain > 0.0 && best.is_none_or(|b| gain > b.2) {
                    best = Some((feature, midpoint(v, v_next), gain));
                }
            }
        }
        best
    }
}

/// Grows one depth-limited regression tree on per-sample gradient statistics.
pub fn fit_regression_tree(inputs: &[Vec<f64>], grad: &[f64], hess: &[f64], params: &GbtParams) -> RegressionTree {
    let mut grower = RegGrower {
        inputs,
        grad,
        hess,
        params,
        nodes: Vec::new(),
    };
    grower.grow((0..inputs.len()).collect(), 0);
    RegressionTree { nodes: grower.nodes }
}

impl GradientBoostedEnsemble {
    pub fn fit(data: &Dataset, params: &GbtParams) -> Self {
        let k = data.n_classes;
        let base_score = 0.0;
        let mut scores = vec![vec![base_score; k]; data.len()];
        let mut rounds = Vec::with_capacity(params.n_rounds);
        for _ in 0..params.n_rounds {
            let probs: Vec<Vec<f64>> = scores.iter().map(|s| softmax(s)).collect();
            let trees: Vec<RegressionTree> = (0..k)
                .into_par_iter()
                .map(|c| {
                    let (grad, hess) = class_gradients(&probs, &data.labels, c);
                    fit_regression_tree(&data.inputs, &grad, &hess, params)
                })
                .collect();
            for (x, s) in data.inputs.iter().zip(scores.iter_mut()) {
                for (c, tree) in trees.iter().enumerate() {
                    s[c] += params.learning_rate * tree.predict(x);
                }
            }
            rounds.push(trees);
        }
        GradientBoostedEnsemble {
            rounds,
            learning_rate: params.learning_rate,
            base_score,
            n_classes: k,
            input_dim: data.input_dim(),
        }
    }

    pub fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut scores = vec![self.base_score; self.n_classes];
        for round in &self.rounds {
            for (s, tree) in scores.iter_mut().zip(round) {
                *s += self.learning_rate * tree.predict(x);
            }
        }
        scores
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.raw_scores(x))
    }
}
