//! Gini classification trees grown greedily top-down.
//!
//! A node sends `x` left when `x[feature] <= threshold`. Nodes are stored in
//! an arena in depth-first pre-order; the root is node 0.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{Splitter, TreeParams};
use super::dataset::Dataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Gini impurity of the node.
        impurity: f64,
        /// Weighted sample count reaching the node (bootstrap multiplicities included).
        n_samples: f64,
        /// `impurity - w_left/w * impurity_left - w_right/w * impurity_right`, never negative.
        impurity_decrease: f64,
    },
    Leaf {
        /// Class frequencies of the training samples in the leaf; sums to 1.
        distribution: Vec<f64>,
        impurity: f64,
        n_samples: f64,
    },
}

impl Node {
    pub fn n_samples(&self) -> f64 {
        match self {
            Node::Split { n_samples, .. } | Node::Leaf { n_samples, .. } => *n_samples,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub n_classes: usize,
}

/// Gini impurity `1 - Σ p_c²` of weighted class totals.
pub fn gini(class_weights: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - class_weights
        .iter()
        .map(|&w| {
            let p = w / total;
            p * p
        })
        .sum::<f64>()
}

/// Weighted impurity decrease of splitting `parent` into `left` and `right`.
pub fn gini_decrease(left: &[f64], right: &[f64]) -> f64 {
    let wl: f64 = left.iter().sum();
    let wr: f64 = right.iter().sum();
    let w = wl + wr;
    let parent: Vec<f64> = left.iter().zip(right).map(|(a, b)| a + b).collect();
    gini(&parent, w) - wl / w * gini(left, wl) - wr / w * gini(right, wr)
}

/// Midpoint between two consecutive distinct sorted values, falling back to
/// the lower value when rounding lands on the upper one.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Decreases closer than this count as ties, which go to the earlier
/// candidate. Mirror-image partitions have equal decreases that can differ in
/// the last bit depending on evaluation order.
pub const TIE_TOLERANCE: f64 = 1e-12;

fn improves(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent + TIE_TOLERANCE
}

struct Candidate {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

struct Grower<'a, R> {
    data: &'a Dataset,
    weights: &'a [f64],
    params: &'a TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
    n_features: usize,
}

impl DecisionTree {
    /// Grows a tree on `data` where sample `i` carries weight `weights[i]`;
    /// samples with zero weight are ignored.
    pub fn fit_weighted<R: Rng>(data: &Dataset, weights: &[f64], params: &TreeParams, rng: &mut R) -> Self {
        assert_eq!(data.len(), weights.len(), "one weight per sample");
        let n_features = data.input_dim();
        let indices: Vec<usize> = (0..data.len()).filter(|&i| weights[i] > 0.0).collect();
        let mut grower = Grower {
            data,
            weights,
            params,
            rng,
            nodes: Vec::new(),
            n_features,
        };
        grower.grow(indices, 0);
        DecisionTree {
            nodes: grower.nodes,
            n_features,
            n_classes: data.n_classes,
        }
    }

    pub fn fit<R: Rng>(data: &Dataset, params: &TreeParams, rng: &mut R) -> Self {
        Self::fit_weighted(data, &vec![1.0; data.len()], params, rng)
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    /// Node indices visited by `x` from the root down to its leaf.
    pub fn decision_path(&self, x: &[f64]) -> Vec<usize> {
        let mut path = Vec::new();
        let mut idx = 0;
        loop {
            path.push(idx);
            match &self.nodes[idx] {
                Node::Leaf { .. } => return path,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => idx = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn leaf_distribution(&self, x: &[f64]) -> &[f64] {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { distribution, .. } => return distribution,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => idx = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Majority class of the leaf reached by `x` (lowest index on ties).
    pub fn predict(&self, x: &[f64]) -> usize {
        super::argmax(self.leaf_distribution(x))
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], idx: usize) -> usize {
            match &nodes[idx] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Checks arena structure: children in range and after their parent,
    /// leaf distributions of the right length.
    pub fn validate(&self) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Split {
                    feature, left, right, ..
                } => {
                    if *feature >= self.n_features {
                        return Err(format!("node {i} splits on feature {feature} of {}", self.n_features));
                    }
                    if *left <= i || *right <= i || *left >= self.nodes.len() || *right >= self.nodes.len() {
                        return Err(format!("node {i} has invalid children ({left}, {right})"));
                    }
                }
                Node::Leaf { distribution, .. } => {
                    if distribution.len() != self.n_classes {
                        return Err(format!("leaf {i} has {} classes", distribution.len()));
                    }
                }
            }
        }
        Ok(())
    }
}

impl<R: Rng> Grower<'_, R> {
    fn class_weights(&self, indices: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.data.n_classes];
        for &i in indices {
            counts[self.data.labels[i]] += self.weights[i];
        }
        counts
    }

    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let counts = self.class_weights(&indices);
        let total: f64 = counts.iter().sum();
        let impurity = gini(&counts, total);
        let idx = self.nodes.len();

        let classes_present = counts.iter().filter(|&&c| c > 0.0).count();
        let stop = classes_present <= 1
            || indices.len() < self.params.min_samples_split
            || self.params.max_depth.is_some_and(|d| depth >= d);
        let best = if stop { None } else { self.best_split(&indices, &counts, total, impurity) };

        let Some(best) = best else {
            let distribution = if total > 0.0 {
                counts.iter().map(|c| c / total).collect()
            } else {
                vec![1.0 / self.data.n_classes as f64; self.data.n_classes]
            };
            self.nodes.push(Node::Leaf {
                distribution,
                impurity,
                n_samples: total,
            });
            return idx;
        };

        // placeholder until the children indices are known
        self.nodes.push(Node::Leaf {
            distribution: Vec::new(),
            impurity,
            n_samples: total,
        });
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.data.inputs[i][best.feature] <= best.threshold);
        let left = self.grow(left_idx, depth + 1);
        let right = self.grow(right_idx, depth + 1);
        self.nodes[idx] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            impurity,
            n_samples: total,
            impurity_decrease: best.decrease.max(0.0),
        };
        idx
    }

    fn candidate_features(&mut self) -> (Vec<usize>, usize) {
        let mut features: Vec<usize> = (0..self.n_features).collect();
        let budget = self.params.max_features.resolve(self.n_features);
        if budget < self.n_features {
            features.shuffle(self.rng);
        }
        (features, budget)
    }

    fn best_split(&mut self, indices: &[usize], counts: &[f64], total: f64, impurity: f64) -> Option<Candidate> {
        let (features, budget) = self.candidate_features();
        let mut best: Option<Candidate> = None;
        let mut visited = 0;
        for feature in features {
            if visited >= budget {
                break;
            }
            let (lo, hi) = indices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = self.data.inputs[i][feature];
                (lo.min(v), hi.max(v))
            });
            if !(lo < hi) {
                // constant at this node: does not count toward the budget
                continue;
            }
            visited += 1;
            let found = match self.params.splitter {
                Splitter::Best => self.best_threshold(feature, indices, counts, total, impurity),
                Splitter::Random => {
                    let threshold = self.rng.gen_range(lo..hi);
                    Some(self.evaluate_threshold(feature, threshold, indices, counts, total, impurity))
                }
            };
            if let Some(c) = found {
                if best.as_ref().is_none_or(|b| improves(c.decrease, b.decrease)) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn evaluate_threshold(
        &self,
        feature: usize,
        threshold: f64,
        indices: &[usize],
        counts: &[f64],
        total: f64,
        impurity: f64,
    ) -> Candidate {
        let mut left = vec![0.0; counts.len()];
        for &i in indices {
            if self.data.inputs[i][feature] <= threshold {
                left[self.data.labels[i]] += self.weights[i];
            }
        }
        let right: Vec<f64> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
        let wl: f64 = left.iter().sum();
        let wr = total - wl;
        let decrease = impurity - wl / total * gini(&left, wl) - wr / total * gini(&right, wr);
        Candidate {
            feature,
            threshold,
            decrease,
        }
    }

    fn best_threshold(
        &self,
        feature: usize,
        indices: &[usize],
        counts: &[f64],
        total: f64,
        impurity: f64,
    ) -> Option<Candidate> {
        let mut order: Vec<usize> = indices.to_vec();
        order.sort_by(|&a, &b| self.data.inputs[a][feature].total_cmp(&self.data.inputs[b][feature]));

        let mut left = vec![0.0; counts.len()];
        let mut right = counts.to_vec();
        let mut wl = 0.0;
        let mut best: Option<Candidate> = None;
        for pair in order.windows(2) {
            let (i, next) = (pair[0], pair[1]);
            let w = self.weights[i];
            let y = self.data.labels[i];
            left[y] += w;
            right[y] -= w;
            wl += w;
            let v = self.data.inputs[i][feature];
            let v_next = self.data.inputs[next][feature];
            if v_next <= v {
                continue;
            }
            let wr = total - wl;
            let decrease = impurity - wl / total * gini(&left, wl) - wr / total * gini(&right, wr);
            if best.as_ref().is_none_or(|b| improves(decrease, b.decrease)) {
                best = Some(Candidate {
                    feature,
                    threshold: midpoint(v, v_next),
                    decrease,
                });
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::models::config::MaxFeatures;
    use crate::rng::StreamRng;

    fn rng() -> StreamRng {
        StreamRng::seed_from_u64(0)
    }

    #[test]
    fn pure_node_is_single_leaf() {
        let d = Dataset::new(vec![vec![1.0], vec![2.0], vec![3.0]], vec![1, 1, 1], 2).unwrap();
        let t = DecisionTree::fit(&d, &TreeParams::cart(), &mut rng());
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.leaf_distribution(&[0.0]), &[0.0, 1.0]);
    }

    #[test]
    fn xor_needs_two_levels() {
        // Every depth-1 split of XOR leaves both children at 50/50, so the
        // root split has zero decrease and the second level separates.
        let d = Dataset::new(
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![0, 1, 1, 0],
            2,
        )
        .unwrap();
        let t = DecisionTree::fit(&d, &TreeParams::cart(), &mut rng());
        match t.root() {
            Node::Split {
                feature,
                threshold,
                impurity_decrease,
                ..
            } => {
                assert_eq!((*feature, *threshold), (0, 0.5));
                assert_eq!(*impurity_decrease, 0.0);
            }
            other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(t.depth(), 2);
        for (x, &y) in d.inputs.iter().zip(&d.labels) {
            assert_eq!(t.predict(x), y);
        }
    }

    #[test]
    fn depth_limit_respected() {
        let d = Dataset::new(
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![0, 1, 1, 0],
            2,
        )
        .unwrap();
        let t = DecisionTree::fit(&d, &TreeParams::stump(), &mut rng());
        assert_eq!(t.depth(), 1);
        assert_eq!(t.n_leaves(), 2);
    }

    #[test]
    fn min_samples_split_stops_growth() {
        let d = Dataset::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0, 1, 0], 2).unwrap();
        let params = TreeParams {
            min_samples_split: 4,
            ..TreeParams::cart()
        };
        let t = DecisionTree::fit(&d, &params, &mut rng());
        assert_eq!(t.nodes.len(), 1);
        let dist = t.leaf_distribution(&[0.0]);
        assert!((dist[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_decrease() {
        // x = 0,1,2,3 with labels 0,0,1,0: the best cut is 1.5 with
        // decrease 0.375 - 0.5 * 0.5 = 0.125.
        let d = Dataset::new(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 1, 0], 2).unwrap();
        let t = DecisionTree::fit(&d, &TreeParams::stump(), &mut rng());
        match t.root() {
            Node::Split {
                threshold,
                impurity,
                impurity_decrease,
                n_samples,
                ..
            } => {
                assert_eq!(*threshold, 1.5);
                assert!((impurity - 0.375).abs() < 1e-15);
                assert!((impurity_decrease - 0.125).abs() < 1e-15);
                assert_eq!(*n_samples, 4.0);
            }
            other => panic!("{other:?}"),
        }
        assert!((gini_decrease(&[2.0, 0.0], &[1.0, 1.0]) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn weights_shift_the_split() {
        let d = Dataset::new(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 1, 0], 2).unwrap();
        let t = DecisionTree::fit_weighted(&d, &[1.0, 1.0, 10.0, 1.0], &TreeParams::stump(), &mut rng());
        // the heavy sample dominates its leaf
        assert_eq!(t.predict(&[2.0]), 1);
        // zero-weight samples are ignored entirely
        let t = DecisionTree::fit_weighted(&d, &[1.0, 1.0, 0.0, 1.0], &TreeParams::cart(), &mut rng());
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn random_thresholds_stay_in_node_range() {
        use rand::Rng;
        let mut data_rng = StreamRng::seed_from_u64(9);
        let inputs: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..3).map(|_| data_rng.gen_range(-5.0..5.0)).collect())
            .collect();
        let labels: Vec<usize> = (0..200).map(|_| data_rng.gen_range(0..3)).collect();
        let d = Dataset::new(inputs, labels, 3).unwrap();
        let params = TreeParams {
            splitter: Splitter::Random,
            max_features: MaxFeatures::Sqrt,
            ..TreeParams::cart()
        };
        let t = DecisionTree::fit(&d, &params, &mut rng());
        assert!(t.validate().is_ok());
        // recompute each split node's sample range by routing the data
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); t.nodes.len()];
        for x in &d.inputs {
            for idx in t.decision_path(x) {
                if let Node::Split { feature, .. } = t.nodes[idx] {
                    let r = &mut ranges[idx];
                    *r = (r.0.min(x[feature]), r.1.max(x[feature]));
                }
            }
        }
        for (idx, node) in t.nodes.iter().enumerate() {
            if let Node::Split { threshold, .. } = node {
                let (lo, hi) = ranges[idx];
                assert!(lo <= *threshold && *threshold < hi, "{lo} <= {threshold} < {hi}");
            }
        }
        // grown until pure
        for (x, &y) in d.inputs.iter().zip(&d.labels) {
            assert_eq!(t.predict(x), y);
        }
    }

    #[test]
    fn midpoint_never_reaches_upper_value() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        assert_eq!(midpoint(lo, hi), lo);
        assert_eq!(midpoint(1.0, 2.0), 1.5);
    }
}
