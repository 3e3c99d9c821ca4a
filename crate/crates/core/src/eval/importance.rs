use serde::{Deserialize, Serialize};

use crate::error::{Result, UdrlError};
use crate::models::tree::{DecisionTree, Node};
use crate::models::BehaviorFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceKind {
    GlobalMdi,
    LocalPath,
}

/// Per-feature scores over `state ++ [d_r, d_t]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector {
    pub scores: Vec<f64>,
    pub kind: ImportanceKind,
}

impl ImportanceVector {
    fn normalized(mut scores: Vec<f64>, kind: ImportanceKind) -> Self {
        let total: f64 = scores.iter().sum();
        if total > 0.0 {
            scores.iter_mut().for_each(|s| *s /= total);
        }
        ImportanceVector { scores, kind }
    }
}

fn forest_trees(model: &dyn BehaviorFunction) -> Result<&[DecisionTree]> {
    model
        .as_forest()
        .map(|f| f.trees.as_slice())
        .ok_or_else(|| UdrlError::UnsupportedModel(format!("importances need a forest, got {}", model.family_name())))
}

/// Mean decrease in impurity: each split adds its impurity decrease, weighted
/// by the fraction of root samples reaching it, to its feature.
pub fn global_mdi(model: &dyn BehaviorFunction) -> Result<ImportanceVector> {
    let trees = forest_trees(model)?;
    let mut scores = vec![0.0; model.input_dim()];
    for tree in trees {
        let root = tree.root().n_samples();
        for node in &tree.nodes {
            if let Node::Split {
                feature,
                n_samples,
                impurity_decrease,
                ..
            } = node
            {
                scores[*feature] += n_samples / root * impurity_decrease;
            }
        }
    }
    Ok(ImportanceVector::normalized(scores, ImportanceKind::GlobalMdi))
}

/// Impurity decreases of the splits `x` passes through, summed per feature.
pub fn local_path_importance(model: &dyn BehaviorFunction, x: &[f64]) -> Result<ImportanceVector> {
    let trees = forest_trees(model)?;
    if x.len() != model.input_dim() {
        return Err(UdrlError::Dimension {
            expected: model.input_dim(),
            got: x.len(),
        });
    }
    let mut scores = vec![0.0; model.input_dim()];
    for tree in trees {
        for idx in tree.decision_path(x) {
            if let Node::Split {
                feature,
                impurity_decrease,
                ..
            } = &tree.nodes[idx]
            {
                scores[*feature] += impurity_decrease;
            }
        }
    }
    Ok(ImportanceVector::normalized(scores, ImportanceKind::LocalPath))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::forest::{Forest, ForestKind};
    use crate::models::{Family, ModelBody, TrainedModel};

    fn wrap(trees: Vec<DecisionTree>, dim: usize) -> TrainedModel {
        TrainedModel {
            family: Family::RandomForest,
            n_classes: 2,
            input_dim: dim,
            feature_names: vec![],
            body: ModelBody::Forest(Forest {
                kind: ForestKind::RandomForest,
                trees,
                n_classes: 2,
                input_dim: dim,
            }),
        }
    }

    fn leaf(p: f64, n: f64) -> Node {
        Node::Leaf {
            distribution: vec![p, 1.0 - p],
            impurity: 0.0,
            n_samples: n,
        }
    }

    fn stump(feature: usize) -> DecisionTree {
        DecisionTree {
            nodes: vec![
                Node::Split {
                    feature,
                    threshold: 0.0,
                    left: 1,
                    right: 2,
                    impurity: 0.5,
                    n_samples: 4.0,
                    impurity_decrease: 0.5,
                },
                leaf(1.0, 2.0),
                leaf(0.0, 2.0),
            ],
            n_features: 3,
            n_classes: 2,
        }
    }

    #[test]
    fn single_split_is_indicator() {
        let m = wrap(vec![stump(2)], 3);
        assert_eq!(global_mdi(&m).unwrap().scores, vec![0.0, 0.0, 1.0]);
        for x in [[-1.0, 0.0, -1.0], [5.0, 5.0, 5.0]] {
            assert_eq!(local_path_importance(&m, &x).unwrap().scores, vec![0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn no_splits_gives_zeros() {
        let tree = DecisionTree {
            nodes: vec![leaf(0.5, 3.0)],
            n_features: 3,
            n_classes: 2,
        };
        let m = wrap(vec![tree], 3);
        assert_eq!(global_mdi(&m).unwrap().scores, vec![0.0; 3]);
        assert_eq!(local_path_importance(&m, &[0.0; 3]).unwrap().scores, vec![0.0; 3]);
    }

    #[test]
    fn averages_over_trees() {
        let m = wrap(vec![stump(0), stump(1)], 3);
        assert_eq!(global_mdi(&m).unwrap().scores, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn non_forest_rejected() {
        let m = TrainedModel {
            family: Family::Knn,
            n_classes: 2,
            input_dim: 1,
            feature_names: vec![],
            body: ModelBody::Constant { class: 0 },
        };
        assert!(matches!(global_mdi(&m), Err(UdrlError::UnsupportedModel(_))));
        assert!(matches!(local_path_importance(&m, &[0.0]), Err(UdrlError::UnsupportedModel(_))));
    }
}
