//! k-nearest-neighbour classification on z-scored inputs.

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Standardizer};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    /// Training inputs, already standardized.
    pub exemplars: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub k: usize,
    pub scaler: Standardizer,
    pub n_classes: usize,
    pub input_dim: usize,
}

impl KnnModel {
    pub fn fit(data: &Dataset, k: usize) -> Self {
        let scaler = Standardizer::fit(&data.inputs);
        KnnModel {
            exemplars: data.inputs.iter().map(|x| scaler.apply(x)).collect(),
            labels: data.labels.clone(),
            k,
            scaler,
            n_classes: data.n_classes,
            input_dim: data.input_dim(),
        }
    }

    /// Indices of the `k` nearest exemplars, nearest first; distance ties go
    /// to the earlier exemplar.
    pub fn neighbours(&self, x: &[f64]) -> Vec<usize> {
        let z = self.scaler.apply(x);
        let mut dist: Vec<(f64, usize)> = self
            .exemplars
            .iter()
            .enumerate()
            .map(|(i, e)| (e.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k, cmp);
            dist.truncate(k);
        }
        dist.sort_by(cmp);
        dist.into_iter().map(|(_, i)| i).collect()
    }

    /// Label frequencies among the `k` nearest exemplars.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let neighbours = self.neighbours(x);
        let mut proba = vec![0.0; self.n_classes];
        let share = 1.0 / neighbours.len() as f64;
        for i in neighbours {
            proba[self.labels[i]] += share;
        }
        proba
    }
}
