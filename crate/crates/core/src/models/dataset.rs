use serde::{Deserialize, Serialize};

use crate::error::{Result, UdrlError};

/// Supervised training pairs: feature vectors (state ++ command) and action labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(UdrlError::Dimension {
                expected: inputs.len(),
                got: labels.len(),
            });
        }
        if let Some(first) = inputs.first() {
            let dim = first.len();
            if let Some(bad) = inputs.iter().find(|x| x.len() != dim) {
                return Err(UdrlError::Dimension {
                    expected: dim,
                    got: bad.len(),
                });
            }
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(UdrlError::InvalidAction {
                action: bad,
                action_count: n_classes,
            });
        }
        Ok(Dataset {
            inputs,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    /// The only label present, if the dataset has exactly one class.
    pub fn single_class(&self) -> Option<usize> {
        let first = *self.labels.first()?;
        self.labels.iter().all(|&y| y == first).then_some(first)
    }

    pub(crate) fn require_fit_ready(&self) -> Result<()> {
        if self.is_empty() {
            return Err(UdrlError::NoData("cannot fit on an empty dataset".into()));
        }
        if self.n_classes < 2 {
            return Err(UdrlError::InvalidConfig(format!(
                "need at least 2 classes, got {}",
                self.n_classes
            )));
        }
        Ok(())
    }
}

/// Per-feature mean and standard deviation; zero deviations are replaced by 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(inputs: &[Vec<f64>]) -> Self {
        let dim = inputs.first().map_or(0, Vec::len);
        let n = inputs.len().max(1) as f64;
        let mut means = vec![0.0; dim];
        for x in inputs {
            for (m, v) in means.iter_mut().zip(x) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut stds = vec![0.0; dim];
        for x in inputs {
            for ((s, v), m) in stds.iter_mut().zip(x).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in stds.iter_mut() {
            *s = (*s / n).sqrt();
            if !(*s > 1e-12) {
                *s = 1.0;
            }
        }
        Standardizer { means, stds }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}
