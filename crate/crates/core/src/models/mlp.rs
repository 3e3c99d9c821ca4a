//! Fully connected ReLU network with a softmax output, trained on minibatch
//! cross-entropy with Adam.
//!
//! All weights and biases live in one flat vector, layer by layer: the
//! `out × in` weight matrix (row-major) followed by the `out` biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::MlpParams;
use super::dataset::{Dataset, Standardizer};
use super::softmax;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl Adam {
    pub fn new(params: &MlpParams, n_params: usize) -> Self {
        Adam {
            learning_rate: params.learning_rate,
            beta1: params.beta1,
            beta2: params.beta2,
            epsilon: params.epsilon,
            step: 0,
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
        }
    }

    pub fn update(&mut self, weights: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        for (((w, g), m), v) in weights
            .iter_mut()
            .zip(grad)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *w -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// `[input, hidden..., classes]`.
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<f64>,
    pub scaler: Standardizer,
    pub optimizer: Adam,
    pub batch_size: usize,
    pub n_classes: usize,
    pub input_dim: usize,
}

pub fn parameter_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl MlpModel {
    /// He-uniform initialized network with zero biases.
    pub fn new<R: Rng>(layer_sizes: Vec<usize>, scaler: Standardizer, params: &MlpParams, rng: &mut R) -> Self {
        let mut weights = Vec::with_capacity(parameter_count(&layer_sizes));
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            weights.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)));
            weights.extend(std::iter::repeat_n(0.0, fan_out));
        }
        let n = weights.len();
        MlpModel {
            input_dim: layer_sizes[0],
            n_classes: *layer_sizes.last().expect("at least input and output layers"),
            layer_sizes,
            weights,
            scaler,
            optimizer: Adam::new(params, n),
            batch_size: params.batch_size,
        }
    }

    /// Initializes from the data's feature statistics and runs `params.fit_steps` updates.
    pub fn fit(data: &Dataset, params: &MlpParams, seed: u64) -> Self {
        let mut sizes = vec![data.input_dim()];
        sizes.extend(&params.hidden);
        sizes.push(data.n_classes);
        let mut init_rng = rng::stream(seed, 0);
        let mut model = MlpModel::new(sizes, Standardizer::fit(&data.inputs), params, &mut init_rng);
        let mut train_rng = rng::stream(seed, 1);
        model.train_steps(data, params.fit_steps, &mut train_rng);
        model
    }

    /// Runs `n_steps` Adam updates on minibatches drawn with replacement.
    /// Inputs are standardized with the statistics captured at fit time.
    pub fn train_steps<R: Rng>(&mut self, data: &Dataset, n_steps: usize, rng: &mut R) {
        if data.is_empty() {
            return;
        }
        let standardized: Vec<Vec<f64>> = data.inputs.iter().map(|x| self.scaler.apply(x)).collect();
        let mut batch_x = Vec::with_capacity(self.batch_size);
        let mut batch_y = Vec::with_capacity(self.batch_size);
        for _ in 0..n_steps {
            batch_x.clear();
            batch_y.clear();
            for _ in 0..self.batch_size {
                let i = rng.gen_range(0..data.len());
                batch_x.push(standardized[i].as_slice());
                batch_y.push(data.labels[i]);
            }
            let (_, grad) = self.loss_and_gradient(&batch_x, &batch_y);
            let mut weights = std::mem::take(&mut self.weights);
            self.optimizer.update(&mut weights, &grad);
            self.weights = weights;
        }
    }

    /// Layer activations for one standardized input; the last entry holds the logits.
    fn forward(&self, z: &[f64]) -> Vec<Vec<f64>> {
        let n_layers = self.layer_sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(z.to_vec());
        let mut offset = 0;
        for (l, pair) in self.layer_sizes.windows(2).enumerate() {
            let (n_in, n_out) = (pair[0], pair[1]);
            let w = &self.weights[offset..offset + n_in * n_out];
            let b = &self.weights[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let input = &acts[l];
            let hidden = l + 1 < n_layers;
            let out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    let pre = b[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    if hidden {
                        pre.max(0.0)
                    } else {
                        pre
                    }
                })
                .collect();
            acts.push(out);
            offset += n_in * n_out + n_out;
        }
        acts
    }

    /// Mean cross-entropy over a batch of standardized inputs and its gradient
    /// with respect to the flat weight vector.
    pub fn loss_and_gradient(&self, batch: &[&[f64]], labels: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.weights.len()];
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        let offsets: Vec<usize> = self
            .layer_sizes
            .windows(2)
            .scan(0, |acc, w| {
                let start = *acc;
                *acc += w[0] * w[1] + w[1];
                Some(start)
            })
            .collect();

        for (z, &y) in batch.iter().zip(labels) {
            let acts = self.forward(z);
            let probs = softmax(acts.last().unwrap());
            loss -= probs[y].max(f64::MIN_POSITIVE).ln() * scale;
            let mut delta: Vec<f64> = probs
                .iter()
                .enumerate()
                .map(|(c, p)| (p - if c == y { 1.0 } else { 0.0 }) * scale)
                .collect();
            for l in (0..self.layer_sizes.len() - 1).rev() {
                let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
                let off = offsets[l];
                let input = &acts[l];
                for o in 0..n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                    grad[off + n_in * n_out + o] += d;
                }
                if l == 0 {
                    break;
                }
                let w = &self.weights[off..off + n_in * n_out];
                delta = (0..n_in)
                    .map(|i| {
                        if input[i] <= 0.0 {
                            return 0.0;
                        }
                        (0..n_out).map(|o| w[o * n_in + i] * delta[o]).sum()
                    })
                    .collect();
            }
        }
        (loss, grad)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let z = self.scaler.apply(x);
        softmax(self.forward(&z).last().unwrap())
    }
}
