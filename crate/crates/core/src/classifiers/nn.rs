//! Small feed-forward network trained with seeded mini-batch SGD on
//! cross-entropy. An optional 1-D convolutional front layer is available via
//! config; inputs are ternary tabular vectors, so the default is dense-only.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Activation, ConvParams, NnParams};
use crate::corpus::Label;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// Row-major [outputs x inputs].
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub inputs: usize,
    pub outputs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    /// Row-major [filters x kernel].
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub filters: usize,
    pub kernel: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnModel {
    pub conv: Option<ConvLayer>,
    pub layers: Vec<DenseLayer>,
    pub activation: Activation,
}

fn act(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Relu => z.max(0.0),
        Activation::Tanh => z.tanh(),
    }
}

fn act_prime(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Relu => {
            if z > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Tanh => {
            let t = z.tanh();
            1.0 - t * t
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn init_dense(inputs: usize, outputs: usize, rng: &mut seed::Rng) -> DenseLayer {
    let bound = (6.0 / (inputs + outputs) as f64).sqrt();
    let weights = (0..inputs * outputs)
        .map(|_| rng.gen_range(-bound..=bound))
        .collect();
    DenseLayer {
        weights,
        bias: vec![0.0; outputs],
        inputs,
        outputs,
    }
}

fn init_conv(params: &ConvParams, rng: &mut seed::Rng) -> ConvLayer {
    let bound = (6.0 / (params.kernel + params.filters) as f64).sqrt();
    let weights = (0..params.filters * params.kernel)
        .map(|_| rng.gen_range(-bound..=bound))
        .collect();
    ConvLayer {
        weights,
        bias: vec![0.0; params.filters],
        filters: params.filters,
        kernel: params.kernel,
    }
}

struct Forward {
    /// Conv pre-activations, flattened [filters x positions], when conv is on.
    conv_pre: Vec<f64>,
    /// Dense inputs: activations[0] is the dense input vector, then one per layer.
    activations: Vec<Vec<f64>>,
    /// Dense pre-activations per layer.
    pre: Vec<Vec<f64>>,
}

impl NnModel {
    fn forward(&self, x: &[f64]) -> Forward {
        let mut conv_pre = Vec::new();
        let dense_input = match &self.conv {
            None => x.to_vec(),
            Some(conv) => {
                let positions = x.len() + 1 - conv.kernel;
                let mut out = vec![0.0; conv.filters * positions];
                conv_pre = vec![0.0; conv.filters * positions];
                for f in 0..conv.filters {
                    for p in 0..positions {
                        let mut z = conv.bias[f];
                        for k in 0..conv.kernel {
                            z += conv.weights[f * conv.kernel + k] * x[p + k];
                        }
                        conv_pre[f * positions + p] = z;
                        out[f * positions + p] = act(self.activation, z);
                    }
                }
                out
            }
        };
        let mut activations = vec![dense_input];
        let mut pre = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let input = &activations[l];
            let mut z = vec![0.0; layer.outputs];
            for o in 0..layer.outputs {
                let mut sum = layer.bias[o];
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (w, v) in row.iter().zip(input.iter()) {
                    sum += w * v;
                }
                z[o] = sum;
            }
            let last = l + 1 == self.layers.len();
            let a = if last {
                z.clone() // final sigmoid applied at the loss/score site
            } else {
                z.iter().map(|&v| act(self.activation, v)).collect()
            };
            pre.push(z);
            activations.push(a);
        }
        Forward {
            conv_pre,
            activations,
            pre,
        }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let f = self.forward(x);
        sigmoid(f.activations.last().unwrap()[0])
    }
}

struct Gradients {
    conv_w: Vec<f64>,
    conv_b: Vec<f64>,
    dense_w: Vec<Vec<f64>>,
    dense_b: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros(model: &NnModel) -> Gradients {
        Gradients {
            conv_w: model
                .conv
                .as_ref()
                .map(|c| vec![0.0; c.weights.len()])
                .unwrap_or_default(),
            conv_b: model
                .conv
                .as_ref()
                .map(|c| vec![0.0; c.bias.len()])
                .unwrap_or_default(),
            dense_w: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            dense_b: model.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }
}

fn backward(model: &NnModel, x: &[f64], y: f64, forward: &Forward, grads: &mut Gradients) {
    let n_layers = model.layers.len();
    let output = forward.activations[n_layers][0];
    // sigmoid + cross-entropy: dL/dz = sigma(z) - y
    let mut delta = vec![sigmoid(output) - y];
    for l in (0..n_layers).rev() {
        let layer = &model.layers[l];
        let input = &forward.activations[l];
        for o in 0..layer.outputs {
            grads.dense_b[l][o] += delta[o];
            let row = &mut grads.dense_w[l][o * layer.inputs..(o + 1) * layer.inputs];
            for (g, v) in row.iter_mut().zip(input.iter()) {
                *g += delta[o] * v;
            }
        }
        if l == 0 {
            if let Some(conv) = &model.conv {
                // propagate into the conv layer
                let mut input_delta = vec![0.0; layer.inputs];
                for o in 0..layer.outputs {
                    for i in 0..layer.inputs {
                        input_delta[i] += layer.weights[o * layer.inputs + i] * delta[o];
                    }
                }
                let positions = forward.conv_pre.len() / conv.filters;
                for f in 0..conv.filters {
                    for p in 0..positions {
                        let idx = f * positions + p;
                        let g = input_delta[idx]
                            * act_prime(model.activation, forward.conv_pre[idx]);
                        grads.conv_b[f] += g;
                        for k in 0..conv.kernel {
                            grads.conv_w[f * conv.kernel + k] += g * x[p + k];
                        }
                    }
                }
            }
            break;
        }
        let mut next = vec![0.0; layer.inputs];
        for i in 0..layer.inputs {
            let mut sum = 0.0;
            for o in 0..layer.outputs {
                sum += layer.weights[o * layer.inputs + i] * delta[o];
            }
            next[i] = sum * act_prime(model.activation, forward.pre[l - 1][i]);
        }
        delta = next;
    }
}

fn to_f64(x: &[i8]) -> Vec<f64> {
    x.iter().map(|&v| f64::from(v)).collect()
}

fn target(label: Label) -> f64 {
    match label {
        Label::Phishing => 1.0,
        Label::Benign => 0.0,
    }
}

/// Builds the seeded initial model for `width` inputs.
pub fn init_model(width: usize, params: &NnParams, seed_value: u64) -> NnModel {
    let mut rng = seed::rng(seed::mix(seed_value, 1));
    let conv = params.conv.as_ref().map(|c| init_conv(c, &mut rng));
    let mut input_width = width;
    if let Some(c) = &params.conv {
        input_width = (width + 1 - c.kernel.min(width)) * c.filters;
    }
    let mut layers = Vec::new();
    let mut prev = input_width;
    for &hidden in &params.hidden {
        layers.push(init_dense(prev, hidden, &mut rng));
        prev = hidden;
    }
    layers.push(init_dense(prev, 1, &mut rng));
    NnModel {
        conv,
        layers,
        activation: params.activation,
    }
}

/// Seeded init + mini-batch SGD on cross-entropy. Deterministic for a fixed
/// (seed, data order). Zero epochs returns the seeded init untouched.
pub fn train(
    width: usize,
    data: &[(Vec<i8>, Label)],
    params: &NnParams,
    seed_value: u64,
) -> NnModel {
    let mut model = init_model(width, params, seed_value);
    let mut rng = seed::rng(seed::mix(seed_value, 2));
    let batch_size = (params.batch_size as usize).max(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let inputs: Vec<Vec<f64>> = data.iter().map(|(x, _)| to_f64(x)).collect();
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size) {
            let mut grads = Gradients::zeros(&model);
            for &i in batch {
                let forward = model.forward(&inputs[i]);
                backward(&model, &inputs[i], target(data[i].1), &forward, &mut grads);
            }
            let step = params.learning_rate / batch.len() as f64;
            if let Some(conv) = &mut model.conv {
                for (w, g) in conv.weights.iter_mut().zip(grads.conv_w.iter()) {
                    *w -= step * g;
                }
                for (b, g) in conv.bias.iter_mut().zip(grads.conv_b.iter()) {
                    *b -= step * g;
                }
            }
            for (l, layer) in model.layers.iter_mut().enumerate() {
                for (w, g) in layer.weights.iter_mut().zip(grads.dense_w[l].iter()) {
                    *w -= step * g;
                }
                for (b, g) in layer.bias.iter_mut().zip(grads.dense_b[l].iter()) {
                    *b -= step * g;
                }
            }
        }
    }
    model
}

pub fn predict_score(model: &NnModel, x: &[i8]) -> f64 {
    model.score(&to_f64(x))
}

/// Mean cross-entropy of the model on `data` (test support for gradient
/// checks).
#[doc(hidden)]
pub fn mean_loss(model: &NnModel, data: &[(Vec<i8>, Label)]) -> f64 {
    let mut loss = 0.0;
    for (x, label) in data {
        let s = predict_score(model, x).clamp(1e-12, 1.0 - 1e-12);
        let y = target(*label);
        loss -= y * s.ln() + (1.0 - y) * (1.0 - s).ln();
    }
    loss / data.len() as f64
}
