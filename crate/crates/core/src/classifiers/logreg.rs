//! L2-regularized logistic regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// log(1 + e^z) without overflow.
fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn target(label: Label) -> f64 {
    match label {
        Label::Phishing => 1.0,
        Label::Benign => 0.0,
    }
}

pub fn affine_score(weights: &[f64], bias: f64, x: &[i8]) -> f64 {
    let mut z = bias;
    for (w, v) in weights.iter().zip(x.iter()) {
        z += w * f64::from(*v);
    }
    z
}

/// Regularized mean cross-entropy loss and its exact gradient.
///
/// loss = (1/n) sum CE_i + (l2/2)|w|^2; the bias is not regularized.
pub fn loss_and_gradient(
    weights: &[f64],
    bias: f64,
    data: &[(Vec<i8>, Label)],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = data.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (x, label) in data {
        let z = affine_score(weights, bias, x);
        let y = target(*label);
        // CE = log(1+e^z) - y*z  (numerically stable form)
        loss += log1p_exp(z) - y * z;
        let residual = sigmoid(z) - y;
        for (g, v) in grad_w.iter_mut().zip(x.iter()) {
            *g += residual * f64::from(*v);
        }
        grad_b += residual;
    }
    loss /= n;
    grad_b /= n;
    for g in grad_w.iter_mut() {
        *g /= n;
    }
    let mut penalty = 0.0;
    for (g, w) in grad_w.iter_mut().zip(weights.iter()) {
        penalty += w * w;
        *g += l2 * w;
    }
    loss += 0.5 * l2 * penalty;
    (loss, grad_w, grad_b)
}

/// Full-batch gradient descent from zero init. Deterministic.
pub fn train(
    width: usize,
    data: &[(Vec<i8>, Label)],
    learning_rate: f64,
    epochs: u32,
    l2: f64,
) -> LrModel {
    let mut weights = vec![0.0; width];
    let mut bias = 0.0;
    for _ in 0..epochs {
        let (_, grad_w, grad_b) = loss_and_gradient(&weights, bias, data, l2);
        for (w, g) in weights.iter_mut().zip(grad_w.iter()) {
            *w -= learning_rate * g;
        }
        bias -= learning_rate * grad_b;
    }
    LrModel { weights, bias }
}

pub fn predict_score(model: &LrModel, x: &[i8]) -> f64 {
    sigmoid(affine_score(&model.weights, model.bias, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_weights_balanced_data_loss_is_ln2() {
        let data = vec![
            (vec![1i8, -1, 0], Label::Phishing),
            (vec![-1i8, 1, 0], Label::Benign),
        ];
        let (loss, _, _) = loss_and_gradient(&[0.0; 3], 0.0, &data, 0.0);
        assert_abs_diff_eq!(loss, 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn duplicated_dataset_has_identical_gradient() {
        let data = vec![
            (vec![1i8, -1], Label::Phishing),
            (vec![0i8, 1], Label::Benign),
            (vec![-1i8, -1], Label::Benign),
        ];
        let mut doubled = data.clone();
        doubled.extend(data.clone());
        let weights = [0.3, -0.7];
        let (l1, g1, b1) = loss_and_gradient(&weights, 0.1, &data, 0.0);
        let (l2, g2, b2) = loss_and_gradient(&weights, 0.1, &doubled, 0.0);
        assert_abs_diff_eq!(l1, l2, epsilon = 1e-12);
        assert_abs_diff_eq!(b1, b2, epsilon = 1e-12);
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn separable_two_point_set_is_learned() {
        let data = vec![
            (vec![1i8; 4], Label::Phishing),
            (vec![-1i8; 4], Label::Benign),
        ];
        let model = train(4, &data, 0.5, 500, 0.0);
        assert!(predict_score(&model, &[1, 1, 1, 1]) > 0.5);
        assert!(predict_score(&model, &[-1, -1, -1, -1]) < 0.5);
    }

    #[test]
    fn zero_model_scores_half() {
        let model = LrModel {
            weights: vec![0.0; 5],
            bias: 0.0,
        };
        assert_abs_diff_eq!(predict_score(&model, &[1, -1, 0, 1, -1]), 0.5);
    }
}
