use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `-log softmax(logits)[label]` and its gradient `softmax - onehot(label)`.
pub fn softmax_cross_entropy(logits: &Tensor, label: usize) -> Result<(f64, Tensor)> {
    let c = logits.len();
    if logits.shape().len() != 1 || c < 2 {
        return Err(Error::shape(format!(
            "logits must be a vector of >= 2 classes, got {:?}",
            logits.shape()
        )));
    }
    if label >= c {
        return Err(Error::invalid(format!("label {label} out of range for {c} classes")));
    }
    let z = logits.data();
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    let loss = log_sum - (z[label] - max);
    let mut grad = softmax(z);
    grad[label] -= 1.0;
    Ok((loss, Tensor::from_vec(&[c], grad)?))
}
