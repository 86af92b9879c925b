//! One-vs-rest linear classification trained by stochastic subgradient
//! descent on the L2-regularized hinge loss with the 1/(λt) step schedule.
//! Both linear families (SVM and the SGD classifier) share this trainer.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::annotate::SentimentLabel;
use crate::features::{FeatureMatrix, SparseVector};

use super::seeds::{derive_seed, STREAM_OVR};
use super::{Hyperparams, ModelState};

pub(crate) fn dense_dot(w: &[f64], x: &SparseVector) -> f64 {
    x.entries().iter().map(|&(i, v)| w[i] * v).sum()
}

/// The single-sample regularized hinge objective
/// `λ/2 ‖w‖² + max(0, 1 − y(w·x + b))`; the bias is not regularized.
pub fn hinge_objective(w: &[f64], b: f64, x: &SparseVector, y: f64, lambda: f64) -> f64 {
    let norm_sq: f64 = w.iter().map(|v| v * v).sum();
    let margin = y * (dense_dot(w, x) + b);
    lambda / 2.0 * norm_sq + (1.0 - margin).max(0.0)
}

/// Subgradient of [`hinge_objective`] at (w, b): `λw − y·x` on the weights
/// and `−y` on the bias when the margin is violated, else `λw` and `0`.
pub fn hinge_subgradient(
    w: &[f64],
    b: f64,
    x: &SparseVector,
    y: f64,
    lambda: f64,
) -> (Vec<f64>, f64) {
    let mut grad_w: Vec<f64> = w.iter().map(|&v| lambda * v).collect();
    let margin = y * (dense_dot(w, x) + b);
    if margin < 1.0 {
        for &(i, v) in x.entries() {
            grad_w[i] -= y * v;
        }
        (grad_w, -y)
    } else {
        (grad_w, 0.0)
    }
}

/// Trains one binary (target vs rest) weight vector.
fn fit_binary(
    m: &FeatureMatrix,
    target: SentimentLabel,
    h: &Hyperparams,
    seed: u64,
) -> (Vec<f64>, f64) {
    let n = m.len();
    let mut w = vec![0.0f64; m.dimension()];
    let mut b = 0.0f64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t: u64 = 1;
    for _ in 0..h.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (x, label) = m.row(i);
            let y = if label == target { 1.0 } else { -1.0 };
            let eta = 1.0 / (h.lambda * t as f64);
            let (grad_w, grad_b) = hinge_subgradient(&w, b, x, y, h.lambda);
            for (wi, gi) in w.iter_mut().zip(&grad_w) {
                *wi -= eta * gi;
            }
            b -= eta * grad_b;
            t += 1;
        }
    }
    (w, b)
}

pub(crate) fn fit(
    m: &FeatureMatrix,
    class_list: &[SentimentLabel],
    h: &Hyperparams,
    seed: u64,
) -> ModelState {
    // Each class trains on its own derived stream, so the per-class
    // results are identical whether classes run serially or in parallel.
    let fitted: Vec<(Vec<f64>, f64)> = class_list
        .par_iter()
        .enumerate()
        .map(|(c, &target)| {
            fit_binary(m, target, h, derive_seed(seed, STREAM_OVR, c as u64))
        })
        .collect();
    let (weights, biases) = fitted.into_iter().unzip();
    ModelState::Linear { weights, biases }
}
