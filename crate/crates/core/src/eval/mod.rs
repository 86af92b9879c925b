//! Evaluation: seeded 7:3-style train/test splitting (optionally
//! stratified), multiclass metrics with support-weighted averaging, and
//! k-fold cross-validation over model specs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::SentimentLabel;
use crate::features::FeatureMatrix;
use crate::models::seeds::{derive_seed, STREAM_FOLD, STREAM_SPLIT};
use crate::models::{self, ModelError, ModelSpec};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("test_fraction {fraction} must lie strictly between 0 and 1")]
    InvalidTestFraction { fraction: f64 },
    #[error("cannot split {n} rows: need at least 2")]
    TooFewRows { n: usize },
    #[error("test size {test_size} of {n} rows leaves an empty side")]
    DegenerateSplit { test_size: usize, n: usize },
    #[error("label lists have different lengths ({true_len} vs {pred_len})")]
    LengthMismatch { true_len: usize, pred_len: usize },
    #[error("cannot compute metrics over zero labels")]
    EmptyLabels,
    #[error("fold count {k} is invalid for {n} rows (need 2 ≤ k ≤ n)")]
    InvalidFoldCount { k: usize, n: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How to cut a dataset into train and test portions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Fraction of rows assigned to the test side (strictly between 0
    /// and 1); 0.3 reproduces the 7:3 ratio.
    pub test_fraction: f64,
    pub seed: u64,
    /// Preserve per-class proportions (within ±1 row per class).
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: 0.3,
            seed: 0,
            stratified: false,
        }
    }
}

/// Multiclass evaluation summary. `classes` fixes the row/column order of
/// `confusion` (rows = true class, columns = predicted class).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub classes: Vec<SentimentLabel>,
    pub confusion: Vec<Vec<usize>>,
    pub support: Vec<usize>,
    pub accuracy: f64,
    pub precision_weighted: f64,
    pub recall_weighted: f64,
    pub f1_weighted: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    /// How many per-class precision/recall/F1 values hit a zero
    /// denominator and were reported as 0.
    pub zero_division_hits: usize,
}

/// Accuracy of fold models trained on the remaining folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVResult {
    pub k: usize,
    pub fold_scores: Vec<f64>,
    pub mean_score: f64,
}

/// Splits `m` into (train, test) with `round(n × test_fraction)` test rows
/// after a seeded shuffle. Stratified mode allocates test rows per class
/// by largest remainder, keeping class proportions within ±1 row.
pub fn train_test_split(
    m: &FeatureMatrix,
    cfg: &SplitConfig,
) -> Result<(FeatureMatrix, FeatureMatrix), EvalError> {
    if !(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0) {
        return Err(EvalError::InvalidTestFraction {
            fraction: cfg.test_fraction,
        });
    }
    let n = m.len();
    if n < 2 {
        return Err(EvalError::TooFewRows { n });
    }
    let test_size = (n as f64 * cfg.test_fraction).round() as usize;
    if test_size == 0 || test_size == n {
        return Err(EvalError::DegenerateSplit { test_size, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_SPLIT, 0));

    let test_indices: Vec<usize> = if cfg.stratified {
        // Classes in first-appearance order, with their row indices.
        let mut classes: Vec<(SentimentLabel, Vec<usize>)> = Vec::new();
        for (i, &label) in m.labels().iter().enumerate() {
            match classes.iter_mut().find(|(l, _)| *l == label) {
                Some((_, rows)) => rows.push(i),
                None => classes.push((label, vec![i])),
            }
        }
        // Largest-remainder allocation of the test budget across classes.
        let shares: Vec<f64> = classes
            .iter()
            .map(|(_, rows)| test_size as f64 * rows.len() as f64 / n as f64)
            .collect();
        let mut allocation: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
        let mut leftover = test_size - allocation.iter().sum::<usize>();
        let mut by_remainder: Vec<usize> = (0..classes.len()).collect();
        by_remainder.sort_by(|&a, &b| {
            let ra = shares[a] - shares[a].floor();
            let rb = shares[b] - shares[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &c in &by_remainder {
            if leftover == 0 {
                break;
            }
            if allocation[c] < classes[c].1.len() {
                allocation[c] += 1;
                leftover -= 1;
            }
        }
        let mut picked = Vec::with_capacity(test_size);
        for (c, (_, rows)) in classes.iter().enumerate() {
            let mut rows = rows.clone();
            rows.shuffle(&mut rng);
            picked.extend(rows.into_iter().take(allocation[c]));
        }
        picked
    } else {
        let mut indices: Vec<usize> = (0..n).collect();
        indices.shuffle(&mut rng);
        indices.truncate(test_size);
        indices
    };

    let in_test = {
        let mut mask = vec![false; n];
        for &i in &test_indices {
            mask[i] = true;
        }
        mask
    };
    let train_indices: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
    Ok((m.select(&train_indices), m.select(&test_indices)))
}

/// Computes accuracy, the confusion matrix, and support-weighted plus
/// macro-averaged precision/recall/F1. Classes are ordered by first
/// appearance in `y_true`, then `y_pred`. Zero-denominator per-class
/// values become 0 and are tallied in `zero_division_hits`.
pub fn compute_metrics(
    y_true: &[SentimentLabel],
    y_pred: &[SentimentLabel],
) -> Result<Metrics, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            true_len: y_true.len(),
            pred_len: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::EmptyLabels);
    }
    let mut classes: Vec<SentimentLabel> = Vec::new();
    for &label in y_true.iter().chain(y_pred) {
        if !classes.contains(&label) {
            classes.push(label);
        }
    }
    let index_of = |label: SentimentLabel| classes.iter().position(|&c| c == label).unwrap();

    let c = classes.len();
    let n = y_true.len();
    let mut confusion = vec![vec![0usize; c]; c];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[index_of(t)][index_of(p)] += 1;
    }
    let support: Vec<usize> = confusion.iter().map(|row| row.iter().sum()).collect();
    let predicted_totals: Vec<usize> =
        (0..c).map(|j| confusion.iter().map(|row| row[j]).sum()).collect();

    let mut zero_division_hits = 0;
    let mut precision = vec![0.0; c];
    let mut recall = vec![0.0; c];
    let mut f1 = vec![0.0; c];
    for i in 0..c {
        let tp = confusion[i][i] as f64;
        if predicted_totals[i] == 0 {
            zero_division_hits += 1;
        } else {
            precision[i] = tp / predicted_totals[i] as f64;
        }
        if support[i] == 0 {
            zero_division_hits += 1;
        } else {
            recall[i] = tp / support[i] as f64;
        }
        if precision[i] + recall[i] == 0.0 {
            zero_division_hits += 1;
        } else {
            f1[i] = 2.0 * precision[i] * recall[i] / (precision[i] + recall[i]);
        }
    }

    let weighted = |values: &[f64]| {
        values
            .iter()
            .zip(&support)
            .map(|(v, &s)| v * s as f64)
            .sum::<f64>()
            / n as f64
    };
    let macro_mean = |values: &[f64]| values.iter().sum::<f64>() / c as f64;
    let accuracy = (0..c).map(|i| confusion[i][i]).sum::<usize>() as f64 / n as f64;

    Ok(Metrics {
        accuracy,
        precision_weighted: weighted(&precision),
        recall_weighted: weighted(&recall),
        f1_weighted: weighted(&f1),
        precision_macro: macro_mean(&precision),
        recall_macro: macro_mean(&recall),
        f1_macro: macro_mean(&f1),
        classes,
        confusion,
        support,
        zero_division_hits,
    })
}

/// Seeded shuffle of `0..n` cut into `k` contiguous folds whose sizes
/// differ by at most one (earlier folds take the remainder).
pub fn fold_partition(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 || k > n {
        return Err(EvalError::InvalidFoldCount { k, n });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_FOLD, 0));
    indices.shuffle(&mut rng);
    let base = n / k;
    let remainder = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < remainder);
        folds.push(indices[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// K-fold cross-validation: for each fold, trains `spec` (with a child
/// seed) on the other folds and scores accuracy on the held-out fold.
/// Folds evaluate in parallel; scores are ordered by fold index.
pub fn kfold_cv(
    spec: &ModelSpec,
    m: &FeatureMatrix,
    k: usize,
    seed: u64,
) -> Result<CVResult, EvalError> {
    let folds = fold_partition(m.len(), k, seed)?;
    let fold_scores: Vec<f64> = folds
        .par_iter()
        .enumerate()
        .map(|(i, test_indices)| -> Result<f64, EvalError> {
            let train_indices: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .flat_map(|(_, fold)| fold.iter().copied())
                .collect();
            let mut fold_spec = spec.clone();
            fold_spec.seed = derive_seed(seed, STREAM_FOLD, 1 + i as u64);
            let model = models::train(&fold_spec, &m.select(&train_indices))?;
            let test = m.select(test_indices);
            let predictions = model.predict(&test)?;
            let correct = predictions
                .iter()
                .zip(test.labels())
                .filter(|(p, l)| p == l)
                .count();
            Ok(correct as f64 / test.len() as f64)
        })
        .collect::<Result<_, _>>()?;
    let mean_score = fold_scores.iter().sum::<f64>() / k as f64;
    Ok(CVResult {
        k,
        fold_scores,
        mean_score,
    })
}
