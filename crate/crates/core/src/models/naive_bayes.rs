//! The four Naive Bayes variants: Gaussian (dense per-class moments with a
//! variance floor), Multinomial (smoothed count likelihoods), Complement
//! (smoothed complement-count weights, minimized), and Bernoulli
//! (binarized presence/absence likelihoods).
//!
//! Prediction scores are exact log-posteriors up to the shared evidence
//! term; sparse inputs are handled by precomputing each class's "all
//! features absent" baseline and adjusting for stored entries only.

use crate::annotate::SentimentLabel;
use crate::features::{FeatureMatrix, SparseVector};

use super::{argmax_first, argmin_first, Hyperparams, ModelState, TrainedModel};

/// Per-class row indices, aligned with `class_list`.
fn rows_by_class(m: &FeatureMatrix, class_list: &[SentimentLabel]) -> Vec<Vec<usize>> {
    let mut by_class = vec![Vec::new(); class_list.len()];
    for (i, label) in m.labels().iter().enumerate() {
        let c = class_list.iter().position(|l| l == label).unwrap();
        by_class[c].push(i);
    }
    by_class
}

fn log_priors(by_class: &[Vec<usize>], n: usize) -> Vec<f64> {
    by_class
        .iter()
        .map(|rows| (rows.len() as f64 / n as f64).ln())
        .collect()
}

pub(crate) fn fit_gaussian(
    m: &FeatureMatrix,
    class_list: &[SentimentLabel],
    h: &Hyperparams,
) -> ModelState {
    let v = m.dimension();
    let by_class = rows_by_class(m, class_list);

    // Global per-feature variance sets the floor added to every class
    // variance, keeping zero-variance features finite.
    let mut global_sum = vec![0.0; v];
    let mut global_sumsq = vec![0.0; v];
    for row in m.rows() {
        for &(i, w) in row.entries() {
            global_sum[i] += w;
            global_sumsq[i] += w * w;
        }
    }
    let n = m.len() as f64;
    let max_variance = (0..v)
        .map(|i| {
            let mean = global_sum[i] / n;
            (global_sumsq[i] / n - mean * mean).max(0.0)
        })
        .fold(0.0f64, f64::max);
    let epsilon = if max_variance > 0.0 {
        h.variance_floor_ratio * max_variance
    } else {
        // All features constant: fall back to the ratio itself so the
        // densities stay proper.
        h.variance_floor_ratio
    };

    let mut means = Vec::with_capacity(by_class.len());
    let mut variances = Vec::with_capacity(by_class.len());
    for rows in &by_class {
        let n_c = rows.len() as f64;
        let mut sum = vec![0.0; v];
        let mut sumsq = vec![0.0; v];
        for &r in rows {
            for &(i, w) in m.rows()[r].entries() {
                sum[i] += w;
                sumsq[i] += w * w;
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n_c).collect();
        let variance: Vec<f64> = (0..v)
            .map(|i| (sumsq[i] / n_c - mean[i] * mean[i]).max(0.0) + epsilon)
            .collect();
        means.push(mean);
        variances.push(variance);
    }

    ModelState::Gaussian {
        log_priors: log_priors(&by_class, m.len()),
        means,
        variances,
    }
}

pub(crate) fn fit_multinomial(
    m: &FeatureMatrix,
    class_list: &[SentimentLabel],
    h: &Hyperparams,
) -> ModelState {
    let v = m.dimension();
    let by_class = rows_by_class(m, class_list);
    let feature_log_prob = by_class
        .iter()
        .map(|rows| {
            let mut counts = vec![0.0; v];
            for &r in rows {
                for &(i, w) in m.rows()[r].entries() {
                    counts[i] += w;
                }
            }
            let total: f64 = counts.iter().sum();
            let denominator = (total + h.alpha * v as f64).ln();
            counts
                .iter()
                .map(|&c| (c + h.alpha).ln() - denominator)
                .collect()
        })
        .collect();
    ModelState::Multinomial {
        log_priors: log_priors(&by_class, m.len()),
        feature_log_prob,
    }
}

pub(crate) fn fit_complement(
    m: &FeatureMatrix,
    class_list: &[SentimentLabel],
    h: &Hyperparams,
) -> ModelState {
    let v = m.dimension();
    let by_class = rows_by_class(m, class_list);

    // Complement counts = all-document counts minus own-class counts.
    let mut all_counts = vec![0.0; v];
    for row in m.rows() {
        for &(i, w) in row.entries() {
            all_counts[i] += w;
        }
    }
    let all_total: f64 = all_counts.iter().sum();

    let weights = by_class
        .iter()
        .map(|rows| {
            let mut own = vec![0.0; v];
            for &r in rows {
                for &(i, w) in m.rows()[r].entries() {
                    own[i] += w;
                }
            }
            let own_total: f64 = own.iter().sum();
            let denominator = (h.alpha * v as f64 + (all_total - own_total)).ln();
            (0..v)
                .map(|i| (h.alpha + (all_counts[i] - own[i])).ln() - denominator)
                .collect()
        })
        .collect();
    ModelState::Complement { weights }
}

pub(crate) fn fit_bernoulli(
    m: &FeatureMatrix,
    class_list: &[SentimentLabel],
    h: &Hyperparams,
) -> ModelState {
    let v = m.dimension();
    let by_class = rows_by_class(m, class_list);
    let mut log_prob_present = Vec::with_capacity(by_class.len());
    let mut log_prob_absent = Vec::with_capacity(by_class.len());
    for rows in &by_class {
        let n_c = rows.len() as f64;
        let mut present = vec![0.0f64; v];
        for &r in rows {
            for &(i, w) in m.rows()[r].entries() {
                if w > h.binarize {
                    present[i] += 1.0;
                }
            }
        }
        // θ_ci = (present + α) / (n_c + 2α), strictly inside (0, 1).
        let theta: Vec<f64> = present
            .iter()
            .map(|&p| (p + h.alpha) / (n_c + 2.0 * h.alpha))
            .collect();
        log_prob_present.push(theta.iter().map(|t| t.ln()).collect());
        log_prob_absent.push(theta.iter().map(|t| (1.0 - t).ln()).collect());
    }
    ModelState::Bernoulli {
        log_priors: log_priors(&by_class, m.len()),
        log_prob_present,
        log_prob_absent,
        binarize: h.binarize,
    }
}

/// Per-class decision scores for any NB state, aligned with `class_list`.
/// Higher is better except Complement, whose scores are negated weights so
/// argmax works uniformly.
pub(crate) fn scores(model: &TrainedModel, x: &SparseVector) -> Vec<f64> {
    match &model.state {
        ModelState::Gaussian {
            log_priors,
            means,
            variances,
        } => log_priors
            .iter()
            .enumerate()
            .map(|(c, prior)| {
                let mean = &means[c];
                let variance = &variances[c];
                // Baseline: every feature at zero.
                let mut score: f64 = prior
                    + (0..model.dimension)
                        .map(|i| {
                            -0.5 * (std::f64::consts::TAU * variance[i]).ln()
                                - mean[i] * mean[i] / (2.0 * variance[i])
                        })
                        .sum::<f64>();
                // Replace the zero terms of stored entries with their
                // actual deviations: Δ = (2wμ − w²) / 2σ².
                for &(i, w) in x.entries() {
                    score += (2.0 * w * mean[i] - w * w) / (2.0 * variance[i]);
                }
                score
            })
            .collect(),
        ModelState::Multinomial {
            log_priors,
            feature_log_prob,
        } => log_priors
            .iter()
            .enumerate()
            .map(|(c, prior)| {
                prior
                    + x.entries()
                        .iter()
                        .map(|&(i, w)| w * feature_log_prob[c][i])
                        .sum::<f64>()
            })
            .collect(),
        ModelState::Complement { weights } => weights
            .iter()
            .map(|w_c| {
                -x.entries()
                    .iter()
                    .map(|&(i, w)| w * w_c[i])
                    .sum::<f64>()
            })
            .collect(),
        ModelState::Bernoulli {
            log_priors,
            log_prob_present,
            log_prob_absent,
            binarize,
        } => log_priors
            .iter()
            .enumerate()
            .map(|(c, prior)| {
                let mut score: f64 = prior + log_prob_absent[c].iter().sum::<f64>();
                for &(i, w) in x.entries() {
                    if w > *binarize {
                        score += log_prob_present[c][i] - log_prob_absent[c][i];
                    }
                }
                score
            })
            .collect(),
        _ => unreachable!("dispatched on NB state"),
    }
}

pub(crate) fn predict(model: &TrainedModel, x: &SparseVector) -> SentimentLabel {
    let s = scores(model, x);
    // Complement scores are pre-negated, so argmax applies everywhere;
    // argmin_first(w·x) ≡ argmax_first(−w·x) holds because both keep the
    // earliest index on exact ties.
    debug_assert!({
        if let ModelState::Complement { weights } = &model.state {
            let raw: Vec<f64> = weights
                .iter()
                .map(|w_c| x.entries().iter().map(|&(i, w)| w * w_c[i]).sum())
                .collect();
            argmin_first(&raw) == argmax_first(&s)
        } else {
            true
        }
    });
    model.class_list[argmax_first(&s)]
}
