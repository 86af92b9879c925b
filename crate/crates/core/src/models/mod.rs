//! The seven classifier families applied to sentiment-labeled feature
//! matrices: k-nearest-neighbors, four Naive Bayes variants, a linear SVM,
//! a random forest, and an SGD linear classifier sharing the SVM trainer.
//!
//! All stochastic behavior flows from the spec's single 64-bit seed through
//! per-task derived streams, so training is deterministic regardless of
//! parallelism. Prediction ties always break toward the earlier class in
//! `class_list` (ordered by first appearance in training data).

mod forest;
mod knn;
mod linear;
mod naive_bayes;
pub(crate) mod seeds;

use std::fmt;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::SentimentLabel;
use crate::features::{FeatureMatrix, SparseVector};

pub use forest::{gini_impurity, DecisionTree, FeatureSubsample, TreeNode};
pub use knn::knn_neighbors;
pub use linear::{hinge_objective, hinge_subgradient};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot train on an empty feature matrix")]
    EmptyTrainingSet,
    #[error("{family} requires at least 2 distinct labels, got 1")]
    SingleClass { family: ModelFamily },
    #[error("dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hyperparameter: {reason}")]
    InvalidHyperparameter { reason: String },
    #[error("k = {k} exceeds training size {n}")]
    KExceedsTrainingSize { k: usize, n: usize },
    #[error("operation applies to {expected}, model is {got}")]
    WrongFamily {
        expected: ModelFamily,
        got: ModelFamily,
    },
    #[error("impurity of an empty label set is undefined")]
    EmptyLabels,
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file {path}: {reason}")]
    MalformedModel { path: PathBuf, reason: String },
}

/// The classifier families compared in the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelFamily {
    #[serde(rename = "KNN")]
    Knn,
    #[serde(rename = "GaussianNB")]
    GaussianNb,
    #[serde(rename = "MultinomialNB")]
    MultinomialNb,
    #[serde(rename = "ComplementNB")]
    ComplementNb,
    #[serde(rename = "BernoulliNB")]
    BernoulliNb,
    #[serde(rename = "LinearSVM")]
    LinearSvm,
    #[serde(rename = "RandomForest")]
    RandomForest,
    #[serde(rename = "SGDClassifier")]
    SgdClassifier,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 8] = [
        ModelFamily::Knn,
        ModelFamily::GaussianNb,
        ModelFamily::MultinomialNb,
        ModelFamily::ComplementNb,
        ModelFamily::BernoulliNb,
        ModelFamily::LinearSvm,
        ModelFamily::RandomForest,
        ModelFamily::SgdClassifier,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Knn => "KNN",
            ModelFamily::GaussianNb => "GaussianNB",
            ModelFamily::MultinomialNb => "MultinomialNB",
            ModelFamily::ComplementNb => "ComplementNB",
            ModelFamily::BernoulliNb => "BernoulliNB",
            ModelFamily::LinearSvm => "LinearSVM",
            ModelFamily::RandomForest => "RandomForest",
            ModelFamily::SgdClassifier => "SGDClassifier",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown model family {s:?}"))
    }
}

/// Family-specific knobs with the defaults used throughout the study.
/// Fields irrelevant to a spec's family are ignored by its trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// KNN: number of neighbors.
    pub k: usize,
    /// Multinomial/Complement/Bernoulli NB: additive smoothing.
    pub alpha: f64,
    /// GaussianNB: variance floor as a fraction of the largest per-feature
    /// variance in the training data.
    pub variance_floor_ratio: f64,
    /// BernoulliNB: features strictly above this threshold count as present.
    pub binarize: f64,
    /// Linear models: L2 regularization strength.
    pub lambda: f64,
    /// Linear models: full passes over the training data.
    pub epochs: usize,
    /// RandomForest: number of trees.
    pub n_estimators: usize,
    /// RandomForest: grow each tree on a bootstrap resample (disable to
    /// make an ensemble of one equal a single tree).
    pub bootstrap: bool,
    /// RandomForest: candidate features examined per split.
    pub feature_subsample: FeatureSubsample,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            k: 5,
            alpha: 1.0,
            variance_floor_ratio: 1e-9,
            binarize: 0.0,
            lambda: 1e-4,
            epochs: 20,
            n_estimators: 20,
            bootstrap: true,
            feature_subsample: FeatureSubsample::Sqrt,
        }
    }
}

/// A trainable configuration: family, its knobs, and the 64-bit seed that
/// drives every stochastic choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub hyperparams: Hyperparams,
    pub seed: u64,
}

impl ModelSpec {
    /// A spec with default hyperparameters for the family.
    pub fn new(family: ModelFamily, seed: u64) -> Self {
        ModelSpec {
            family,
            hyperparams: Hyperparams::default(),
            seed,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.hyperparams.k = k;
        self
    }

    pub fn with_n_estimators(mut self, n: usize) -> Self {
        self.hyperparams.n_estimators = n;
        self
    }

    /// Checks the fields the family's trainer will read.
    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |reason: String| ModelError::InvalidHyperparameter { reason };
        let h = &self.hyperparams;
        match self.family {
            ModelFamily::Knn => {
                if h.k == 0 {
                    return Err(invalid("k must be at least 1".to_string()));
                }
            }
            ModelFamily::GaussianNb => {
                if !h.variance_floor_ratio.is_finite() || h.variance_floor_ratio <= 0.0 {
                    return Err(invalid(format!(
                        "variance_floor_ratio {} must be a positive number",
                        h.variance_floor_ratio
                    )));
                }
            }
            ModelFamily::MultinomialNb | ModelFamily::ComplementNb => {
                if !h.alpha.is_finite() || h.alpha <= 0.0 {
                    return Err(invalid(format!("alpha {} must be positive", h.alpha)));
                }
            }
            ModelFamily::BernoulliNb => {
                if !h.alpha.is_finite() || h.alpha <= 0.0 {
                    return Err(invalid(format!("alpha {} must be positive", h.alpha)));
                }
                if !h.binarize.is_finite() {
                    return Err(invalid(format!("binarize {} must be finite", h.binarize)));
                }
            }
            ModelFamily::LinearSvm | ModelFamily::SgdClassifier => {
                if !h.lambda.is_finite() || h.lambda <= 0.0 {
                    return Err(invalid(format!("lambda {} must be positive", h.lambda)));
                }
                if h.epochs == 0 {
                    return Err(invalid("epochs must be at least 1".to_string()));
                }
            }
            ModelFamily::RandomForest => {
                if h.n_estimators == 0 {
                    return Err(invalid("n_estimators must be at least 1".to_string()));
                }
            }
        }
        Ok(())
    }
}

/// Family-specific fitted state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelState {
    Knn {
        rows: Vec<SparseVector>,
        labels: Vec<SentimentLabel>,
    },
    Gaussian {
        log_priors: Vec<f64>,
        /// Per-class dense feature means, indexed [class][feature].
        means: Vec<Vec<f64>>,
        /// Per-class dense feature variances after flooring.
        variances: Vec<Vec<f64>>,
    },
    Multinomial {
        log_priors: Vec<f64>,
        /// ln((count_ci + α) / (count_c + αV)), indexed [class][feature].
        feature_log_prob: Vec<Vec<f64>>,
    },
    Complement {
        /// ln of smoothed complement-count proportions, indexed
        /// [class][feature]; prediction minimizes x · w_c.
        weights: Vec<Vec<f64>>,
    },
    Bernoulli {
        log_priors: Vec<f64>,
        /// ln θ_ci for present features.
        log_prob_present: Vec<Vec<f64>>,
        /// ln (1 − θ_ci) for absent features.
        log_prob_absent: Vec<Vec<f64>>,
        binarize: f64,
    },
    Linear {
        /// One-vs-rest weight vectors, indexed [class][feature].
        weights: Vec<Vec<f64>>,
        /// Unregularized per-class intercepts.
        biases: Vec<f64>,
    },
    Forest { trees: Vec<DecisionTree> },
}

/// A fitted classifier: its spec, the classes seen in training (in first-
/// appearance order — the tie-break order), and family-specific state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub class_list: Vec<SentimentLabel>,
    pub dimension: usize,
    pub state: ModelState,
}

/// Distinct labels in first-appearance order.
fn class_list_of(labels: &[SentimentLabel]) -> Vec<SentimentLabel> {
    let mut classes = Vec::new();
    for &label in labels {
        if !classes.contains(&label) {
            classes.push(label);
        }
    }
    classes
}

/// Index of the first strictly largest score (ties keep the earliest).
pub(crate) fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Index of the first strictly smallest score (ties keep the earliest).
pub(crate) fn argmin_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s < scores[best] {
            best = i;
        }
    }
    best
}

/// Majority label over votes; ties break toward the earlier class in
/// `class_list`.
pub(crate) fn majority_label(
    votes: impl IntoIterator<Item = SentimentLabel>,
    class_list: &[SentimentLabel],
) -> SentimentLabel {
    let mut counts = vec![0.0f64; class_list.len()];
    for vote in votes {
        let idx = class_list
            .iter()
            .position(|&c| c == vote)
            .expect("vote is a training label");
        counts[idx] += 1.0;
    }
    class_list[argmax_first(&counts)]
}

/// Trains `spec` on `m`.
///
/// Errors on an empty matrix, invalid hyperparameters, `k` larger than the
/// training set, or a single-class corpus given to a discriminative
/// (linear) family; Naive Bayes, KNN, and forests accept one class and
/// then always predict it.
pub fn train(spec: &ModelSpec, m: &FeatureMatrix) -> Result<TrainedModel, ModelError> {
    spec.validate()?;
    if m.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let class_list = class_list_of(m.labels());
    let state = match spec.family {
        ModelFamily::Knn => {
            if spec.hyperparams.k > m.len() {
                return Err(ModelError::KExceedsTrainingSize {
                    k: spec.hyperparams.k,
                    n: m.len(),
                });
            }
            knn::fit(m)
        }
        ModelFamily::GaussianNb => naive_bayes::fit_gaussian(m, &class_list, &spec.hyperparams),
        ModelFamily::MultinomialNb => {
            naive_bayes::fit_multinomial(m, &class_list, &spec.hyperparams)
        }
        ModelFamily::ComplementNb => {
            naive_bayes::fit_complement(m, &class_list, &spec.hyperparams)
        }
        ModelFamily::BernoulliNb => {
            naive_bayes::fit_bernoulli(m, &class_list, &spec.hyperparams)
        }
        ModelFamily::LinearSvm | ModelFamily::SgdClassifier => {
            if class_list.len() < 2 {
                return Err(ModelError::SingleClass {
                    family: spec.family,
                });
            }
            linear::fit(m, &class_list, &spec.hyperparams, spec.seed)
        }
        ModelFamily::RandomForest => forest::fit(m, &class_list, &spec.hyperparams, spec.seed),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        class_list,
        dimension: m.dimension(),
        state,
    })
}

impl TrainedModel {
    /// Predicts a label for each row of `m` (labels in `m` are ignored).
    pub fn predict(&self, m: &FeatureMatrix) -> Result<Vec<SentimentLabel>, ModelError> {
        self.predict_rows(m.rows())
    }

    /// Predicts a label for each vector, in parallel, preserving order.
    pub fn predict_rows(
        &self,
        rows: &[SparseVector],
    ) -> Result<Vec<SentimentLabel>, ModelError> {
        for row in rows {
            if row.dimension() != self.dimension {
                return Err(ModelError::DimensionMismatch {
                    expected: self.dimension,
                    got: row.dimension(),
                });
            }
        }
        Ok(rows.par_iter().map(|row| self.predict_checked(row)).collect())
    }

    /// Predicts a single vector's label.
    pub fn predict_one(&self, x: &SparseVector) -> Result<SentimentLabel, ModelError> {
        if x.dimension() != self.dimension {
            return Err(ModelError::DimensionMismatch {
                expected: self.dimension,
                got: x.dimension(),
            });
        }
        Ok(self.predict_checked(x))
    }

    /// Dispatch after dimension checks.
    fn predict_checked(&self, x: &SparseVector) -> SentimentLabel {
        match &self.state {
            ModelState::Knn { .. } => knn::predict(self, x),
            ModelState::Gaussian { .. }
            | ModelState::Multinomial { .. }
            | ModelState::Complement { .. }
            | ModelState::Bernoulli { .. } => naive_bayes::predict(self, x),
            ModelState::Linear { weights, biases } => {
                let scores: Vec<f64> = weights
                    .iter()
                    .zip(biases)
                    .map(|(w, b)| linear::dense_dot(w, x) + b)
                    .collect();
                self.class_list[argmax_first(&scores)]
            }
            ModelState::Forest { trees } => {
                majority_label(trees.iter().map(|t| t.predict(x)), &self.class_list)
            }
        }
    }

    /// Per-class decision scores (log-posteriors for NB, margins for linear
    /// models), aligned with `class_list`. Used by oracle-style tests.
    pub fn decision_scores(&self, x: &SparseVector) -> Option<Vec<f64>> {
        match &self.state {
            ModelState::Gaussian { .. }
            | ModelState::Multinomial { .. }
            | ModelState::Complement { .. }
            | ModelState::Bernoulli { .. } => Some(naive_bayes::scores(self, x)),
            ModelState::Linear { weights, biases } => Some(
                weights
                    .iter()
                    .zip(biases)
                    .map(|(w, b)| linear::dense_dot(w, x) + b)
                    .collect(),
            ),
            ModelState::Knn { .. } | ModelState::Forest { .. } => None,
        }
    }
}

/// On-disk model container name.
const MODEL_FORMAT: &str = "vaxsent-model";
/// Current container version.
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelContainer {
    format: String,
    version: u32,
    model: TrainedModel,
}

/// Persists a model as a versioned JSON container. Identical models write
/// identical bytes.
pub fn save_model(model: &TrainedModel, path: &Path) -> Result<(), ModelError> {
    let io_err = |source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    };
    let container = ModelContainer {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        model: model.clone(),
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &container)
        .map_err(|e| io_err(std::io::Error::other(e)))?;
    std::io::Write::flush(&mut w).map_err(io_err)
}

/// Loads a model written by [`save_model`], checking container format and
/// version.
pub fn load_model(path: &Path) -> Result<TrainedModel, ModelError> {
    let file = std::fs::File::open(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let container: ModelContainer = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| ModelError::MalformedModel {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    if container.format != MODEL_FORMAT {
        return Err(ModelError::MalformedModel {
            path: path.to_path_buf(),
            reason: format!("unexpected format {:?}", container.format),
        });
    }
    if container.version != MODEL_VERSION {
        return Err(ModelError::MalformedModel {
            path: path.to_path_buf(),
            reason: format!(
                "unsupported version {} (expected {MODEL_VERSION})",
                container.version
            ),
        });
    }
    Ok(container.model)
}
