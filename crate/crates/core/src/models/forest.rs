//! Random forest: bootstrap-sampled decision trees with Gini-impurity
//! splits over random feature subsets, combined by majority vote.

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::SentimentLabel;
use crate::features::{FeatureMatrix, SparseVector};

use super::seeds::{derive_seed, STREAM_TREE};
use super::{majority_label, Hyperparams, ModelError, ModelState};

/// How many candidate features each split examines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubsample {
    /// `max(1, ⌊√V⌋)` random features per node — the forest default.
    Sqrt,
    /// Every feature at every node (makes tree growth deterministic).
    All,
}

/// Gini impurity `1 − Σ_c p_c²` of a label multiset; 0 for a pure set,
/// at most `1 − 1/C` for `C` classes.
pub fn gini_impurity(labels: &[SentimentLabel]) -> Result<f64, ModelError> {
    if labels.is_empty() {
        return Err(ModelError::EmptyLabels);
    }
    let mut counts = [0usize; SentimentLabel::ALL.len()];
    for &label in labels {
        counts[label as usize] += 1;
    }
    Ok(gini_from_counts(&counts, labels.len()))
}

fn gini_from_counts(counts: &[usize], total: usize) -> f64 {
    let n = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node")]
pub enum TreeNode {
    Leaf {
        label: SentimentLabel,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A single decision tree; node 0 is the root, children point by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
}

impl DecisionTree {
    /// Grows a tree on every row of `m`, to purity or single-row leaves,
    /// choosing the best Gini split among candidate features at each node.
    /// With [`FeatureSubsample::All`] the RNG is never consulted.
    pub fn grow(
        m: &FeatureMatrix,
        class_list: &[SentimentLabel],
        subsample: FeatureSubsample,
        rng: &mut ChaCha8Rng,
    ) -> DecisionTree {
        let indices: Vec<usize> = (0..m.len()).collect();
        Self::grow_on(m, &indices, class_list, subsample, rng)
    }

    /// Grows a tree on the given (possibly repeated) row indices.
    pub(crate) fn grow_on(
        m: &FeatureMatrix,
        indices: &[usize],
        class_list: &[SentimentLabel],
        subsample: FeatureSubsample,
        rng: &mut ChaCha8Rng,
    ) -> DecisionTree {
        let mut builder = TreeBuilder {
            m,
            class_list,
            subsample,
            nodes: Vec::new(),
        };
        builder.build(indices, rng);
        DecisionTree {
            nodes: builder.nodes,
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn predict(&self, x: &SparseVector) -> SentimentLabel {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { label } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x.get(*feature) <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

struct TreeBuilder<'a> {
    m: &'a FeatureMatrix,
    class_list: &'a [SentimentLabel],
    subsample: FeatureSubsample,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    /// Builds the subtree for `indices`, returning its node id (preorder:
    /// a subtree's root precedes its children).
    fn build(&mut self, indices: &[usize], rng: &mut ChaCha8Rng) -> usize {
        let labels = self.m.labels();
        let majority = majority_label(indices.iter().map(|&i| labels[i]), self.class_list);
        let pure = indices.iter().all(|&i| labels[i] == labels[indices[0]]);
        if pure || indices.len() < 2 {
            self.nodes.push(TreeNode::Leaf { label: majority });
            return self.nodes.len() - 1;
        }
        let Some((feature, threshold)) = self.best_split(indices, rng) else {
            self.nodes.push(TreeNode::Leaf { label: majority });
            return self.nodes.len() - 1;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.m.rows()[i].get(feature) <= threshold);
        debug_assert!(
            !left_rows.is_empty() && !right_rows.is_empty(),
            "chosen threshold must split into two non-empty parts"
        );
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { label: majority });
        let left = self.build(&left_rows, rng);
        let right = self.build(&right_rows, rng);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    /// The (feature, threshold) with the lowest weighted child Gini that
    /// strictly improves on the node's own impurity. Candidates are walked
    /// in ascending feature order and ascending threshold order, and only
    /// a strictly better score displaces the incumbent, so ties resolve to
    /// the earliest candidate.
    fn best_split(&self, indices: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let v = self.m.dimension();
        let labels = self.m.labels();
        let candidates: Vec<usize> = match self.subsample {
            FeatureSubsample::All => (0..v).collect(),
            FeatureSubsample::Sqrt => {
                let count = ((v as f64).sqrt().floor() as usize).clamp(1, v);
                sample_distinct_sorted(rng, v, count)
            }
        };

        let class_of = |i: usize| {
            self.class_list
                .iter()
                .position(|&c| c == labels[i])
                .unwrap()
        };
        let n = indices.len();
        let mut parent_counts = vec![0usize; self.class_list.len()];
        for &i in indices {
            parent_counts[class_of(i)] += 1;
        }
        let mut best_score = gini_from_counts(&parent_counts, n);
        let mut best: Option<(usize, f64)> = None;

        for &feature in &candidates {
            // Sweep the sorted values, moving samples left as the
            // threshold rises past each distinct value.
            let mut ordered: Vec<(f64, usize)> = indices
                .iter()
                .map(|&i| (self.m.rows()[i].get(feature), class_of(i)))
                .collect();
            ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_counts = vec![0usize; self.class_list.len()];
            let mut right_counts = parent_counts.clone();
            for cut in 0..n - 1 {
                let (value, class) = ordered[cut];
                left_counts[class] += 1;
                right_counts[class] -= 1;
                let next_value = ordered[cut + 1].0;
                if value == next_value {
                    continue;
                }
                let mut threshold = (value + next_value) / 2.0;
                if threshold >= next_value {
                    // Adjacent floats: the midpoint rounded up; fall back
                    // to the lower value so both sides stay non-empty.
                    threshold = value;
                }
                let n_left = cut + 1;
                let n_right = n - n_left;
                let score = (n_left as f64 * gini_from_counts(&left_counts, n_left)
                    + n_right as f64 * gini_from_counts(&right_counts, n_right))
                    / n as f64;
                if score < best_score {
                    best_score = score;
                    best = Some((feature, threshold));
                }
            }
        }
        best
    }
}

/// `count` distinct values from `0..v` (partial Fisher–Yates), ascending.
fn sample_distinct_sorted(rng: &mut ChaCha8Rng, v: usize, count: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..v).collect();
    for i in 0..count {
        let j = rng.random_range(i..v);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool.sort_unstable();
    pool
}

pub(crate) fn fit(
    m: &FeatureMatrix,
    class_list: &[SentimentLabel],
    h: &Hyperparams,
    seed: u64,
) -> ModelState {
    let trees: Vec<DecisionTree> = (0..h.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_TREE, t as u64));
            let indices: Vec<usize> = if h.bootstrap {
                (0..m.len()).map(|_| rng.random_range(0..m.len())).collect()
            } else {
                (0..m.len()).collect()
            };
            DecisionTree::grow_on(m, &indices, class_list, h.feature_subsample, &mut rng)
        })
        .collect();
    ModelState::Forest { trees }
}
