//! K-nearest-neighbors: store every training row, predict by majority
//! label among the k closest points by Euclidean distance.

use crate::annotate::SentimentLabel;
use crate::features::{FeatureMatrix, SparseVector};

use super::{majority_label, ModelError, ModelFamily, ModelState, TrainedModel};

pub(crate) fn fit(m: &FeatureMatrix) -> ModelState {
    ModelState::Knn {
        rows: m.rows().to_vec(),
        labels: m.labels().to_vec(),
    }
}

/// The `k` nearest stored points to `query`, as (training index, Euclidean
/// distance), ascending by distance with ties broken by lower index.
pub fn knn_neighbors(
    model: &TrainedModel,
    query: &SparseVector,
    k: usize,
) -> Result<Vec<(usize, f64)>, ModelError> {
    let ModelState::Knn { rows, .. } = &model.state else {
        return Err(ModelError::WrongFamily {
            expected: ModelFamily::Knn,
            got: model.spec.family,
        });
    };
    if query.dimension() != model.dimension {
        return Err(ModelError::DimensionMismatch {
            expected: model.dimension,
            got: query.dimension(),
        });
    }
    if k > rows.len() {
        return Err(ModelError::KExceedsTrainingSize { k, n: rows.len() });
    }
    let mut distances: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .map(|(i, row)| (i, query.squared_distance(row).sqrt()))
        .collect();
    distances.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    distances.truncate(k);
    Ok(distances)
}

pub(crate) fn predict(model: &TrainedModel, x: &SparseVector) -> SentimentLabel {
    let ModelState::Knn { labels, .. } = &model.state else {
        unreachable!("dispatched on state");
    };
    let neighbors = knn_neighbors(model, x, model.spec.hyperparams.k)
        .expect("k validated at training time");
    majority_label(
        neighbors.iter().map(|&(i, _)| labels[i]),
        &model.class_list,
    )
}
