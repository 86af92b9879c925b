//! Document vectorization: vocabulary fitting over tokenized documents and
//! the two encoders built on it — raw term counts (bag-of-words) and
//! smoothed, L2-normalized TF-IDF.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::SentimentLabel;
use crate::preprocess::TokenList;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("cannot fit a vocabulary on an empty document list")]
    EmptyCorpus,
    #[error("empty vocabulary: no term meets min_df {min_df}")]
    EmptyVocabulary { min_df: usize },
    #[error("invalid sparse vector: {reason}")]
    InvalidVector { reason: String },
    #[error("shape mismatch: {reason}")]
    ShapeMismatch { reason: String },
}

/// Which document encoder to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorizerKind {
    Count,
    Tfidf,
}

impl VectorizerKind {
    pub const ALL: [VectorizerKind; 2] = [VectorizerKind::Count, VectorizerKind::Tfidf];

    pub fn as_str(self) -> &'static str {
        match self {
            VectorizerKind::Count => "count",
            VectorizerKind::Tfidf => "tfidf",
        }
    }
}

impl fmt::Display for VectorizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for VectorizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "count" => Ok(VectorizerKind::Count),
            "tfidf" => Ok(VectorizerKind::Tfidf),
            other => Err(format!("unknown vectorizer {other:?} (count, tfidf)")),
        }
    }
}

/// A fitted term index: lexicographically ordered terms mapped to dense
/// indices `0..len()`, with per-term document frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    term_to_index: BTreeMap<String, usize>,
    /// Term for each index; lexicographic because indices are assigned in
    /// BTreeMap order.
    terms: Vec<String>,
    /// Document frequency for each index.
    document_frequency: Vec<usize>,
    n_documents: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn index(&self, term: &str) -> Option<usize> {
        self.term_to_index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn document_frequency(&self, index: usize) -> Option<usize> {
        self.document_frequency.get(index).copied()
    }

    /// Terms in index order (which is lexicographic order).
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    /// Smoothed inverse document frequency: `ln((1 + n) / (1 + df)) + 1`.
    /// Always ≥ 1 because `df ≤ n`.
    pub fn idf(&self, index: usize) -> f64 {
        let df = self.document_frequency[index] as f64;
        let n = self.n_documents as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    /// Writes `n_documents<TAB>count` followed by one `term<TAB>index<TAB>df`
    /// line per term in index order.
    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        let io_err = |source| FeatureError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = std::fs::File::create(path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "n_documents\t{}", self.n_documents).map_err(io_err)?;
        for (index, term) in self.terms.iter().enumerate() {
            writeln!(w, "{term}\t{index}\t{}", self.document_frequency[index])
                .map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<Self, FeatureError> {
        let file = std::fs::File::open(path).map_err(|source| FeatureError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let err = |line: usize, message: String| FeatureError::MalformedLine {
            path: path.to_path_buf(),
            line,
            message,
        };
        let io_err = |source| FeatureError::Io {
            path: path.to_path_buf(),
            source,
        };

        let (_, header) = lines
            .next()
            .ok_or_else(|| err(1, "missing header line".to_string()))?;
        let header = header.map_err(io_err)?;
        let n_documents: usize = header
            .strip_prefix("n_documents\t")
            .ok_or_else(|| err(1, format!("expected n_documents header, got {header:?}")))?
            .parse()
            .map_err(|e| err(1, format!("bad document count: {e}")))?;

        let mut terms: Vec<String> = Vec::new();
        let mut document_frequency = Vec::new();
        let mut term_to_index = BTreeMap::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [term, index, df] = fields.as_slice() else {
                return Err(err(
                    line_no,
                    format!("expected 3 tab-separated fields, got {}", fields.len()),
                ));
            };
            let index: usize = index
                .parse()
                .map_err(|e| err(line_no, format!("bad index: {e}")))?;
            if index != terms.len() {
                return Err(err(
                    line_no,
                    format!("index {index} out of order (expected {})", terms.len()),
                ));
            }
            let df: usize = df
                .parse()
                .map_err(|e| err(line_no, format!("bad document frequency: {e}")))?;
            if df == 0 || df > n_documents {
                return Err(err(
                    line_no,
                    format!("document frequency {df} outside 1..={n_documents}"),
                ));
            }
            if let Some(prev) = terms.last() {
                if *term <= prev.as_str() {
                    return Err(err(
                        line_no,
                        format!("term {term:?} breaks lexicographic order"),
                    ));
                }
            }
            term_to_index.insert(term.to_string(), index);
            terms.push(term.to_string());
            document_frequency.push(df);
        }
        if terms.is_empty() {
            return Err(err(1, "vocabulary file has no terms".to_string()));
        }
        Ok(Vocabulary {
            term_to_index,
            terms,
            document_frequency,
            n_documents,
        })
    }
}

/// Fits a vocabulary over `docs`: every term appearing in at least `min_df`
/// documents, indexed in lexicographic order.
pub fn build_vocabulary(
    docs: &[TokenList],
    min_df: usize,
) -> Result<Vocabulary, FeatureError> {
    if docs.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    // Document frequencies: shard per document, merge additively — the
    // merge is commutative so parallel order never shows in the result.
    let df: BTreeMap<String, usize> = docs
        .par_iter()
        .fold(BTreeMap::new, |mut acc, doc| {
            let unique: BTreeSet<&String> = doc.tokens().iter().collect();
            for term in unique {
                *acc.entry(term.clone()).or_insert(0) += 1;
            }
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (term, count) in b {
                *a.entry(term).or_insert(0) += count;
            }
            a
        });
    let min_df = min_df.max(1);
    let mut terms = Vec::new();
    let mut document_frequency = Vec::new();
    let mut term_to_index = BTreeMap::new();
    for (term, count) in df {
        if count >= min_df {
            term_to_index.insert(term.clone(), terms.len());
            terms.push(term);
            document_frequency.push(count);
        }
    }
    if terms.is_empty() {
        return Err(FeatureError::EmptyVocabulary { min_df });
    }
    Ok(Vocabulary {
        term_to_index,
        terms,
        document_frequency,
        n_documents: docs.len(),
    })
}

/// A fixed-dimension sparse vector: strictly increasing indices, nonzero
/// finite weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dimension: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new(dimension: usize, entries: Vec<(usize, f64)>) -> Result<Self, FeatureError> {
        let invalid = |reason: String| FeatureError::InvalidVector { reason };
        let mut prev: Option<usize> = None;
        for &(index, weight) in &entries {
            if index >= dimension {
                return Err(invalid(format!(
                    "index {index} out of range for dimension {dimension}"
                )));
            }
            if let Some(p) = prev {
                if index <= p {
                    return Err(invalid(format!(
                        "index {index} after {p}: indices must strictly increase"
                    )));
                }
            }
            if weight == 0.0 || !weight.is_finite() {
                return Err(invalid(format!("weight {weight} at index {index}")));
            }
            prev = Some(index);
        }
        Ok(SparseVector { dimension, entries })
    }

    pub fn zero(dimension: usize) -> Self {
        SparseVector {
            dimension,
            entries: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// The weight at `index` (zero when absent).
    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, w)| w * w)
            .sum::<f64>()
            .sqrt()
    }

    /// Dot product with another vector of the same dimension.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        debug_assert_eq!(self.dimension, other.dimension);
        let mut total = 0.0;
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        while let (Some(&&(ia, wa)), Some(&&(ib, wb))) = (a.peek(), b.peek()) {
            match ia.cmp(&ib) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    total += wa * wb;
                    a.next();
                    b.next();
                }
            }
        }
        total
    }

    /// Squared Euclidean distance to another vector of the same dimension.
    pub fn squared_distance(&self, other: &SparseVector) -> f64 {
        debug_assert_eq!(self.dimension, other.dimension);
        let self_sq: f64 = self.entries.iter().map(|&(_, w)| w * w).sum();
        let other_sq: f64 = other.entries.iter().map(|&(_, w)| w * w).sum();
        // ‖a−b‖² = ‖a‖² + ‖b‖² − 2⟨a,b⟩, clamped against rounding below zero.
        (self_sq + other_sq - 2.0 * self.dot(other)).max(0.0)
    }
}

/// Encodes a document as raw term counts over the vocabulary;
/// out-of-vocabulary tokens are ignored.
pub fn count_vectorize(doc: &TokenList, vocabulary: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for token in doc.tokens() {
        if let Some(index) = vocabulary.index(token) {
            *counts.entry(index).or_insert(0.0) += 1.0;
        }
    }
    SparseVector {
        dimension: vocabulary.len(),
        entries: counts.into_iter().collect(),
    }
}

/// Encodes a document as L2-normalized TF-IDF weights: raw term count times
/// `ln((1 + n_documents)/(1 + df)) + 1`, then scaled to unit norm (the zero
/// vector is left unchanged).
pub fn tfidf_vectorize(doc: &TokenList, vocabulary: &Vocabulary) -> SparseVector {
    let mut vector = count_vectorize(doc, vocabulary);
    for (index, weight) in &mut vector.entries {
        *weight *= vocabulary.idf(*index);
    }
    let norm = vector.l2_norm();
    if norm > 0.0 {
        for (_, weight) in &mut vector.entries {
            *weight /= norm;
        }
    }
    vector
}

/// Vectorizes a whole corpus in parallel, preserving order.
pub fn vectorize_corpus(
    docs: &[TokenList],
    vocabulary: &Vocabulary,
    kind: VectorizerKind,
) -> Vec<SparseVector> {
    docs.par_iter()
        .map(|doc| match kind {
            VectorizerKind::Count => count_vectorize(doc, vocabulary),
            VectorizerKind::Tfidf => tfidf_vectorize(doc, vocabulary),
        })
        .collect()
}

/// Vectorized documents paired with their labels, all sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dimension: usize,
    rows: Vec<SparseVector>,
    labels: Vec<SentimentLabel>,
}

impl FeatureMatrix {
    pub fn new(
        dimension: usize,
        rows: Vec<SparseVector>,
        labels: Vec<SentimentLabel>,
    ) -> Result<Self, FeatureError> {
        if rows.len() != labels.len() {
            return Err(FeatureError::ShapeMismatch {
                reason: format!("{} rows but {} labels", rows.len(), labels.len()),
            });
        }
        if let Some(row) = rows.iter().find(|r| r.dimension() != dimension) {
            return Err(FeatureError::ShapeMismatch {
                reason: format!(
                    "row dimension {} differs from matrix dimension {dimension}",
                    row.dimension()
                ),
            });
        }
        Ok(FeatureMatrix {
            dimension,
            rows,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[SentimentLabel] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> (&SparseVector, SentimentLabel) {
        (&self.rows[i], self.labels[i])
    }

    /// A new matrix holding the rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            dimension: self.dimension,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}
