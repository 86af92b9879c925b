//! Sentiment-analysis pipeline for code-mixed (Hinglish) Reddit comments about
//! COVID-19 vaccines.
//!
//! The pipeline runs in stages, each of which is usable on its own:
//!
//! 1. [`ingest`] — fetch comments from the Reddit API or load a persisted
//!    corpus file, deduplicated by comment id.
//! 2. [`preprocess`] — tokenize, drop stop words, lemmatize.
//! 3. [`annotate`] — score polarity in `[-1, 1]` against a bundled lexicon and
//!    map scores onto a seven-class sentiment label.
//! 4. [`features`] — build a vocabulary and vectorize documents with raw
//!    counts or TF-IDF.
//! 5. [`models`] — train and apply the classifier families compared in the
//!    experiment grid (KNN, four Naive Bayes variants, linear SVM, random
//!    forest, SGD linear).
//! 6. [`eval`] — 7:3 train/test splitting, weighted metrics, k-fold CV.
//! 7. [`report`] — frequency tables, cumulative distributions, term
//!    frequencies and deterministic CSV/JSON/SVG emission.
//!
//! Everything downstream of ingestion is pure and deterministic: a fixed seed
//! and corpus reproduce every artifact byte for byte.

pub mod annotate;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod models;
pub mod preprocess;
pub mod report;

pub use annotate::{AnnotatedComment, Lexicon, PolarityScore, SentimentLabel};
pub use features::{FeatureMatrix, SparseVector, VectorizerKind, Vocabulary};
pub use models::{ModelFamily, ModelSpec, TrainedModel};
pub use ingest::{Comment, FetchConfig};
pub use preprocess::{LemmaRules, StopwordList, TokenList};
pub use report::{FrequencyTable, ReportTables, TermFrequency};
