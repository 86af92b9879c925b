//! Pipeline configuration: a strict TOML file plus command-line overrides.
//!
//! Unknown keys are rejected rather than ignored, and every validation
//! failure names the offending key, so a typo in an experiment config
//! fails loudly instead of silently running with defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use vaxsent_core::eval::SplitConfig;
use vaxsent_core::features::VectorizerKind;
use vaxsent_core::ingest::FetchConfig;
use vaxsent_core::models::{ModelFamily, ModelSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config file {path} does not parse: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("config key \"{key}\": {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Where a preprocessing/scoring resource comes from: the compiled-in
/// default table or a file override.
#[derive(Debug, Clone, PartialEq)]
pub enum ResourceSpec {
    Builtin,
    File(PathBuf),
}

impl ResourceSpec {
    fn parse(raw: Option<String>, key: &str) -> Result<Self, ConfigError> {
        match raw.as_deref() {
            None | Some("builtin") => Ok(ResourceSpec::Builtin),
            Some("") => Err(invalid(key, "must be \"builtin\" or a file path")),
            Some(path) => {
                let path = PathBuf::from(path);
                if !path.is_file() {
                    return Err(invalid(
                        key,
                        format!("file {} does not exist", path.display()),
                    ));
                }
                Ok(ResourceSpec::File(path))
            }
        }
    }

}

/// The fully validated runtime configuration, defaults filled in.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Master seed; every stochastic step derives its own stream from it.
    pub seed: u64,
    /// Line-delimited JSON corpus: written by `fetch`, read by everything else.
    pub corpus_path: PathBuf,
    pub fetch: FetchConfig,
    pub lexicon: ResourceSpec,
    pub stopwords: ResourceSpec,
    /// Suffix-rule and exception tables; both builtin or both files.
    pub lemmas: Option<(PathBuf, PathBuf)>,
    /// Vectorizers to run, in emission order.
    pub vectorizers: Vec<VectorizerKind>,
    /// Minimum document frequency for vocabulary inclusion.
    pub min_df: usize,
    pub split: SplitConfig,
    /// Fold count for cross-validation.
    pub cv_k: usize,
    /// (vectorizer, model) pairs to cross-validate.
    pub cv_models: Vec<(VectorizerKind, ModelSpec)>,
    pub out_dir: PathBuf,
    /// How many ranked terms the term-frequency report keeps.
    pub top_n: usize,
    /// Model grid evaluated under every configured vectorizer.
    pub models: Vec<ModelSpec>,
}

/// Command-line overrides applied on top of the config file before
/// validation.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub k: Option<usize>,
    pub top_n: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    corpus: RawCorpus,
    fetch: Option<RawFetch>,
    resources: Option<RawResources>,
    features: Option<RawFeatures>,
    split: Option<RawSplit>,
    cv: Option<RawCv>,
    report: Option<RawReport>,
    models: Option<Vec<RawModel>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorpus {
    path: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFetch {
    subreddits: Option<Vec<String>>,
    keywords: Option<Vec<String>>,
    max_comments: Option<usize>,
    rate_limit: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResources {
    lexicon: Option<String>,
    stopwords: Option<String>,
    lemma_suffixes: Option<String>,
    lemma_exceptions: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeatures {
    vectorizers: Option<Vec<String>>,
    min_df: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSplit {
    test_fraction: Option<f64>,
    stratified: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCv {
    k: Option<usize>,
    models: Option<Vec<RawCvModel>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReport {
    out_dir: Option<PathBuf>,
    top_n: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    family: String,
    k: Option<usize>,
    alpha: Option<f64>,
    n_estimators: Option<usize>,
    lambda: Option<f64>,
    epochs: Option<usize>,
    binarize: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCvModel {
    vectorizer: String,
    family: String,
    k: Option<usize>,
    alpha: Option<f64>,
    n_estimators: Option<usize>,
    lambda: Option<f64>,
    epochs: Option<usize>,
    binarize: Option<f64>,
}

fn parse_vectorizer(raw: &str, key: &str) -> Result<VectorizerKind, ConfigError> {
    VectorizerKind::from_str(raw)
        .map_err(|_| invalid(key, format!("{raw:?} is not one of \"count\", \"tfidf\"")))
}

fn parse_family(raw: &str, key: &str) -> Result<ModelFamily, ConfigError> {
    ModelFamily::from_str(raw).map_err(|_| {
        let names: Vec<&str> = ModelFamily::ALL.iter().map(|f| f.as_str()).collect();
        invalid(key, format!("{raw:?} is not one of {}", names.join(", ")))
    })
}

#[allow(clippy::too_many_arguments)]
fn build_spec(
    key: &str,
    family: &str,
    k: Option<usize>,
    alpha: Option<f64>,
    n_estimators: Option<usize>,
    lambda: Option<f64>,
    epochs: Option<usize>,
    binarize: Option<f64>,
    seed: u64,
) -> Result<ModelSpec, ConfigError> {
    let mut spec = ModelSpec::new(parse_family(family, &format!("{key}.family"))?, seed);
    let h = &mut spec.hyperparams;
    if let Some(k) = k {
        h.k = k;
    }
    if let Some(alpha) = alpha {
        h.alpha = alpha;
    }
    if let Some(n) = n_estimators {
        h.n_estimators = n;
    }
    if let Some(lambda) = lambda {
        h.lambda = lambda;
    }
    if let Some(epochs) = epochs {
        h.epochs = epochs;
    }
    if let Some(binarize) = binarize {
        h.binarize = binarize;
    }
    spec.validate()
        .map_err(|e| invalid(key, e.to_string()))?;
    Ok(spec)
}

/// The 26-row default experiment grid: per vectorizer, four KNN sizes,
/// the four NB variants, a linear SVM, three forest sizes, and SGD.
pub fn default_model_grid(seed: u64) -> Vec<ModelSpec> {
    let mut grid: Vec<ModelSpec> = [5, 10, 15, 20]
        .into_iter()
        .map(|k| ModelSpec::new(ModelFamily::Knn, seed).with_k(k))
        .collect();
    grid.extend([
        ModelSpec::new(ModelFamily::GaussianNb, seed),
        ModelSpec::new(ModelFamily::MultinomialNb, seed),
        ModelSpec::new(ModelFamily::ComplementNb, seed),
        ModelSpec::new(ModelFamily::BernoulliNb, seed),
        ModelSpec::new(ModelFamily::LinearSvm, seed),
    ]);
    grid.extend(
        [20, 40, 60]
            .into_iter()
            .map(|n| ModelSpec::new(ModelFamily::RandomForest, seed).with_n_estimators(n)),
    );
    grid.push(ModelSpec::new(ModelFamily::SgdClassifier, seed));
    grid
}

/// Default cross-validation selection: the strongest configurations from
/// the comparison grid under each vectorizer.
pub fn default_cv_models(seed: u64) -> Vec<(VectorizerKind, ModelSpec)> {
    vec![
        (
            VectorizerKind::Tfidf,
            ModelSpec::new(ModelFamily::LinearSvm, seed),
        ),
        (
            VectorizerKind::Tfidf,
            ModelSpec::new(ModelFamily::RandomForest, seed).with_n_estimators(40),
        ),
        (
            VectorizerKind::Count,
            ModelSpec::new(ModelFamily::LinearSvm, seed),
        ),
        (
            VectorizerKind::Count,
            ModelSpec::new(ModelFamily::SgdClassifier, seed),
        ),
    ]
}

/// Reads, overrides, and validates the config file at `path`.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<PipelineConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: RawConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    validate(raw, overrides)
}

fn validate(raw: RawConfig, overrides: &Overrides) -> Result<PipelineConfig, ConfigError> {
    let seed = overrides.seed.or(raw.seed).unwrap_or(0);

    let fetch_raw = raw.fetch.unwrap_or_default();
    let fetch_defaults = FetchConfig::default();
    let fetch = FetchConfig {
        subreddits: fetch_raw.subreddits.unwrap_or(fetch_defaults.subreddits),
        keywords: fetch_raw.keywords.unwrap_or(fetch_defaults.keywords),
        max_comments: fetch_raw.max_comments.unwrap_or(fetch_defaults.max_comments),
        rate_limit: fetch_raw.rate_limit.unwrap_or(fetch_defaults.rate_limit),
    };
    fetch.validate().map_err(|e| invalid("fetch", e.to_string()))?;

    let resources = raw.resources.unwrap_or_default();
    let lexicon = ResourceSpec::parse(resources.lexicon, "resources.lexicon")?;
    let stopwords = ResourceSpec::parse(resources.stopwords, "resources.stopwords")?;
    let suffixes = ResourceSpec::parse(resources.lemma_suffixes, "resources.lemma_suffixes")?;
    let exceptions =
        ResourceSpec::parse(resources.lemma_exceptions, "resources.lemma_exceptions")?;
    let lemmas = match (suffixes, exceptions) {
        (ResourceSpec::Builtin, ResourceSpec::Builtin) => None,
        (ResourceSpec::File(s), ResourceSpec::File(e)) => Some((s, e)),
        _ => {
            return Err(invalid(
                "resources.lemma_suffixes",
                "lemma_suffixes and lemma_exceptions must both be \"builtin\" or both be files",
            ))
        }
    };

    let features = raw.features.unwrap_or_default();
    let vectorizer_names = features
        .vectorizers
        .unwrap_or_else(|| vec!["count".to_string(), "tfidf".to_string()]);
    if vectorizer_names.is_empty() {
        return Err(invalid(
            "features.vectorizers",
            "at least one vectorizer is required",
        ));
    }
    let mut vectorizers = Vec::new();
    for name in &vectorizer_names {
        let kind = parse_vectorizer(name, "features.vectorizers")?;
        if vectorizers.contains(&kind) {
            return Err(invalid(
                "features.vectorizers",
                format!("{name:?} is listed twice"),
            ));
        }
        vectorizers.push(kind);
    }
    let min_df = features.min_df.unwrap_or(1);
    if min_df < 1 {
        return Err(invalid("features.min_df", "must be at least 1"));
    }

    let split_raw = raw.split.unwrap_or_default();
    let test_fraction = split_raw.test_fraction.unwrap_or(0.3);
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(invalid(
            "split.test_fraction",
            format!("{test_fraction} is outside the open interval (0, 1)"),
        ));
    }
    let split = SplitConfig {
        test_fraction,
        seed,
        stratified: split_raw.stratified.unwrap_or(false),
    };

    let cv_raw = raw.cv.unwrap_or_default();
    let cv_k = overrides.k.or(cv_raw.k).unwrap_or(5);
    if cv_k < 2 {
        return Err(invalid(
            "cv.k",
            format!("{cv_k} folds cannot cross-validate; need at least 2"),
        ));
    }
    let cv_models = match cv_raw.models {
        None => default_cv_models(seed),
        Some(entries) => {
            if entries.is_empty() {
                return Err(invalid("cv.models", "must not be an empty list"));
            }
            entries
                .into_iter()
                .enumerate()
                .map(|(i, e)| {
                    let key = format!("cv.models[{i}]");
                    let kind = parse_vectorizer(&e.vectorizer, &format!("{key}.vectorizer"))?;
                    let spec = build_spec(
                        &key,
                        &e.family,
                        e.k,
                        e.alpha,
                        e.n_estimators,
                        e.lambda,
                        e.epochs,
                        e.binarize,
                        seed,
                    )?;
                    Ok((kind, spec))
                })
                .collect::<Result<Vec<_>, ConfigError>>()?
        }
    };

    let report = raw.report.unwrap_or_default();
    let out_dir = overrides
        .out
        .clone()
        .or(report.out_dir)
        .unwrap_or_else(|| PathBuf::from("out"));
    let top_n = overrides.top_n.or(report.top_n).unwrap_or(25);
    if top_n < 1 {
        return Err(invalid("report.top_n", "must be at least 1"));
    }

    let models = match raw.models {
        None => default_model_grid(seed),
        Some(entries) => {
            if entries.is_empty() {
                return Err(invalid("models", "must not be an empty list"));
            }
            entries
                .into_iter()
                .enumerate()
                .map(|(i, e)| {
                    build_spec(
                        &format!("models[{i}]"),
                        &e.family,
                        e.k,
                        e.alpha,
                        e.n_estimators,
                        e.lambda,
                        e.epochs,
                        e.binarize,
                        seed,
                    )
                })
                .collect::<Result<Vec<_>, ConfigError>>()?
        }
    };

    Ok(PipelineConfig {
        seed,
        corpus_path: raw.corpus.path,
        fetch,
        lexicon,
        stopwords,
        lemmas,
        vectorizers,
        min_df,
        split,
        cv_k,
        cv_models,
        out_dir,
        top_n,
        models,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_str(text: &str) -> Result<PipelineConfig, ConfigError> {
        load_with(text, &Overrides::default())
    }

    fn load_with(text: &str, overrides: &Overrides) -> Result<PipelineConfig, ConfigError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.toml");
        std::fs::write(&path, text).unwrap();
        load_config(&path, overrides)
    }

    #[test]
    fn minimal_config_fills_every_default() {
        let cfg = load_str("[corpus]\npath = \"data/corpus.jsonl\"\n").unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.split.test_fraction, 0.3);
        assert!(!cfg.split.stratified);
        assert_eq!(cfg.cv_k, 5);
        assert_eq!(
            cfg.vectorizers,
            [VectorizerKind::Count, VectorizerKind::Tfidf]
        );
        assert_eq!(cfg.min_df, 1);
        assert_eq!(cfg.top_n, 25);
        assert_eq!(cfg.out_dir, PathBuf::from("out"));
        assert_eq!(cfg.models.len(), 13, "13 specs per vectorizer = 26 rows");
        assert_eq!(cfg.cv_models.len(), 4);
        assert!(matches!(cfg.lexicon, ResourceSpec::Builtin));
        assert!(cfg.lemmas.is_none());
        // The grid covers every family.
        for family in ModelFamily::ALL {
            assert!(
                cfg.models.iter().any(|s| s.family == family),
                "{family} missing from default grid"
            );
        }
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = load_str("[corpus]\npath = \"x\"\nbogus_key = 3\n").unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");

        let err = load_str("[corpus]\npath = \"x\"\n[split]\ntest_fractoin = 0.3\n").unwrap_err();
        assert!(err.to_string().contains("test_fractoin"), "{err}");
    }

    #[test]
    fn out_of_range_test_fraction_names_the_key() {
        let err =
            load_str("[corpus]\npath = \"x\"\n[split]\ntest_fraction = 1.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("split.test_fraction"), "{msg}");
        assert!(msg.contains("(0, 1)"), "{msg}");
    }

    #[test]
    fn missing_lexicon_file_names_the_path() {
        let err = load_str(
            "[corpus]\npath = \"x\"\n[resources]\nlexicon = \"no/such/lexicon.tsv\"\n",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("resources.lexicon"), "{msg}");
        assert!(msg.contains("no/such/lexicon.tsv"), "{msg}");
    }

    #[test]
    fn lemma_tables_must_come_as_a_pair() {
        let dir = tempfile::tempdir().unwrap();
        let suffixes = dir.path().join("suffixes.tsv");
        std::fs::write(&suffixes, "ing\t\t3\n").unwrap();
        let err = load_str(&format!(
            "[corpus]\npath = \"x\"\n[resources]\nlemma_suffixes = {:?}\n",
            suffixes
        ))
        .unwrap_err();
        assert!(err.to_string().contains("both"), "{err}");
    }

    #[test]
    fn model_grid_entries_validate_by_index() {
        let err = load_str(
            "[corpus]\npath = \"x\"\n[[models]]\nfamily = \"KNN\"\nk = 0\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("models[0]"), "{err}");

        let err = load_str(
            "[corpus]\npath = \"x\"\n[[models]]\nfamily = \"QuantumForest\"\n",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("models[0].family"), "{msg}");
        assert!(msg.contains("QuantumForest"), "{msg}");
    }

    #[test]
    fn explicit_grid_replaces_the_default() {
        let cfg = load_str(
            "[corpus]\npath = \"x\"\n\
             [[models]]\nfamily = \"RandomForest\"\nn_estimators = 7\n\
             [[models]]\nfamily = \"MultinomialNB\"\nalpha = 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.models.len(), 2);
        assert_eq!(cfg.models[0].family, ModelFamily::RandomForest);
        assert_eq!(cfg.models[0].hyperparams.n_estimators, 7);
        assert_eq!(cfg.models[1].hyperparams.alpha, 0.5);
    }

    #[test]
    fn cv_rows_parse_vectorizer_and_family() {
        let cfg = load_str(
            "[corpus]\npath = \"x\"\n[cv]\nk = 3\n\
             [[cv.models]]\nvectorizer = \"tfidf\"\nfamily = \"LinearSVM\"\n",
        )
        .unwrap();
        assert_eq!(cfg.cv_k, 3);
        assert_eq!(cfg.cv_models.len(), 1);
        assert_eq!(cfg.cv_models[0].0, VectorizerKind::Tfidf);
        assert_eq!(cfg.cv_models[0].1.family, ModelFamily::LinearSvm);

        let err = load_str(
            "[corpus]\npath = \"x\"\n[cv]\n[[cv.models]]\nvectorizer = \"word2vec\"\nfamily = \"KNN\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("cv.models[0].vectorizer"), "{err}");
    }

    #[test]
    fn overrides_beat_the_file_and_are_validated() {
        let text = "seed = 7\n[corpus]\npath = \"x\"\n[report]\ntop_n = 10\n";
        let cfg = load_with(
            text,
            &Overrides {
                seed: Some(99),
                out: Some(PathBuf::from("elsewhere")),
                k: Some(4),
                top_n: Some(3),
            },
        )
        .unwrap();
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.split.seed, 99, "split inherits the overridden seed");
        assert_eq!(cfg.models[0].seed, 99, "grid inherits the overridden seed");
        assert_eq!(cfg.out_dir, PathBuf::from("elsewhere"));
        assert_eq!(cfg.cv_k, 4);
        assert_eq!(cfg.top_n, 3);

        let err = load_with(
            text,
            &Overrides {
                k: Some(1),
                ..Overrides::default()
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("cv.k"), "{err}");
    }

    #[test]
    fn empty_lists_are_configuration_errors() {
        for (text, key) in [
            (
                "[corpus]\npath = \"x\"\n[features]\nvectorizers = []\n",
                "features.vectorizers",
            ),
            ("[corpus]\npath = \"x\"\nmodels = []\n", "models"),
            (
                "[corpus]\npath = \"x\"\n[cv]\nmodels = []\n",
                "cv.models",
            ),
        ] {
            let err = load_str(text).unwrap_err();
            assert!(err.to_string().contains(key), "{text} -> {err}");
        }
    }

    #[test]
    fn duplicate_vectorizers_are_rejected() {
        let err = load_str(
            "[corpus]\npath = \"x\"\n[features]\nvectorizers = [\"count\", \"count\"]\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("features.vectorizers"), "{err}");
    }

    #[test]
    fn missing_config_file_is_an_io_error() {
        let err = load_config(Path::new("no/such/config.toml"), &Overrides::default())
            .unwrap_err();
        assert!(matches!(err, ConfigError::Io { .. }), "{err}");
        assert!(err.to_string().contains("no/such/config.toml"), "{err}");
    }
}
