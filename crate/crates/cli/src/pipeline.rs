//! Subcommand implementations: each one is a thin orchestration of the
//! library pipeline with file-based handoffs between stages.

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;

use vaxsent_core::annotate::{
    annotate_corpus, load_annotated, save_annotated, AnnotatedComment, Lexicon,
};
use vaxsent_core::eval::{compute_metrics, kfold_cv, train_test_split};
use vaxsent_core::features::{
    build_vocabulary, vectorize_corpus, FeatureMatrix, VectorizerKind,
};
use vaxsent_core::ingest::client::{RedditClient, ReqwestTransport, SystemClock};
use vaxsent_core::ingest::{load_corpus, save_corpus, Comment, Credentials, IngestError};
use vaxsent_core::models::{save_model, train, ModelFamily, ModelSpec};
use vaxsent_core::preprocess::{LemmaRules, StopwordList, TokenList};
use vaxsent_core::report::{
    frequency_report, render_reports, term_frequencies, CvRow, ModelComparisonRow, ReportTables,
};
use vaxsent_core::SentimentLabel;

use crate::config::{PipelineConfig, ResourceSpec};

/// Pipeline failure, split by who has to fix it: the config (exit 2) or
/// the run itself (exit 1).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Runtime(msg) => f.write_str(msg),
        }
    }
}

fn runtime(e: impl fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Loaded scoring/preprocessing resources, builtin unless overridden.
pub struct Resources {
    lexicon: Option<Lexicon>,
    pub stopwords: StopwordList,
    pub lemmas: LemmaRules,
}

impl Resources {
    pub fn lexicon(&self) -> &Lexicon {
        self.lexicon.as_ref().unwrap_or_else(|| Lexicon::builtin())
    }
}

/// Resolves the configured resources; file problems are config errors.
pub fn load_resources(cfg: &PipelineConfig) -> Result<Resources, CliError> {
    let config_err = |e: &dyn fmt::Display| CliError::Config(e.to_string());
    let lexicon = match &cfg.lexicon {
        ResourceSpec::Builtin => None,
        ResourceSpec::File(path) => Some(Lexicon::from_file(path).map_err(|e| config_err(&e))?),
    };
    let stopwords = match &cfg.stopwords {
        ResourceSpec::Builtin => StopwordList::builtin(),
        ResourceSpec::File(path) => StopwordList::from_file(path).map_err(|e| config_err(&e))?,
    };
    let lemmas = match &cfg.lemmas {
        None => LemmaRules::builtin(),
        Some((suffixes, exceptions)) => {
            LemmaRules::from_files(suffixes, exceptions).map_err(|e| config_err(&e))?
        }
    };
    Ok(Resources {
        lexicon,
        stopwords,
        lemmas,
    })
}

/// Loads the raw corpus, rejecting an empty one up front.
pub fn load_corpus_checked(path: &Path) -> Result<Vec<Comment>, CliError> {
    let comments = load_corpus(path).map_err(runtime)?;
    if comments.is_empty() {
        return Err(CliError::Runtime(format!(
            "empty corpus: {} contains no comments",
            path.display()
        )));
    }
    Ok(comments)
}

fn annotated_path(cfg: &PipelineConfig) -> PathBuf {
    cfg.out_dir.join("annotated.jsonl")
}

fn ensure_out_dir(cfg: &PipelineConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| {
        CliError::Runtime(format!(
            "cannot create output directory {}: {e}",
            cfg.out_dir.display()
        ))
    })
}

/// Re-annotates the comments stored in `annotated.jsonl`, verifying the
/// stored labels still match what the current resources produce.
pub fn load_annotated_comments(
    cfg: &PipelineConfig,
    res: &Resources,
) -> Result<Vec<AnnotatedComment>, CliError> {
    let path = annotated_path(cfg);
    if !path.is_file() {
        return Err(CliError::Runtime(format!(
            "no annotated corpus at {}; run the annotate subcommand first",
            path.display()
        )));
    }
    let records = load_annotated(&path).map_err(runtime)?;
    if records.is_empty() {
        return Err(CliError::Runtime(format!(
            "empty corpus: {} contains no annotated comments",
            path.display()
        )));
    }
    let comments: Vec<Comment> = records.iter().map(|r| r.comment.clone()).collect();
    let annotated = annotate_corpus(&comments, res.lexicon(), &res.stopwords, &res.lemmas);
    for (a, r) in annotated.iter().zip(&records) {
        if a.label != r.label {
            return Err(CliError::Runtime(format!(
                "{} was annotated with different resources: comment {:?} stored as {} but now scores {}; re-run annotate",
                path.display(),
                r.comment.comment_id,
                r.label,
                a.label
            )));
        }
    }
    Ok(annotated)
}

/// Fetches comments from the live API into the configured corpus file.
pub fn cmd_fetch(cfg: &PipelineConfig) -> Result<(), CliError> {
    let credentials = Credentials::from_env().map_err(|e| CliError::Config(e.to_string()))?;
    let transport = ReqwestTransport::new().map_err(runtime)?;
    let clock = SystemClock::new();
    let mut client = RedditClient::new(&transport, &clock, credentials, cfg.fetch.rate_limit);
    let outcome = client.fetch_comments(&cfg.fetch).map_err(|e| match e {
        IngestError::MissingConfig { .. } | IngestError::InvalidConfig { .. } => {
            CliError::Config(e.to_string())
        }
        other => runtime(other),
    })?;
    if let Some(parent) = cfg.corpus_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(runtime)?;
        }
    }
    save_corpus(&outcome.comments, &cfg.corpus_path).map_err(runtime)?;
    log::info!(
        "fetched {} comments ({} malformed records skipped) into {}",
        outcome.comments.len(),
        outcome.skipped,
        cfg.corpus_path.display()
    );
    for (keyword, count) in &outcome.per_keyword {
        log::info!("  keyword {keyword:?} matched {count}");
    }
    Ok(())
}

/// Scores and labels the corpus, then writes the annotated file and the
/// descriptive reports.
pub fn cmd_annotate(cfg: &PipelineConfig) -> Result<(), CliError> {
    let res = load_resources(cfg)?;
    let comments = load_corpus_checked(&cfg.corpus_path)?;
    ensure_out_dir(cfg)?;
    let annotated = annotate_corpus(&comments, res.lexicon(), &res.stopwords, &res.lemmas);
    save_annotated(&annotated, &annotated_path(cfg)).map_err(runtime)?;
    log::info!(
        "annotated {} comments into {}",
        annotated.len(),
        annotated_path(cfg).display()
    );
    render(cfg, &res, &annotated, None, None)
}

/// Human-readable value of the one hyperparameter that distinguishes a
/// grid row, for the comparison table's parameter column.
pub fn parameter_label(spec: &ModelSpec) -> String {
    let h = &spec.hyperparams;
    match spec.family {
        ModelFamily::Knn => format!("{} neighbors", h.k),
        ModelFamily::GaussianNb => "default".to_string(),
        ModelFamily::MultinomialNb | ModelFamily::ComplementNb | ModelFamily::BernoulliNb => {
            format!("alpha={:?}", h.alpha)
        }
        ModelFamily::LinearSvm => "Linear".to_string(),
        ModelFamily::RandomForest => format!("{} estimators", h.n_estimators),
        ModelFamily::SgdClassifier => "hinge loss".to_string(),
    }
}

/// Deterministic model file name: vectorizer, family, and parameter slug.
pub fn model_file_name(kind: VectorizerKind, spec: &ModelSpec) -> String {
    let slug: String = parameter_label(spec)
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect();
    format!("{}_{}_{}.json", kind.as_str(), spec.family.as_str(), slug)
}

struct Corpus {
    docs: Vec<TokenList>,
    labels: Vec<SentimentLabel>,
    vocabulary: vaxsent_core::features::Vocabulary,
}

fn prepare_corpus(annotated: &[AnnotatedComment], cfg: &PipelineConfig) -> Result<Corpus, CliError> {
    let docs: Vec<TokenList> = annotated.iter().map(|a| a.tokens.clone()).collect();
    let labels: Vec<SentimentLabel> = annotated.iter().map(|a| a.label).collect();
    let vocabulary = build_vocabulary(&docs, cfg.min_df).map_err(runtime)?;
    log::info!(
        "vocabulary: {} terms over {} documents (min_df {})",
        vocabulary.len(),
        docs.len(),
        cfg.min_df
    );
    Ok(Corpus {
        docs,
        labels,
        vocabulary,
    })
}

fn matrix_for(corpus: &Corpus, kind: VectorizerKind) -> Result<FeatureMatrix, CliError> {
    let rows = vectorize_corpus(&corpus.docs, &corpus.vocabulary, kind);
    FeatureMatrix::new(corpus.vocabulary.len(), rows, corpus.labels.clone()).map_err(runtime)
}

/// Trains every grid model on the full annotated corpus and persists it.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<(), CliError> {
    let res = load_resources(cfg)?;
    let annotated = load_annotated_comments(cfg, &res)?;
    let corpus = prepare_corpus(&annotated, cfg)?;
    let models_dir = cfg.out_dir.join("models");
    std::fs::create_dir_all(&models_dir).map_err(runtime)?;
    for &kind in &cfg.vectorizers {
        let matrix = matrix_for(&corpus, kind)?;
        let trained: Vec<Result<(), CliError>> = cfg
            .models
            .par_iter()
            .map(|spec| {
                let model = train(spec, &matrix).map_err(runtime)?;
                let path = models_dir.join(model_file_name(kind, spec));
                save_model(&model, &path).map_err(runtime)?;
                log::info!("trained {} / {} -> {}", kind, spec.family, path.display());
                Ok(())
            })
            .collect();
        trained.into_iter().collect::<Result<(), CliError>>()?;
    }
    Ok(())
}

/// Runs the full train/test comparison grid.
pub fn evaluate_grid(
    annotated: &[AnnotatedComment],
    cfg: &PipelineConfig,
) -> Result<Vec<ModelComparisonRow>, CliError> {
    let corpus = prepare_corpus(annotated, cfg)?;
    let mut out = Vec::new();
    for &kind in &cfg.vectorizers {
        let matrix = matrix_for(&corpus, kind)?;
        let (train_m, test_m) = train_test_split(&matrix, &cfg.split).map_err(runtime)?;
        log::info!(
            "{kind}: {} train rows, {} test rows",
            train_m.len(),
            test_m.len()
        );
        let rows: Vec<Result<ModelComparisonRow, CliError>> = cfg
            .models
            .par_iter()
            .map(|spec| {
                let model = train(spec, &train_m).map_err(runtime)?;
                let predictions = model.predict(&test_m).map_err(runtime)?;
                let metrics = compute_metrics(test_m.labels(), &predictions).map_err(runtime)?;
                Ok(ModelComparisonRow {
                    vectorizer: kind,
                    family: spec.family,
                    parameter: parameter_label(spec),
                    accuracy: metrics.accuracy,
                    f1_weighted: metrics.f1_weighted,
                    precision_weighted: metrics.precision_weighted,
                    recall_weighted: metrics.recall_weighted,
                })
            })
            .collect();
        for row in rows {
            let row = row?;
            log::info!(
                "{} / {} ({}): accuracy {:.4}, weighted F1 {:.4}",
                row.vectorizer,
                row.family,
                row.parameter,
                row.accuracy,
                row.f1_weighted
            );
            out.push(row);
        }
    }
    Ok(out)
}

/// Cross-validates the configured (vectorizer, model) selections.
pub fn cross_validate(
    annotated: &[AnnotatedComment],
    cfg: &PipelineConfig,
) -> Result<Vec<CvRow>, CliError> {
    let corpus = prepare_corpus(annotated, cfg)?;
    let mut matrices: [Option<FeatureMatrix>; 2] = [None, None];
    let mut matrix_of = |kind: VectorizerKind| -> Result<FeatureMatrix, CliError> {
        let slot = &mut matrices[kind as usize];
        if slot.is_none() {
            *slot = Some(matrix_for(&corpus, kind)?);
        }
        Ok(slot.clone().expect("just filled"))
    };
    let mut out = Vec::new();
    for (kind, spec) in &cfg.cv_models {
        let matrix = matrix_of(*kind)?;
        let result = kfold_cv(spec, &matrix, cfg.cv_k, cfg.seed).map_err(runtime)?;
        log::info!(
            "{kind} / {} ({} folds): mean accuracy {:.4}",
            spec.family,
            cfg.cv_k,
            result.mean_score
        );
        out.push(CvRow {
            vectorizer: *kind,
            family: spec.family,
            parameter: parameter_label(spec),
            k: result.k,
            mean_score: result.mean_score,
            fold_scores: result.fold_scores,
        });
    }
    Ok(out)
}

/// Reads a previously emitted JSON table, if present.
fn load_saved_table<T: DeserializeOwned>(path: &Path) -> Result<Option<Vec<T>>, CliError> {
    if !path.is_file() {
        return Ok(None);
    }
    let file = std::fs::File::open(path).map_err(runtime)?;
    let rows: Vec<T> = serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| CliError::Runtime(format!("cannot parse {}: {e}", path.display())))?;
    Ok(Some(rows))
}

/// Builds the descriptive tables and writes every report file.
fn render(
    cfg: &PipelineConfig,
    res: &Resources,
    annotated: &[AnnotatedComment],
    model_comparison: Option<Vec<ModelComparisonRow>>,
    cv: Option<Vec<CvRow>>,
) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let frequency = frequency_report(annotated).map_err(runtime)?;
    let terms = term_frequencies(annotated, cfg.top_n, &res.stopwords).map_err(runtime)?;
    let tables = ReportTables {
        frequency,
        terms,
        top_n: cfg.top_n,
        model_comparison,
        cv,
    };
    render_reports(&tables, &cfg.out_dir).map_err(runtime)?;
    log::info!("reports written under {}", cfg.out_dir.display());
    Ok(())
}

/// Evaluates the grid and writes all reports including the comparison table.
pub fn cmd_evaluate(cfg: &PipelineConfig) -> Result<(), CliError> {
    let res = load_resources(cfg)?;
    let annotated = load_annotated_comments(cfg, &res)?;
    let rows = evaluate_grid(&annotated, cfg)?;
    render(cfg, &res, &annotated, Some(rows), None)
}

/// Cross-validates and writes all reports including the CV table.
pub fn cmd_cv(cfg: &PipelineConfig) -> Result<(), CliError> {
    let res = load_resources(cfg)?;
    let annotated = load_annotated_comments(cfg, &res)?;
    let rows = cross_validate(&annotated, cfg)?;
    render(cfg, &res, &annotated, None, Some(rows))
}

/// Re-renders every report from the annotated corpus plus any model
/// tables emitted by earlier evaluate/cv runs.
pub fn cmd_report(cfg: &PipelineConfig) -> Result<(), CliError> {
    let res = load_resources(cfg)?;
    let annotated = load_annotated_comments(cfg, &res)?;
    let model_comparison = load_saved_table(&cfg.out_dir.join("model_comparison.json"))?;
    let cv = load_saved_table(&cfg.out_dir.join("cv.json"))?;
    render(cfg, &res, &annotated, model_comparison, cv)
}

/// The whole pipeline in one pass: annotate, evaluate, cross-validate,
/// train final models, and render every report.
pub fn cmd_run_all(cfg: &PipelineConfig) -> Result<(), CliError> {
    let res = load_resources(cfg)?;
    let comments = load_corpus_checked(&cfg.corpus_path)?;
    ensure_out_dir(cfg)?;
    let annotated = annotate_corpus(&comments, res.lexicon(), &res.stopwords, &res.lemmas);
    save_annotated(&annotated, &annotated_path(cfg)).map_err(runtime)?;
    log::info!("annotated {} comments", annotated.len());

    let comparison = evaluate_grid(&annotated, cfg)?;
    let cv_rows = cross_validate(&annotated, cfg)?;

    let corpus = prepare_corpus(&annotated, cfg)?;
    let models_dir = cfg.out_dir.join("models");
    std::fs::create_dir_all(&models_dir).map_err(runtime)?;
    for &kind in &cfg.vectorizers {
        let matrix = matrix_for(&corpus, kind)?;
        let saved: Vec<Result<(), CliError>> = cfg
            .models
            .par_iter()
            .map(|spec| {
                let model = train(spec, &matrix).map_err(runtime)?;
                save_model(&model, &models_dir.join(model_file_name(kind, spec)))
                    .map_err(runtime)
            })
            .collect();
        saved.into_iter().collect::<Result<(), CliError>>()?;
    }
    log::info!(
        "saved {} models under {}",
        cfg.vectorizers.len() * cfg.models.len(),
        models_dir.display()
    );

    render(cfg, &res, &annotated, Some(comparison), Some(cv_rows))
}
