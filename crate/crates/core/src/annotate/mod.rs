//! Weak annotation: lexicon-based polarity scoring and the seven-class
//! sentiment labeling derived from it.
//!
//! Scoring runs on preprocessed token streams (see [`crate::preprocess`]):
//! bigram lexicon entries are matched greedily before unigrams, left to
//! right and non-overlapping; each match contributes `polarity × intensity`,
//! flipped and halved when a negation trigger sits within the two preceding
//! tokens; the score is the mean contribution clamped to `[-1, 1]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Comment;
use crate::preprocess::{self, LemmaRules, StopwordList, TokenList};

const BUILTIN_LEXICON: &str = include_str!("data/lexicon.tsv");

/// How far back (in tokens) a negation trigger reaches.
const NEGATION_WINDOW: usize = 2;
/// A negated match keeps half its magnitude with flipped sign.
const NEGATION_FACTOR: f64 = -0.5;

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    MalformedEntry {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("polarity {value} is outside [-1, 1]")]
    PolarityOutOfRange { value: f64 },
}

/// The seven sentiment classes, declared from most negative to most
/// positive so the derived ordering is the sentiment ordering.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum SentimentLabel {
    StronglyNegative,
    Negative,
    WeaklyNegative,
    Neutral,
    WeaklyPositive,
    Positive,
    StronglyPositive,
}

impl SentimentLabel {
    /// All labels in ascending sentiment order.
    pub const ALL: [SentimentLabel; 7] = [
        SentimentLabel::StronglyNegative,
        SentimentLabel::Negative,
        SentimentLabel::WeaklyNegative,
        SentimentLabel::Neutral,
        SentimentLabel::WeaklyPositive,
        SentimentLabel::Positive,
        SentimentLabel::StronglyPositive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentLabel::StronglyNegative => "StronglyNegative",
            SentimentLabel::Negative => "Negative",
            SentimentLabel::WeaklyNegative => "WeaklyNegative",
            SentimentLabel::Neutral => "Neutral",
            SentimentLabel::WeaklyPositive => "WeaklyPositive",
            SentimentLabel::Positive => "Positive",
            SentimentLabel::StronglyPositive => "StronglyPositive",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SentimentLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SentimentLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown sentiment label {s:?}"))
    }
}

/// A polarity in `[-1, 1]` plus how many lexicon hits produced it. Zero
/// matches always score zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarityScore {
    pub value: f64,
    pub matched_terms: usize,
}

/// One lexicon line: a unigram or bigram with its polarity weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry {
    pub term: String,
    pub polarity: f64,
    /// Multiplier applied to polarity on match; 1.0 for most entries.
    pub intensity: f64,
    /// Negation triggers flip-and-halve following matches instead of
    /// contributing polarity themselves.
    pub is_negator: bool,
}

/// An immutable sentiment lexicon, indexed for the scorer's two lookup
/// shapes (unigram token, adjacent token pair).
#[derive(Debug, Clone)]
pub struct Lexicon {
    unigrams: BTreeMap<String, LexiconEntry>,
    bigrams: BTreeMap<(String, String), LexiconEntry>,
    negators: BTreeSet<String>,
}

static BUILTIN: LazyLock<Lexicon> = LazyLock::new(|| {
    Lexicon::parse(BUILTIN_LEXICON, Path::new("builtin"))
        .expect("bundled lexicon is validated by tests")
});

impl Lexicon {
    /// The bundled lexicon (~3,000 entries).
    pub fn builtin() -> &'static Lexicon {
        &BUILTIN
    }

    /// Loads a lexicon file: UTF-8, one `term<TAB>polarity<TAB>intensity<TAB>negator`
    /// entry per line, `#` comments and blank lines ignored.
    pub fn from_file(path: &Path) -> Result<Self, AnnotateError> {
        let text = std::fs::read_to_string(path).map_err(|source| AnnotateError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    fn parse(text: &str, origin: &Path) -> Result<Self, AnnotateError> {
        let mut lexicon = Lexicon {
            unigrams: BTreeMap::new(),
            bigrams: BTreeMap::new(),
            negators: BTreeSet::new(),
        };
        let err = |line: usize, message: String| AnnotateError::MalformedEntry {
            path: origin.to_path_buf(),
            line,
            message,
        };
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() != 4 {
                return Err(err(
                    line_no,
                    format!("expected 4 tab-separated fields, got {}", fields.len()),
                ));
            }
            let term = fields[0].trim();
            if term.is_empty() {
                return Err(err(line_no, "empty term".to_string()));
            }
            if term != term.to_lowercase() {
                return Err(err(line_no, format!("term {term:?} is not lowercase")));
            }
            let polarity: f64 = fields[1]
                .trim()
                .parse()
                .map_err(|e| err(line_no, format!("bad polarity: {e}")))?;
            if !(-1.0..=1.0).contains(&polarity) {
                return Err(err(
                    line_no,
                    format!("polarity {polarity} outside [-1, 1]"),
                ));
            }
            let intensity: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|e| err(line_no, format!("bad intensity: {e}")))?;
            if !intensity.is_finite() || intensity <= 0.0 {
                return Err(err(
                    line_no,
                    format!("intensity {intensity} is not a positive number"),
                ));
            }
            let is_negator = match fields[3].trim() {
                "true" | "1" => true,
                "false" | "0" => false,
                other => {
                    return Err(err(line_no, format!("bad negator flag {other:?}")));
                }
            };
            let parts: Vec<&str> = term.split(' ').filter(|p| !p.is_empty()).collect();
            let entry = LexiconEntry {
                term: term.to_string(),
                polarity,
                intensity,
                is_negator,
            };
            match parts.as_slice() {
                [unigram] => {
                    if lexicon
                        .unigrams
                        .insert(unigram.to_string(), entry)
                        .is_some()
                    {
                        return Err(err(line_no, format!("duplicate term {term:?}")));
                    }
                    if is_negator {
                        lexicon.negators.insert(unigram.to_string());
                    }
                }
                [first, second] => {
                    if is_negator {
                        return Err(err(
                            line_no,
                            format!("negator {term:?} must be a unigram"),
                        ));
                    }
                    let key = (first.to_string(), second.to_string());
                    if lexicon.bigrams.insert(key, entry).is_some() {
                        return Err(err(line_no, format!("duplicate term {term:?}")));
                    }
                }
                _ => {
                    return Err(err(
                        line_no,
                        format!("term {term:?} must be a unigram or bigram"),
                    ));
                }
            }
        }
        Ok(lexicon)
    }

    pub fn len(&self) -> usize {
        self.unigrams.len() + self.bigrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn unigram(&self, token: &str) -> Option<&LexiconEntry> {
        self.unigrams.get(token)
    }

    pub fn bigram(&self, first: &str, second: &str) -> Option<&LexiconEntry> {
        self.bigrams.get(&(first.to_string(), second.to_string()))
    }

    pub fn is_negator(&self, token: &str) -> bool {
        self.negators.contains(token)
    }

    /// All entries in deterministic (term-sorted, unigrams first) order.
    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.unigrams.values().chain(self.bigrams.values())
    }
}

/// Scores a preprocessed token stream against the lexicon.
///
/// Bigrams win over unigrams at the same position; matches never overlap.
/// A negation trigger within [`NEGATION_WINDOW`] tokens before a match
/// multiplies that match's contribution by [`NEGATION_FACTOR`], once,
/// regardless of how many triggers are in the window or whether an earlier
/// match consumed them. The final value is the arithmetic mean of the
/// contributions, clamped to `[-1, 1]`; no matches means exactly zero.
pub fn score_polarity(tokens: &TokenList, lexicon: &Lexicon) -> PolarityScore {
    let toks = tokens.tokens();
    let mut contributions: Vec<f64> = Vec::new();
    let mut push = |entry: &LexiconEntry, start: usize| {
        let negated = (1..=NEGATION_WINDOW)
            .filter_map(|back| start.checked_sub(back))
            .any(|j| lexicon.is_negator(&toks[j]));
        let mut contribution = entry.polarity * entry.intensity;
        if negated {
            contribution *= NEGATION_FACTOR;
        }
        contributions.push(contribution);
    };
    let mut i = 0;
    while i < toks.len() {
        if i + 1 < toks.len() {
            if let Some(entry) = lexicon.bigram(&toks[i], &toks[i + 1]) {
                push(entry, i);
                i += 2;
                continue;
            }
        }
        if let Some(entry) = lexicon.unigram(&toks[i]) {
            if !entry.is_negator {
                push(entry, i);
            }
        }
        i += 1;
    }
    if contributions.is_empty() {
        return PolarityScore {
            value: 0.0,
            matched_terms: 0,
        };
    }
    let mean = contributions.iter().sum::<f64>() / contributions.len() as f64;
    PolarityScore {
        value: mean.clamp(-1.0, 1.0),
        matched_terms: contributions.len(),
    }
}

/// Maps a polarity value onto its sentiment class.
///
/// Exactly zero is Neutral; positive intervals are half-open below and
/// closed above ((0, 0.3], (0.3, 0.6], (0.6, 1]), negative intervals
/// mirror them ([-0.3, 0), [-0.6, -0.3), [-1, -0.6)), so the seven
/// preimages partition `[-1, 1]` with ± symmetry.
pub fn label_from_value(value: f64) -> Result<SentimentLabel, AnnotateError> {
    if !(-1.0..=1.0).contains(&value) {
        return Err(AnnotateError::PolarityOutOfRange { value });
    }
    Ok(if value == 0.0 {
        SentimentLabel::Neutral
    } else if value > 0.0 {
        if value <= 0.3 {
            SentimentLabel::WeaklyPositive
        } else if value <= 0.6 {
            SentimentLabel::Positive
        } else {
            SentimentLabel::StronglyPositive
        }
    } else if value >= -0.3 {
        SentimentLabel::WeaklyNegative
    } else if value >= -0.6 {
        SentimentLabel::Negative
    } else {
        SentimentLabel::StronglyNegative
    })
}

/// [`label_from_value`] over a [`PolarityScore`].
pub fn label_from_polarity(score: &PolarityScore) -> Result<SentimentLabel, AnnotateError> {
    label_from_value(score.value)
}

/// A comment with its preprocessed tokens, polarity, and derived label.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedComment {
    pub comment: Comment,
    pub tokens: TokenList,
    pub polarity: PolarityScore,
    pub label: SentimentLabel,
}

/// Annotates every comment: preprocess, score, label. Order and length are
/// preserved; work is parallel across comments.
pub fn annotate_corpus(
    comments: &[Comment],
    lexicon: &Lexicon,
    stopwords: &StopwordList,
    rules: &LemmaRules,
) -> Vec<AnnotatedComment> {
    comments
        .par_iter()
        .map(|comment| {
            let tokens = preprocess::preprocess(&comment.body, stopwords, rules);
            let polarity = score_polarity(&tokens, lexicon);
            let label = label_from_polarity(&polarity)
                .expect("scorer output is clamped to [-1, 1]");
            AnnotatedComment {
                comment: comment.clone(),
                tokens,
                polarity,
                label,
            }
        })
        .collect()
}

/// Persisted annotation row: the corpus record plus polarity and label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedRecord {
    #[serde(flatten)]
    pub comment: Comment,
    pub polarity: f64,
    pub label: SentimentLabel,
}

/// Writes annotated comments as line-delimited records (corpus format plus
/// `polarity` and `label` columns).
pub fn save_annotated(annotated: &[AnnotatedComment], path: &Path) -> Result<(), AnnotateError> {
    let io_err = |source| AnnotateError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for a in annotated {
        let record = AnnotatedRecord {
            comment: a.comment.clone(),
            polarity: a.polarity.value,
            label: a.label,
        };
        serde_json::to_writer(&mut w, &record)
            .map_err(|e| io_err(std::io::Error::other(e)))?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Loads a file written by [`save_annotated`], re-checking that each row's
/// label matches its polarity and that comment ids stay unique.
pub fn load_annotated(path: &Path) -> Result<Vec<AnnotatedRecord>, AnnotateError> {
    let file = std::fs::File::open(path).map_err(|source| AnnotateError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| AnnotateError::MalformedEntry {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let line = line.map_err(|source| AnnotateError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AnnotatedRecord =
            serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        record.comment.validate().map_err(|e| err(e.to_string()))?;
        let expected = label_from_value(record.polarity).map_err(|e| err(e.to_string()))?;
        if expected != record.label {
            return Err(err(format!(
                "label {} does not match polarity {} (expected {})",
                record.label, record.polarity, expected
            )));
        }
        if !seen.insert(record.comment.comment_id.clone()) {
            return Err(err(format!(
                "duplicate comment_id {:?}",
                record.comment.comment_id
            )));
        }
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::sample_comment;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> TokenList {
        TokenList::new(words.iter().map(|w| w.to_string()).collect()).unwrap()
    }

    /// A small hand-built lexicon for scorer-mechanics tests.
    fn mini_lexicon() -> Lexicon {
        let text = "\
good\t0.5\t1.0\tfalse
bad\t-0.5\t1.0\tfalse
wow\t1.0\t2.0\tfalse
good job\t0.9\t1.0\tfalse
not\t0.0\t1.0\ttrue
never\t0.0\t1.0\ttrue
";
        Lexicon::parse(text, Path::new("mini")).unwrap()
    }

    #[test]
    fn label_boundaries_match_the_threshold_table() {
        use SentimentLabel::*;
        let eps = 1e-9;
        let cases = [
            (-1.0, StronglyNegative),
            (-0.6 - eps, StronglyNegative),
            (-0.6, Negative),
            (-0.3 - eps, Negative),
            (-0.3, WeaklyNegative),
            (-eps, WeaklyNegative),
            (0.0, Neutral),
            (eps, WeaklyPositive),
            (0.3, WeaklyPositive),
            (0.3 + eps, Positive),
            (0.45, Positive),
            (0.6, Positive),
            (0.6 + eps, StronglyPositive),
            (-0.7, StronglyNegative),
            (1.0, StronglyPositive),
        ];
        for (value, expected) in cases {
            assert_eq!(label_from_value(value).unwrap(), expected, "value {value}");
        }
    }

    #[test]
    fn out_of_range_polarity_is_a_domain_error() {
        for value in [1.0 + 1e-9, -1.5, 2.0, f64::NAN, f64::INFINITY] {
            assert!(
                matches!(
                    label_from_value(value),
                    Err(AnnotateError::PolarityOutOfRange { .. })
                ),
                "value {value} should be rejected"
            );
        }
    }

    #[test]
    fn no_matches_scores_zero() {
        let score = score_polarity(&toks(&["qqq", "zzz"]), mini_lexicon_ref());
        assert_eq!(score.value, 0.0);
        assert_eq!(score.matched_terms, 0);
        assert_eq!(
            label_from_polarity(&score).unwrap(),
            SentimentLabel::Neutral
        );
    }

    fn mini_lexicon_ref() -> &'static Lexicon {
        static MINI: LazyLock<Lexicon> = LazyLock::new(super::tests::mini_lexicon);
        &MINI
    }

    #[test]
    fn single_builtin_entry_scores_its_polarity() {
        let score = score_polarity(&toks(&["excellent"]), Lexicon::builtin());
        assert_eq!(score.value, 1.0);
        assert_eq!(score.matched_terms, 1);
    }

    #[test]
    fn negated_match_flips_and_halves() {
        let score = score_polarity(&toks(&["not", "good"]), Lexicon::builtin());
        assert_eq!(score.value, -0.35);
        assert_eq!(score.matched_terms, 1);
    }

    #[test]
    fn bigrams_win_over_unigrams() {
        let lex = mini_lexicon();
        let score = score_polarity(&toks(&["good", "job"]), &lex);
        assert_eq!(score.matched_terms, 1);
        assert_eq!(score.value, 0.9);
    }

    #[test]
    fn matches_do_not_overlap() {
        let lex = mini_lexicon();
        // Bigram consumes positions 0-1; the second "good" matches alone.
        let score = score_polarity(&toks(&["good", "job", "good"]), &lex);
        assert_eq!(score.matched_terms, 2);
        assert!((score.value - (0.9 + 0.5) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn negation_reaches_two_tokens_back_but_not_three() {
        let lex = mini_lexicon();
        let near = score_polarity(&toks(&["not", "zzz", "good"]), &lex);
        assert_eq!(near.value, -0.25);
        let far = score_polarity(&toks(&["not", "zzz", "zzz", "good"]), &lex);
        assert_eq!(far.value, 0.5);
    }

    #[test]
    fn two_negators_apply_the_factor_once() {
        let lex = mini_lexicon();
        let score = score_polarity(&toks(&["not", "never", "good"]), &lex);
        assert_eq!(score.value, -0.25);
        assert_eq!(score.matched_terms, 1);
    }

    #[test]
    fn negators_are_not_matches_themselves() {
        let lex = mini_lexicon();
        let score = score_polarity(&toks(&["not", "not"]), &lex);
        assert_eq!(score.matched_terms, 0);
        assert_eq!(score.value, 0.0);
    }

    #[test]
    fn intensity_multiplies_and_value_clamps() {
        let lex = mini_lexicon();
        let score = score_polarity(&toks(&["wow"]), &lex);
        assert_eq!(score.matched_terms, 1);
        assert_eq!(score.value, 1.0, "2.0 contribution clamps to 1.0");
    }

    #[test]
    fn annotate_corpus_reproduces_known_signs() {
        let comments = vec![
            sample_comment(
                "c1",
                "This is excellent. It gives a boost to India's coronavirus vaccination campaign.",
            ),
            sample_comment("c2", "Vaccine stopped in 27 countries. But allowed in india."),
            sample_comment(
                "c3",
                "Are the sputnik vaccines being used for vaccinations in any part of the country?",
            ),
        ];
        let annotated = annotate_corpus(
            &comments,
            Lexicon::builtin(),
            &StopwordList::builtin(),
            &LemmaRules::builtin(),
        );
        assert_eq!(annotated.len(), 3);
        let ids: Vec<&str> = annotated
            .iter()
            .map(|a| a.comment.comment_id.as_str())
            .collect();
        assert_eq!(ids, ["c1", "c2", "c3"], "order preserved");
        assert!(
            annotated[0].polarity.value > 0.0,
            "praise comment scored {}",
            annotated[0].polarity.value
        );
        assert!(
            annotated[1].polarity.value < 0.0,
            "halt-news comment scored {}",
            annotated[1].polarity.value
        );
        assert_eq!(annotated[2].label, SentimentLabel::Neutral);
        assert_eq!(annotated[2].polarity.matched_terms, 0);
    }

    #[test]
    fn builtin_lexicon_is_sized_and_indexed() {
        let lex = Lexicon::builtin();
        assert!(lex.len() >= 2500, "got {}", lex.len());
        assert!(lex.is_negator("not"));
        assert!(lex.is_negator("dont"));
        assert!(!lex.is_negator("good"));
        assert_eq!(lex.unigram("good").unwrap().polarity, 0.7);
    }

    #[test]
    fn builtin_lexicon_terms_survive_preprocessing() {
        // Entries must be reachable: scoring happens after stop-word removal
        // and lemmatization, so every term part has to pass both untouched.
        let lex = Lexicon::builtin();
        let sw = StopwordList::builtin();
        let rules = LemmaRules::builtin();
        for entry in lex.entries() {
            for part in entry.term.split(' ') {
                assert!(!sw.contains(part), "{:?} is a stop word", entry.term);
                assert_eq!(
                    rules.apply(part),
                    part,
                    "{:?} is not lemma-stable",
                    entry.term
                );
            }
        }
    }

    #[test]
    fn builtin_lexicon_omits_topic_words() {
        // Topic/domain nouns carry no sentiment on their own; their absence
        // keeps purely informational questions neutral.
        let lex = Lexicon::builtin();
        for term in ["sputnik", "vaccine", "vaccination", "used", "part", "country"] {
            assert!(lex.unigram(term).is_none(), "{term} must not be an entry");
        }
    }

    #[test]
    fn lexicon_parse_rejects_bad_entries() {
        let bad = [
            ("term\t1.5\t1.0\tfalse", "polarity out of range"),
            ("term\t0.5\t0.0\tfalse", "zero intensity"),
            ("term\t0.5\t-1.0\tfalse", "negative intensity"),
            ("term\t0.5\t1.0", "missing field"),
            ("term\t0.5\t1.0\tmaybe", "bad flag"),
            ("Term\t0.5\t1.0\tfalse", "uppercase term"),
            ("a b c\t0.5\t1.0\tfalse", "trigram"),
            ("no way\t0.0\t1.0\ttrue", "bigram negator"),
            ("good\t0.5\t1.0\tfalse\ngood\t0.7\t1.0\tfalse", "duplicate"),
            ("\t0.5\t1.0\tfalse", "empty term"),
        ];
        for (text, what) in bad {
            let result = Lexicon::parse(text, Path::new("t"));
            assert!(result.is_err(), "{what} should fail to parse");
        }
    }

    #[test]
    fn lexicon_parse_reports_line_numbers() {
        let text = "good\t0.5\t1.0\tfalse\nbad\tnope\t1.0\tfalse\n";
        match Lexicon::parse(text, Path::new("t")) {
            Err(AnnotateError::MalformedEntry { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed-entry error, got {other:?}"),
        }
    }

    #[test]
    fn annotated_round_trip_and_field_order() {
        let comments = vec![
            sample_comment("c1", "this is excellent"),
            sample_comment("c2", "nothing relevant here at all qqq"),
        ];
        let annotated = annotate_corpus(
            &comments,
            Lexicon::builtin(),
            &StopwordList::builtin(),
            &LemmaRules::builtin(),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("annotated.jsonl");
        save_annotated(&annotated, &path).unwrap();
        let loaded = load_annotated(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].comment, comments[0]);
        assert_eq!(loaded[0].polarity, annotated[0].polarity.value);
        assert_eq!(loaded[0].label, annotated[0].label);

        let text = std::fs::read_to_string(&path).unwrap();
        let first_line = text.lines().next().unwrap();
        assert!(
            first_line.starts_with("{\"comment_id\":\"c1\""),
            "corpus columns lead each row: {first_line}"
        );
        assert!(first_line.contains("\"polarity\":"));
        assert!(first_line.ends_with("\"label\":\"StronglyPositive\"}"), "{first_line}");
    }

    #[test]
    fn load_annotated_rejects_label_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("annotated.jsonl");
        let mut record = serde_json::to_value(AnnotatedRecord {
            comment: sample_comment("c1", "body"),
            polarity: 0.5,
            label: SentimentLabel::Positive,
        })
        .unwrap();
        record["label"] = serde_json::Value::String("Negative".to_string());
        std::fs::write(&path, record.to_string() + "\n").unwrap();
        let err = load_annotated(&path).unwrap_err();
        assert!(
            matches!(err, AnnotateError::MalformedEntry { line: 1, .. }),
            "{err}"
        );
    }

    #[test]
    fn label_order_is_sentiment_order() {
        let mut sorted = SentimentLabel::ALL;
        sorted.sort();
        assert_eq!(sorted, SentimentLabel::ALL);
        assert!(SentimentLabel::StronglyNegative < SentimentLabel::Neutral);
        assert!(SentimentLabel::Neutral < SentimentLabel::StronglyPositive);
    }

    proptest! {
        #[test]
        fn every_valid_polarity_gets_exactly_one_label(v in -1.0f64..=1.0) {
            let label = label_from_value(v).unwrap();
            let matches = SentimentLabel::ALL
                .iter()
                .filter(|&&l| label_from_value(v).unwrap() == l)
                .count();
            prop_assert_eq!(matches, 1);
            prop_assert!(SentimentLabel::ALL.contains(&label));
        }

        #[test]
        fn labeling_is_monotone(a in -1.0f64..=1.0, b in -1.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(label_from_value(lo).unwrap() <= label_from_value(hi).unwrap());
        }

        #[test]
        fn scorer_is_sign_symmetric(
            words in proptest::collection::vec("(good|bad|wow|job|not|never|zzz)", 0..12)
        ) {
            let mirrored_text = "\
good\t-0.5\t1.0\tfalse
bad\t0.5\t1.0\tfalse
wow\t-1.0\t2.0\tfalse
good job\t-0.9\t1.0\tfalse
not\t0.0\t1.0\ttrue
never\t0.0\t1.0\ttrue
";
            let mirrored = Lexicon::parse(mirrored_text, Path::new("mirror")).unwrap();
            let tokens = TokenList::new(words).unwrap();
            let plain = score_polarity(&tokens, mini_lexicon_ref());
            let flipped = score_polarity(&tokens, &mirrored);
            prop_assert_eq!(plain.matched_terms, flipped.matched_terms);
            prop_assert!((plain.value + flipped.value).abs() < 1e-12);
        }

        #[test]
        fn zero_matches_implies_zero_value(
            words in proptest::collection::vec("[a-z]{1,8}", 0..10)
        ) {
            let tokens = TokenList::new(words).unwrap();
            let score = score_polarity(&tokens, Lexicon::builtin());
            if score.matched_terms == 0 {
                prop_assert_eq!(score.value, 0.0);
            }
            prop_assert!((-1.0..=1.0).contains(&score.value));
        }
    }
}
