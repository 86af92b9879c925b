//! Text normalization: tokenization, stop-word removal, and rule-based
//! noun lemmatization.
//!
//! The full pipeline is the fixed composition `tokenize` →
//! [`remove_stopwords`] → [`lemmatize`] (per token), exposed as
//! [`preprocess`]. The order matters: lemmatizing first could turn a
//! non-stop-word into a stop word ("others" → "other") and stop-word
//! filtering must see the original forms.
//!
//! All functions are pure; the shared resources ([`StopwordList`],
//! [`LemmaRules`]) are immutable after load and can be used from many threads
//! at once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUILTIN_STOPWORDS: &str = include_str!("data/stopwords_en.txt");
const BUILTIN_SUFFIX_RULES: &str = include_str!("data/lemma_suffixes.tsv");
const BUILTIN_EXCEPTIONS: &str = include_str!("data/lemma_exceptions.tsv");

/// A suffix rule only fires when the stem left in front of the suffix has at
/// least this many characters, so stripping never produces a degenerate stem
/// ("is" must not become "i").
const MIN_STEM_CHARS: usize = 3;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: expected tab-separated pair, got {content:?}")]
    MalformedRule {
        path: PathBuf,
        line: usize,
        content: String,
    },
    #[error("invalid token {token:?}: {reason}")]
    InvalidToken { token: String, reason: String },
}

/// An ordered list of normalized tokens: non-empty, free of whitespace, and
/// case-normalized (lowercasing each token is a no-op; code points without a
/// lowercase mapping pass through).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenList(Vec<String>);

impl TokenList {
    /// Builds a token list, validating every token against the type's
    /// invariants. Output of [`tokenize`] satisfies them by construction.
    pub fn new(tokens: Vec<String>) -> Result<Self, PreprocessError> {
        for t in &tokens {
            let reason = if t.is_empty() {
                Some("empty token")
            } else if t.chars().any(char::is_whitespace) {
                Some("contains whitespace")
            } else if *t != t.to_lowercase() {
                Some("not lowercase-normalized")
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(PreprocessError::InvalidToken {
                    token: t.clone(),
                    reason: reason.to_string(),
                });
            }
        }
        Ok(Self(tokens))
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<String> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }
}

impl fmt::Display for TokenList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join(" "))
    }
}

impl<'a> IntoIterator for &'a TokenList {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Where a resource was loaded from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResourceSource {
    Builtin,
    File(PathBuf),
}

/// A set of lowercase stop words.
#[derive(Debug, Clone)]
pub struct StopwordList {
    words: BTreeSet<String>,
    source: ResourceSource,
}

impl StopwordList {
    /// The bundled English list. Negation words (no/not/nor/never) are
    /// deliberately absent so the polarity scorer still sees them.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_STOPWORDS, ResourceSource::Builtin)
    }

    /// Loads a list from a file: UTF-8, one entry per line, `#` comments and
    /// blank lines ignored. Entries are lowercased on load.
    pub fn from_file(path: &Path) -> Result<Self, PreprocessError> {
        let text = std::fs::read_to_string(path).map_err(|source| PreprocessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::parse(&text, ResourceSource::File(path.to_path_buf())))
    }

    /// Builds a list from an iterator of words (lowercased on insert).
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            words: words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
            source: ResourceSource::Builtin,
        }
    }

    fn parse(text: &str, source: ResourceSource) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words, source }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn source(&self) -> &ResourceSource {
        &self.source
    }
}

/// Ordered suffix detachment rules plus an irregular-form exception table,
/// applied in noun mode only (plural → singular; verb inflections pass
/// through untouched).
#[derive(Debug, Clone)]
pub struct LemmaRules {
    suffix_rules: Vec<(String, String)>,
    exceptions: BTreeMap<String, String>,
}

impl LemmaRules {
    pub fn builtin() -> Self {
        // The bundled files are validated by tests; parsing them cannot fail.
        Self {
            suffix_rules: parse_pairs(BUILTIN_SUFFIX_RULES, Path::new("builtin")).unwrap(),
            exceptions: parse_pairs(BUILTIN_EXCEPTIONS, Path::new("builtin"))
                .unwrap()
                .into_iter()
                .collect(),
        }
    }

    /// Loads rules from two files of tab-separated pairs: `suffix<TAB>replacement`
    /// (ordered) and `form<TAB>lemma`.
    pub fn from_files(suffix_path: &Path, exceptions_path: &Path) -> Result<Self, PreprocessError> {
        let read = |path: &Path| {
            std::fs::read_to_string(path).map_err(|source| PreprocessError::Io {
                path: path.to_path_buf(),
                source,
            })
        };
        Ok(Self {
            suffix_rules: parse_pairs(&read(suffix_path)?, suffix_path)?,
            exceptions: parse_pairs(&read(exceptions_path)?, exceptions_path)?
                .into_iter()
                .collect(),
        })
    }

    /// Maps one lowercase token to its lemma.
    ///
    /// The exception table wins; otherwise the first suffix rule that matches
    /// is applied once. A rule whose replacement equals its suffix is a guard:
    /// it ends the scan and returns the token unchanged whenever the suffix
    /// matches. Detachment rules additionally require a stem of at least
    /// [`MIN_STEM_CHARS`] characters so stripping never produces a degenerate
    /// stem. Tokens matching nothing come back unchanged, and the result is
    /// never empty.
    pub fn apply(&self, token: &str) -> String {
        if let Some(lemma) = self.exceptions.get(token) {
            return lemma.clone();
        }
        for (suffix, replacement) in &self.suffix_rules {
            if let Some(stem) = token.strip_suffix(suffix.as_str()) {
                if replacement == suffix {
                    return token.to_string();
                }
                if stem.chars().count() >= MIN_STEM_CHARS {
                    return format!("{stem}{replacement}");
                }
            }
        }
        token.to_string()
    }

    pub fn suffix_rules(&self) -> &[(String, String)] {
        &self.suffix_rules
    }

    pub fn exceptions(&self) -> &BTreeMap<String, String> {
        &self.exceptions
    }
}

fn parse_pairs(text: &str, path: &Path) -> Result<Vec<(String, String)>, PreprocessError> {
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (left, right) = line.split_once('\t').ok_or_else(|| {
            PreprocessError::MalformedRule {
                path: path.to_path_buf(),
                line: idx + 1,
                content: line.to_string(),
            }
        })?;
        let left = left.trim();
        if left.is_empty() {
            return Err(PreprocessError::MalformedRule {
                path: path.to_path_buf(),
                line: idx + 1,
                content: line.to_string(),
            });
        }
        pairs.push((left.to_lowercase(), right.trim().to_lowercase()));
    }
    Ok(pairs)
}

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:https?://|www\.)\S+").unwrap());
// Reddit-style u/name (optionally /u/name) and @-mentions.
static MENTION_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:^|\s)/?u/[A-Za-z0-9_-]+|@\w+").unwrap());

/// Splits text into lowercase tokens.
///
/// URLs and user mentions are removed first, then the text is split at every
/// non-alphanumeric character, which drops punctuation and emoji as a side
/// effect while keeping numerals and romanized code-mixed words intact.
pub fn tokenize(text: &str) -> TokenList {
    let lowered = text.to_lowercase();
    let no_urls = URL_RE.replace_all(&lowered, " ");
    let cleaned = MENTION_RE.replace_all(&no_urls, " ");
    let tokens = cleaned
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    TokenList(tokens)
}

/// Drops every token present in the stop-word list, preserving order.
pub fn remove_stopwords(tokens: &TokenList, stopwords: &StopwordList) -> TokenList {
    TokenList(
        tokens
            .iter()
            .filter(|t| !stopwords.contains(t))
            .cloned()
            .collect(),
    )
}

/// Lemmatizes a single lowercase token. See [`LemmaRules::apply`].
pub fn lemmatize(token: &str, rules: &LemmaRules) -> String {
    rules.apply(token)
}

/// The full normalization pipeline: tokenize, drop stop words, lemmatize.
pub fn preprocess(text: &str, stopwords: &StopwordList, rules: &LemmaRules) -> TokenList {
    let kept = remove_stopwords(&tokenize(text), stopwords);
    TokenList(kept.iter().map(|t| rules.apply(t)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sw() -> StopwordList {
        StopwordList::builtin()
    }

    fn rules() -> LemmaRules {
        LemmaRules::builtin()
    }

    #[test]
    fn tokenize_code_mixed_sentence() {
        let t = tokenize("Is vaccine ki efficacy kya hai?");
        assert_eq!(t.tokens(), ["is", "vaccine", "ki", "efficacy", "kya", "hai"]);
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn tokenize_strips_urls_mentions_punctuation() {
        let t = tokenize("Great!!! https://x.co/a @user");
        assert_eq!(t.tokens(), ["great"]);
    }

    #[test]
    fn tokenize_strips_reddit_mentions_and_emoji() {
        let t = tokenize("thanks u/mod_guy 🙏 covaxin works 💉💉");
        assert_eq!(t.tokens(), ["thanks", "covaxin", "works"]);
    }

    #[test]
    fn tokenize_keeps_numerals() {
        let t = tokenize("2 doses in 84 days");
        assert_eq!(t.tokens(), ["2", "doses", "in", "84", "days"]);
    }

    #[test]
    fn stopwords_basic_and_idempotent() {
        let t = TokenList::new(vec!["this".into(), "is".into(), "excellent".into()]).unwrap();
        let once = remove_stopwords(&t, &sw());
        assert_eq!(once.tokens(), ["excellent"]);
        let twice = remove_stopwords(&once, &sw());
        assert_eq!(once, twice);
    }

    #[test]
    fn stopwords_empty_input() {
        assert!(remove_stopwords(&TokenList::default(), &sw()).is_empty());
    }

    #[test]
    fn negators_are_not_stopwords() {
        for w in ["no", "not", "nor", "never"] {
            assert!(!sw().contains(w), "{w} must survive stop-word removal");
        }
    }

    #[test]
    fn lemmatize_examples() {
        let r = rules();
        assert_eq!(r.apply("vaccines"), "vaccine");
        assert_eq!(r.apply("countries"), "country");
        assert_eq!(r.apply("efficacy"), "efficacy");
        assert_eq!(r.apply("doses"), "dose");
        assert_eq!(r.apply("cases"), "case");
        assert_eq!(r.apply("diseases"), "disease");
        assert_eq!(r.apply("classes"), "class");
        assert_eq!(r.apply("viruses"), "virus");
        assert_eq!(r.apply("virus"), "virus");
        assert_eq!(r.apply("analysis"), "analysis");
        assert_eq!(r.apply("women"), "woman");
        assert_eq!(r.apply("is"), "is");
        assert_eq!(r.apply("27"), "27");
    }

    #[test]
    fn lemmatize_never_empty() {
        let r = rules();
        for t in ["s", "ss", "es", "ies", "as", "a"] {
            assert!(!r.apply(t).is_empty());
        }
    }

    #[test]
    fn exception_values_are_fixed_points() {
        let r = rules();
        for (form, lemma) in r.exceptions() {
            assert_eq!(
                &r.apply(lemma),
                lemma,
                "exception {form} -> {lemma} does not map to a stable lemma"
            );
        }
    }

    #[test]
    fn stopword_lemma_closure() {
        // If a non-stop-word lemmatizes onto a stop word, re-running the
        // pipeline on its own output would drop tokens the first pass kept.
        // Every candidate inflection that maps onto a stop word must itself be
        // in the list. Candidates cover every way the suffix rules can
        // produce a given lemma; exception entries are checked separately.
        let s = sw();
        let r = rules();
        for w in s.iter() {
            let mut candidates = vec![format!("{w}s"), format!("{w}es")];
            if let Some(stem) = w.strip_suffix('y') {
                candidates.push(format!("{stem}ies"));
            }
            if let Some(stem) = w.strip_suffix('f') {
                candidates.push(format!("{stem}ves"));
            }
            for f in candidates {
                if s.contains(&f) {
                    continue;
                }
                assert!(
                    !s.contains(&r.apply(&f)),
                    "{f} lemmatizes onto stop word {}",
                    r.apply(&f)
                );
            }
        }
        for (form, lemma) in r.exceptions() {
            assert!(
                !s.contains(lemma) || s.contains(form),
                "exception {form} maps onto stop word {lemma}"
            );
        }
    }

    #[test]
    fn guards_fire_regardless_of_stem_length() {
        let r = rules();
        assert_eq!(r.apply("hiss"), "hiss");
        assert_eq!(r.apply("this"), "this");
        assert_eq!(r.apply("gas"), "gas");
        assert_eq!(r.apply("bus"), "bus");
    }

    #[test]
    fn preprocess_composition() {
        let s = sw();
        let r = rules();
        assert_eq!(preprocess("This is excellent.", &s, &r).tokens(), ["excellent"]);
        assert_eq!(
            preprocess("Vaccines stopped in 27 countries", &s, &r).tokens(),
            ["vaccine", "stopped", "27", "country"]
        );
        assert!(preprocess("", &s, &r).is_empty());
    }

    #[test]
    fn token_list_rejects_invalid() {
        assert!(TokenList::new(vec!["ok".into(), "".into()]).is_err());
        assert!(TokenList::new(vec!["has space".into()]).is_err());
        assert!(TokenList::new(vec!["Upper".into()]).is_err());
    }

    proptest! {
        #[test]
        fn tokens_satisfy_invariants(text in "\\PC{0,120}") {
            for t in tokenize(&text).iter() {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(char::is_whitespace));
                prop_assert_eq!(&t.to_lowercase(), t);
            }
        }

        #[test]
        fn pipeline_idempotent_on_ascii_words(
            words in proptest::collection::vec("[a-z]{1,12}", 0..20)
        ) {
            let s = sw();
            let r = rules();
            let text = words.join(" ");
            let once = preprocess(&text, &s, &r);
            let twice = preprocess(&once.to_string(), &s, &r);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn pipeline_idempotent_on_messy_text(text in "\\PC{0,120}") {
            let s = sw();
            let r = rules();
            let once = preprocess(&text, &s, &r);
            let twice = preprocess(&once.to_string(), &s, &r);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn lemmatize_is_deterministic(token in "[a-z]{1,15}") {
            let r = rules();
            prop_assert_eq!(r.apply(&token), r.apply(&token));
        }
    }
}
