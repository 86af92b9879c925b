//! Corpus acquisition: Reddit comment records, keyword filtering, and a
//! line-delimited persistence format.
//!
//! Everything downstream consumes the persisted corpus file, so the full
//! pipeline runs offline; live fetching ([`client`]) is optional.

pub mod client;

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
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
    #[error("duplicate comment_id {id:?}")]
    DuplicateId { id: String },
    #[error("invalid comment {id:?}: {reason}")]
    InvalidComment { id: String, reason: String },
    #[error("missing or empty environment variable {var}")]
    MissingConfig { var: String },
    #[error("invalid fetch configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error("credentials rejected (HTTP 401); check client id and secret")]
    CredentialsRejected,
    #[error("rate limited (HTTP 429) and retries exhausted")]
    RateLimitExhausted,
    #[error("HTTP {status} from {endpoint}")]
    HttpStatus { status: u16, endpoint: String },
    #[error("transport error talking to {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("malformed API payload: {reason}")]
    MalformedPayload { reason: String },
}

/// One Reddit comment together with the post context it was found under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comment {
    /// Unique key within a corpus.
    pub comment_id: String,
    pub post_id: String,
    pub subreddit: String,
    pub post_title: String,
    /// Post body; empty for link posts.
    pub selftext: String,
    /// The comment text itself.
    pub body: String,
    /// Net vote score; may be negative.
    pub score: i64,
    /// UTC epoch seconds.
    pub created_at: i64,
}

impl Comment {
    /// Checks the record invariants: non-empty id, non-blank body, and a
    /// non-negative timestamp.
    pub fn validate(&self) -> Result<(), IngestError> {
        let fail = |reason: &str| {
            Err(IngestError::InvalidComment {
                id: self.comment_id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.comment_id.is_empty() {
            return fail("comment_id is empty");
        }
        if self.body.trim().is_empty() {
            return fail("body is empty after trimming whitespace");
        }
        if self.created_at < 0 {
            return fail("created_at is before the epoch");
        }
        Ok(())
    }
}

/// What to fetch: which subreddits, which keywords, how much, how fast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchConfig {
    pub subreddits: Vec<String>,
    pub keywords: Vec<String>,
    /// Stop after this many matching comments; 0 fetches nothing.
    pub max_comments: usize,
    /// Maximum requests per 60-second window.
    pub rate_limit: u32,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            subreddits: ["IndiaSpeaks", "indianews", "COVID19", "india"]
                .map(String::from)
                .to_vec(),
            keywords: ["covishield", "covaxin", "sputnik", "vaccination"]
                .map(String::from)
                .to_vec(),
            max_comments: 1000,
            rate_limit: 60,
        }
    }
}

impl FetchConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        let fail = |reason: &str| {
            Err(IngestError::InvalidConfig {
                reason: reason.to_string(),
            })
        };
        if self.subreddits.is_empty() {
            return fail("subreddits list is empty");
        }
        if self.keywords.is_empty() {
            return fail("keywords list is empty");
        }
        if self.rate_limit < 1 {
            return fail("rate_limit must be at least 1 request per minute");
        }
        Ok(())
    }
}

/// API credentials, normally sourced from the environment.
#[derive(Debug, Clone)]
pub struct Credentials {
    pub client_id: String,
    pub client_secret: String,
    /// Sent on every request; the API rejects anonymous user agents.
    pub user_agent: String,
}

pub const ENV_CLIENT_ID: &str = "REDDIT_CLIENT_ID";
pub const ENV_CLIENT_SECRET: &str = "REDDIT_CLIENT_SECRET";
pub const ENV_USER_AGENT: &str = "REDDIT_USER_AGENT";

impl Credentials {
    /// Reads credentials from `REDDIT_CLIENT_ID`, `REDDIT_CLIENT_SECRET`, and
    /// `REDDIT_USER_AGENT`. Missing or empty variables are configuration
    /// errors raised before any network activity.
    pub fn from_env() -> Result<Self, IngestError> {
        Self::from_lookup(|var| std::env::var(var).ok())
    }

    /// Same contract as [`Credentials::from_env`] with an injectable variable
    /// lookup, so tests need not mutate process-wide state.
    pub fn from_lookup<F>(lookup: F) -> Result<Self, IngestError>
    where
        F: Fn(&str) -> Option<String>,
    {
        let get = |var: &str| {
            lookup(var)
                .filter(|v| !v.trim().is_empty())
                .ok_or_else(|| IngestError::MissingConfig {
                    var: var.to_string(),
                })
        };
        Ok(Self {
            client_id: get(ENV_CLIENT_ID)?,
            client_secret: get(ENV_CLIENT_SECRET)?,
            user_agent: get(ENV_USER_AGENT)?,
        })
    }
}

/// True iff any keyword occurs case-insensitively as a substring of the
/// comment body or the post title.
pub fn match_keywords(comment: &Comment, keywords: &[String]) -> bool {
    let body = comment.body.to_lowercase();
    let title = comment.post_title.to_lowercase();
    keywords.iter().any(|k| {
        let k = k.to_lowercase();
        body.contains(&k) || title.contains(&k)
    })
}

/// Writes a corpus as line-delimited records, one comment per line.
pub fn save_corpus(comments: &[Comment], path: &Path) -> Result<(), IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for c in comments {
        // serde_json never fails on these plain-data fields; surface any
        // writer error as the underlying I/O problem.
        serde_json::to_writer(&mut w, c)
            .map_err(|e| io_err(std::io::Error::other(e)))?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Loads a corpus written by [`save_corpus`].
///
/// Malformed or invalid lines fail with their 1-based line number; duplicate
/// comment ids fail naming the id. Blank lines are tolerated.
pub fn load_corpus(path: &Path) -> Result<Vec<Comment>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut comments = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let comment: Comment =
            serde_json::from_str(&line).map_err(|e| IngestError::MalformedLine {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        comment.validate().map_err(|e| IngestError::MalformedLine {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(comment.comment_id.clone()) {
            return Err(IngestError::DuplicateId {
                id: comment.comment_id,
            });
        }
        comments.push(comment);
    }
    Ok(comments)
}

#[cfg(test)]
pub(crate) fn sample_comment(id: &str, body: &str) -> Comment {
    Comment {
        comment_id: id.to_string(),
        post_id: "t3_post".to_string(),
        subreddit: "india".to_string(),
        post_title: "Vaccine drive".to_string(),
        selftext: String::new(),
        body: body.to_string(),
        score: 1,
        created_at: 1_620_000_000,
    }
}
