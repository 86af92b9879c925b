//! Reddit API client: OAuth2 client-credentials auth, cursor-paginated
//! comment listings, and a sliding-window rate limiter.
//!
//! The client is written against two small traits, [`HttpTransport`] and
//! [`Clock`], so every network contract (retry policy, re-authentication,
//! request ceiling) is exercised in tests with a scripted transport and a
//! virtual clock; [`ReqwestTransport`] and [`SystemClock`] are the production
//! implementations.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Mutex;
use std::time::Instant;

use super::{match_keywords, Comment, Credentials, FetchConfig, IngestError};

const TOKEN_URL: &str = "https://www.reddit.com/api/v1/access_token";
const API_BASE: &str = "https://oauth.reddit.com";
/// Listing page size; the API caps pages at 100 entries.
const PAGE_LIMIT: usize = 100;
/// Attempts per request when the API answers 429.
const MAX_RATE_RETRIES: u32 = 3;
const WINDOW_MS: u64 = 60_000;

/// Time source. Production uses the monotonic system clock; tests drive a
/// virtual one so rate-limit behavior is checked without real waiting.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
    fn sleep_ms(&self, ms: u64);
}

/// Monotonic wall-clock time measured from construction.
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        self.origin.elapsed().as_millis() as u64
    }

    fn sleep_ms(&self, ms: u64) {
        std::thread::sleep(std::time::Duration::from_millis(ms));
    }
}

/// A clock that only moves when slept on or advanced explicitly.
pub struct VirtualClock {
    now: Mutex<u64>,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self { now: Mutex::new(0) }
    }

    pub fn advance_ms(&self, ms: u64) {
        *self.now.lock().unwrap() += ms;
    }
}

impl Default for VirtualClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for VirtualClock {
    fn now_ms(&self) -> u64 {
        *self.now.lock().unwrap()
    }

    fn sleep_ms(&self, ms: u64) {
        self.advance_ms(ms);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HttpMethod {
    Get,
    Post,
}

/// One outgoing request, transport-agnostic.
#[derive(Debug, Clone)]
pub struct HttpRequest {
    pub method: HttpMethod,
    pub url: String,
    pub headers: Vec<(String, String)>,
    /// URL-encoded form body (POST only).
    pub form: Vec<(String, String)>,
    /// HTTP basic auth as (username, password).
    pub basic_auth: Option<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Executes one HTTP exchange. Implementations must be usable from multiple
/// threads; the client serializes calls through the rate limiter.
pub trait HttpTransport: Send + Sync {
    /// Returns the response for `request`, or a human-readable description of
    /// the transport failure (DNS, TLS, timeout…). HTTP error statuses are
    /// not transport failures; they come back as responses.
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, String>;
}

/// Production transport over a blocking HTTP client.
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Result<Self, IngestError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(30))
            .build()
            .map_err(|e| IngestError::Transport {
                endpoint: "client setup".to_string(),
                message: e.to_string(),
            })?;
        Ok(Self { client })
    }
}

impl HttpTransport for ReqwestTransport {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, String> {
        let mut builder = match request.method {
            HttpMethod::Get => self.client.get(&request.url),
            HttpMethod::Post => self.client.post(&request.url),
        };
        for (name, value) in &request.headers {
            builder = builder.header(name, value);
        }
        if let Some((user, pass)) = &request.basic_auth {
            builder = builder.basic_auth(user, Some(pass));
        }
        if request.method == HttpMethod::Post {
            builder = builder.form(&request.form);
        }
        let response = builder.send().map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let body = response.text().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Sliding-window limiter: at most `capacity` acquisitions in any 60-second
/// window. Shareable across threads; `acquire` blocks (sleeps) until a slot
/// frees up.
pub struct RateLimiter {
    capacity: u32,
    issued_at: Mutex<VecDeque<u64>>,
}

impl RateLimiter {
    pub fn new(capacity: u32) -> Self {
        Self {
            capacity: capacity.max(1),
            issued_at: Mutex::new(VecDeque::new()),
        }
    }

    /// Blocks until issuing one more request keeps the window under capacity,
    /// then records the issue time.
    pub fn acquire(&self, clock: &dyn Clock) {
        loop {
            let wait_ms = {
                let mut issued = self.issued_at.lock().unwrap();
                let now = clock.now_ms();
                while let Some(&t) = issued.front() {
                    if now.saturating_sub(t) >= WINDOW_MS {
                        issued.pop_front();
                    } else {
                        break;
                    }
                }
                if (issued.len() as u32) < self.capacity {
                    issued.push_back(now);
                    return;
                }
                // Oldest in-window request decides when a slot frees up.
                WINDOW_MS - now.saturating_sub(issued[0])
            };
            clock.sleep_ms(wait_ms);
        }
    }
}

/// A bearer token plus its expiry instant on the client's clock.
#[derive(Debug, Clone)]
pub struct AccessToken {
    pub bearer: String,
    pub expires_at_ms: u64,
}

impl AccessToken {
    pub fn is_expired(&self, clock: &dyn Clock) -> bool {
        clock.now_ms() >= self.expires_at_ms
    }
}

/// Result of a fetch run: the deduplicated keyword-matching comments plus
/// bookkeeping the caller reports.
#[derive(Debug, Default)]
pub struct FetchOutcome {
    pub comments: Vec<Comment>,
    /// Malformed API records skipped (robustness over strictness).
    pub skipped: usize,
    /// Matching comments per keyword; one comment may count under several
    /// keywords, so these can sum past `comments.len()`.
    pub per_keyword: BTreeMap<String, usize>,
}

/// Authenticated API client. Holds borrowed transport and clock so tests can
/// inspect them after the client is dropped.
pub struct RedditClient<'a> {
    transport: &'a dyn HttpTransport,
    clock: &'a dyn Clock,
    limiter: RateLimiter,
    credentials: Credentials,
    token: Option<AccessToken>,
}

impl<'a> RedditClient<'a> {
    pub fn new(
        transport: &'a dyn HttpTransport,
        clock: &'a dyn Clock,
        credentials: Credentials,
        rate_limit: u32,
    ) -> Self {
        Self {
            transport,
            clock,
            limiter: RateLimiter::new(rate_limit),
            credentials,
            token: None,
        }
    }

    /// Runs the OAuth2 client-credentials flow and caches the token.
    ///
    /// 429 responses are retried after the rate-limit window, at most
    /// [`MAX_RATE_RETRIES`] attempts; 401 is a credential error and is not
    /// retried.
    pub fn authenticate(&mut self) -> Result<&AccessToken, IngestError> {
        for field in [
            (&self.credentials.client_id, super::ENV_CLIENT_ID),
            (&self.credentials.client_secret, super::ENV_CLIENT_SECRET),
            (&self.credentials.user_agent, super::ENV_USER_AGENT),
        ] {
            if field.0.trim().is_empty() {
                return Err(IngestError::MissingConfig {
                    var: field.1.to_string(),
                });
            }
        }
        let request = HttpRequest {
            method: HttpMethod::Post,
            url: TOKEN_URL.to_string(),
            headers: vec![("User-Agent".to_string(), self.credentials.user_agent.clone())],
            form: vec![("grant_type".to_string(), "client_credentials".to_string())],
            basic_auth: Some((
                self.credentials.client_id.clone(),
                self.credentials.client_secret.clone(),
            )),
        };
        let response = self.execute_with_retries(&request)?;
        let payload: serde_json::Value =
            serde_json::from_str(&response.body).map_err(|e| IngestError::MalformedPayload {
                reason: format!("token endpoint returned non-JSON body: {e}"),
            })?;
        let bearer = payload
            .get("access_token")
            .and_then(|v| v.as_str())
            .ok_or_else(|| IngestError::MalformedPayload {
                reason: "token endpoint response lacks access_token".to_string(),
            })?
            .to_string();
        let expires_in_s = payload
            .get("expires_in")
            .and_then(|v| v.as_u64())
            .unwrap_or(3600);
        let token = AccessToken {
            bearer,
            expires_at_ms: self.clock.now_ms() + expires_in_s * 1000,
        };
        self.token = Some(token);
        Ok(self.token.as_ref().unwrap())
    }

    /// Fetches keyword-matching comments from the configured subreddits.
    ///
    /// Pagination follows each listing's `after` cursor until exhaustion or
    /// `max_comments`; output is deduplicated by `comment_id` and every
    /// returned comment satisfies [`match_keywords`]. A 401 mid-fetch
    /// triggers one re-authentication; malformed records are skipped and
    /// counted in [`FetchOutcome::skipped`].
    pub fn fetch_comments(&mut self, cfg: &FetchConfig) -> Result<FetchOutcome, IngestError> {
        cfg.validate()?;
        let mut outcome = FetchOutcome::default();
        for keyword in &cfg.keywords {
            outcome.per_keyword.insert(keyword.to_lowercase(), 0);
        }
        if cfg.max_comments == 0 {
            return Ok(outcome);
        }
        if self.token.is_none() {
            self.authenticate()?;
        }
        let mut seen = BTreeSet::new();
        'subreddits: for subreddit in &cfg.subreddits {
            let mut cursor: Option<String> = None;
            loop {
                let page = self.fetch_page(subreddit, cursor.as_deref())?;
                let (children, after) = parse_listing(&page)?;
                for child in children {
                    match parse_comment(&child, subreddit) {
                        Ok(comment) => {
                            if !match_keywords(&comment, &cfg.keywords) {
                                continue;
                            }
                            if !seen.insert(comment.comment_id.clone()) {
                                continue;
                            }
                            for keyword in &cfg.keywords {
                                let k = keyword.to_lowercase();
                                let hit = comment.body.to_lowercase().contains(&k)
                                    || comment.post_title.to_lowercase().contains(&k);
                                if hit {
                                    *outcome.per_keyword.get_mut(&k).unwrap() += 1;
                                }
                            }
                            outcome.comments.push(comment);
                            if outcome.comments.len() >= cfg.max_comments {
                                break 'subreddits;
                            }
                        }
                        Err(_) => outcome.skipped += 1,
                    }
                }
                match after {
                    Some(next) => cursor = Some(next),
                    None => break,
                }
            }
        }
        Ok(outcome)
    }

    fn fetch_page(
        &mut self,
        subreddit: &str,
        cursor: Option<&str>,
    ) -> Result<String, IngestError> {
        let mut url = format!("{API_BASE}/r/{subreddit}/comments?limit={PAGE_LIMIT}&raw_json=1");
        if let Some(cursor) = cursor {
            url.push_str("&after=");
            url.push_str(cursor);
        }
        let request = self.authorized_get(&url)?;
        let response = match self.execute_with_retries(&request) {
            Err(IngestError::CredentialsRejected) => {
                // Token likely expired mid-fetch: re-authenticate once, then
                // a second 401 is a real credential problem.
                self.authenticate()?;
                let request = self.authorized_get(&url)?;
                self.execute_with_retries(&request)?
            }
            other => other?,
        };
        Ok(response.body)
    }

    fn authorized_get(&self, url: &str) -> Result<HttpRequest, IngestError> {
        let token = self.token.as_ref().ok_or(IngestError::CredentialsRejected)?;
        Ok(HttpRequest {
            method: HttpMethod::Get,
            url: url.to_string(),
            headers: vec![
                (
                    "Authorization".to_string(),
                    format!("bearer {}", token.bearer),
                ),
                ("User-Agent".to_string(), self.credentials.user_agent.clone()),
            ],
            form: Vec::new(),
            basic_auth: None,
        })
    }

    /// Issues one request through the rate limiter, retrying 429s after the
    /// rate window. Non-2xx statuses other than 429 map to errors without
    /// retry.
    fn execute_with_retries(&self, request: &HttpRequest) -> Result<HttpResponse, IngestError> {
        let endpoint = request.url.clone();
        for attempt in 1..=MAX_RATE_RETRIES {
            self.limiter.acquire(self.clock);
            let response =
                self.transport
                    .execute(request)
                    .map_err(|message| IngestError::Transport {
                        endpoint: endpoint.clone(),
                        message,
                    })?;
            match response.status {
                200..=299 => return Ok(response),
                401 => return Err(IngestError::CredentialsRejected),
                429 if attempt < MAX_RATE_RETRIES => {
                    self.clock.sleep_ms(WINDOW_MS);
                }
                429 => return Err(IngestError::RateLimitExhausted),
                status => {
                    return Err(IngestError::HttpStatus {
                        status,
                        endpoint,
                    })
                }
            }
        }
        unreachable!("retry loop always returns")
    }
}

/// Splits a listing payload into its children and the next-page cursor.
fn parse_listing(body: &str) -> Result<(Vec<serde_json::Value>, Option<String>), IngestError> {
    let payload: serde_json::Value =
        serde_json::from_str(body).map_err(|e| IngestError::MalformedPayload {
            reason: format!("listing is not JSON: {e}"),
        })?;
    let data = payload
        .get("data")
        .ok_or_else(|| IngestError::MalformedPayload {
            reason: "listing lacks data object".to_string(),
        })?;
    let children = data
        .get("children")
        .and_then(|c| c.as_array())
        .ok_or_else(|| IngestError::MalformedPayload {
            reason: "listing lacks children array".to_string(),
        })?
        .clone();
    let after = data
        .get("after")
        .and_then(|a| a.as_str())
        .map(str::to_string);
    Ok((children, after))
}

/// Maps one listing child onto a [`Comment`], normalizing the timestamp to
/// UTC epoch seconds. Any missing or mistyped required field fails (the
/// caller skips and counts such records).
fn parse_comment(child: &serde_json::Value, subreddit: &str) -> Result<Comment, String> {
    let data = child.get("data").ok_or("child lacks data")?;
    let get_str = |key: &str| -> Result<String, String> {
        data.get(key)
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| format!("missing or non-string field {key}"))
    };
    let comment = Comment {
        comment_id: get_str("id")?,
        post_id: get_str("link_id")?,
        subreddit: data
            .get("subreddit")
            .and_then(|v| v.as_str())
            .unwrap_or(subreddit)
            .to_string(),
        post_title: data
            .get("link_title")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string(),
        selftext: data
            .get("selftext")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string(),
        body: get_str("body")?,
        score: data
            .get("score")
            .and_then(|v| v.as_i64())
            .ok_or("missing or non-integer field score")?,
        created_at: data
            .get("created_utc")
            .and_then(|v| v.as_f64())
            .ok_or("missing or non-numeric field created_utc")? as i64,
    };
    comment.validate().map_err(|e| e.to_string())?;
    Ok(comment)
}
