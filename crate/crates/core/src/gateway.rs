//! Chat-completion client with retries, an on-disk response cache and
//! bounded concurrency.
//!
//! Requests are single-turn user messages with no system prompt. Prompt and
//! response text pass through unmodified.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelEndpoint {
    pub base_url: String,
    /// Request path appended to `base_url`.
    pub path: String,
    pub model: String,
    /// Environment variable holding the API key; no auth header when unset.
    pub api_key_env: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    pub max_retries: u32,
    /// First retry delay; doubles on every further attempt.
    pub backoff_ms: u64,
    pub max_prompt_bytes: usize,
    /// Upper bound on concurrent requests through one gateway.
    pub max_in_flight: usize,
    /// Minimum spacing between request starts.
    pub min_interval_ms: u64,
    pub model_field: String,
    pub messages_field: String,
    /// JSON pointer to the assistant text in a response body.
    pub response_pointer: String,
}

impl Default for ModelEndpoint {
    fn default() -> Self {
        ModelEndpoint {
            base_url: "http://localhost:8000".into(),
            path: "/v1/chat/completions".into(),
            model: "gpt-3.5-turbo".into(),
            api_key_env: "GRAPHDO_API_KEY".into(),
            temperature: 0.0,
            timeout_secs: 120,
            max_retries: 5,
            backoff_ms: 500,
            max_prompt_bytes: 200_000,
            max_in_flight: 8,
            min_interval_ms: 0,
            model_field: "model".into(),
            messages_field: "messages".into(),
            response_pointer: "/choices/0/message/content".into(),
        }
    }
}

impl ModelEndpoint {
    pub fn url(&self) -> String {
        format!("{}{}", self.base_url.trim_end_matches('/'), self.path)
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        let mut body = serde_json::Map::new();
        body.insert(self.model_field.clone(), json!(self.model));
        body.insert(self.messages_field.clone(), json!([{ "role": "user", "content": prompt }]));
        body.insert("temperature".into(), json!(self.temperature));
        Value::Object(body)
    }

    fn api_key(&self) -> Option<String> {
        std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub cached: bool,
    pub latency_ms: u64,
    pub attempts: u32,
}

#[derive(Debug, Clone)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// Connection-level failure (no HTTP status).
#[derive(Debug, Clone)]
pub struct TransportError(pub String);

pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, api_key: Option<&str>, body: &Value, timeout: Duration)
        -> std::result::Result<HttpReply, TransportError>;
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTransport { agent }
    }
}

impl Transport for HttpTransport {
    fn post_json(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &Value,
        _timeout: Duration,
    ) -> std::result::Result<HttpReply, TransportError> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let payload = serde_json::to_vec(body).map_err(|e| TransportError(e.to_string()))?;
        let resp = req.send(&payload[..]).map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.into_body().read_to_string().map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpReply { status, body })
    }
}

/// Counting semaphore plus start-time spacing.
struct Throttle {
    slots: Mutex<usize>,
    freed: Condvar,
    last_start: Mutex<Option<Instant>>,
    min_interval: Duration,
}

impl Throttle {
    fn acquire(&self) -> ThrottleGuard<'_> {
        let mut free = self.slots.lock().unwrap_or_else(|p| p.into_inner());
        while *free == 0 {
            free = self.freed.wait(free).unwrap_or_else(|p| p.into_inner());
        }
        *free -= 1;
        drop(free);
        if !self.min_interval.is_zero() {
            let mut last = self.last_start.lock().unwrap_or_else(|p| p.into_inner());
            if let Some(t) = *last {
                let since = t.elapsed();
                if since < self.min_interval {
                    thread::sleep(self.min_interval - since);
                }
            }
            *last = Some(Instant::now());
        }
        ThrottleGuard(self)
    }
}

struct ThrottleGuard<'a>(&'a Throttle);

impl Drop for ThrottleGuard<'_> {
    fn drop(&mut self) {
        *self.0.slots.lock().unwrap_or_else(|p| p.into_inner()) += 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    model: String,
    temperature: f64,
    prompt: String,
    text: String,
}

/// Shareable client. Clones share the throttle and the per-key locks.
#[derive(Clone)]
pub struct Gateway {
    endpoint: ModelEndpoint,
    transport: Arc<dyn Transport>,
    throttle: Arc<Throttle>,
    key_locks: Arc<Mutex<HashMap<String, Arc<Mutex<()>>>>>,
}

impl Gateway {
    pub fn new(endpoint: ModelEndpoint) -> Self {
        let transport = Arc::new(HttpTransport::new(Duration::from_secs(endpoint.timeout_secs)));
        Self::with_transport(endpoint, transport)
    }

    pub fn with_transport(endpoint: ModelEndpoint, transport: Arc<dyn Transport>) -> Self {
        let throttle = Throttle {
            slots: Mutex::new(endpoint.max_in_flight.max(1)),
            freed: Condvar::new(),
            last_start: Mutex::new(None),
            min_interval: Duration::from_millis(endpoint.min_interval_ms),
        };
        Gateway {
            endpoint,
            transport,
            throttle: Arc::new(throttle),
            key_locks: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    pub fn endpoint(&self) -> &ModelEndpoint {
        &self.endpoint
    }

    /// Send one prompt, retrying transient failures (connection errors,
    /// HTTP 408/429/5xx) with exponential backoff.
    pub fn complete(&self, prompt: &str) -> Result<CompletionResult> {
        let ep = &self.endpoint;
        if prompt.is_empty() {
            return Err(Error::EmptyPrompt);
        }
        if prompt.len() > ep.max_prompt_bytes {
            return Err(Error::PromptTooLarge { len: prompt.len(), limit: ep.max_prompt_bytes });
        }
        let url = ep.url();
        let body = ep.request_body(prompt);
        let key = ep.api_key();
        let timeout = Duration::from_secs(ep.timeout_secs);
        let started = Instant::now();
        let max_attempts = ep.max_retries + 1;
        let mut last_err = String::new();
        for attempt in 1..=max_attempts {
            let reply = {
                let _slot = self.throttle.acquire();
                self.transport.post_json(&url, key.as_deref(), &body, timeout)
            };
            match reply {
                Ok(HttpReply { status: 200..=299, body }) => {
                    let text = extract_text(&body, &ep.response_pointer)?;
                    return Ok(CompletionResult {
                        text,
                        cached: false,
                        latency_ms: started.elapsed().as_millis() as u64,
                        attempts: attempt,
                    });
                }
                Ok(HttpReply { status: status @ (401 | 403), .. }) => return Err(Error::AuthError { status }),
                Ok(HttpReply { status: 413, .. }) => {
                    return Err(Error::PromptTooLarge { len: prompt.len(), limit: ep.max_prompt_bytes })
                }
                Ok(HttpReply { status, body }) if status == 408 || status == 429 || status >= 500 => {
                    last_err = format!("HTTP {status}: {}", truncate(&body, 200));
                }
                Ok(HttpReply { status, body }) => {
                    return Err(Error::BadResponse(format!("HTTP {status}: {}", truncate(&body, 200))))
                }
                Err(TransportError(e)) => last_err = e,
            }
            if attempt < max_attempts {
                let delay = ep.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                log::warn!("attempt {attempt} failed ({last_err}); retrying in {delay} ms");
                thread::sleep(Duration::from_millis(delay));
            }
        }
        Err(Error::EndpointUnavailable { attempts: max_attempts, reason: last_err })
    }

    /// Cache key over model id, temperature and prompt.
    pub fn cache_key(&self, prompt: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.endpoint.model.as_bytes());
        h.update([0]);
        h.update(self.endpoint.temperature.to_bits().to_le_bytes());
        h.update(prompt.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn cache_path(&self, cache_dir: &Path, prompt: &str) -> PathBuf {
        cache_dir.join(format!("{}.json", self.cache_key(prompt)))
    }

    /// [`Gateway::complete`] behind a one-file-per-key disk cache. At most one
    /// request per key is in flight; unreadable entries count as misses and
    /// are overwritten.
    pub fn cached_complete(&self, prompt: &str, cache_dir: &Path) -> Result<CompletionResult> {
        let key = self.cache_key(prompt);
        let lock = {
            let mut locks = self.key_locks.lock().unwrap_or_else(|p| p.into_inner());
            locks.entry(key.clone()).or_default().clone()
        };
        let _held = lock.lock().unwrap_or_else(|p| p.into_inner());

        let path = cache_dir.join(format!("{key}.json"));
        if let Ok(raw) = fs::read_to_string(&path) {
            match serde_json::from_str::<CacheEntry>(&raw) {
                Ok(entry) if entry.key == key && entry.prompt == prompt => {
                    return Ok(CompletionResult { text: entry.text, cached: true, latency_ms: 0, attempts: 0 });
                }
                _ => log::warn!("ignoring unreadable cache entry {}", path.display()),
            }
        }
        let result = self.complete(prompt)?;
        let entry = CacheEntry {
            key,
            model: self.endpoint.model.clone(),
            temperature: self.endpoint.temperature,
            prompt: prompt.to_string(),
            text: result.text.clone(),
        };
        fs::create_dir_all(cache_dir).map_err(|source| Error::WriteError { path: cache_dir.to_path_buf(), source })?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(&entry)?)
            .and_then(|_| fs::rename(&tmp, &path))
            .map_err(|source| Error::WriteError { path: path.clone(), source })?;
        Ok(result)
    }
}

fn extract_text(body: &str, pointer: &str) -> Result<String> {
    let v: Value = serde_json::from_str(body).map_err(|e| Error::BadResponse(e.to_string()))?;
    v.pointer(pointer)
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| Error::BadResponse(format!("no string at {pointer}")))
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
