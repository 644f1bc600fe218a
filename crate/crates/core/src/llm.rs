//! Completion gateway: deterministic decoding, a content-addressed response
//! cache on disk, retries with jittered exponential backoff, and a bound on
//! in-flight provider requests.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::render::RenderedPrompt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    #[default]
    Chat,
    Completion,
}

fn default_max_output_tokens() -> usize {
    512
}

fn default_concurrency() -> usize {
    4
}

fn default_attempts() -> u32 {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// `openai`, `mock-echo`, `mock-empty`, or any id a caller registers.
    pub provider_id: String,
    pub model_name: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: usize,
    pub context_window: usize,
    #[serde(default)]
    pub endpoint: Endpoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
    /// Name of the environment variable holding the credential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
}

impl ModelConfig {
    pub fn new(provider_id: &str, model_name: &str, context_window: usize) -> Self {
        ModelConfig {
            provider_id: provider_id.into(),
            model_name: model_name.into(),
            temperature: 0.0,
            max_output_tokens: default_max_output_tokens(),
            context_window,
            endpoint: Endpoint::Chat,
            base_url: None,
            api_key_env: None,
            max_concurrency: default_concurrency(),
            max_attempts: default_attempts(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |m: &str| Err(LlmError::Config(m.to_string()));
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return bad("temperature must be a finite non-negative number");
        }
        if self.max_output_tokens == 0 || self.context_window == 0 {
            return bad("max_output_tokens and context_window must be positive");
        }
        if self.max_output_tokens >= self.context_window {
            return bad("max_output_tokens must be below context_window");
        }
        if self.max_concurrency == 0 || self.max_attempts == 0 {
            return bad("max_concurrency and max_attempts must be positive");
        }
        Ok(())
    }

    /// Largest prompt, in estimated tokens, that still leaves room for output.
    pub fn prompt_budget(&self) -> usize {
        self.context_window.saturating_sub(self.max_output_tokens)
    }

    /// Digest of everything that determines the response.
    pub fn request_hash(&self, prompt: &str) -> String {
        let mut h = Sha256::new();
        for part in [
            self.provider_id.as_str(),
            self.model_name.as_str(),
            &format!("temperature={:?}", self.temperature),
            &format!("max_output_tokens={}", self.max_output_tokens),
            prompt,
        ] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub request_hash: String,
    pub response_text: String,
    pub latency_ms: u64,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct ProviderError {
    pub message: String,
    pub retryable: bool,
}

impl ProviderError {
    pub fn transient(message: impl Into<String>) -> Self {
        ProviderError {
            message: message.into(),
            retryable: true,
        }
    }

    pub fn terminal(message: impl Into<String>) -> Self {
        ProviderError {
            message: message.into(),
            retryable: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("prompt needs {needed} tokens with output, context window is {window}")]
    Overlength { needed: usize, window: usize },
    #[error("provider rejected the request: {0}")]
    Terminal(String),
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("response cache: {0}")]
    Cache(String),
    #[error("model configuration: {0}")]
    Config(String),
}

impl LlmError {
    pub fn is_transient(&self) -> bool {
        matches!(self, LlmError::Exhausted { .. })
    }
}

pub struct CompletionRequest<'a> {
    pub config: &'a ModelConfig,
    pub prompt: &'a str,
    pub request_hash: &'a str,
}

pub trait CompletionProvider: Send + Sync {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError>;
}

type Responder = dyn Fn(&CompletionRequest<'_>) -> Result<String, ProviderError> + Send + Sync;

/// Test double answering from a closure; counts invocations.
pub struct MockProvider {
    responder: Box<Responder>,
    calls: AtomicUsize,
}

impl MockProvider {
    pub fn new(
        responder: impl Fn(&CompletionRequest<'_>) -> Result<String, ProviderError>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        MockProvider {
            responder: Box::new(responder),
            calls: AtomicUsize::new(0),
        }
    }

    /// Answers from a map keyed by request hash; unknown hashes are a
    /// terminal error.
    pub fn scripted(script: HashMap<String, String>) -> Self {
        Self::new(move |req| {
            script.get(req.request_hash).cloned().ok_or_else(|| {
                ProviderError::terminal(format!("no scripted response for {}", req.request_hash))
            })
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl CompletionProvider for MockProvider {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.responder)(request)
    }
}

/// OpenAI-compatible HTTP provider. Chat requests carry an empty system
/// message and the prompt as the single user message.
pub struct OpenAiProvider {
    base_url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    #[serde(default)]
    message: Option<ChatMessage>,
    #[serde(default)]
    text: Option<String>,
}

#[derive(Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: Option<String>,
}

impl OpenAiProvider {
    pub fn new(config: &ModelConfig) -> Result<Self, LlmError> {
        let base_url = config
            .base_url
            .clone()
            .unwrap_or_else(|| "https://api.openai.com/v1".to_string());
        let api_key =
            match &config.api_key_env {
                Some(var) => Some(std::env::var(var).map_err(|_| {
                    LlmError::Config(format!("environment variable {var} is not set"))
                })?),
                None => None,
            };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(OpenAiProvider {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            client,
        })
    }
}

impl CompletionProvider for OpenAiProvider {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError> {
        let c = request.config;
        let (url, body) = match c.endpoint {
            Endpoint::Chat => (
                format!("{}/chat/completions", self.base_url),
                serde_json::json!({
                    "model": c.model_name,
                    "messages": [
                        {"role": "system", "content": ""},
                        {"role": "user", "content": request.prompt},
                    ],
                    "temperature": c.temperature,
                    "max_tokens": c.max_output_tokens,
                }),
            ),
            Endpoint::Completion => (
                format!("{}/completions", self.base_url),
                serde_json::json!({
                    "model": c.model_name,
                    "prompt": request.prompt,
                    "temperature": c.temperature,
                    "max_tokens": c.max_output_tokens,
                }),
            ),
        };
        let mut http = self.client.post(url).json(&body);
        if let Some(key) = &self.api_key {
            http = http.bearer_auth(key);
        }
        let response = http.send().map_err(|e| ProviderError {
            message: e.to_string(),
            retryable: e.is_timeout() || e.is_connect() || e.is_request(),
        })?;
        let status = response.status();
        if !status.is_success() {
            let detail = response.text().unwrap_or_default();
            let detail: String = detail.chars().take(300).collect();
            return Err(ProviderError {
                message: format!("http status {status}: {detail}"),
                retryable: status.as_u16() == 408
                    || status.as_u16() == 429
                    || status.is_server_error(),
            });
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| ProviderError::transient(e.to_string()))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| ProviderError::terminal("response has no choices"))?;
        Ok(choice
            .message
            .and_then(|m| m.content)
            .or(choice.text)
            .unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request_hash: String,
    pub provider_id: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: usize,
    pub prompt: String,
    pub response: String,
}

/// One JSON file per request hash. Writes go through a temporary file and a
/// rename, so readers never see a partial entry.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ResponseCache {
    pub fn open(dir: &Path) -> Result<Self, LlmError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| LlmError::Cache(format!("{}: {e}", dir.display())))?;
        Ok(ResponseCache {
            dir: dir.to_path_buf(),
        })
    }

    fn path(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    pub fn get(&self, hash: &str) -> Result<Option<CacheEntry>, LlmError> {
        let path = self.path(hash);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(LlmError::Cache(format!("{}: {e}", path.display()))),
        };
        let entry: CacheEntry = serde_json::from_str(&text)
            .map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))?;
        if entry.request_hash != hash {
            return Err(LlmError::Cache(format!(
                "{} holds hash {}",
                path.display(),
                entry.request_hash
            )));
        }
        Ok(Some(entry))
    }

    pub fn put(&self, entry: &CacheEntry) -> Result<(), LlmError> {
        let path = self.path(&entry.request_hash);
        let tmp = self.dir.join(format!(
            ".{}.{}.{}.tmp",
            entry.request_hash,
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let text = serde_json::to_string_pretty(entry).expect("cache entry serializes") + "\n";
        std::fs::write(&tmp, text)
            .map_err(|e| LlmError::Cache(format!("{}: {e}", tmp.display())))?;
        std::fs::rename(&tmp, &path)
            .map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))
    }

    pub fn len(&self) -> usize {
        std::fs::read_dir(&self.dir)
            .map(|d| {
                d.filter_map(Result::ok)
                    .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
                    .count()
            })
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub base: Duration,
    pub factor: f64,
    pub jitter: f64,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            base: Duration::from_secs(1),
            factor: 2.0,
            jitter: 0.2,
            max_attempts: 5,
        }
    }
}

impl RetryPolicy {
    /// Nominal wait after failed attempt `attempt` (1-based), before jitter.
    pub fn nominal_delay(&self, attempt: u32) -> Duration {
        self.base
            .mul_f64(self.factor.powi(attempt.saturating_sub(1) as i32))
    }

    pub fn delay(&self, attempt: u32, rng: &mut impl Rng) -> Duration {
        let scale = if self.jitter > 0.0 {
            1.0 + rng.gen_range(-self.jitter..=self.jitter)
        } else {
            1.0
        };
        self.nominal_delay(attempt).mul_f64(scale)
    }
}

/// Counting semaphore.
pub struct Semaphore {
    permits: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a> {
    sem: &'a Semaphore,
}

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        Semaphore {
            permits: Mutex::new(permits),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.permits.lock().expect("semaphore");
        while *n == 0 {
            n = self.freed.wait(n).expect("semaphore");
        }
        *n -= 1;
        Permit { sem: self }
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.sem.permits.lock().expect("semaphore") += 1;
        self.sem.freed.notify_one();
    }
}

type Sleeper = dyn Fn(Duration) + Send + Sync;

/// Shared entry point for all completions of a run.
pub struct Gateway {
    config: ModelConfig,
    provider: Arc<dyn CompletionProvider>,
    cache: Option<ResponseCache>,
    retry: RetryPolicy,
    in_flight: Semaphore,
    key_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    sleeper: Box<Sleeper>,
    provider_calls: AtomicUsize,
}

impl Gateway {
    pub fn new(
        config: ModelConfig,
        provider: Arc<dyn CompletionProvider>,
        cache: Option<ResponseCache>,
    ) -> Result<Self, LlmError> {
        config.validate()?;
        let retry = RetryPolicy {
            max_attempts: config.max_attempts,
            ..RetryPolicy::default()
        };
        Ok(Gateway {
            in_flight: Semaphore::new(config.max_concurrency),
            config,
            provider,
            cache,
            retry,
            key_locks: Mutex::new(HashMap::new()),
            sleeper: Box::new(std::thread::sleep),
            provider_calls: AtomicUsize::new(0),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_sleeper(mut self, sleeper: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleeper = Box::new(sleeper);
        self
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Provider invocations made through this gateway, retries included.
    pub fn provider_calls(&self) -> usize {
        self.provider_calls.load(Ordering::SeqCst)
    }

    pub fn complete(&self, prompt: &RenderedPrompt) -> Result<CompletionRecord, LlmError> {
        self.complete_text(&prompt.text, prompt.token_estimate)
    }

    /// Cache lookup, then a provider call with retries. Concurrent callers
    /// with the same request hash wait for the first one, so each request
    /// reaches the provider at most once.
    pub fn complete_text(
        &self,
        prompt: &str,
        token_estimate: usize,
    ) -> Result<CompletionRecord, LlmError> {
        let needed = token_estimate + self.config.max_output_tokens;
        if needed > self.config.context_window {
            return Err(LlmError::Overlength {
                needed,
                window: self.config.context_window,
            });
        }
        let hash = self.config.request_hash(prompt);
        let started = Instant::now();
        let key_lock = {
            let mut locks = self.key_locks.lock().expect("key locks");
            locks.entry(hash.clone()).or_default().clone()
        };
        let _guard = key_lock.lock().expect("key lock");

        if let Some(cache) = &self.cache {
            if let Some(entry) = cache.get(&hash)? {
                return Ok(CompletionRecord {
                    request_hash: hash,
                    response_text: entry.response,
                    latency_ms: started.elapsed().as_millis() as u64,
                    cached: true,
                });
            }
        }

        let response = self.call_with_retries(prompt, &hash)?;
        if let Some(cache) = &self.cache {
            cache.put(&CacheEntry {
                request_hash: hash.clone(),
                provider_id: self.config.provider_id.clone(),
                model_name: self.config.model_name.clone(),
                temperature: self.config.temperature,
                max_output_tokens: self.config.max_output_tokens,
                prompt: prompt.to_string(),
                response: response.clone(),
            })?;
        }
        Ok(CompletionRecord {
            request_hash: hash,
            response_text: response,
            latency_ms: started.elapsed().as_millis() as u64,
            cached: false,
        })
    }

    fn call_with_retries(&self, prompt: &str, hash: &str) -> Result<String, LlmError> {
        let request = CompletionRequest {
            config: &self.config,
            prompt,
            request_hash: hash,
        };
        let mut rng = rand::thread_rng();
        let mut attempt = 0;
        loop {
            attempt += 1;
            let outcome = {
                let _permit = self.in_flight.acquire();
                self.provider_calls.fetch_add(1, Ordering::SeqCst);
                self.provider.complete(&request)
            };
            match outcome {
                Ok(text) => return Ok(text),
                Err(e) if !e.retryable => return Err(LlmError::Terminal(e.message)),
                Err(e) if attempt >= self.retry.max_attempts => {
                    return Err(LlmError::Exhausted {
                        attempts: attempt,
                        last: e.message,
                    })
                }
                Err(_) => (self.sleeper)(self.retry.delay(attempt, &mut rng)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ModelConfig {
        ModelConfig::new("mock", "toy-model", 4096)
    }

    fn gateway(provider: Arc<MockProvider>, cache: Option<ResponseCache>) -> Gateway {
        Gateway::new(config(), provider, cache)
            .unwrap()
            .with_sleeper(|_| {})
    }

    #[test]
    fn hash_depends_on_every_input() {
        let c = config();
        let h = c.request_hash("p");
        assert_eq!(h, config().request_hash("p"));
        assert_ne!(h, c.request_hash("q"));
        let mut other = config();
        other.temperature = 0.5;
        assert_ne!(h, other.request_hash("p"));
        other = config();
        other.max_output_tokens = 100;
        assert_ne!(h, other.request_hash("p"));
        other = config();
        other.model_name = "x".into();
        assert_ne!(h, other.request_hash("p"));
    }

    #[test]
    fn scripted_then_cached() {
        let dir = tempfile::tempdir().unwrap();
        let hash = config().request_hash("prompt");
        let provider = Arc::new(MockProvider::scripted(HashMap::from([(
            hash.clone(),
            "v1 = Person(name=\"John\")".to_string(),
        )])));
        let gw = gateway(
            provider.clone(),
            Some(ResponseCache::open(dir.path()).unwrap()),
        );
        let first = gw.complete_text("prompt", 10).unwrap();
        assert_eq!(first.response_text, "v1 = Person(name=\"John\")");
        assert!(!first.cached);
        let second = gw.complete_text("prompt", 10).unwrap();
        assert!(second.cached);
        assert_eq!(second.response_text, first.response_text);
        assert_eq!(provider.calls(), 1);

        // A fresh gateway over the same directory still hits.
        let gw2 = gateway(
            provider.clone(),
            Some(ResponseCache::open(dir.path()).unwrap()),
        );
        assert!(gw2.complete_text("prompt", 10).unwrap().cached);
        assert_eq!(provider.calls(), 1);
    }

    #[test]
    fn overlength_skips_provider() {
        let provider = Arc::new(MockProvider::new(|_| Ok(String::new())));
        let gw = gateway(provider.clone(), None);
        let err = gw.complete_text("p", 4096 - 512 + 1).unwrap_err();
        assert!(matches!(
            err,
            LlmError::Overlength {
                needed: 4097,
                window: 4096
            }
        ));
        assert!(gw.complete_text("p", 4096 - 512).is_ok());
        assert_eq!(provider.calls(), 1);
    }

    #[test]
    fn transient_failures_are_retried_with_backoff() {
        let provider = Arc::new(MockProvider::new({
            let n = AtomicUsize::new(0);
            move |_| {
                if n.fetch_add(1, Ordering::SeqCst) < 2 {
                    Err(ProviderError::transient("rate limited"))
                } else {
                    Ok("ok".into())
                }
            }
        }));
        let waits = Arc::new(Mutex::new(Vec::new()));
        let gw = Gateway::new(config(), provider.clone(), None)
            .unwrap()
            .with_sleeper({
                let waits = waits.clone();
                move |d| waits.lock().unwrap().push(d)
            });
        assert_eq!(gw.complete_text("p", 1).unwrap().response_text, "ok");
        assert_eq!(provider.calls(), 3);
        let waits = waits.lock().unwrap();
        assert_eq!(waits.len(), 2);
        for (i, w) in waits.iter().enumerate() {
            let nominal = 2f64.powi(i as i32);
            assert!(
                w.as_secs_f64() >= nominal * 0.8 - 1e-9 && w.as_secs_f64() <= nominal * 1.2 + 1e-9
            );
        }
    }

    #[test]
    fn retry_budget_and_terminal_errors() {
        let provider = Arc::new(MockProvider::new(|_| {
            Err(ProviderError::transient("timeout"))
        }));
        let gw = gateway(provider.clone(), None);
        assert!(matches!(
            gw.complete_text("p", 1),
            Err(LlmError::Exhausted { attempts: 5, .. })
        ));
        assert_eq!(provider.calls(), 5);

        let provider = Arc::new(MockProvider::new(|_| {
            Err(ProviderError::terminal("bad key"))
        }));
        let gw = gateway(provider.clone(), None);
        assert!(matches!(
            gw.complete_text("p", 1),
            Err(LlmError::Terminal(_))
        ));
        assert_eq!(provider.calls(), 1);
    }

    #[test]
    fn failures_are_not_cached() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let provider = Arc::new(MockProvider::new(|_| Err(ProviderError::terminal("no"))));
        let gw = gateway(provider, Some(cache.clone()));
        assert!(gw.complete_text("p", 1).is_err());
        assert!(cache.is_empty());
    }

    #[test]
    fn concurrent_identical_requests_call_once() {
        let dir = tempfile::tempdir().unwrap();
        let provider = Arc::new(MockProvider::new(|req| {
            std::thread::sleep(Duration::from_millis(20));
            Ok(format!("len {}", req.prompt.len()))
        }));
        let gw = gateway(
            provider.clone(),
            Some(ResponseCache::open(dir.path()).unwrap()),
        );
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| assert_eq!(gw.complete_text("same", 1).unwrap().response_text, "len 4"));
            }
        });
        assert_eq!(provider.calls(), 1);
    }

    #[test]
    fn semaphore_bounds_in_flight() {
        let live = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let provider = Arc::new(MockProvider::new({
            let (live, peak) = (live.clone(), peak.clone());
            move |_| {
                let now = live.fetch_add(1, Ordering::SeqCst) + 1;
                peak.fetch_max(now, Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(10));
                live.fetch_sub(1, Ordering::SeqCst);
                Ok(String::new())
            }
        }));
        let mut cfg = config();
        cfg.max_concurrency = 2;
        let gw = Gateway::new(cfg, provider, None).unwrap();
        std::thread::scope(|s| {
            for i in 0..8 {
                let gw = &gw;
                s.spawn(move || gw.complete_text(&format!("p{i}"), 1).unwrap());
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn config_json_defaults() {
        let c: ModelConfig = serde_json::from_str(
            r#"{"provider_id":"openai","model_name":"m","context_window":16000}"#,
        )
        .unwrap();
        assert_eq!(c.temperature, 0.0);
        assert_eq!(c.max_output_tokens, 512);
        assert_eq!(c.max_concurrency, 4);
        assert_eq!(c.endpoint, Endpoint::Chat);
        let mut bad = c.clone();
        bad.temperature = -1.0;
        assert!(bad.validate().is_err());
    }
}
