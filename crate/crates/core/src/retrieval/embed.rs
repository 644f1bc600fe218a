use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HASH_DIMENSION: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding provider failed: {message}")]
    Provider { message: String, retryable: bool },
    #[error("provider returned dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("embedding contains a non-finite value")]
    NonFinite,
}

impl EmbedError {
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            EmbedError::Provider {
                retryable: true,
                ..
            }
        )
    }
}

/// Fixed-length, finite vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(EmbeddingVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Euclidean distance. Dimensions must agree.
    pub fn distance(&self, other: &EmbeddingVector) -> f64 {
        debug_assert_eq!(self.dimension(), other.dimension());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

pub trait EmbeddingProvider: Send + Sync {
    /// Stable identifier, part of the index cache key.
    fn id(&self) -> String;
    fn dimension(&self) -> usize;
    /// Embeds texts, preserving order.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut out = self.embed_batch(&[text.to_string()])?;
        out.pop().ok_or_else(|| EmbedError::Provider {
            message: "provider returned no vector".into(),
            retryable: false,
        })
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

/// Lowercased tokens split on anything that is not alphanumeric.
pub fn hash_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Offline bag-of-tokens embedder: each token adds one to bucket
/// `fnv1a64(token) mod 256`, then the vector is L2-normalized.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashEmbedder;

impl HashEmbedder {
    pub fn embed_one(text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut tokens = hash_tokens(text);
        if tokens.is_empty() {
            // Punctuation-only text still needs a unit vector.
            tokens.push(text.trim().to_string());
        }
        let mut values = vec![0.0f64; HASH_DIMENSION];
        for t in &tokens {
            values[(fnv1a64(t.as_bytes()) % HASH_DIMENSION as u64) as usize] += 1.0;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut values {
            *v /= norm;
        }
        EmbeddingVector::new(values)
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn id(&self) -> String {
        "hash-fnv1a-256".into()
    }

    fn dimension(&self) -> usize {
        HASH_DIMENSION
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts.iter().map(|t| Self::embed_one(t)).collect()
    }
}

/// Client for an OpenAI-compatible `/embeddings` endpoint.
pub struct HttpEmbedder {
    pub base_url: String,
    pub model: String,
    pub dimension: usize,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: usize,
    embedding: Vec<f64>,
}

impl HttpEmbedder {
    pub fn new(
        base_url: &str,
        model: &str,
        dimension: usize,
        api_key_env: Option<&str>,
    ) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| EmbedError::Provider {
                message: e.to_string(),
                retryable: false,
            })?;
        Ok(HttpEmbedder {
            base_url: base_url.trim_end_matches('/').to_string(),
            model: model.to_string(),
            dimension,
            api_key: api_key_env.and_then(|var| std::env::var(var).ok()),
            client,
        })
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn id(&self) -> String {
        format!("http:{}:{}", self.base_url, self.model)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(EmbedError::EmptyText);
        }
        let mut request = self
            .client
            .post(format!("{}/embeddings", self.base_url))
            .json(&serde_json::json!({ "model": self.model, "input": texts }));
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| EmbedError::Provider {
            message: e.to_string(),
            retryable: e.is_timeout() || e.is_connect(),
        })?;
        let status = response.status();
        if !status.is_success() {
            return Err(EmbedError::Provider {
                message: format!("http status {status}"),
                retryable: status.as_u16() == 429 || status.is_server_error(),
            });
        }
        let mut body: EmbeddingResponse = response.json().map_err(|e| EmbedError::Provider {
            message: e.to_string(),
            retryable: false,
        })?;
        if body.data.len() != texts.len() {
            return Err(EmbedError::Provider {
                message: format!("expected {} vectors, got {}", texts.len(), body.data.len()),
                retryable: false,
            });
        }
        body.data.sort_by_key(|d| d.index);
        body.data
            .into_iter()
            .map(|d| {
                if d.embedding.len() != self.dimension {
                    return Err(EmbedError::Dimension {
                        expected: self.dimension,
                        got: d.embedding.len(),
                    });
                }
                EmbeddingVector::new(d.embedding)
            })
            .collect()
    }
}
