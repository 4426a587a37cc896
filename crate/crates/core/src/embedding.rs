//! Sentence embedders.
//!
//! Two kinds are provided behind the [`Embedder`] trait:
//!
//! * [`HashedLexical`]: an offline, deterministic signed feature-hashing
//!   embedder over word unigrams and character 3-grams of the normalized text.
//! * [`RemoteEmbedder`]: an HTTP client for an embedding service accepting
//!   `{"model": .., "inputs": [..]}` and answering `{"vectors": [[..], ..]}`.
//!
//! Every vector leaving this module is L2-normalized, or zero for empty text.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::normalize_text;
use crate::par;

pub const DEFAULT_HASHED_DIM: usize = 2048;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("vector dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("embedding service error: {0}")]
    Remote(String),
    #[error("embedder configuration: {0}")]
    Config(String),
}

/// A unit-length (or zero) embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    values: Vec<f64>,
}

impl Vector {
    /// L2-normalizes `values`; an all-zero input stays zero.
    pub fn normalized(mut values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        }
        Self { values }
    }

    /// Wraps values already known to be normalized, such as a stored index.
    pub(crate) fn from_normalized(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zero(dim: usize) -> Self {
        Self { values: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine similarity of two embeddings. Zero vectors give 0.0.
pub fn cosine(a: &Vector, b: &Vector) -> Result<f64, EmbeddingError> {
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimMismatch(a.dim(), b.dim()));
    }
    Ok(dot(&a.values, &b.values).clamp(-1.0, 1.0))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Serializable description of an embedder; stored alongside every index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EmbedderSpec {
    HashedLexical {
        #[serde(default = "default_dim")]
        dim: usize,
    },
    Remote(RemoteSpec),
}

fn default_dim() -> usize {
    DEFAULT_HASHED_DIM
}

impl Default for EmbedderSpec {
    fn default() -> Self {
        EmbedderSpec::HashedLexical {
            dim: DEFAULT_HASHED_DIM,
        }
    }
}

impl EmbedderSpec {
    pub fn build(&self) -> Result<Box<dyn Embedder>, EmbeddingError> {
        match self {
            EmbedderSpec::HashedLexical { dim } => Ok(Box::new(HashedLexical::new(*dim)?)),
            EmbedderSpec::Remote(spec) => Ok(Box::new(RemoteEmbedder::new(spec.clone())?)),
        }
    }
}

pub trait Embedder: Send + Sync {
    fn spec(&self) -> EmbedderSpec;

    /// Output dimensionality, when known before the first call.
    fn dim(&self) -> Option<usize>;

    /// Embeds all texts, returning vectors in input order.
    fn embed_all(&self, texts: &[&str]) -> Result<Vec<Vector>, EmbeddingError>;

    fn embed(&self, text: &str) -> Result<Vector, EmbeddingError> {
        Ok(self.embed_all(&[text])?.pop().expect("one vector per input"))
    }
}

/// Signed feature-hashing embedder.
///
/// Features are the word unigrams (maximal alphanumeric runs) and the
/// character 3-grams of [`normalize_text`]`(text)`, each weighted by its
/// count. A feature lands in bucket `h mod dim` with sign taken from the top
/// bit of its 64-bit FNV-1a hash.
#[derive(Debug, Clone)]
pub struct HashedLexical {
    dim: usize,
}

impl HashedLexical {
    pub fn new(dim: usize) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::Config("hashed-lexical dim must be positive".into()));
        }
        Ok(Self { dim })
    }

    pub fn embed_text(&self, text: &str) -> Vector {
        let mut values = vec![0.0; self.dim];
        for_each_feature(&normalize_text(text), |namespace, feature| {
            let h = fnv1a64(namespace, feature);
            let bucket = (h % self.dim as u64) as usize;
            values[bucket] += if h >> 63 == 1 { -1.0 } else { 1.0 };
        });
        Vector::normalized(values)
    }
}

impl Embedder for HashedLexical {
    fn spec(&self) -> EmbedderSpec {
        EmbedderSpec::HashedLexical { dim: self.dim }
    }

    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn embed_all(&self, texts: &[&str]) -> Result<Vec<Vector>, EmbeddingError> {
        Ok(par::map(texts, |t| self.embed_text(t)))
    }
}

const WORD_NS: u8 = b'w';
const TRIGRAM_NS: u8 = b'c';

/// Calls `f(namespace, feature)` for every word unigram and character 3-gram
/// of already-normalized text.
fn for_each_feature(normalized: &str, mut f: impl FnMut(u8, &str)) {
    for word in normalized
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
    {
        f(WORD_NS, word);
    }
    let bounds: Vec<usize> = normalized
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(normalized.len()))
        .collect();
    for w in bounds.windows(4) {
        f(TRIGRAM_NS, &normalized[w[0]..w[3]]);
    }
}

fn fnv1a64(namespace: u8, feature: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for &b in std::iter::once(&namespace).chain(feature.as_bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// Connection settings for an external embedding service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteSpec {
    pub endpoint: String,
    pub model: String,
    /// Expected dimensionality; checked on every response when set.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Name of the environment variable holding a bearer token.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

fn default_timeout_secs() -> u64 {
    60
}
fn default_in_flight() -> usize {
    4
}
fn default_batch_size() -> usize {
    32
}
fn default_retries() -> u32 {
    3
}

impl RemoteSpec {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            dim: None,
            timeout_secs: default_timeout_secs(),
            api_key_env: None,
            max_in_flight: default_in_flight(),
            batch_size: default_batch_size(),
            retries: default_retries(),
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    inputs: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// HTTP embedding client with bounded concurrency and idempotent retries.
pub struct RemoteEmbedder {
    spec: RemoteSpec,
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl RemoteEmbedder {
    pub fn new(spec: RemoteSpec) -> Result<Self, EmbeddingError> {
        if spec.batch_size == 0 || spec.max_in_flight == 0 {
            return Err(EmbeddingError::Config(
                "batch_size and max_in_flight must be positive".into(),
            ));
        }
        let api_key = match &spec.api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| EmbeddingError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(spec.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { spec, agent, api_key })
    }

    fn request(&self, batch: &[&str]) -> Result<Vec<Vector>, EmbeddingError> {
        let mut last = String::new();
        for attempt in 0..=self.spec.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(100 << attempt.min(6)));
            }
            match self.request_once(batch) {
                Ok(v) => return Ok(v),
                Err(Attempt::Permanent(msg)) => return Err(EmbeddingError::Remote(msg)),
                Err(Attempt::Transient(msg)) => {
                    log::warn!("embedding request failed (attempt {}): {msg}", attempt + 1);
                    last = msg;
                }
            }
        }
        Err(EmbeddingError::Remote(format!(
            "gave up after {} attempts: {last}",
            self.spec.retries + 1
        )))
    }

    fn request_once(&self, batch: &[&str]) -> Result<Vec<Vector>, Attempt> {
        let mut req = self.agent.post(&self.spec.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(EmbedRequest {
                model: &self.spec.model,
                inputs: batch,
            })
            .map_err(|e| Attempt::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Attempt::Transient(format!("HTTP {status}")));
        }
        if status >= 400 {
            return Err(Attempt::Permanent(format!("HTTP {status}")));
        }
        let body: EmbedResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| Attempt::Permanent(format!("malformed response: {e}")))?;
        if body.vectors.len() != batch.len() {
            return Err(Attempt::Permanent(format!(
                "{} vectors for {} inputs",
                body.vectors.len(),
                batch.len()
            )));
        }
        let expected = self.spec.dim.or_else(|| body.vectors.first().map(Vec::len));
        body.vectors
            .into_iter()
            .map(|v| match expected {
                Some(d) if d != v.len() => Err(Attempt::Permanent(format!(
                    "vector of dim {} where {d} was expected",
                    v.len()
                ))),
                _ => Ok(Vector::normalized(v)),
            })
            .collect()
    }
}

enum Attempt {
    Transient(String),
    Permanent(String),
}

impl Embedder for RemoteEmbedder {
    fn spec(&self) -> EmbedderSpec {
        EmbedderSpec::Remote(self.spec.clone())
    }

    fn dim(&self) -> Option<usize> {
        self.spec.dim
    }

    fn embed_all(&self, texts: &[&str]) -> Result<Vec<Vector>, EmbeddingError> {
        let batches: Vec<&[&str]> = texts.chunks(self.spec.batch_size).collect();
        type Slot = Option<Result<Vec<Vector>, EmbeddingError>>;
        let results: Mutex<Vec<Slot>> = Mutex::new((0..batches.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let workers = self.spec.max_in_flight.min(batches.len()).max(1);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= batches.len() {
                        break;
                    }
                    let r = self.request(batches[i]);
                    results.lock().expect("poisoned")[i] = Some(r);
                });
            }
        });
        let mut out = Vec::with_capacity(texts.len());
        for r in results.into_inner().expect("poisoned") {
            out.extend(r.expect("every batch ran")?);
        }
        Ok(out)
    }
}
