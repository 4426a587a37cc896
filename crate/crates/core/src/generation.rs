//! Sending prompts to a model and recording the raw generations.
//!
//! Three generators are available: an HTTP chat-completion client and two
//! deterministic mocks. `mock-oracle` answers every prompt with the gold
//! response of its record; `mock-copy` answers with the response of the
//! in-context example, which is what a model that learned to copy would do.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::hex;
use crate::model::{Record, TaskKind};
use crate::prompting::{example_response, serialize_gold, Prompt};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenerationError {
    #[error("transient endpoint failure: {0}")]
    Transient(String),
    #[error("endpoint error: {0}")]
    Endpoint(String),
    #[error("generator configuration: {0}")]
    Config(String),
}

/// Connection settings for a chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointSpec {
    /// Base URL; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Retries after the first attempt for transient failures.
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// Name of the environment variable holding a bearer token.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_max_tokens() -> u32 {
    512
}
fn default_timeout_secs() -> u64 {
    120
}
fn default_retries() -> u32 {
    3
}
fn default_in_flight() -> usize {
    4
}

impl EndpointSpec {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            temperature: 0.0,
            max_tokens: default_max_tokens(),
            timeout_secs: default_timeout_secs(),
            retries: default_retries(),
            api_key_env: None,
            max_in_flight: default_in_flight(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    MockOracle,
    MockCopy,
    Http(EndpointSpec),
}

impl GeneratorSpec {
    /// Builds the generator. The oracle needs the gold records it will answer for.
    pub fn build(&self, gold: &[Record]) -> Result<Box<dyn Generator>, GenerationError> {
        Ok(match self {
            GeneratorSpec::MockOracle => Box::new(MockOracle::new(gold)),
            GeneratorSpec::MockCopy => Box::new(MockCopy),
            GeneratorSpec::Http(spec) => Box::new(HttpGenerator::new(spec.clone())?),
        })
    }
}

pub trait Generator: Send + Sync {
    /// Stable description of the endpoint, persisted with each generation.
    fn identity(&self) -> String;

    /// Upper bound on concurrent requests.
    fn max_in_flight(&self) -> usize {
        1
    }

    fn complete(&self, prompt: &Prompt) -> Result<String, GenerationError>;
}

/// Answers with the canonical gold response of the prompt's record.
pub struct MockOracle {
    answers: HashMap<String, String>,
}

impl MockOracle {
    pub fn new(gold: &[Record]) -> Self {
        Self {
            answers: gold.iter().map(|r| (r.id.clone(), serialize_gold(&r.gold))).collect(),
        }
    }
}

impl Generator for MockOracle {
    fn identity(&self) -> String {
        "mock-oracle".into()
    }

    fn complete(&self, prompt: &Prompt) -> Result<String, GenerationError> {
        self.answers
            .get(&prompt.record_id)
            .cloned()
            .ok_or_else(|| GenerationError::Endpoint(format!("no gold answer for `{}`", prompt.record_id)))
    }
}

/// Answers with the in-context example's response verbatim.
pub struct MockCopy;

impl Generator for MockCopy {
    fn identity(&self) -> String {
        "mock-copy".into()
    }

    fn complete(&self, prompt: &Prompt) -> Result<String, GenerationError> {
        example_response(&prompt.text)
            .map(str::to_string)
            .ok_or_else(|| GenerationError::Endpoint(format!("prompt `{}` has no example block", prompt.record_id)))
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    #[serde(default)]
    content: Option<String>,
}

/// Chat-completion client with retries on transport errors, 429 and 5xx.
pub struct HttpGenerator {
    spec: EndpointSpec,
    url: String,
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl HttpGenerator {
    pub fn new(spec: EndpointSpec) -> Result<Self, GenerationError> {
        if spec.max_in_flight == 0 {
            return Err(GenerationError::Config("max_in_flight must be positive".into()));
        }
        let api_key = match &spec.api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| GenerationError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(spec.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            url: format!("{}/chat/completions", spec.base_url.trim_end_matches('/')),
            spec,
            agent,
            api_key,
        })
    }

    fn request_once(&self, prompt: &str) -> Result<String, GenerationError> {
        let mut req = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(ChatRequest {
                model: &self.spec.model,
                messages: [ChatMessage {
                    role: "user",
                    content: prompt,
                }],
                temperature: self.spec.temperature,
                max_tokens: self.spec.max_tokens,
            })
            .map_err(|e| GenerationError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(GenerationError::Transient(format!("HTTP {status}")));
        }
        if status >= 400 {
            return Err(GenerationError::Endpoint(format!("HTTP {status}")));
        }
        let body: ChatResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| GenerationError::Endpoint(format!("malformed response: {e}")))?;
        body.choices
            .into_iter()
            .next()
            .map(|c| c.message.content.unwrap_or_default())
            .ok_or_else(|| GenerationError::Endpoint("response has no choices".into()))
    }
}

impl Generator for HttpGenerator {
    fn identity(&self) -> String {
        format!("{}#{}", self.url, self.spec.model)
    }

    fn max_in_flight(&self) -> usize {
        self.spec.max_in_flight
    }

    fn complete(&self, prompt: &Prompt) -> Result<String, GenerationError> {
        let mut attempt = 0;
        loop {
            match self.request_once(&prompt.text) {
                Err(GenerationError::Transient(msg)) if attempt < self.spec.retries => {
                    attempt += 1;
                    log::warn!("{}: {msg}; retry {attempt}/{}", prompt.record_id, self.spec.retries);
                    std::thread::sleep(Duration::from_millis(50 << attempt.min(6)));
                }
                other => return other,
            }
        }
    }
}

/// One raw generation with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    #[serde(rename = "id")]
    pub record_id: String,
    pub task: TaskKind,
    pub prompt_hash: String,
    /// Raw model text; empty when the request failed.
    pub generation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub endpoint: String,
    /// Wall-clock time of the request; not persisted so artifacts stay reproducible.
    #[serde(skip)]
    pub latency: Duration,
}

/// SHA-256 of a prompt's text, as lowercase hex.
pub fn prompt_hash(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes()))
}

/// Generates for every prompt. Output order and length always match `prompts`;
/// failed requests are kept as records with `error` set.
pub fn generate(generator: &dyn Generator, prompts: &[Prompt]) -> Vec<GenerationRecord> {
    let identity = generator.identity();
    let slots: Mutex<Vec<Option<GenerationRecord>>> = Mutex::new(vec![None; prompts.len()]);
    let next = AtomicUsize::new(0);
    let workers = generator.max_in_flight().clamp(1, prompts.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(prompt) = prompts.get(i) else {
                    break;
                };
                let start = Instant::now();
                let result = generator.complete(prompt);
                let (generation, error) = match result {
                    Ok(text) => (text, None),
                    Err(e) => {
                        log::warn!("generation for `{}` failed: {e}", prompt.record_id);
                        (String::new(), Some(e.to_string()))
                    }
                };
                let record = GenerationRecord {
                    record_id: prompt.record_id.clone(),
                    task: prompt.task,
                    prompt_hash: prompt_hash(&prompt.text),
                    generation,
                    error,
                    endpoint: identity.clone(),
                    latency: start.elapsed(),
                };
                slots.lock().expect("poisoned")[i] = Some(record);
            });
        }
    });
    slots
        .into_inner()
        .expect("poisoned")
        .into_iter()
        .map(|r| r.expect("every prompt was processed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GoldOutput, UsageStatus};
    use crate::prompting::{build_prompt, PromptTemplate};
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    fn uc(id: &str, text: &str, s: UsageStatus) -> Record {
        Record::new(id, text, None, GoldOutput::Uc(s)).unwrap()
    }

    fn prompts() -> (Vec<Record>, Vec<Prompt>) {
        let t = PromptTemplate::builtin(TaskKind::Uc);
        let ex = uc("ex", "stop garlic", UsageStatus::Discontinue);
        let inputs: Vec<Record> = (0..10)
            .map(|i| {
                uc(
                    &format!("q{i}"),
                    &format!("continue melatonin {i}"),
                    UsageStatus::Continue,
                )
            })
            .collect();
        let prompts = inputs.iter().map(|r| build_prompt(&t, Some(&ex), r).unwrap()).collect();
        (inputs, prompts)
    }

    #[test]
    fn oracle_answers_gold() {
        let (inputs, prompts) = prompts();
        let out = generate(&MockOracle::new(&inputs), &prompts);
        assert_eq!(out.len(), prompts.len());
        for (g, p) in out.iter().zip(&prompts) {
            assert_eq!(g.record_id, p.record_id);
            assert_eq!(g.generation, "['continue']");
            assert_eq!(g.prompt_hash, prompt_hash(&p.text));
        }
    }

    #[test]
    fn copy_answers_example() {
        let (_, prompts) = prompts();
        let out = generate(&MockCopy, &prompts);
        assert!(out.iter().all(|g| g.generation == "['discontinue']"));
    }

    #[test]
    fn failures_are_kept() {
        let (_, prompts) = prompts();
        let out = generate(&MockOracle::new(&[]), &prompts);
        assert_eq!(out.len(), prompts.len());
        assert!(out.iter().all(|g| g.error.is_some() && g.generation.is_empty()));
        let line = serde_json::to_string(&out[0]).unwrap();
        assert!(line.contains("\"error\""));
        assert!(!line.contains("latency"));
    }

    #[test]
    fn missing_api_key_is_config_error() {
        let mut spec = EndpointSpec::new("http://127.0.0.1:1", "m");
        spec.api_key_env = Some("RAMIE_TEST_SURELY_UNSET_KEY".into());
        assert!(matches!(HttpGenerator::new(spec), Err(GenerationError::Config(_))));
    }

    /// Serves `responses` in order, one per connection, and records request bodies.
    fn serve(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let mut bodies = Vec::new();
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                bodies.push(String::from_utf8(buf).unwrap());
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
            bodies
        });
        (format!("http://{addr}"), handle)
    }

    fn reply(content: &str) -> String {
        serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
    }

    #[test]
    fn http_retries_transient_then_succeeds() {
        let (url, server) = serve(vec![(503, "{}".into()), (429, "{}".into()), (200, reply("['start']"))]);
        let mut spec = EndpointSpec::new(url, "tiny");
        spec.max_in_flight = 1;
        let g = HttpGenerator::new(spec).unwrap();
        let (_, prompts) = prompts();
        let out = generate(&g, &prompts[..1]);
        assert_eq!(out[0].generation, "['start']");
        assert_eq!(out[0].error, None);
        let bodies = server.join().unwrap();
        assert_eq!(bodies.len(), 3);
        let req: serde_json::Value = serde_json::from_str(&bodies[2]).unwrap();
        assert_eq!(req["model"], "tiny");
        assert_eq!(req["temperature"], 0.0);
        assert_eq!(req["messages"][0]["role"], "user");
        assert_eq!(req["messages"][0]["content"], prompts[0].text.as_str());
    }

    #[test]
    fn http_permanent_failure_is_recorded() {
        let (url, server) = serve(vec![(400, "{}".into())]);
        let mut spec = EndpointSpec::new(url, "tiny");
        spec.max_in_flight = 1;
        let g = HttpGenerator::new(spec).unwrap();
        let (_, prompts) = prompts();
        let out = generate(&g, &prompts[..1]);
        assert!(out[0].error.as_deref().unwrap().contains("HTTP 400"));
        assert_eq!(server.join().unwrap().len(), 1);
    }

    #[test]
    fn http_gives_up_after_budget() {
        let (url, server) = serve(vec![(500, "{}".into()), (500, "{}".into())]);
        let mut spec = EndpointSpec::new(url, "tiny");
        spec.retries = 1;
        spec.max_in_flight = 1;
        let g = HttpGenerator::new(spec).unwrap();
        let (_, prompts) = prompts();
        let out = generate(&g, &prompts[..1]);
        assert!(out[0].error.as_deref().unwrap().contains("HTTP 500"));
        assert_eq!(server.join().unwrap().len(), 2);
    }
}
