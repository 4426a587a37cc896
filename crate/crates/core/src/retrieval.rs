//! Task-restricted example retrieval.
//!
//! Keys embed `sentence || response` while queries embed the sentence alone.
//! Candidates are always restricted to the query's task. In the train phase
//! the query's own record, and any record with the same normalized sentence,
//! are excluded so the model cannot learn to copy the example response.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset;
use crate::embedding::{dot, Embedder, EmbedderSpec, EmbeddingError, Vector};
use crate::model::{Record, TaskKind};
use crate::par;
use crate::prompting::{display_sentence, serialize_gold};

/// Joins sentence and response in key text.
pub const KEY_SEPARATOR: &str = " || ";

const INDEX_MAGIC: &[u8; 8] = b"RAMIEIDX";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("record id `{0}` appears more than once in the index")]
    DuplicateId(String),
    #[error("no {task} candidates left for query `{query}`")]
    EmptyCandidateSet { task: TaskKind, query: String },
    #[error("query `{query}` asks for {k} examples but only {available} {task} candidates remain")]
    NotEnoughCandidates {
        task: TaskKind,
        query: String,
        k: usize,
        available: usize,
    },
    #[error("k must be positive")]
    ZeroK,
    #[error("index was built with {index:?} but queried with {query:?}")]
    EmbedderMismatch {
        index: Box<EmbedderSpec>,
        query: Box<EmbedderSpec>,
    },
    #[error("index fingerprint {found} does not match corpus fingerprint {expected}")]
    StaleIndex { expected: String, found: String },
    #[error("index file: {0}")]
    Format(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("index file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexOptions {
    /// Whether RE sentences carry the rendered head/tail question in keys and queries.
    pub include_re_question: bool,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self {
            include_re_question: true,
        }
    }
}

/// Text embedded for a query.
pub fn query_text(record: &Record, options: IndexOptions) -> String {
    if options.include_re_question {
        display_sentence(record)
    } else {
        record.text.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

/// Text embedded for an index key.
pub fn key_text(record: &Record, options: IndexOptions) -> String {
    format!(
        "{}{KEY_SEPARATOR}{}",
        query_text(record, options),
        serialize_gold(&record.gold)
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleKey {
    pub record_id: String,
    pub task: TaskKind,
    /// Normalized raw sentence, used for same-sentence exclusion.
    pub sentence: String,
    pub key_text: String,
    pub vector: Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Self-excluding retrieval over training inputs.
    Train,
    /// Unrestricted retrieval over the whole training set.
    #[default]
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Baseline {
    #[default]
    Similarity,
    /// Uniform draw from the candidate set, reproducible under `seed`.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalMode {
    pub phase: Phase,
    pub k: usize,
    pub baseline: Baseline,
}

impl RetrievalMode {
    pub fn train() -> Self {
        Self {
            phase: Phase::Train,
            k: 1,
            baseline: Baseline::Similarity,
        }
    }

    pub fn test() -> Self {
        Self {
            phase: Phase::Test,
            k: 1,
            baseline: Baseline::Similarity,
        }
    }

    pub fn with_k(self, k: usize) -> Self {
        Self { k, ..self }
    }

    pub fn with_random(self, seed: u64) -> Self {
        Self {
            baseline: Baseline::Random { seed },
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub record_id: String,
    pub similarity: f64,
}

/// Immutable embedding index over a training set.
#[derive(Debug, Clone)]
pub struct ExampleIndex {
    spec: EmbedderSpec,
    dim: usize,
    options: IndexOptions,
    fingerprint: String,
    entries: Vec<ExampleKey>,
    by_task: [Vec<usize>; 4],
    by_id: HashMap<String, usize>,
    warnings: Vec<String>,
}

pub fn build_index(
    records: &[Record],
    embedder: &dyn Embedder,
    options: IndexOptions,
) -> Result<ExampleIndex, RetrievalError> {
    if records.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    let keys: Vec<String> = par::map(records, |r| key_text(r, options));
    let key_refs: Vec<&str> = keys.iter().map(String::as_str).collect();
    let vectors = embedder.embed_all(&key_refs)?;
    let mut warnings = Vec::new();
    let entries: Vec<ExampleKey> = records
        .iter()
        .zip(keys)
        .zip(vectors)
        .map(|((r, key_text), vector)| {
            let sentence = r.normalized_text();
            if sentence.contains(KEY_SEPARATOR.trim()) {
                let w = format!("record `{}` contains the key separator `||`", r.id);
                log::warn!("{w}");
                warnings.push(w);
            }
            ExampleKey {
                record_id: r.id.clone(),
                task: r.task,
                sentence,
                key_text,
                vector,
            }
        })
        .collect();
    let dim = entries[0].vector.dim();
    ExampleIndex::assemble(
        embedder.spec(),
        dim,
        options,
        dataset::fingerprint(records),
        entries,
        warnings,
    )
}

impl ExampleIndex {
    fn assemble(
        spec: EmbedderSpec,
        dim: usize,
        options: IndexOptions,
        fingerprint: String,
        entries: Vec<ExampleKey>,
        warnings: Vec<String>,
    ) -> Result<Self, RetrievalError> {
        let mut by_task: [Vec<usize>; 4] = Default::default();
        let mut by_id = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.vector.dim() != dim {
                return Err(RetrievalError::Embedding(EmbeddingError::DimMismatch(
                    dim,
                    e.vector.dim(),
                )));
            }
            if by_id.insert(e.record_id.clone(), i).is_some() {
                return Err(RetrievalError::DuplicateId(e.record_id.clone()));
            }
            by_task[e.task.index()].push(i);
        }
        Ok(Self {
            spec,
            dim,
            options,
            fingerprint,
            entries,
            by_task,
            by_id,
            warnings,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> &EmbedderSpec {
        &self.spec
    }

    pub fn options(&self) -> IndexOptions {
        self.options
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn entries(&self) -> &[ExampleKey] {
        &self.entries
    }

    pub fn partition_size(&self, task: TaskKind) -> usize {
        self.by_task[task.index()].len()
    }

    pub fn get(&self, record_id: &str) -> Option<&ExampleKey> {
        self.by_id.get(record_id).map(|&i| &self.entries[i])
    }

    fn check_embedder(&self, embedder: &dyn Embedder) -> Result<(), RetrievalError> {
        let spec = embedder.spec();
        if spec != self.spec {
            return Err(RetrievalError::EmbedderMismatch {
                index: Box::new(self.spec.clone()),
                query: Box::new(spec),
            });
        }
        Ok(())
    }

    /// Entry positions eligible for `query` under `phase`.
    pub fn candidates(&self, query: &Record, phase: Phase) -> Vec<usize> {
        let partition = &self.by_task[query.task.index()];
        match phase {
            Phase::Test => partition.clone(),
            Phase::Train => {
                let sentence = query.normalized_text();
                partition
                    .iter()
                    .copied()
                    .filter(|&i| {
                        let e = &self.entries[i];
                        e.record_id != query.id && e.sentence != sentence
                    })
                    .collect()
            }
        }
    }

    /// Top-k for a query whose sentence vector is already computed.
    pub fn retrieve_with_vector(
        &self,
        query: &Record,
        query_vector: &Vector,
        mode: RetrievalMode,
    ) -> Result<Vec<Hit>, RetrievalError> {
        if mode.k == 0 {
            return Err(RetrievalError::ZeroK);
        }
        if query_vector.dim() != self.dim {
            return Err(EmbeddingError::DimMismatch(self.dim, query_vector.dim()).into());
        }
        let candidates = self.candidates(query, mode.phase);
        if candidates.is_empty() {
            return Err(RetrievalError::EmptyCandidateSet {
                task: query.task,
                query: query.id.clone(),
            });
        }
        if candidates.len() < mode.k {
            return Err(RetrievalError::NotEnoughCandidates {
                task: query.task,
                query: query.id.clone(),
                k: mode.k,
                available: candidates.len(),
            });
        }
        let sim = |i: usize| dot(self.entries[i].vector.values(), query_vector.values()).clamp(-1.0, 1.0);
        let hit = |i: usize| Hit {
            record_id: self.entries[i].record_id.clone(),
            similarity: sim(i),
        };
        match mode.baseline {
            Baseline::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(query_seed(seed, &query.id));
                let picks = rand::seq::index::sample(&mut rng, candidates.len(), mode.k);
                Ok(picks.into_iter().map(|p| hit(candidates[p])).collect())
            }
            Baseline::Similarity => {
                let mut scored: Vec<(f64, usize)> = candidates.into_iter().map(|i| (sim(i), i)).collect();
                let order = |a: &(f64, usize), b: &(f64, usize)| {
                    b.0.total_cmp(&a.0)
                        .then_with(|| self.entries[a.1].record_id.cmp(&self.entries[b.1].record_id))
                };
                if mode.k < scored.len() {
                    scored.select_nth_unstable_by(mode.k - 1, order);
                    scored.truncate(mode.k);
                }
                scored.sort_by(order);
                Ok(scored
                    .into_iter()
                    .map(|(similarity, i)| Hit {
                        record_id: self.entries[i].record_id.clone(),
                        similarity,
                    })
                    .collect())
            }
        }
    }

    pub fn retrieve(
        &self,
        embedder: &dyn Embedder,
        query: &Record,
        mode: RetrievalMode,
    ) -> Result<Vec<Hit>, RetrievalError> {
        self.check_embedder(embedder)?;
        let v = embedder.embed(&query_text(query, self.options))?;
        self.retrieve_with_vector(query, &v, mode)
    }

    /// Retrieves for many queries; the result order matches `queries`.
    pub fn retrieve_batch(
        &self,
        embedder: &dyn Embedder,
        queries: &[Record],
        mode: RetrievalMode,
    ) -> Result<Vec<Vec<Hit>>, RetrievalError> {
        self.check_embedder(embedder)?;
        let texts: Vec<String> = queries.iter().map(|q| query_text(q, self.options)).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let vectors = embedder.embed_all(&refs)?;
        let pairs: Vec<(&Record, Vector)> = queries.iter().zip(vectors).collect();
        par::try_map(&pairs, |(q, v)| self.retrieve_with_vector(q, v, mode))
    }

    /// Writes the index sidecar: magic, version, JSON header, then raw little-endian vectors.
    pub fn save(&self, path: &Path) -> Result<(), RetrievalError> {
        let io = |source| RetrievalError::Io {
            path: path.display().to_string(),
            source,
        };
        let header = IndexHeader {
            spec: self.spec.clone(),
            dim: self.dim,
            options: self.options,
            fingerprint: self.fingerprint.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| EntryHeader {
                    id: e.record_id.clone(),
                    task: e.task,
                    sentence: e.sentence.clone(),
                    key_text: e.key_text.clone(),
                })
                .collect(),
        };
        let header = serde_json::to_vec(&header).expect("serializable header");
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        out.write_all(INDEX_MAGIC).map_err(io)?;
        out.write_all(&INDEX_VERSION.to_le_bytes()).map_err(io)?;
        out.write_all(&(header.len() as u64).to_le_bytes()).map_err(io)?;
        out.write_all(&header).map_err(io)?;
        for e in &self.entries {
            for v in e.vector.values() {
                out.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
        out.flush().map_err(io)
    }

    /// Loads a sidecar; with `expected_fingerprint`, refuses an index built from other data.
    pub fn load(path: &Path, expected_fingerprint: Option<&str>) -> Result<Self, RetrievalError> {
        let io = |source| RetrievalError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut input = BufReader::new(File::open(path).map_err(io)?);
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(io)?;
        if &magic != INDEX_MAGIC {
            return Err(RetrievalError::Format("not an index file".into()));
        }
        let mut word = [0u8; 4];
        input.read_exact(&mut word).map_err(io)?;
        let version = u32::from_le_bytes(word);
        if version != INDEX_VERSION {
            return Err(RetrievalError::Format(format!("unsupported version {version}")));
        }
        let mut len = [0u8; 8];
        input.read_exact(&mut len).map_err(io)?;
        let mut header = vec![0u8; u64::from_le_bytes(len) as usize];
        input.read_exact(&mut header).map_err(io)?;
        let header: IndexHeader = serde_json::from_slice(&header).map_err(|e| RetrievalError::Format(e.to_string()))?;
        if let Some(expected) = expected_fingerprint {
            if expected != header.fingerprint {
                return Err(RetrievalError::StaleIndex {
                    expected: expected.to_string(),
                    found: header.fingerprint,
                });
            }
        }
        let mut entries = Vec::with_capacity(header.entries.len());
        let mut buf = vec![0u8; header.dim * 8];
        for e in header.entries {
            input.read_exact(&mut buf).map_err(io)?;
            let values: Vec<f64> = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            entries.push(ExampleKey {
                record_id: e.id,
                task: e.task,
                sentence: e.sentence,
                key_text: e.key_text,
                vector: Vector::from_normalized(values),
            });
        }
        Self::assemble(
            header.spec,
            header.dim,
            header.options,
            header.fingerprint,
            entries,
            Vec::new(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct IndexHeader {
    spec: EmbedderSpec,
    dim: usize,
    options: IndexOptions,
    fingerprint: String,
    entries: Vec<EntryHeader>,
}

#[derive(Serialize, Deserialize)]
struct EntryHeader {
    id: String,
    task: TaskKind,
    sentence: String,
    key_text: String,
}

/// Per-query stream seed so random draws do not depend on query order.
fn query_seed(seed: u64, query_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in query_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
