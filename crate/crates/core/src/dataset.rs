//! Corpus files: loading, validation, split checks, multi-task blending and
//! the instruction-tuning export.
//!
//! Corpora are UTF-8 JSON Lines, one record per line:
//!
//! ```text
//! {"id":"n1","task":"NER","text":"...","gold":{"entities":[{"text":"ginger","type":"ginger"}]}}
//! {"id":"r1","task":"RE","text":"...","re_head":"melatonin","re_tail":"dizziness","gold":{"relation":"negative"}}
//! {"id":"t1","task":"TE","text":"...","gold":{"triples":[{"head":"ginseng tea","relation":"positive","tail":"constipation"}]}}
//! {"id":"u1","task":"UC","text":"...","gold":{"usage":"continue"}}
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{
    normalize_text, task_scoped_id, EntityMention, GoldOutput, LabelError, ModelError, RePair, Record, TaskKind, Triple,
};
use crate::prompting::{serialize_gold, Prompt};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("line {line}: {source}")]
    Label {
        line: usize,
        #[source]
        source: LabelError,
    },
    #[error("line {line}: duplicate record id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("corpora disagree on task: {0} vs {1}")]
    TaskMismatch(TaskKind, TaskKind),
    #[error("more than one corpus supplied for task {0}")]
    DuplicateTask(TaskKind),
    #[error("no corpus supplied for task {0}")]
    MissingTask(TaskKind),
    #[error("blending requires train corpora, got {task} {split}")]
    NotTrainSplit { task: TaskKind, split: Split },
    #[error("prompt/record alignment: {0}")]
    Alignment(String),
}

impl DatasetError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Input-schema problems (as opposed to I/O or pipeline misuse).
    pub fn is_schema(&self) -> bool {
        matches!(
            self,
            DatasetError::Schema { .. } | DatasetError::Label { .. } | DatasetError::DuplicateId { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize_text(s).as_str() {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

/// All records of one task and split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub task: TaskKind,
    pub split: Split,
    pub records: Vec<Record>,
}

impl Corpus {
    /// Builds a corpus, checking task agreement and id uniqueness.
    pub fn new(task: TaskKind, split: Split, records: Vec<Record>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if r.task != task {
                return Err(DatasetError::TaskMismatch(task, r.task));
            }
            if !seen.insert(r.id.as_str()) {
                return Err(DatasetError::DuplicateId {
                    line: i + 1,
                    id: r.id.clone(),
                });
            }
        }
        Ok(Self { task, split, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Same records with `<task>:<id>` ids.
    pub fn task_scoped(&self) -> Corpus {
        Corpus {
            task: self.task,
            split: self.split,
            records: self
                .records
                .iter()
                .map(|r| r.with_id(task_scoped_id(r.task, &r.id)))
                .collect(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    id: Option<Value>,
    task: Option<Value>,
    text: Option<Value>,
    re_head: Option<Value>,
    re_tail: Option<Value>,
    gold: Option<Value>,
}

fn schema(line: usize, field: &'static str, message: impl Into<String>) -> DatasetError {
    DatasetError::Schema {
        line,
        field,
        message: message.into(),
    }
}

fn req_str<'a>(v: Option<&'a Value>, line: usize, field: &'static str) -> Result<&'a str, DatasetError> {
    match v {
        None | Some(Value::Null) => Err(schema(line, field, "missing")),
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(schema(line, field, "expected a string")),
    }
}

fn model_err(line: usize, field: &'static str, e: ModelError) -> DatasetError {
    match e {
        ModelError::Label(source) => DatasetError::Label { line, source },
        other => schema(line, field, other.to_string()),
    }
}

fn label<T: FromStr<Err = LabelError>>(s: &str, line: usize) -> Result<T, DatasetError> {
    s.parse().map_err(|source| DatasetError::Label { line, source })
}

fn parse_gold(task: TaskKind, gold: &Value, line: usize) -> Result<GoldOutput, DatasetError> {
    let obj = gold
        .as_object()
        .ok_or_else(|| schema(line, "gold", "expected an object"))?;
    let items = |key: &'static str| -> Result<&Vec<Value>, DatasetError> {
        match obj.get(key) {
            Some(Value::Array(a)) => Ok(a),
            Some(_) => Err(schema(line, "gold", format!("`{key}` must be an array"))),
            None => Err(schema(line, "gold", format!("missing `{key}` for {task}"))),
        }
    };
    match task {
        TaskKind::Ner => {
            let mut out = Vec::new();
            for item in items("entities")? {
                let surface = req_str(item.get("text"), line, "gold")?;
                let etype = label(req_str(item.get("type"), line, "gold")?, line)?;
                out.push(EntityMention::new(surface, etype).map_err(|e| model_err(line, "gold", e))?);
            }
            Ok(GoldOutput::Ner(out))
        }
        TaskKind::Te => {
            let mut out = Vec::new();
            for item in items("triples")? {
                let head = req_str(item.get("head"), line, "gold")?;
                let rel = label(req_str(item.get("relation"), line, "gold")?, line)?;
                let tail = req_str(item.get("tail"), line, "gold")?;
                out.push(Triple::new(head, rel, tail).map_err(|e| model_err(line, "gold", e))?);
            }
            Ok(GoldOutput::Te(out))
        }
        TaskKind::Re => Ok(GoldOutput::Re(label(
            req_str(obj.get("relation"), line, "gold")?,
            line,
        )?)),
        TaskKind::Uc => Ok(GoldOutput::Uc(label(req_str(obj.get("usage"), line, "gold")?, line)?)),
    }
}

/// Parses one corpus line. `line` is 1-based and only used for error reporting.
pub fn parse_record_line(raw: &str, line: usize, expected: Option<TaskKind>) -> Result<Record, DatasetError> {
    let rec: RawRecord = serde_json::from_str(raw).map_err(|e| schema(line, "record", e.to_string()))?;
    let id = req_str(rec.id.as_ref(), line, "id")?;
    if id.is_empty() {
        return Err(schema(line, "id", "empty"));
    }
    let task_raw = req_str(rec.task.as_ref(), line, "task")?;
    let task: TaskKind = label(task_raw, line)?;
    if let Some(expected) = expected {
        if task != expected {
            return Err(schema(line, "task", format!("expected {expected}, found {task}")));
        }
    }
    let text = req_str(rec.text.as_ref(), line, "text")?;
    let re_pair = if task == TaskKind::Re {
        let head = req_str(rec.re_head.as_ref(), line, "re_head")?;
        let tail = req_str(rec.re_tail.as_ref(), line, "re_tail")?;
        Some(RePair::new(head, tail).map_err(|e| model_err(line, "re_head", e))?)
    } else {
        if rec.re_head.as_ref().is_some_and(|v| !v.is_null()) {
            return Err(schema(line, "re_head", format!("not allowed on {task} records")));
        }
        if rec.re_tail.as_ref().is_some_and(|v| !v.is_null()) {
            return Err(schema(line, "re_tail", format!("not allowed on {task} records")));
        }
        None
    };
    let gold = rec.gold.as_ref().ok_or_else(|| schema(line, "gold", "missing"))?;
    let gold = parse_gold(task, gold, line)?;
    Record::new(id, text, re_pair, gold).map_err(|e| model_err(line, "record", e))
}

/// Reads all records from a JSON Lines file. Blank lines are skipped.
pub fn read_records(path: &Path, expected: Option<TaskKind>) -> Result<Vec<Record>, DatasetError> {
    let file = File::open(path).map_err(|e| DatasetError::io(path, e))?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| DatasetError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record_line(&line, line_no, expected)?;
        if !seen.insert(record.id.clone()) {
            return Err(DatasetError::DuplicateId {
                line: line_no,
                id: record.id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_corpus(path: &Path, task: TaskKind, split: Split) -> Result<Corpus, DatasetError> {
    let records = read_records(path, Some(task))?;
    Ok(Corpus { task, split, records })
}

#[derive(Serialize)]
struct EntityLine<'a> {
    text: &'a str,
    #[serde(rename = "type")]
    etype: &'static str,
}

#[derive(Serialize)]
struct TripleLine<'a> {
    head: &'a str,
    relation: &'static str,
    tail: &'a str,
}

#[derive(Serialize)]
#[serde(untagged)]
enum GoldLine<'a> {
    Entities { entities: Vec<EntityLine<'a>> },
    Relation { relation: &'static str },
    Triples { triples: Vec<TripleLine<'a>> },
    Usage { usage: &'static str },
}

#[derive(Serialize)]
struct RecordLine<'a> {
    id: &'a str,
    task: TaskKind,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    re_head: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    re_tail: Option<&'a str>,
    gold: GoldLine<'a>,
}

/// Canonical single-line JSON form of a record (no trailing newline).
pub fn record_to_line(r: &Record) -> String {
    let gold = match &r.gold {
        GoldOutput::Ner(ms) => GoldLine::Entities {
            entities: ms
                .iter()
                .map(|m| EntityLine {
                    text: &m.surface,
                    etype: m.etype.as_str(),
                })
                .collect(),
        },
        GoldOutput::Re(rel) => GoldLine::Relation { relation: rel.as_str() },
        GoldOutput::Te(ts) => GoldLine::Triples {
            triples: ts
                .iter()
                .map(|t| TripleLine {
                    head: &t.head,
                    relation: t.relation.as_str(),
                    tail: &t.tail,
                })
                .collect(),
        },
        GoldOutput::Uc(u) => GoldLine::Usage { usage: u.as_str() },
    };
    let line = RecordLine {
        id: &r.id,
        task: r.task,
        text: &r.text,
        re_head: r.re_pair.as_ref().map(|p| p.head.as_str()),
        re_tail: r.re_pair.as_ref().map(|p| p.tail.as_str()),
        gold,
    };
    serde_json::to_string(&line).expect("record serialization is infallible")
}

pub fn write_records<W: Write>(records: &[Record], mut out: W) -> std::io::Result<()> {
    for r in records {
        out.write_all(record_to_line(r).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_records(path: &Path, records: &[Record]) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(|e| DatasetError::io(path, e))?;
    write_records(records, std::io::BufWriter::new(file)).map_err(|e| DatasetError::io(path, e))
}

/// SHA-256 over the canonical serialization of the records, as lowercase hex.
pub fn fingerprint(records: &[Record]) -> String {
    let mut h = Sha256::new();
    for r in records {
        h.update(record_to_line(r).as_bytes());
        h.update(b"\n");
    }
    hex(&h.finalize())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Relative tolerance accepted around the nominal 8:1:1 split ratio.
pub const SPLIT_RATIO_TOLERANCE: f64 = 0.10;
pub const NOMINAL_SPLIT_RATIO: (f64, f64, f64) = (8.0, 1.0, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdCollision {
    pub id: String,
    pub splits: (Split, Split),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DuplicateSentence {
    pub normalized_text: String,
    pub first: (Split, String),
    pub second: (Split, String),
}

/// Outcome of [`validate_splits`]. Ratio deviations are warnings only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    pub task: TaskKind,
    pub sizes: [usize; 3],
    /// train : dev : test with dev scaled to 1; `None` when dev is empty.
    pub ratio: Option<(f64, f64, f64)>,
    pub ratio_within_tolerance: bool,
    pub id_collisions: Vec<IdCollision>,
    pub duplicate_sentences: Vec<DuplicateSentence>,
}

impl SplitReport {
    /// No cross-split id collisions or duplicate sentences.
    pub fn is_clean(&self) -> bool {
        self.id_collisions.is_empty() && self.duplicate_sentences.is_empty()
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        match self.ratio {
            None => w.push(format!("{}: dev split is empty, ratio undefined", self.task)),
            Some((a, b, c)) if !self.ratio_within_tolerance => w.push(format!(
                "{}: split ratio {a:.2}:{b:.2}:{c:.2} deviates from 8:1:1 by more than {:.0}%",
                self.task,
                SPLIT_RATIO_TOLERANCE * 100.0
            )),
            _ => {}
        }
        w
    }
}

impl fmt::Display for SplitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [tr, dv, te] = self.sizes;
        write!(f, "{}: train/dev/test = {tr}/{dv}/{te}", self.task)?;
        if let Some((a, b, c)) = self.ratio {
            write!(f, " (ratio {a:.2}:{b:.2}:{c:.2})")?;
        }
        write!(
            f,
            ", {} id collision(s), {} duplicate sentence(s)",
            self.id_collisions.len(),
            self.duplicate_sentences.len()
        )
    }
}

fn within(value: f64, nominal: f64) -> bool {
    (value - nominal).abs() <= nominal * SPLIT_RATIO_TOLERANCE + 1e-12
}

/// Checks split sizes against 8:1:1 and looks for cross-split leakage.
pub fn validate_splits(train: &Corpus, dev: &Corpus, test: &Corpus) -> Result<SplitReport, DatasetError> {
    for c in [dev, test] {
        if c.task != train.task {
            return Err(DatasetError::TaskMismatch(train.task, c.task));
        }
    }
    let sizes = [train.len(), dev.len(), test.len()];
    let ratio = (sizes[1] > 0).then(|| {
        let unit = sizes[1] as f64;
        (sizes[0] as f64 / unit, 1.0, sizes[2] as f64 / unit)
    });
    let ratio_within_tolerance =
        ratio.is_some_and(|(a, _, c)| within(a, NOMINAL_SPLIT_RATIO.0) && within(c, NOMINAL_SPLIT_RATIO.2));

    let corpora = [(Split::Train, train), (Split::Dev, dev), (Split::Test, test)];
    let mut id_owner: HashMap<&str, Split> = HashMap::new();
    let mut text_owner: HashMap<String, (Split, &str)> = HashMap::new();
    let mut id_collisions = Vec::new();
    let mut duplicate_sentences = Vec::new();
    for (split, corpus) in corpora {
        let mut local_texts = HashSet::new();
        for r in &corpus.records {
            match id_owner.get(r.id.as_str()) {
                Some(&other) if other != split => id_collisions.push(IdCollision {
                    id: r.id.clone(),
                    splits: (other, split),
                }),
                Some(_) => {}
                None => {
                    id_owner.insert(&r.id, split);
                }
            }
            let norm = r.normalized_text();
            if !local_texts.insert(norm.clone()) {
                continue;
            }
            match text_owner.get(&norm) {
                Some(&(other, other_id)) if other != split => duplicate_sentences.push(DuplicateSentence {
                    normalized_text: norm,
                    first: (other, other_id.to_string()),
                    second: (split, r.id.clone()),
                }),
                Some(_) => {}
                None => {
                    text_owner.insert(norm, (split, &r.id));
                }
            }
        }
    }
    Ok(SplitReport {
        task: train.task,
        sizes,
        ratio,
        ratio_within_tolerance,
        id_collisions,
        duplicate_sentences,
    })
}

/// Deterministically shuffles unsplit records and cuts them 8:1:1.
///
/// Intended for raw annotation dumps only; fixed train/dev/test files are
/// never re-split.
pub fn split_records(task: TaskKind, records: Vec<Record>, seed: u64) -> Result<[Corpus; 3], DatasetError> {
    let mut records = records;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records.shuffle(&mut rng);
    let n = records.len();
    let n_dev = n / 10;
    let n_test = n / 10;
    let n_train = n - n_dev - n_test;
    let test = records.split_off(n_train + n_dev);
    let dev = records.split_off(n_train);
    Ok([
        Corpus::new(task, Split::Train, records)?,
        Corpus::new(task, Split::Dev, dev)?,
        Corpus::new(task, Split::Test, test)?,
    ])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub task: TaskKind,
    pub split: Split,
    pub original_id: String,
}

/// The unified multi-task training set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlendedCorpus {
    /// Records with `<task>:<original id>` ids, shuffled under the blend seed.
    pub records: Vec<Record>,
    pub provenance: BTreeMap<String, Provenance>,
    pub seed: u64,
}

impl BlendedCorpus {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count(&self, task: TaskKind) -> usize {
        self.records.iter().filter(|r| r.task == task).count()
    }

    /// Rebuilds a blend from its serialized records (ids already task-scoped).
    pub fn from_records(records: Vec<Record>, seed: u64) -> Result<Self, DatasetError> {
        let mut provenance = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            let prefix = format!("{}:", r.task.as_str());
            let original_id =
                r.id.strip_prefix(&prefix)
                    .ok_or_else(|| schema(i + 1, "id", format!("blended id must start with `{prefix}`")))?
                    .to_string();
            let entry = Provenance {
                task: r.task,
                split: Split::Train,
                original_id,
            };
            if provenance.insert(r.id.clone(), entry).is_some() {
                return Err(DatasetError::DuplicateId {
                    line: i + 1,
                    id: r.id.clone(),
                });
            }
        }
        Ok(Self {
            records,
            provenance,
            seed,
        })
    }
}

/// Consolidates one train corpus per task into a single shuffled training set.
pub fn blend(train_corpora: &[Corpus], seed: u64) -> Result<BlendedCorpus, DatasetError> {
    let mut seen = HashSet::new();
    for c in train_corpora {
        if c.split != Split::Train {
            return Err(DatasetError::NotTrainSplit {
                task: c.task,
                split: c.split,
            });
        }
        if !seen.insert(c.task) {
            return Err(DatasetError::DuplicateTask(c.task));
        }
    }
    if let Some(missing) = TaskKind::ALL.into_iter().find(|t| !seen.contains(t)) {
        return Err(DatasetError::MissingTask(missing));
    }
    let mut ordered: Vec<&Corpus> = train_corpora.iter().collect();
    ordered.sort_by_key(|c| c.task);

    let mut records = Vec::with_capacity(ordered.iter().map(|c| c.len()).sum());
    let mut provenance = BTreeMap::new();
    for c in ordered {
        for r in &c.records {
            let id = task_scoped_id(r.task, &r.id);
            let entry = Provenance {
                task: r.task,
                split: c.split,
                original_id: r.id.clone(),
            };
            if provenance.insert(id.clone(), entry).is_some() {
                return Err(DatasetError::DuplicateId {
                    line: records.len() + 1,
                    id,
                });
            }
            records.push(r.with_id(id));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records.shuffle(&mut rng);
    Ok(BlendedCorpus {
        records,
        provenance,
        seed,
    })
}

/// One line of the instruction-tuning file.
///
/// The trainer input is `prompt_text` followed by `target_text`; keeping
/// them apart lets a trainer restrict the loss to the response span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub id: String,
    pub task: TaskKind,
    pub prompt_text: String,
    pub target_text: String,
}

/// Joins prompts to blended records by id, in blend order.
pub fn training_examples(blend: &BlendedCorpus, prompts: &[Prompt]) -> Result<Vec<TrainingExample>, DatasetError> {
    let mut by_id: HashMap<&str, &Prompt> = HashMap::with_capacity(prompts.len());
    for p in prompts {
        if by_id.insert(p.record_id.as_str(), p).is_some() {
            return Err(DatasetError::Alignment(format!(
                "duplicate prompt id `{}`",
                p.record_id
            )));
        }
    }
    if prompts.len() != blend.len() {
        return Err(DatasetError::Alignment(format!(
            "{} prompts for {} blended records",
            prompts.len(),
            blend.len()
        )));
    }
    blend
        .records
        .iter()
        .map(|r| {
            let p = by_id
                .get(r.id.as_str())
                .ok_or_else(|| DatasetError::Alignment(format!("no prompt for record `{}`", r.id)))?;
            if p.task != r.task {
                return Err(DatasetError::Alignment(format!(
                    "prompt `{}` is {} but the record is {}",
                    r.id, p.task, r.task
                )));
            }
            Ok(TrainingExample {
                id: r.id.clone(),
                task: r.task,
                prompt_text: p.text.clone(),
                target_text: serialize_gold(&r.gold),
            })
        })
        .collect()
}

/// Writes the instruction-tuning JSON Lines file; returns the line count.
pub fn export_training_file<W: Write>(
    blend: &BlendedCorpus,
    prompts: &[Prompt],
    mut out: W,
) -> Result<usize, DatasetError> {
    let examples = training_examples(blend, prompts)?;
    let io = |e| DatasetError::Io {
        path: "<training export>".into(),
        source: e,
    };
    for ex in &examples {
        let line = serde_json::to_string(ex).expect("serializable");
        out.write_all(line.as_bytes()).map_err(io)?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)?;
    Ok(examples.len())
}

/// Fine-tuning hyperparameters handed to an external LoRA trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExportConfig {
    pub lora_rank: u32,
    pub lora_alpha: u32,
    pub lora_dropout: f64,
    pub learning_rate: f64,
    pub max_steps: u32,
    pub eval_every: u32,
    pub per_device_batch: u32,
}

impl Default for TrainingExportConfig {
    fn default() -> Self {
        Self {
            lora_rank: 64,
            lora_alpha: 32,
            lora_dropout: 0.1,
            learning_rate: 1e-5,
            max_steps: 5000,
            eval_every: 1000,
            per_device_batch: 4,
        }
    }
}

impl TrainingExportConfig {
    /// Flat `key = value` text (valid TOML).
    pub fn to_key_value(&self) -> String {
        format!(
            "lora_rank = {}\nlora_alpha = {}\nlora_dropout = {:?}\nlearning_rate = {:e}\nmax_steps = {}\neval_every = {}\nper_device_batch = {}\n",
            self.lora_rank,
            self.lora_alpha,
            self.lora_dropout,
            self.learning_rate,
            self.max_steps,
            self.eval_every,
            self.per_device_batch
        )
    }
}
