//! Staged pipeline runner.
//!
//! Each stage reads the previous stage's file from the output directory and
//! writes exactly one artifact. After every executed stage a line is appended
//! to `manifest.jsonl` recording the artifact hash and a hash of everything
//! the stage consumed. A stage whose inputs hash and artifact both still match
//! its last manifest line is skipped.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::dataset::{
    self, blend, export_training_file, hex, load_corpus, read_records, record_to_line, BlendedCorpus, Corpus,
    DatasetError, Split, TrainingExportConfig,
};
use crate::embedding::EmbeddingError;
use crate::evaluation::{aggregate_report, classify_errors, render_table, score_task, EvalError, RunReport};
use crate::generation::{generate, GenerationError, GenerationRecord};
use crate::model::{Record, TaskKind};
use crate::par;
use crate::parsing::{parse_generation_with, prediction_from_line, prediction_to_line, Prediction, Reason};
use crate::prompting::{build_prompt_multi, Prompt, PromptError, TemplateSet, TEMPLATE_VERSION};
use crate::retrieval::{build_index, ExampleIndex, Phase, RetrievalError, RetrievalMode};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("stage {stage} needs {path}; run the {needs} stage first")]
    MissingArtifact { stage: Stage, needs: Stage, path: String },
    #[error("{path}: {message}")]
    Artifact { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Process exit code: 2 for configuration and input-schema problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Dataset(_) => 2,
            PipelineError::Generation(GenerationError::Config(_)) => 2,
            PipelineError::Embedding(EmbeddingError::Config(_)) => 2,
            PipelineError::Prompt(PromptError::MissingSlot { .. } | PromptError::DuplicateSlot { .. }) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Blend,
    Index,
    Prompts,
    Generate,
    Parse,
    Score,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Blend,
        Stage::Index,
        Stage::Prompts,
        Stage::Generate,
        Stage::Parse,
        Stage::Score,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Blend => "blend",
            Stage::Index => "index",
            Stage::Prompts => "prompts",
            Stage::Generate => "generate",
            Stage::Parse => "parse",
            Stage::Score => "score",
            Stage::Report => "report",
        }
    }

    /// File name of the stage's artifact inside the output directory.
    pub fn artifact(self) -> &'static str {
        match self {
            Stage::Blend => "blend.jsonl",
            Stage::Index => "index.bin",
            Stage::Prompts => "prompts.jsonl",
            Stage::Generate => "generations.jsonl",
            Stage::Parse => "predictions.jsonl",
            Stage::Score => "report.json",
            Stage::Report => "report.txt",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub stage: Stage,
    pub artifact: String,
    pub content_hash: String,
    pub config_hash: String,
    pub inputs_hash: String,
    pub seed: u64,
    pub unix_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageOutcome {
    pub stage: Stage,
    pub artifact: PathBuf,
    pub content_hash: String,
    /// True when the stage was skipped because nothing changed.
    pub skipped: bool,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn file_hash(path: &Path) -> Result<String, PipelineError> {
    Ok(sha256_hex(&std::fs::read(path).map_err(io_err(path))?))
}

/// Hashes labelled input parts, length-prefixed so boundaries cannot shift.
#[derive(Default)]
struct InputsHasher(Sha256);

impl InputsHasher {
    fn part(mut self, label: &str, bytes: &[u8]) -> Self {
        for chunk in [label.as_bytes(), bytes] {
            self.0.update((chunk.len() as u64).to_le_bytes());
            self.0.update(chunk);
        }
        self
    }

    fn json<T: Serialize>(self, label: &str, value: &T) -> Self {
        let bytes = serde_json::to_vec(value).expect("serializable");
        self.part(label, &bytes)
    }

    fn finish(self) -> String {
        hex(&self.0.finalize())
    }
}

fn write_lines<I: IntoIterator<Item = String>>(path: &Path, lines: I) -> Result<(), PipelineError> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for line in lines {
        out.write_all(line.as_bytes()).map_err(io_err(path))?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| PipelineError::Artifact {
                path: path.display().to_string(),
                message: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

pub struct Pipeline {
    cfg: PipelineConfig,
    out: PathBuf,
    config_hash: String,
}

impl Pipeline {
    /// Checks every configured input path and creates the output directory.
    pub fn new(cfg: PipelineConfig) -> Result<Self, PipelineError> {
        cfg.validate_paths()?;
        let out = cfg.output_dir();
        std::fs::create_dir_all(&out).map_err(io_err(&out))?;
        let config_hash = cfg.hash();
        Ok(Self { cfg, out, config_hash })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn output_dir(&self) -> &Path {
        &self.out
    }

    pub fn artifact_path(&self, stage: Stage) -> PathBuf {
        self.out.join(stage.artifact())
    }

    pub fn manifest(&self) -> Result<Vec<ManifestEntry>, PipelineError> {
        let path = self.out.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Vec::new());
        }
        read_jsonl(&path)
    }

    /// Runs the requested stages in pipeline order.
    pub fn run(&self, stages: &[Stage]) -> Result<Vec<StageOutcome>, PipelineError> {
        let mut wanted: Vec<Stage> = stages.to_vec();
        wanted.sort();
        wanted.dedup();
        let mut outcomes = Vec::with_capacity(wanted.len());
        for stage in wanted {
            outcomes.push(self.run_stage(stage)?);
        }
        Ok(outcomes)
    }

    pub fn run_all(&self) -> Result<Vec<StageOutcome>, PipelineError> {
        self.run(&Stage::ALL)
    }

    fn require(&self, stage: Stage, needs: Stage) -> Result<PathBuf, PipelineError> {
        let path = self.artifact_path(needs);
        if !path.exists() {
            return Err(PipelineError::MissingArtifact {
                stage,
                needs,
                path: path.display().to_string(),
            });
        }
        Ok(path)
    }

    fn run_stage(&self, stage: Stage) -> Result<StageOutcome, PipelineError> {
        let inputs_hash = self.inputs_hash(stage)?;
        let artifact = self.artifact_path(stage);
        let previous = self.manifest()?.into_iter().rev().find(|e| e.stage == stage);
        if let Some(prev) = previous {
            if prev.inputs_hash == inputs_hash && artifact.exists() && file_hash(&artifact)? == prev.content_hash {
                log::info!("{stage}: up to date ({})", artifact.display());
                return Ok(StageOutcome {
                    stage,
                    artifact,
                    content_hash: prev.content_hash,
                    skipped: true,
                });
            }
        }
        log::info!("{stage}: running");
        match stage {
            Stage::Blend => self.stage_blend(&artifact)?,
            Stage::Index => self.stage_index(&artifact)?,
            Stage::Prompts => self.stage_prompts(&artifact)?,
            Stage::Generate => self.stage_generate(&artifact)?,
            Stage::Parse => self.stage_parse(&artifact)?,
            Stage::Score => self.stage_score(&artifact)?,
            Stage::Report => self.stage_report(&artifact)?,
        }
        let content_hash = file_hash(&artifact)?;
        self.append_manifest(ManifestEntry {
            stage,
            artifact: stage.artifact().to_string(),
            content_hash: content_hash.clone(),
            config_hash: self.config_hash.clone(),
            inputs_hash,
            seed: self.cfg.seed,
            unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        })?;
        Ok(StageOutcome {
            stage,
            artifact,
            content_hash,
            skipped: false,
        })
    }

    fn append_manifest(&self, entry: ManifestEntry) -> Result<(), PipelineError> {
        let path = self.out.join(MANIFEST_FILE);
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        let line = serde_json::to_string(&entry).expect("serializable");
        writeln!(f, "{line}").map_err(io_err(&path))
    }

    fn eval_split(&self) -> Split {
        self.cfg.retrieval.evaluate_on
    }

    fn corpus_bytes(&self, split: Split) -> Result<Vec<(String, Vec<u8>)>, PipelineError> {
        TaskKind::ALL
            .iter()
            .map(|&t| {
                let p = self.cfg.corpus_path(t, split);
                let bytes = std::fs::read(&p).map_err(io_err(&p))?;
                Ok((format!("{t}/{split}"), bytes))
            })
            .collect()
    }

    fn templates_hash(&self) -> Result<String, PipelineError> {
        let Some(dir) = self.cfg.template_dir() else {
            return Ok(format!("builtin:{TEMPLATE_VERSION}"));
        };
        let mut h = InputsHasher::default();
        for task in TaskKind::ALL {
            let p = dir.join(format!("{}.txt", task.as_str().to_lowercase()));
            h = h.part(task.as_str(), &std::fs::read(&p).map_err(io_err(&p))?);
        }
        Ok(h.finish())
    }

    fn artifact_hash(&self, stage: Stage, needs: Stage) -> Result<String, PipelineError> {
        file_hash(&self.require(stage, needs)?)
    }

    fn inputs_hash(&self, stage: Stage) -> Result<String, PipelineError> {
        let h = InputsHasher::default().part("stage", stage.as_str().as_bytes());
        let h = match stage {
            Stage::Blend => {
                let mut h = h.json("seed", &self.cfg.seed);
                for (label, bytes) in self.corpus_bytes(Split::Train)? {
                    h = h.part(&label, &bytes);
                }
                h
            }
            Stage::Index => h
                .part("blend", self.artifact_hash(stage, Stage::Blend)?.as_bytes())
                .json("embedder", &self.cfg.embedder)
                .json("options", &self.cfg.retrieval.index_options()),
            Stage::Prompts => {
                let mut h = h
                    .part("blend", self.artifact_hash(stage, Stage::Blend)?.as_bytes())
                    .json("retrieval", &self.cfg.retrieval)
                    .part("templates", self.templates_hash()?.as_bytes());
                if self.cfg.retrieval.rag {
                    h = h.part("index", self.artifact_hash(stage, Stage::Index)?.as_bytes());
                }
                for (label, bytes) in self.corpus_bytes(self.eval_split())? {
                    h = h.part(&label, &bytes);
                }
                h
            }
            Stage::Generate => {
                let mut h = h
                    .part("prompts", self.artifact_hash(stage, Stage::Prompts)?.as_bytes())
                    .json("endpoint", &self.cfg.endpoint);
                for (label, bytes) in self.corpus_bytes(self.eval_split())? {
                    h = h.part(&label, &bytes);
                }
                h
            }
            Stage::Parse => h
                .part("generations", self.artifact_hash(stage, Stage::Generate)?.as_bytes())
                .json("parsing", &self.cfg.parsing),
            Stage::Score => {
                let mut h = h
                    .part("predictions", self.artifact_hash(stage, Stage::Parse)?.as_bytes())
                    .json("report", &self.cfg.report.errors)
                    .json("parsing", &self.cfg.parsing);
                if let Some(p) = self.cfg.baseline_report() {
                    h = h.part("baseline", &std::fs::read(&p).map_err(io_err(&p))?);
                }
                for (label, bytes) in self.corpus_bytes(self.eval_split())? {
                    h = h.part(&label, &bytes);
                }
                h
            }
            Stage::Report => h.part("report", self.artifact_hash(stage, Stage::Score)?.as_bytes()),
        };
        Ok(h.finish())
    }

    fn train_corpora(&self) -> Result<Vec<Corpus>, PipelineError> {
        TaskKind::ALL
            .iter()
            .map(|&t| Ok(load_corpus(&self.cfg.corpus_path(t, Split::Train), t, Split::Train)?))
            .collect()
    }

    /// Evaluation records of every task with task-scoped ids, in task order.
    pub fn eval_records(&self) -> Result<Vec<Record>, PipelineError> {
        let split = self.eval_split();
        let mut out = Vec::new();
        for t in TaskKind::ALL {
            let c = load_corpus(&self.cfg.corpus_path(t, split), t, split)?;
            out.extend(c.task_scoped().records);
        }
        Ok(out)
    }

    fn blend_records(&self, stage: Stage) -> Result<Vec<Record>, PipelineError> {
        Ok(read_records(&self.require(stage, Stage::Blend)?, None)?)
    }

    fn templates(&self) -> Result<TemplateSet, PipelineError> {
        Ok(match self.cfg.template_dir() {
            Some(dir) => TemplateSet::load_dir(&dir)?,
            None => TemplateSet::builtin(),
        })
    }

    fn stage_blend(&self, artifact: &Path) -> Result<(), PipelineError> {
        let blended = blend(&self.train_corpora()?, self.cfg.seed)?;
        write_lines(artifact, blended.records.iter().map(record_to_line))
    }

    fn stage_index(&self, artifact: &Path) -> Result<(), PipelineError> {
        let records = self.blend_records(Stage::Index)?;
        let embedder = self.cfg.embedder.build()?;
        let index = build_index(&records, embedder.as_ref(), self.cfg.retrieval.index_options())?;
        index.save(artifact)?;
        Ok(())
    }

    fn stage_prompts(&self, artifact: &Path) -> Result<(), PipelineError> {
        let blend = self.blend_records(Stage::Prompts)?;
        let inputs = self.eval_records()?;
        let templates = self.templates()?;
        let prompts = if self.cfg.retrieval.rag {
            let path = self.require(Stage::Prompts, Stage::Index)?;
            let index = ExampleIndex::load(&path, Some(&dataset::fingerprint(&blend)))?;
            let embedder = self.cfg.embedder.build()?;
            render_with_retrieval(
                &index,
                embedder.as_ref(),
                &blend,
                &inputs,
                &templates,
                self.cfg.retrieval.mode(),
            )?
        } else {
            par::try_map(&inputs, |r| build_prompt_multi(templates.get(r.task), &[], r))?
        };
        write_lines(
            artifact,
            prompts.iter().map(|p| serde_json::to_string(p).expect("serializable")),
        )
    }

    fn stage_generate(&self, artifact: &Path) -> Result<(), PipelineError> {
        let prompts: Vec<Prompt> = read_jsonl(&self.require(Stage::Generate, Stage::Prompts)?)?;
        let gold = self.eval_records()?;
        let generator = self.cfg.endpoint.build(&gold)?;
        let generations = generate(generator.as_ref(), &prompts);
        let failed = generations.iter().filter(|g| g.error.is_some()).count();
        if failed > 0 {
            log::warn!("{failed} of {} generations failed", generations.len());
        }
        write_lines(
            artifact,
            generations
                .iter()
                .map(|g| serde_json::to_string(g).expect("serializable")),
        )
    }

    fn stage_parse(&self, artifact: &Path) -> Result<(), PipelineError> {
        let generations: Vec<GenerationRecord> = read_jsonl(&self.require(Stage::Parse, Stage::Generate)?)?;
        let policy = self.cfg.parsing;
        let predictions = par::map(&generations, |g| {
            if g.error.is_some() {
                Prediction::malformed(g.record_id.clone(), g.task, Reason::GenerationFailed)
            } else {
                Prediction::new(
                    g.record_id.clone(),
                    g.task,
                    parse_generation_with(g.task, &g.generation, &policy),
                )
            }
        });
        write_lines(artifact, predictions.iter().map(prediction_to_line))
    }

    fn stage_score(&self, artifact: &Path) -> Result<(), PipelineError> {
        let path = self.require(Stage::Score, Stage::Parse)?;
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        let mut predictions: BTreeMap<TaskKind, Vec<Prediction>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let p = prediction_from_line(line, i + 1).map_err(|e| PipelineError::Artifact {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            predictions.entry(p.task).or_default().push(p);
        }
        let mut gold: BTreeMap<TaskKind, Vec<Record>> = BTreeMap::new();
        for r in self.eval_records()? {
            gold.entry(r.task).or_default().push(r);
        }
        let mut metrics = Vec::new();
        let mut errors = BTreeMap::new();
        for task in TaskKind::ALL {
            let g = gold.remove(&task).unwrap_or_default();
            let p = predictions.remove(&task).unwrap_or_default();
            metrics.push(score_task(task, &g, &p)?);
            if self.cfg.report.errors {
                errors.insert(task, classify_errors(task, &g, &p)?);
            }
        }
        let baseline = match self.cfg.baseline_report() {
            Some(p) => Some(load_report(&p)?),
            None => None,
        };
        let mut report = aggregate_report(metrics, baseline.as_ref())?;
        report.parse_policy = Some(self.cfg.parse_policy_label());
        if self.cfg.report.errors {
            report.errors = Some(errors);
        }
        let mut json = serde_json::to_string_pretty(&report).expect("serializable");
        json.push('\n');
        std::fs::write(artifact, json).map_err(io_err(artifact))
    }

    fn stage_report(&self, artifact: &Path) -> Result<(), PipelineError> {
        let report = load_report(&self.require(Stage::Report, Stage::Score)?)?;
        std::fs::write(artifact, render_table(&report)).map_err(io_err(artifact))
    }

    /// Writes the blended training set as instruction examples with
    /// self-excluding retrieval, plus trainer hyperparameters.
    pub fn export_training(&self, out_dir: &Path) -> Result<(PathBuf, usize), PipelineError> {
        let blended = blend(&self.train_corpora()?, self.cfg.seed)?;
        let prompts = self.training_prompts(&blended)?;
        std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
        let path = out_dir.join("train_instructions.jsonl");
        let file = File::create(&path).map_err(io_err(&path))?;
        let n = export_training_file(&blended, &prompts, BufWriter::new(file))?;
        let cfg_path = out_dir.join("training_config.toml");
        std::fs::write(&cfg_path, TrainingExportConfig::default().to_key_value()).map_err(io_err(&cfg_path))?;
        Ok((path, n))
    }

    fn training_prompts(&self, blended: &BlendedCorpus) -> Result<Vec<Prompt>, PipelineError> {
        let templates = self.templates()?;
        if !self.cfg.retrieval.rag {
            return Ok(par::try_map(&blended.records, |r| {
                build_prompt_multi(templates.get(r.task), &[], r)
            })?);
        }
        let embedder = self.cfg.embedder.build()?;
        let index = build_index(&blended.records, embedder.as_ref(), self.cfg.retrieval.index_options())?;
        let mode = RetrievalMode {
            phase: Phase::Train,
            ..self.cfg.retrieval.mode()
        };
        render_with_retrieval(
            &index,
            embedder.as_ref(),
            &blended.records,
            &blended.records,
            &templates,
            mode,
        )
    }
}

fn render_with_retrieval(
    index: &ExampleIndex,
    embedder: &dyn crate::embedding::Embedder,
    pool: &[Record],
    inputs: &[Record],
    templates: &TemplateSet,
    mode: RetrievalMode,
) -> Result<Vec<Prompt>, PipelineError> {
    let by_id: HashMap<&str, &Record> = pool.iter().map(|r| (r.id.as_str(), r)).collect();
    let hits = index.retrieve_batch(embedder, inputs, mode)?;
    let pairs: Vec<(&Record, &Vec<crate::retrieval::Hit>)> = inputs.iter().zip(&hits).collect();
    par::try_map(&pairs, |(input, hits)| {
        let examples: Vec<&Record> = hits
            .iter()
            .map(|h| {
                by_id
                    .get(h.record_id.as_str())
                    .copied()
                    .ok_or_else(|| PipelineError::Artifact {
                        path: Stage::Index.artifact().into(),
                        message: format!("index entry `{}` is not in the blend", h.record_id),
                    })
            })
            .collect::<Result<_, _>>()?;
        Ok(build_prompt_multi(templates.get(input.task), &examples, input)?)
    })
}

/// Reads a `report.json` written by the score stage.
pub fn load_report(path: &Path) -> Result<RunReport, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Artifact {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::fixture_config_toml;
    use crate::fixtures::{generate_fixtures, write_fixtures};

    fn setup(endpoint: &str, extra: &str) -> (tempfile::TempDir, Pipeline) {
        let dir = tempfile::tempdir().unwrap();
        write_fixtures(dir.path(), &generate_fixtures(5, 40)).unwrap();
        let text = fixture_config_toml(5, endpoint) + extra;
        let path = dir.path().join("ramie.toml");
        std::fs::write(&path, text).unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        (dir, Pipeline::new(cfg).unwrap())
    }

    #[test]
    fn oracle_run_is_perfect() {
        let (_dir, p) = setup("mock-oracle", "");
        let outcomes = p.run_all().unwrap();
        assert_eq!(outcomes.len(), 7);
        let report = load_report(&p.artifact_path(Stage::Score)).unwrap();
        for m in &report.tasks {
            assert_eq!(m.f1, 1.0, "{:?}", m.task);
        }
        assert_eq!(report.average_f1, 1.0);
        let table = std::fs::read_to_string(p.artifact_path(Stage::Report)).unwrap();
        assert!(table.contains("Avg F1: 100.00"));
    }

    #[test]
    fn rerun_is_noop_and_changes_propagate() {
        let (_dir, p) = setup("mock-oracle", "");
        p.run_all().unwrap();
        let n = p.manifest().unwrap().len();
        assert!(p.run_all().unwrap().iter().all(|o| o.skipped));
        assert_eq!(p.manifest().unwrap().len(), n);
        std::fs::write(p.artifact_path(Stage::Report), "tampered").unwrap();
        let again = p.run_all().unwrap();
        assert!(!again.last().unwrap().skipped);
        assert!(again[..6].iter().all(|o| o.skipped));
    }

    #[test]
    fn missing_upstream_artifact() {
        let (_dir, p) = setup("mock-oracle", "");
        let err = p.run(&[Stage::Score]).unwrap_err();
        assert!(matches!(
            err,
            PipelineError::MissingArtifact {
                needs: Stage::Parse,
                ..
            }
        ));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn no_rag_prompts_have_no_example() {
        let (_dir, p) = setup("mock-oracle", "");
        let text = std::fs::read_to_string(p.config().base_dir().join("ramie.toml"))
            .unwrap()
            .replace("rag = true", "rag = false");
        let cfg = PipelineConfig::from_toml(&text)
            .unwrap()
            .with_base_dir(p.config().base_dir());
        let p = Pipeline::new(cfg).unwrap();
        p.run(&[Stage::Blend, Stage::Prompts]).unwrap();
        let prompts: Vec<Prompt> = read_jsonl(&p.artifact_path(Stage::Prompts)).unwrap();
        assert!(prompts
            .iter()
            .all(|p| p.example_id.is_none() && !p.text.contains("Example:")));
    }

    #[test]
    fn export_training_writes_every_blend_record() {
        let (dir, p) = setup("mock-oracle", "");
        let (path, n) = p.export_training(&dir.path().join("train")).unwrap();
        assert_eq!(n, 4 * 32);
        let lines = std::fs::read_to_string(path).unwrap();
        assert_eq!(lines.lines().count(), n);
        assert!(dir.path().join("train/training_config.toml").exists());
    }

    #[test]
    fn stage_names_parse() {
        for s in Stage::ALL {
            assert_eq!(s.as_str().parse::<Stage>().unwrap(), s);
        }
        assert!("train".parse::<Stage>().is_err());
    }
}
