//! Pipeline configuration file.
//!
//! Relative paths are resolved against the directory containing the config
//! file, so a fixture directory with its `ramie.toml` can be moved as a unit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{hex, Split};
use crate::embedding::EmbedderSpec;
use crate::generation::GeneratorSpec;
use crate::model::TaskKind;
use crate::parsing::{Leniency, ParsePolicy, Pick};
use crate::retrieval::{Baseline, IndexOptions, Phase, RetrievalMode};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("config: {0}")]
    Invalid(String),
    #[error("missing input file: {0}")]
    MissingFile(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusPaths {
    pub train: PathBuf,
    pub dev: PathBuf,
    pub test: PathBuf,
}

impl CorpusPaths {
    pub fn get(&self, split: Split) -> &Path {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrievalConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub phase: Phase,
    #[serde(default)]
    pub baseline: Baseline,
    #[serde(default = "default_true")]
    pub include_re_question: bool,
    /// Without retrieval the prompts carry no example block.
    #[serde(default = "default_true")]
    pub rag: bool,
    /// Split whose records are prompted, generated and scored.
    #[serde(default = "default_eval_split")]
    pub evaluate_on: Split,
}

fn default_k() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_eval_split() -> Split {
    Split::Test
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k: 1,
            phase: Phase::Test,
            baseline: Baseline::Similarity,
            include_re_question: true,
            rag: true,
            evaluate_on: Split::Test,
        }
    }
}

impl RetrievalConfig {
    pub fn mode(&self) -> RetrievalMode {
        RetrievalMode {
            phase: self.phase,
            k: self.k,
            baseline: self.baseline,
        }
    }

    pub fn index_options(&self) -> IndexOptions {
        IndexOptions {
            include_re_question: self.include_re_question,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// A previous `report.json` to compare against (Perf. Drop columns).
    #[serde(default)]
    pub baseline: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub errors: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            baseline: None,
            errors: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub template_dir: Option<PathBuf>,
    pub corpora: BTreeMap<TaskKind, CorpusPaths>,
    #[serde(default)]
    pub embedder: EmbedderSpec,
    #[serde(default)]
    pub retrieval: RetrievalConfig,
    pub endpoint: GeneratorSpec,
    #[serde(default)]
    pub parsing: ParsePolicy,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Invalid(message) => ConfigError::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Parses config text; relative paths resolve against the current directory.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.message().to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        for task in TaskKind::ALL {
            if !self.corpora.contains_key(&task) {
                return Err(ConfigError::Invalid(format!("no [corpora.{task}] section")));
            }
        }
        if self.retrieval.k == 0 {
            return Err(ConfigError::Invalid("retrieval.k must be positive".into()));
        }
        if let EmbedderSpec::HashedLexical { dim: 0 } = self.embedder {
            return Err(ConfigError::Invalid("embedder.dim must be positive".into()));
        }
        Ok(())
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = dir.into();
        self
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn corpus_path(&self, task: TaskKind, split: Split) -> PathBuf {
        self.resolve(self.corpora[&task].get(split))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn template_dir(&self) -> Option<PathBuf> {
        self.template_dir.as_deref().map(|p| self.resolve(p))
    }

    pub fn baseline_report(&self) -> Option<PathBuf> {
        self.report.baseline.as_deref().map(|p| self.resolve(p))
    }

    /// Every input file the config refers to must exist.
    pub fn validate_paths(&self) -> Result<(), ConfigError> {
        let mut paths: Vec<PathBuf> = Vec::new();
        for task in TaskKind::ALL {
            for split in Split::ALL {
                paths.push(self.corpus_path(task, split));
            }
        }
        paths.extend(self.template_dir());
        paths.extend(self.baseline_report());
        match paths.into_iter().find(|p| !p.exists()) {
            Some(p) => Err(ConfigError::MissingFile(p.display().to_string())),
            None => Ok(()),
        }
    }

    /// SHA-256 of the config as written (paths unresolved), as lowercase hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("serializable config");
        hex(&Sha256::digest(&json))
    }

    pub fn parse_policy_label(&self) -> String {
        let leniency = match self.parsing.leniency {
            Leniency::Strict => "strict",
            Leniency::QuoteTolerant => "quote-tolerant",
            Leniency::ProseStripping => "prose-stripping",
        };
        let pick = match self.parsing.pick {
            Pick::First => "first",
            Pick::Last => "last",
        };
        format!("{leniency} (pick {pick} expression)")
    }
}

/// Config text for a fixture directory written by [`crate::fixtures::write_fixtures`].
pub fn fixture_config_toml(seed: u64, endpoint: &str) -> String {
    let mut out = format!("# Pipeline over the synthetic fixture corpora.\nseed = {seed}\noutput_dir = \"out\"\n\n");
    for task in TaskKind::ALL {
        let dir = task.as_str().to_lowercase();
        out.push_str(&format!(
            "[corpora.{task}]\ntrain = \"{dir}/train.jsonl\"\ndev = \"{dir}/dev.jsonl\"\ntest = \"{dir}/test.jsonl\"\n\n"
        ));
    }
    out.push_str(
        "[embedder]\nkind = \"hashed-lexical\"\ndim = 2048\n\n\
         [retrieval]\nk = 1\nphase = \"test\"\ninclude_re_question = true\nrag = true\nevaluate_on = \"test\"\n\n",
    );
    out.push_str(&format!("[endpoint]\nkind = \"{endpoint}\"\n\n"));
    out.push_str("[parsing]\nleniency = \"prose-stripping\"\npick = \"last\"\n");
    out
}
