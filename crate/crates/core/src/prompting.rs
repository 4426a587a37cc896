//! Prompt rendering and the canonical response grammar.
//!
//! A prompt is an instruction block, an optional `Example:` block holding a
//! retrieved sentence with its response, and an `Input:` block that ends with
//! an empty `Response:` cue. Gold outputs serialize to Python-literal style
//! lists with single-quoted strings, which is also what the parser reads back.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EntityType, GoldOutput, Record, RelationType, TaskKind, UsageStatus};

/// Version tag of the built-in templates.
pub const TEMPLATE_VERSION: &str = "v1";

const BUILTIN_NER: &str = include_str!("../templates/v1/ner.txt");
const BUILTIN_RE: &str = include_str!("../templates/v1/re.txt");
const BUILTIN_TE: &str = include_str!("../templates/v1/te.txt");
const BUILTIN_UC: &str = include_str!("../templates/v1/uc.txt");

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("template for {task} is missing the {{{slot}}} slot")]
    MissingSlot { task: TaskKind, slot: &'static str },
    #[error("template for {task} contains the {{{slot}}} slot more than once")]
    DuplicateSlot { task: TaskKind, slot: &'static str },
    #[error("example task {example} does not match input task {input}")]
    TaskMismatch { example: TaskKind, input: TaskKind },
    #[error("template task {template} cannot render a {input} record")]
    TemplateMismatch { template: TaskKind, input: TaskKind },
    #[error("reading template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Quotes a string the way the response grammar expects.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            _ => out.push(c),
        }
    }
    out.push('\'');
    out
}

/// Canonical response text of a gold output.
///
/// ```
/// use ramie::model::{GoldOutput, UsageStatus};
/// use ramie::prompting::serialize_gold;
/// assert_eq!(serialize_gold(&GoldOutput::Uc(UsageStatus::Continue)), "['continue']");
/// ```
pub fn serialize_gold(gold: &GoldOutput) -> String {
    let items: Vec<String> = match gold {
        GoldOutput::Ner(mentions) => mentions
            .iter()
            .map(|m| format!("{{{}: {}}}", quote(&m.surface), quote(m.etype.as_str())))
            .collect(),
        GoldOutput::Re(rel) => vec![quote(rel.as_str())],
        GoldOutput::Te(triples) => triples
            .iter()
            .map(|t| {
                format!(
                    "{{'head entity': {}, 'relation': {}, 'tail entity': {}}}",
                    quote(&t.head),
                    quote(t.relation.as_str()),
                    quote(&t.tail)
                )
            })
            .collect(),
        GoldOutput::Uc(status) => vec![quote(status.as_str())],
    };
    format!("[{}]", items.join(", "))
}

/// The closed label list shown in a task's instruction, e.g. `'negative', 'not_related', 'positive'`.
pub fn label_list(task: TaskKind) -> String {
    let labels: Vec<&str> = match task {
        TaskKind::Ner => EntityType::ALL.iter().map(|t| t.as_str()).collect(),
        TaskKind::Re | TaskKind::Te => RelationType::ALL.iter().map(|t| t.as_str()).collect(),
        TaskKind::Uc => UsageStatus::ALL.iter().map(|t| t.as_str()).collect(),
    };
    labels.iter().map(|l| quote(l)).collect::<Vec<_>>().join(", ")
}

/// Sentence as shown to the model: whitespace collapsed, case kept, and for
/// RE the head/tail question appended.
pub fn display_sentence(record: &Record) -> String {
    let sentence = record.text.split_whitespace().collect::<Vec<_>>().join(" ");
    match &record.re_pair {
        Some(pair) => format!(
            "{sentence} The relationship between {} and {} is?",
            pair.head, pair.tail
        ),
        None => sentence,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Labels,
    Example,
    Input,
}

const SLOTS: [(&str, &str); 3] = [("labels", "{labels}"), ("example", "{example}"), ("input", "{input}")];

/// A per-task prompt layout with the named slots `{labels}`, `{example}` and `{input}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub task: TaskKind,
    segments: Vec<Segment>,
}

impl PromptTemplate {
    /// Parses template source. Each slot must appear exactly once; other braces are literal.
    pub fn parse(task: TaskKind, source: &str) -> Result<Self, PromptError> {
        let source = source.trim_end_matches(['\n', '\r']);
        for (name, token) in SLOTS {
            match source.matches(token).count() {
                0 => return Err(PromptError::MissingSlot { task, slot: name }),
                1 => {}
                _ => return Err(PromptError::DuplicateSlot { task, slot: name }),
            }
        }
        let mut segments = Vec::new();
        let mut rest = source;
        while !rest.is_empty() {
            let next = SLOTS
                .iter()
                .filter_map(|(name, token)| rest.find(token).map(|pos| (pos, *name, token.len())))
                .min_by_key(|(pos, _, _)| *pos);
            match next {
                Some((pos, name, len)) => {
                    if pos > 0 {
                        segments.push(Segment::Text(rest[..pos].to_string()));
                    }
                    segments.push(match name {
                        "labels" => Segment::Labels,
                        "example" => Segment::Example,
                        _ => Segment::Input,
                    });
                    rest = &rest[pos + len..];
                }
                None => {
                    segments.push(Segment::Text(rest.to_string()));
                    rest = "";
                }
            }
        }
        Ok(Self { task, segments })
    }

    pub fn builtin(task: TaskKind) -> Self {
        let source = match task {
            TaskKind::Ner => BUILTIN_NER,
            TaskKind::Re => BUILTIN_RE,
            TaskKind::Te => BUILTIN_TE,
            TaskKind::Uc => BUILTIN_UC,
        };
        Self::parse(task, source).expect("built-in templates are well formed")
    }

    /// Instruction block: everything before the example slot, labels filled in.
    pub fn instruction_text(&self) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Labels => out.push_str(&label_list(self.task)),
                Segment::Example | Segment::Input => break,
            }
        }
        out.trim_end().to_string()
    }

    fn render(&self, examples: &[&Record], input: &Record) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Labels => out.push_str(&label_list(self.task)),
                Segment::Example => {
                    for ex in examples {
                        let _ = write!(
                            out,
                            "Example:\nSentence: {}\nResponse: {}\n\n",
                            display_sentence(ex),
                            serialize_gold(&ex.gold)
                        );
                    }
                }
                Segment::Input => out.push_str(&display_sentence(input)),
            }
        }
        out
    }
}

/// The four task templates used by one experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: [PromptTemplate; 4],
}

impl TemplateSet {
    pub fn builtin() -> Self {
        Self {
            templates: TaskKind::ALL.map(PromptTemplate::builtin),
        }
    }

    /// Loads `ner.txt`, `re.txt`, `te.txt` and `uc.txt` from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut loaded = Vec::with_capacity(4);
        for task in TaskKind::ALL {
            let path = dir.join(format!("{}.txt", task.as_str().to_lowercase()));
            let source = std::fs::read_to_string(&path).map_err(|source| PromptError::Io {
                path: path.display().to_string(),
                source,
            })?;
            loaded.push(PromptTemplate::parse(task, &source)?);
        }
        let templates: [PromptTemplate; 4] = loaded.try_into().expect("four templates");
        Ok(Self { templates })
    }

    pub fn get(&self, task: TaskKind) -> &PromptTemplate {
        &self.templates[task.index()]
    }
}

/// A rendered prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    #[serde(rename = "id")]
    pub record_id: String,
    pub task: TaskKind,
    /// Id of the injected example; `None` in no-RAG mode.
    pub example_id: Option<String>,
    /// All injected example ids when more than one example is rendered.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub example_ids: Vec<String>,
    #[serde(rename = "prompt")]
    pub text: String,
}

pub fn build_prompt(
    template: &PromptTemplate,
    example: Option<&Record>,
    input: &Record,
) -> Result<Prompt, PromptError> {
    let examples: Vec<&Record> = example.into_iter().collect();
    build_prompt_multi(template, &examples, input)
}

/// Renders a prompt with any number of in-context examples, in the given order.
pub fn build_prompt_multi(
    template: &PromptTemplate,
    examples: &[&Record],
    input: &Record,
) -> Result<Prompt, PromptError> {
    if template.task != input.task {
        return Err(PromptError::TemplateMismatch {
            template: template.task,
            input: input.task,
        });
    }
    if let Some(ex) = examples.iter().find(|ex| ex.task != input.task) {
        return Err(PromptError::TaskMismatch {
            example: ex.task,
            input: input.task,
        });
    }
    Ok(Prompt {
        record_id: input.id.clone(),
        task: input.task,
        example_id: examples.first().map(|ex| ex.id.clone()),
        example_ids: if examples.len() > 1 {
            examples.iter().map(|ex| ex.id.clone()).collect()
        } else {
            Vec::new()
        },
        text: template.render(examples, input),
    })
}

/// Response text of the first example block of a rendered prompt, if any.
pub fn example_response(prompt_text: &str) -> Option<&str> {
    let start = prompt_text.find("Example:\n")?;
    let block = &prompt_text[start..];
    let resp = block.find("\nResponse: ")? + "\nResponse: ".len();
    let line = &block[resp..];
    Some(line.split('\n').next().unwrap_or(line))
}
