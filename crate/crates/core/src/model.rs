//! Task taxonomy, closed label vocabularies and the gold/prediction value types.
//!
//! Every label type accepts its closed set modulo [`normalize_text`] and
//! rejects everything else. Canonical entity-type spellings use spaces
//! (`folic acid`); underscore spellings (`folic_acid`) are accepted on input.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The four extraction tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "NER")]
    Ner,
    #[serde(rename = "RE")]
    Re,
    #[serde(rename = "TE")]
    Te,
    #[serde(rename = "UC")]
    Uc,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [TaskKind::Ner, TaskKind::Re, TaskKind::Te, TaskKind::Uc];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Ner => "NER",
            TaskKind::Re => "RE",
            TaskKind::Te => "TE",
            TaskKind::Uc => "UC",
        }
    }

    /// Position in [`TaskKind::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// Single-label tasks produce exactly one gold label per record.
    pub fn is_single_label(self) -> bool {
        matches!(self, TaskKind::Re | TaskKind::Uc)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize_text(s).as_str() {
            "ner" => Ok(TaskKind::Ner),
            "re" => Ok(TaskKind::Re),
            "te" => Ok(TaskKind::Te),
            "uc" => Ok(TaskKind::Uc),
            _ => Err(LabelError::new(LabelKind::Task, s)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    Task,
    EntityType,
    Relation,
    Usage,
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelKind::Task => "task",
            LabelKind::EntityType => "entity type",
            LabelKind::Relation => "relation",
            LabelKind::Usage => "usage status",
        })
    }
}

/// A label outside its closed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} label `{value}`")]
pub struct LabelError {
    pub kind: LabelKind,
    pub value: String,
}

impl LabelError {
    fn new(kind: LabelKind, value: &str) -> Self {
        Self {
            kind,
            value: value.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error("{0} is empty after normalization")]
    EmptySurface(&'static str),
    #[error("gold output is tagged {found} but the record task is {expected}")]
    GoldTaskMismatch { expected: TaskKind, found: TaskKind },
    #[error("RE records require both re_head and re_tail")]
    MissingRePair,
    #[error("re_head/re_tail are only allowed on RE records (task {0})")]
    UnexpectedRePair(TaskKind),
    #[error("record id is empty")]
    EmptyId,
}

/// Lowercases, trims, and collapses internal whitespace runs to one space.
pub fn normalize_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for word in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

/// Label-position normalization: [`normalize_text`] with underscores read as spaces.
fn normalize_label(raw: &str) -> String {
    normalize_text(&raw.replace('_', " "))
}

macro_rules! closed_label {
    (
        $(#[$meta:meta])*
        $name:ident, $kind:expr, { $($variant:ident => $text:literal),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = LabelError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let key = normalize_label(s);
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| normalize_label(v.as_str()) == key)
                    .ok_or_else(|| LabelError::new($kind, s))
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let raw = String::deserialize(d)?;
                raw.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

closed_label!(
    /// NER entity types: `event` plus fifteen dietary-supplement categories.
    EntityType, LabelKind::EntityType, {
        Event => "event",
        FolicAcid => "folic acid",
        MilkThistle => "milk thistle",
        Ginger => "ginger",
        Chamomile => "chamomile",
        Garlic => "garlic",
        BlackCohosh => "black cohosh",
        Ginkgo => "ginkgo",
        Lavender => "lavender",
        Melatonin => "melatonin",
        Cranberry => "cranberry",
        Ginseng => "ginseng",
        Glucosamine => "glucosamine",
        Dandelion => "dandelion",
        SawPalmetto => "saw palmetto",
        GreenTea => "green tea",
    }
);

closed_label!(
    /// Relation between a supplement head and an adverse-event tail.
    RelationType, LabelKind::Relation, {
        Negative => "negative",
        NotRelated => "not_related",
        Positive => "positive",
    }
);

closed_label!(
    /// Supplement use status of a sentence.
    UsageStatus, LabelKind::Usage, {
        Continue => "continue",
        Discontinue => "discontinue",
        Uncertain => "uncertain",
        Start => "start",
    }
);

pub fn parse_entity_type(name: &str) -> Result<EntityType, LabelError> {
    name.parse()
}

pub fn parse_relation(name: &str) -> Result<RelationType, LabelError> {
    name.parse()
}

pub fn parse_usage(name: &str) -> Result<UsageStatus, LabelError> {
    name.parse()
}

/// A typed entity mention with a normalized, non-empty surface.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityMention {
    pub surface: String,
    pub etype: EntityType,
}

impl EntityMention {
    pub fn new(surface: &str, etype: EntityType) -> Result<Self, ModelError> {
        let surface = normalize_text(surface);
        if surface.is_empty() {
            return Err(ModelError::EmptySurface("entity surface"));
        }
        Ok(Self { surface, etype })
    }
}

/// A (supplement, relation, adverse event) triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: String,
    pub relation: RelationType,
    pub tail: String,
}

impl Triple {
    pub fn new(head: &str, relation: RelationType, tail: &str) -> Result<Self, ModelError> {
        let head = normalize_text(head);
        let tail = normalize_text(tail);
        if head.is_empty() {
            return Err(ModelError::EmptySurface("triple head"));
        }
        if tail.is_empty() {
            return Err(ModelError::EmptySurface("triple tail"));
        }
        Ok(Self { head, relation, tail })
    }
}

/// Gold (or predicted) output of one record, tagged by task.
///
/// NER and TE values are multisets stored in input order; duplicates are kept.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GoldOutput {
    Ner(Vec<EntityMention>),
    Re(RelationType),
    Te(Vec<Triple>),
    Uc(UsageStatus),
}

impl GoldOutput {
    pub fn task(&self) -> TaskKind {
        match self {
            GoldOutput::Ner(_) => TaskKind::Ner,
            GoldOutput::Re(_) => TaskKind::Re,
            GoldOutput::Te(_) => TaskKind::Te,
            GoldOutput::Uc(_) => TaskKind::Uc,
        }
    }

    /// Number of scoreable items (always 1 for RE/UC).
    pub fn item_count(&self) -> usize {
        match self {
            GoldOutput::Ner(items) => items.len(),
            GoldOutput::Te(items) => items.len(),
            GoldOutput::Re(_) | GoldOutput::Uc(_) => 1,
        }
    }

    /// Equality that ignores item order for the multiset-valued tasks.
    pub fn multiset_eq(&self, other: &GoldOutput) -> bool {
        fn sorted<T: Ord + Clone>(v: &[T]) -> Vec<T> {
            let mut v = v.to_vec();
            v.sort();
            v
        }
        match (self, other) {
            (GoldOutput::Ner(a), GoldOutput::Ner(b)) => sorted(a) == sorted(b),
            (GoldOutput::Te(a), GoldOutput::Te(b)) => sorted(a) == sorted(b),
            _ => self == other,
        }
    }
}

/// Head/tail pair given to the model for relation classification.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RePair {
    pub head: String,
    pub tail: String,
}

impl RePair {
    pub fn new(head: &str, tail: &str) -> Result<Self, ModelError> {
        let head = normalize_text(head);
        let tail = normalize_text(tail);
        if head.is_empty() {
            return Err(ModelError::EmptySurface("re_head"));
        }
        if tail.is_empty() {
            return Err(ModelError::EmptySurface("re_tail"));
        }
        Ok(Self { head, tail })
    }
}

/// One annotated sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Record {
    pub id: String,
    pub task: TaskKind,
    /// Raw sentence as annotated.
    pub text: String,
    /// Present exactly when `task` is RE.
    pub re_pair: Option<RePair>,
    pub gold: GoldOutput,
}

impl Record {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        re_pair: Option<RePair>,
        gold: GoldOutput,
    ) -> Result<Self, ModelError> {
        let record = Self {
            id: id.into(),
            task: gold.task(),
            text: text.into(),
            re_pair,
            gold,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.id.is_empty() {
            return Err(ModelError::EmptyId);
        }
        if self.gold.task() != self.task {
            return Err(ModelError::GoldTaskMismatch {
                expected: self.task,
                found: self.gold.task(),
            });
        }
        match (self.task, &self.re_pair) {
            (TaskKind::Re, None) => Err(ModelError::MissingRePair),
            (TaskKind::Re, Some(_)) | (_, None) => Ok(()),
            (task, Some(_)) => Err(ModelError::UnexpectedRePair(task)),
        }
    }

    pub fn normalized_text(&self) -> String {
        normalize_text(&self.text)
    }

    /// The same record under a new id.
    pub fn with_id(&self, id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ..self.clone()
        }
    }
}

/// Globally unique id of a record inside a multi-task collection.
pub fn task_scoped_id(task: TaskKind, id: &str) -> String {
    format!("{}:{}", task.as_str(), id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_text("  Green   Tea "), "green tea");
        assert_eq!(normalize_text("melatonin"), "melatonin");
        assert_eq!(normalize_text("Folic Acid\t400mg"), "folic acid 400mg");
        assert_eq!(normalize_text(" \n\t "), "");
    }

    #[test]
    fn entity_type_examples() {
        assert_eq!(parse_entity_type("folic_acid"), Ok(EntityType::FolicAcid));
        assert_eq!(parse_entity_type("folic acid"), Ok(EntityType::FolicAcid));
        assert_eq!(parse_entity_type("EVENT"), Ok(EntityType::Event));
        assert_eq!(parse_entity_type("  Saw_Palmetto "), Ok(EntityType::SawPalmetto));
        let err = parse_entity_type("turmeric").unwrap_err();
        assert_eq!(err.kind, LabelKind::EntityType);
        assert_eq!(err.value, "turmeric");
    }

    #[test]
    fn closed_set_sizes() {
        assert_eq!(TaskKind::ALL.len(), 4);
        assert_eq!(EntityType::ALL.len(), 16);
        assert_eq!(RelationType::ALL.len(), 3);
        assert_eq!(UsageStatus::ALL.len(), 4);
    }

    #[test]
    fn relation_accepts_space_spelling() {
        assert_eq!(parse_relation("not related"), Ok(RelationType::NotRelated));
        assert_eq!(parse_relation("Not_Related"), Ok(RelationType::NotRelated));
        assert!(parse_relation("unrelated").is_err());
        assert!(parse_usage("restart").is_err());
        assert_eq!(parse_usage(" START"), Ok(UsageStatus::Start));
    }

    #[test]
    fn task_parse() {
        assert_eq!("ner".parse::<TaskKind>(), Ok(TaskKind::Ner));
        assert_eq!("UC".parse::<TaskKind>(), Ok(TaskKind::Uc));
        assert!("QA".parse::<TaskKind>().is_err());
    }

    #[test]
    fn record_validation() {
        let gold = GoldOutput::Re(RelationType::Negative);
        assert_eq!(
            Record::new("r1", "x", None, gold.clone()).unwrap_err(),
            ModelError::MissingRePair
        );
        let pair = RePair::new("Melatonin", "dizziness").unwrap();
        let rec = Record::new("r1", "x", Some(pair.clone()), gold).unwrap();
        assert_eq!(rec.re_pair.as_ref().unwrap().head, "melatonin");

        let uc = GoldOutput::Uc(UsageStatus::Start);
        assert_eq!(
            Record::new("u1", "x", Some(pair), uc).unwrap_err(),
            ModelError::UnexpectedRePair(TaskKind::Uc)
        );
        assert!(EntityMention::new("  ", EntityType::Event).is_err());
        assert!(Triple::new("ginger", RelationType::Positive, "").is_err());
    }

    #[test]
    fn multiset_equality_ignores_order_but_not_multiplicity() {
        let a = EntityMention::new("nausea", EntityType::Event).unwrap();
        let b = EntityMention::new("ginger", EntityType::Ginger).unwrap();
        let x = GoldOutput::Ner(vec![a.clone(), b.clone()]);
        let y = GoldOutput::Ner(vec![b.clone(), a.clone()]);
        let z = GoldOutput::Ner(vec![b, a.clone(), a]);
        assert!(x.multiset_eq(&y));
        assert!(!x.multiset_eq(&z));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC*") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once);
        }

        #[test]
        fn entity_parser_accepts_exactly_closed_set(s in "[a-zA-Z_ ]{0,16}") {
            let key = normalize_text(&s.replace('_', " "));
            let member = EntityType::ALL.iter().any(|t| t.as_str() == key);
            prop_assert_eq!(parse_entity_type(&s).is_ok(), member);
        }

        #[test]
        fn label_spellings_round_trip(i in 0usize..16, upper in any::<bool>(), underscore in any::<bool>()) {
            let canonical = EntityType::ALL[i].as_str();
            let mut spelled = if underscore { canonical.replace(' ', "_") } else { canonical.to_string() };
            if upper { spelled = spelled.to_uppercase(); }
            prop_assert_eq!(parse_entity_type(&spelled), Ok(EntityType::ALL[i]));
        }
    }
}
