//! Synthetic desk-scale corpora.
//!
//! Sentences are assembled from clinical-note style templates over a small
//! vocabulary of supplements and adverse events. Output is fully determined by
//! the seed, so the checked-in fixtures can be regenerated byte for byte.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{save_records, Corpus, DatasetError, Split};
use crate::model::{
    EntityMention, EntityType, GoldOutput, RePair, Record, RelationType, TaskKind, Triple, UsageStatus,
};

pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_PER_TASK: usize = 60;

const SUPPLEMENTS: &[(&str, EntityType)] = &[
    ("ginger", EntityType::Ginger),
    ("ginger root", EntityType::Ginger),
    ("ginger tea", EntityType::Ginger),
    ("ginkgo", EntityType::Ginkgo),
    ("ginkgo biloba", EntityType::Ginkgo),
    ("ginseng", EntityType::Ginseng),
    ("ginseng tea", EntityType::Ginseng),
    ("green tea", EntityType::GreenTea),
    ("green tea extract", EntityType::GreenTea),
    ("folic acid", EntityType::FolicAcid),
    ("milk thistle", EntityType::MilkThistle),
    ("chamomile", EntityType::Chamomile),
    ("chamomile tea", EntityType::Chamomile),
    ("garlic", EntityType::Garlic),
    ("garlic pills", EntityType::Garlic),
    ("black cohosh", EntityType::BlackCohosh),
    ("lavender", EntityType::Lavender),
    ("lavender oil", EntityType::Lavender),
    ("melatonin", EntityType::Melatonin),
    ("cranberry", EntityType::Cranberry),
    ("cranberry juice", EntityType::Cranberry),
    ("cranberry tablets", EntityType::Cranberry),
    ("glucosamine", EntityType::Glucosamine),
    ("dandelion", EntityType::Dandelion),
    ("dandelion root", EntityType::Dandelion),
    ("saw palmetto", EntityType::SawPalmetto),
];

const EVENTS: &[&str] = &[
    "nausea",
    "dizziness",
    "morning dizziness",
    "insomnia",
    "bleeding",
    "constipation",
    "rash",
    "headache",
    "anxiety",
    "tinnitus",
    "night sweats",
    "hot flashes",
    "heartburn",
    "fatigue",
    "motion sickness",
    "joint pain",
    "urinary tract infection",
    "indigestion",
    "palpitations",
    "diarrhea",
    "bruising",
    "muscle cramps",
];

const OTHER_SUPPLEMENTS: &[&str] = &[
    "vitamin d3",
    "fish oil",
    "vitamin b12",
    "magnesium",
    "probiotics",
    "vitamin e",
    "calcium",
    "turmeric",
];

const DOSES: &[&str] = &["400mg", "1000 unit", "5 mg", "2 tabs", "500 mg", "3 mg", "1 capsule"];

const TAILS: &[&str] = &[
    "",
    " per pt",
    " per daughter",
    " at last visit",
    " , will monitor",
    " today",
    " per chart review",
    " at home",
];

const NER_TEMPLATES: &[&str] = &[
    "pt reports {ev} since starting {ds}",
    "{ds} and {ds2} may increase the risk of {ev} , especially with aspirin",
    "she takes {ds} nightly for {ev}",
    "denies {ev} ; continues {ds} daily",
    "pt expressed {ev} but comforted with support breathing and {ds}",
    "{ev}-use of {ds}-seems to be better with this",
    "recommended {ds} for {ev} and {ev2}",
    "no {ev} noted after stopping {ds}",
    "family member asks whether {ds} could cause {ev}",
    "discussed diet ; pt drinks {ds} most mornings",
    "follow up in 2 weeks for {ev}",
    "lab work reviewed , no changes to {other}",
];

const RE_TEMPLATES: &[(&str, RelationType)] = &[
    ("{ds} has been helpful for her {ev}", RelationType::Positive),
    ("uses {ds} to treat {ev} with good effect", RelationType::Positive),
    ("{ev}-use of {ds}-seems to be better with this", RelationType::Positive),
    ("{ds} has been studied for use in treating {ev}", RelationType::Positive),
    ("she has tried {ds} but it increased the {ev}", RelationType::Negative),
    ("pt reports {ev} after starting {ds}", RelationType::Negative),
    ("{ds} may be causing her {ev}", RelationType::Negative),
    ("stopped {ds} due to {ev}", RelationType::Negative),
    (
        "will add {ds} for sleep , fiber to decrease {ev}",
        RelationType::NotRelated,
    ),
    (
        "{ev} is unchanged ; also takes {ds} for general health",
        RelationType::NotRelated,
    ),
    (
        "{ds} discussed , {ev} attributed to new medication",
        RelationType::NotRelated,
    ),
];

const UC_TEMPLATES: &[(&str, UsageStatus)] = &[
    ("continue {sup} daily", UsageStatus::Continue),
    ("continue {sup} {dose} at bedtime", UsageStatus::Continue),
    ("pt will continue taking {sup}", UsageStatus::Continue),
    ("note stop {sup}", UsageStatus::Discontinue),
    ("discontinue {sup} due to {ev}", UsageStatus::Discontinue),
    ("pt stopped {sup} last month", UsageStatus::Discontinue),
    ("start {sup} {dose} daily", UsageStatus::Start),
    ("currently prescribe {sup} {dose} daily", UsageStatus::Start),
    ("begin {sup} with meals", UsageStatus::Start),
    ("suggest take {sup} {dose} daily", UsageStatus::Uncertain),
    ("consider {sup} for {ev}", UsageStatus::Uncertain),
    ("may try {sup} if symptoms persist", UsageStatus::Uncertain),
];

/// Slot values drawn for one sentence.
struct Draw {
    ds: (&'static str, EntityType),
    ds2: (&'static str, EntityType),
    ev: &'static str,
    ev2: &'static str,
    other: &'static str,
    dose: &'static str,
    sup: &'static str,
    tail: &'static str,
}

impl Draw {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let ds = *SUPPLEMENTS.choose(rng).expect("non-empty");
        let ds2 = loop {
            let c = *SUPPLEMENTS.choose(rng).expect("non-empty");
            if c.1 != ds.1 {
                break c;
            }
        };
        let ev = *EVENTS.choose(rng).expect("non-empty");
        let ev2 = loop {
            let c = *EVENTS.choose(rng).expect("non-empty");
            if !c.contains(ev) && !ev.contains(c) {
                break c;
            }
        };
        let sup = if rng.random_bool(0.7) {
            SUPPLEMENTS.choose(rng).expect("non-empty").0
        } else {
            OTHER_SUPPLEMENTS.choose(rng).expect("non-empty")
        };
        Self {
            ds,
            ds2,
            ev,
            ev2,
            other: OTHER_SUPPLEMENTS.choose(rng).expect("non-empty"),
            dose: DOSES.choose(rng).expect("non-empty"),
            sup,
            tail: TAILS.choose(rng).expect("non-empty"),
        }
    }

    fn slot(&self, name: &str) -> &'static str {
        match name {
            "ds" => self.ds.0,
            "ds2" => self.ds2.0,
            "ev" => self.ev,
            "ev2" => self.ev2,
            "other" => self.other,
            "dose" => self.dose,
            "sup" => self.sup,
            _ => unreachable!("unknown slot {name}"),
        }
    }

    /// Fills the template; returns the sentence and the slot names in order of appearance.
    fn render(&self, template: &str, rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
        let mut text = String::new();
        let mut slots = Vec::new();
        let mut rest = template;
        while let Some(open) = rest.find('{') {
            text.push_str(&rest[..open]);
            let close = open + rest[open..].find('}').expect("closed slot");
            let name = &rest[open + 1..close];
            text.push_str(self.slot(name));
            slots.push(name.to_string());
            rest = &rest[close + 1..];
        }
        text.push_str(rest);
        text.push_str(self.tail);
        if rng.random_bool(0.5) {
            let mut chars = text.chars();
            if let Some(first) = chars.next() {
                text = first.to_uppercase().chain(chars).collect();
            }
        }
        (text, slots)
    }
}

fn ner_record(rng: &mut ChaCha8Rng) -> (String, Option<RePair>, GoldOutput) {
    let d = Draw::new(rng);
    let template = NER_TEMPLATES.choose(rng).expect("non-empty");
    let (text, slots) = d.render(template, rng);
    let mentions = slots
        .iter()
        .filter_map(|s| match s.as_str() {
            "ds" => Some((d.ds.0, d.ds.1)),
            "ds2" => Some((d.ds2.0, d.ds2.1)),
            "ev" => Some((d.ev, EntityType::Event)),
            "ev2" => Some((d.ev2, EntityType::Event)),
            _ => None,
        })
        .map(|(s, t)| EntityMention::new(s, t).expect("non-empty surface"))
        .collect();
    (text, None, GoldOutput::Ner(mentions))
}

fn re_record(rng: &mut ChaCha8Rng) -> (String, Option<RePair>, GoldOutput) {
    let d = Draw::new(rng);
    let (template, rel) = RE_TEMPLATES.choose(rng).expect("non-empty");
    let (text, _) = d.render(template, rng);
    let pair = RePair::new(d.ds.0, d.ev).expect("non-empty pair");
    (text, Some(pair), GoldOutput::Re(*rel))
}

fn te_record(rng: &mut ChaCha8Rng) -> (String, Option<RePair>, GoldOutput) {
    let d = Draw::new(rng);
    let triple = |head: &str, rel, tail: &str| Triple::new(head, rel, tail).expect("non-empty triple");
    match rng.random_range(0..10) {
        0 => {
            let text = format!("{} helps her {} but causes {}{}", d.ds.0, d.ev, d.ev2, d.tail);
            let gold = vec![
                triple(d.ds.0, RelationType::Positive, d.ev),
                triple(d.ds.0, RelationType::Negative, d.ev2),
            ];
            (text, None, GoldOutput::Te(gold))
        }
        1 => {
            let (text, _) = d.render("lab work reviewed , no changes to {other}", rng);
            (text, None, GoldOutput::Te(Vec::new()))
        }
        _ => {
            let (template, rel) = RE_TEMPLATES.choose(rng).expect("non-empty");
            let (text, _) = d.render(template, rng);
            let gold = if *rel == RelationType::NotRelated {
                Vec::new()
            } else {
                vec![triple(d.ds.0, *rel, d.ev)]
            };
            (text, None, GoldOutput::Te(gold))
        }
    }
}

fn uc_record(rng: &mut ChaCha8Rng) -> (String, Option<RePair>, GoldOutput) {
    let d = Draw::new(rng);
    let (template, status) = UC_TEMPLATES.choose(rng).expect("non-empty");
    let (text, _) = d.render(template, rng);
    (text, None, GoldOutput::Uc(*status))
}

/// `n` records of one task with pairwise distinct normalized sentences.
pub fn generate_records(task: TaskKind, n: usize, seed: u64) -> Vec<Record> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((task.index() as u64 + 1) << 32));
    let make = match task {
        TaskKind::Ner => ner_record,
        TaskKind::Re => re_record,
        TaskKind::Te => te_record,
        TaskKind::Uc => uc_record,
    };
    let prefix = task.as_str().to_lowercase();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let (text, pair, gold) = make(&mut rng);
        let record = Record::new(format!("{prefix}-{:04}", out.len() + 1), &text, pair, gold)
            .expect("generated records are valid");
        if seen.insert(record.normalized_text()) {
            out.push(record);
        }
    }
    out
}

/// Train/dev/test corpora for all four tasks, split 8:1:1.
#[derive(Debug, Clone)]
pub struct FixtureSet {
    pub corpora: BTreeMap<(TaskKind, Split), Corpus>,
}

impl FixtureSet {
    pub fn get(&self, task: TaskKind, split: Split) -> &Corpus {
        &self.corpora[&(task, split)]
    }
}

pub fn generate_fixtures(seed: u64, per_task: usize) -> FixtureSet {
    let mut corpora = BTreeMap::new();
    for task in TaskKind::ALL {
        let records = generate_records(task, per_task, seed);
        let n_test = per_task / 10;
        let n_dev = per_task / 10;
        let n_train = per_task - n_dev - n_test;
        let mut it = records.into_iter();
        for (split, n) in [(Split::Train, n_train), (Split::Dev, n_dev), (Split::Test, n_test)] {
            let part: Vec<Record> = it.by_ref().take(n).collect();
            corpora.insert(
                (task, split),
                Corpus::new(task, split, part).expect("generated corpus is valid"),
            );
        }
    }
    FixtureSet { corpora }
}

/// Relative path of a fixture corpus file, e.g. `ner/train.jsonl`.
pub fn corpus_path(task: TaskKind, split: Split) -> PathBuf {
    Path::new(&task.as_str().to_lowercase()).join(format!("{}.jsonl", split.as_str()))
}

/// Writes every corpus under `dir`; returns the written paths.
pub fn write_fixtures(dir: &Path, set: &FixtureSet) -> Result<Vec<PathBuf>, DatasetError> {
    let mut written = Vec::new();
    for ((task, split), corpus) in &set.corpora {
        let path = dir.join(corpus_path(*task, *split));
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| DatasetError::io(parent, e))?;
        }
        save_records(&path, &corpus.records)?;
        written.push(path);
    }
    Ok(written)
}
