//! Reference implementations and generators shared by integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use ramie::model::{
    normalize_text, EntityMention, EntityType, GoldOutput, RePair, Record, RelationType, TaskKind, Triple, UsageStatus,
};
use ramie::parsing::{Prediction, Reason};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Embedding oracle

/// Exact sparse feature map: word unigrams and character 3-grams with counts, no hashing.
pub fn sparse_features(text: &str) -> BTreeMap<(char, String), f64> {
    let norm = normalize_text(text);
    let mut out = BTreeMap::new();
    let mut word = String::new();
    for c in norm.chars().chain(std::iter::once(' ')) {
        if c.is_alphanumeric() {
            word.push(c);
        } else if !word.is_empty() {
            *out.entry(('w', std::mem::take(&mut word))).or_insert(0.0) += 1.0;
        }
    }
    let chars: Vec<char> = norm.chars().collect();
    for w in chars.windows(3) {
        *out.entry(('c', w.iter().collect())).or_insert(0.0) += 1.0;
    }
    out
}

/// Cosine of two exact sparse feature maps; 0 if either is empty.
pub fn sparse_cosine(a: &str, b: &str) -> f64 {
    let fa = sparse_features(a);
    let fb = sparse_features(b);
    let dot: f64 = fa.iter().filter_map(|(k, v)| fb.get(k).map(|w| v * w)).sum();
    let na: f64 = fa.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = fb.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

// ---------------------------------------------------------------------------
// Scoring oracle

/// Largest number of predicted items that can be paired one-to-one with equal gold items,
/// found by exhaustive search over assignments.
fn max_matching<T: PartialEq>(gold: &[T], pred: &[T]) -> usize {
    fn go<T: PartialEq>(gold: &[T], pred: &[T], used: &mut Vec<bool>) -> usize {
        let Some((p, rest)) = pred.split_first() else {
            return 0;
        };
        let mut best = go(gold, rest, used);
        for (j, g) in gold.iter().enumerate() {
            if !used[j] && g == p {
                used[j] = true;
                best = best.max(1 + go(gold, rest, used));
                used[j] = false;
            }
        }
        best
    }
    go(gold, pred, &mut vec![false; gold.len()])
}

/// (tp, fp, fn) summed over records, by brute force.
pub fn brute_force_counts(gold: &[Record], preds: &[Prediction]) -> (usize, usize, usize) {
    let by_id: BTreeMap<&str, &Prediction> = preds.iter().map(|p| (p.record_id.as_str(), p)).collect();
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for g in gold {
        let p = by_id[g.id.as_str()];
        let value = if p.is_malformed() { None } else { p.value.as_ref() };
        match (&g.gold, value) {
            (GoldOutput::Ner(gi), Some(GoldOutput::Ner(pi))) => {
                let m = max_matching(gi, pi);
                tp += m;
                fp += pi.len() - m;
                fn_ += gi.len() - m;
            }
            (GoldOutput::Te(gi), Some(GoldOutput::Te(pi))) => {
                let m = max_matching(gi, pi);
                tp += m;
                fp += pi.len() - m;
                fn_ += gi.len() - m;
            }
            (GoldOutput::Ner(gi), None) => fn_ += gi.len(),
            (GoldOutput::Te(gi), None) => fn_ += gi.len(),
            (a, Some(b)) if a == b => tp += 1,
            _ => {
                fp += 1;
                fn_ += 1;
            }
        }
    }
    (tp, fp, fn_)
}

// ---------------------------------------------------------------------------
// Random corpora

const SURFACES: &[&str] = &[
    "ginger",
    "rash",
    "garlic",
    "motion sickness",
    "mild motion sickness",
    "nausea",
];
const TYPES: &[EntityType] = &[EntityType::Event, EntityType::Ginger, EntityType::Garlic];

fn random_item(task: TaskKind, rng: &mut ChaCha8Rng) -> GoldOutput {
    let surface = |rng: &mut ChaCha8Rng| *SURFACES.choose(rng).unwrap();
    let relation = |rng: &mut ChaCha8Rng| *RelationType::ALL.choose(rng).unwrap();
    match task {
        TaskKind::Ner => {
            let n = rng.random_range(0..5);
            GoldOutput::Ner(
                (0..n)
                    .map(|_| EntityMention::new(surface(rng), *TYPES.choose(rng).unwrap()).unwrap())
                    .collect(),
            )
        }
        TaskKind::Te => {
            let n = rng.random_range(0..4);
            GoldOutput::Te(
                (0..n)
                    .map(|_| Triple::new(surface(rng), relation(rng), surface(rng)).unwrap())
                    .collect(),
            )
        }
        TaskKind::Re => GoldOutput::Re(relation(rng)),
        TaskKind::Uc => GoldOutput::Uc(*UsageStatus::ALL.choose(rng).unwrap()),
    }
}

/// Predicted output derived from `gold` by random edits.
fn perturb(gold: &GoldOutput, rng: &mut ChaCha8Rng) -> GoldOutput {
    let task = gold.task();
    match gold {
        GoldOutput::Ner(items) => {
            let mut items = items.clone();
            if rng.random_bool(0.3) && !items.is_empty() {
                let i = rng.random_range(0..items.len());
                items.remove(i);
            }
            if rng.random_bool(0.3) {
                if let GoldOutput::Ner(extra) = random_item(task, rng) {
                    items.extend(extra.into_iter().take(2));
                }
            }
            if rng.random_bool(0.2) && !items.is_empty() {
                items.push(items[0].clone());
            }
            GoldOutput::Ner(items)
        }
        GoldOutput::Te(items) => {
            let mut items = items.clone();
            if rng.random_bool(0.3) && !items.is_empty() {
                items.pop();
            }
            if rng.random_bool(0.3) {
                if let GoldOutput::Te(extra) = random_item(task, rng) {
                    items.extend(extra.into_iter().take(1));
                }
            }
            GoldOutput::Te(items)
        }
        other => {
            if rng.random_bool(0.3) {
                random_item(task, rng)
            } else {
                other.clone()
            }
        }
    }
}

/// A random gold corpus of `n` records and predictions for it, shuffled.
pub fn random_scored_corpus(task: TaskKind, n: usize, seed: u64) -> (Vec<Record>, Vec<Prediction>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gold = Vec::with_capacity(n);
    let mut preds = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("r{i}");
        let out = random_item(task, &mut rng);
        let pair = (task == TaskKind::Re).then(|| RePair::new("ginger", "rash").unwrap());
        let p = match rng.random_range(0..10) {
            0 => Prediction::malformed(id.clone(), task, Reason::NoExpression),
            1..=3 => Prediction::from_gold(id.clone(), out.clone()),
            _ => Prediction::from_gold(id.clone(), perturb(&out, &mut rng)),
        };
        gold.push(Record::new(id, "sentence", pair, out).unwrap());
        preds.push(p);
    }
    use rand::seq::SliceRandom;
    preds.shuffle(&mut rng);
    (gold, preds)
}

// ---------------------------------------------------------------------------
// Published scores

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn published() -> serde_json::Value {
    let text = std::fs::read_to_string(data_path("published_scores.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn nums(v: &serde_json::Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

/// The four task F1 values of a table row with per-task [P, R, F1] triples.
pub fn row_f1s(row: &serde_json::Value) -> [f64; 4] {
    let f = |k: &str| nums(&row[k])[2];
    [f("ner"), f("re"), f("te"), f("uc")]
}

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}
