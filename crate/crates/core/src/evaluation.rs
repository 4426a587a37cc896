//! Exact-match scoring, error taxonomy and report statistics.
//!
//! NER and TE are scored per item: within a record the predicted and gold
//! items are matched as multisets, and counts are summed over records (micro
//! averaging). RE and UC have one label per record, so a miss counts as both
//! a false positive and a false negative and precision, recall and F1 coincide.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EntityMention, GoldOutput, Record, TaskKind, Triple};
use crate::par;
use crate::parsing::{ParseStatus, Prediction};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no prediction for gold record `{0}`")]
    MissingPrediction(String),
    #[error("prediction `{0}` has no gold record")]
    UnknownPrediction(String),
    #[error("prediction `{0}` appears more than once")]
    DuplicatePrediction(String),
    #[error("gold record `{0}` appears more than once")]
    DuplicateGold(String),
    #[error("record `{id}` is {found} but the task being scored is {expected}")]
    TaskMismatch {
        id: String,
        expected: TaskKind,
        found: TaskKind,
    },
    #[error("no metrics for task {0}")]
    MissingTask(TaskKind),
    #[error("metrics for task {0} supplied more than once")]
    DuplicateTask(TaskKind),
}

/// Rounds half away from zero to two decimals, as scores are reported.
pub fn round2(x: f64) -> f64 {
    (x * 100.0 + x.signum() * 1e-9).round() / 100.0
}

/// (precision, recall, F1) from counts, with 0 for empty denominators.
pub fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f = if p + r == 0.0 {
        0.0
    } else if p == r {
        p
    } else {
        2.0 * p * r / (p + r)
    };
    (p, r, f)
}

/// Mean of the four task F1 percentages, rounded to two decimals.
pub fn average_f1_pct(f1s: &[f64; 4]) -> f64 {
    round2(f1s.iter().sum::<f64>() / 4.0)
}

/// Signed relative drop of `value` against `baseline` in percent (positive = worse).
pub fn relative_drop_pct(baseline: f64, value: f64) -> f64 {
    round2((baseline - value) / baseline * 100.0)
}

/// Per-record match counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    fn add(self, o: Counts) -> Counts {
        Counts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

fn multiset_counts<T: Ord>(gold: &[T], pred: &[T]) -> Counts {
    let mut bag: BTreeMap<&T, usize> = BTreeMap::new();
    for g in gold {
        *bag.entry(g).or_default() += 1;
    }
    let mut tp = 0;
    for p in pred {
        if let Some(n) = bag.get_mut(p) {
            if *n > 0 {
                *n -= 1;
                tp += 1;
            }
        }
    }
    Counts {
        tp,
        fp: pred.len() - tp,
        fn_: gold.len() - tp,
    }
}

/// Counts for one record. `None` (or a value of the wrong task) is a malformed prediction.
pub fn record_counts(gold: &GoldOutput, pred: Option<&GoldOutput>) -> Counts {
    let pred = pred.filter(|p| p.task() == gold.task());
    match (gold, pred) {
        (GoldOutput::Ner(g), Some(GoldOutput::Ner(p))) => multiset_counts(g, p),
        (GoldOutput::Te(g), Some(GoldOutput::Te(p))) => multiset_counts(g, p),
        (GoldOutput::Ner(g), None) => Counts {
            fn_: g.len(),
            ..Counts::default()
        },
        (GoldOutput::Te(g), None) => Counts {
            fn_: g.len(),
            ..Counts::default()
        },
        (g, Some(p)) if g == p => Counts {
            tp: 1,
            ..Counts::default()
        },
        _ => Counts { tp: 0, fp: 1, fn_: 1 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub task: TaskKind,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_records: usize,
    pub n_ok: usize,
    pub n_recovered: usize,
    pub n_malformed: usize,
    /// Fraction of records whose whole output equals the gold output.
    pub strict_accuracy: f64,
}

impl TaskMetrics {
    /// Metrics from counts alone, as when only aggregate numbers are known.
    pub fn from_counts(task: TaskKind, c: Counts) -> Self {
        let (precision, recall, f1) = prf(c.tp, c.fp, c.fn_);
        Self {
            task,
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision,
            recall,
            f1,
            n_records: 0,
            n_ok: 0,
            n_recovered: 0,
            n_malformed: 0,
            strict_accuracy: 0.0,
        }
    }
}

/// Pairs each gold record with its prediction by id.
pub fn align<'a>(
    task: TaskKind,
    gold: &'a [Record],
    predictions: &'a [Prediction],
) -> Result<Vec<(&'a Record, &'a Prediction)>, EvalError> {
    let mut by_id: HashMap<&str, &Prediction> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if p.task != task {
            return Err(EvalError::TaskMismatch {
                id: p.record_id.clone(),
                expected: task,
                found: p.task,
            });
        }
        if by_id.insert(p.record_id.as_str(), p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.record_id.clone()));
        }
    }
    let mut seen = HashSet::with_capacity(gold.len());
    let mut pairs = Vec::with_capacity(gold.len());
    for g in gold {
        if g.task != task {
            return Err(EvalError::TaskMismatch {
                id: g.id.clone(),
                expected: task,
                found: g.task,
            });
        }
        if !seen.insert(g.id.as_str()) {
            return Err(EvalError::DuplicateGold(g.id.clone()));
        }
        let p = by_id
            .get(g.id.as_str())
            .ok_or_else(|| EvalError::MissingPrediction(g.id.clone()))?;
        pairs.push((g, *p));
    }
    if let Some(p) = predictions.iter().find(|p| !seen.contains(p.record_id.as_str())) {
        return Err(EvalError::UnknownPrediction(p.record_id.clone()));
    }
    Ok(pairs)
}

#[derive(Clone, Copy, Default)]
struct Tally {
    counts: Counts,
    ok: usize,
    recovered: usize,
    malformed: usize,
    exact: usize,
}

/// Micro precision/recall/F1 of one task's predictions against its gold records.
pub fn score_task(task: TaskKind, gold: &[Record], predictions: &[Prediction]) -> Result<TaskMetrics, EvalError> {
    let pairs = align(task, gold, predictions)?;
    let t = par::fold(
        &pairs,
        Tally::default(),
        |(g, p)| {
            let value = if p.is_malformed() { None } else { p.value.as_ref() };
            Tally {
                counts: record_counts(&g.gold, value),
                ok: (p.status == ParseStatus::Ok) as usize,
                recovered: (p.status == ParseStatus::Recovered) as usize,
                malformed: (p.status == ParseStatus::Malformed) as usize,
                exact: value.is_some_and(|v| g.gold.multiset_eq(v)) as usize,
            }
        },
        |a, b| Tally {
            counts: a.counts.add(b.counts),
            ok: a.ok + b.ok,
            recovered: a.recovered + b.recovered,
            malformed: a.malformed + b.malformed,
            exact: a.exact + b.exact,
        },
    );
    let c = t.counts;
    let (precision, recall, f1) = if c.tp + c.fp + c.fn_ == 0 {
        log::warn!("{task}: no gold and no predicted items; defining P = R = F1 = 1");
        (1.0, 1.0, 1.0)
    } else {
        prf(c.tp, c.fp, c.fn_)
    };
    Ok(TaskMetrics {
        task,
        tp: c.tp,
        fp: c.fp,
        fn_: c.fn_,
        precision,
        recall,
        f1,
        n_records: pairs.len(),
        n_ok: t.ok,
        n_recovered: t.recovered,
        n_malformed: t.malformed,
        strict_accuracy: if pairs.is_empty() {
            1.0
        } else {
            t.exact as f64 / pairs.len() as f64
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorTag {
    Redundant,
    Omission,
    Incorrect,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordErrors {
    pub id: String,
    pub tags: Vec<ErrorTag>,
}

/// Records per error category; a record may carry several tags.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub redundant: usize,
    pub omission: usize,
    pub incorrect: usize,
    pub malformed: usize,
    pub records: Vec<RecordErrors>,
}

impl ErrorBreakdown {
    pub fn merge(&mut self, other: ErrorBreakdown) {
        self.redundant += other.redundant;
        self.omission += other.omission;
        self.incorrect += other.incorrect;
        self.malformed += other.malformed;
        self.records.extend(other.records);
    }
}

fn strictly_contains(outer: &str, inner: &str) -> bool {
    outer.len() > inner.len() && outer.contains(inner)
}

fn contains_or_equal(outer: &str, inner: &str) -> bool {
    outer.contains(inner)
}

fn mention_redundant(p: &EntityMention, g: &EntityMention) -> bool {
    p.etype == g.etype && strictly_contains(&p.surface, &g.surface)
}

fn triple_redundant(p: &Triple, g: &Triple) -> bool {
    p.relation == g.relation
        && contains_or_equal(&p.head, &g.head)
        && contains_or_equal(&p.tail, &g.tail)
        && (strictly_contains(&p.head, &g.head) || strictly_contains(&p.tail, &g.tail))
}

/// Multiset differences: (unmatched predicted, unmatched gold, matched count).
fn unmatched<'a, T: Ord>(gold: &'a [T], pred: &'a [T]) -> (Vec<&'a T>, Vec<&'a T>, usize) {
    let mut bag: BTreeMap<&T, usize> = BTreeMap::new();
    for g in gold {
        *bag.entry(g).or_default() += 1;
    }
    let mut extra = Vec::new();
    for p in pred {
        match bag.get_mut(p) {
            Some(n) if *n > 0 => *n -= 1,
            _ => extra.push(p),
        }
    }
    let missing: Vec<&T> = bag.into_iter().flat_map(|(g, n)| std::iter::repeat_n(g, n)).collect();
    let matched = gold.len() - missing.len();
    (extra, missing, matched)
}

fn item_tags<T: Ord>(gold: &[T], pred: &[T], redundant: impl Fn(&T, &T) -> bool) -> Vec<ErrorTag> {
    let (extra, missing, matched) = unmatched(gold, pred);
    let mut tags = Vec::new();
    for p in &extra {
        let tag = if gold.iter().any(|g| redundant(p, g)) || (!gold.is_empty() && missing.is_empty()) {
            ErrorTag::Redundant
        } else {
            ErrorTag::Incorrect
        };
        if !tags.contains(&tag) {
            tags.push(tag);
        }
    }
    if (!missing.is_empty() && matched > 0) || pred.len() < gold.len() {
        tags.push(ErrorTag::Omission);
    }
    tags.sort();
    tags
}

/// Error tags for one record; empty iff the prediction is exactly right.
pub fn record_error_tags(gold: &GoldOutput, pred: &Prediction) -> Vec<ErrorTag> {
    let value = match (&pred.value, pred.status) {
        (Some(v), ParseStatus::Ok | ParseStatus::Recovered) if v.task() == gold.task() => v,
        _ => return vec![ErrorTag::Malformed],
    };
    if gold.multiset_eq(value) {
        return Vec::new();
    }
    match (gold, value) {
        (GoldOutput::Ner(g), GoldOutput::Ner(p)) => item_tags(g, p, mention_redundant),
        (GoldOutput::Te(g), GoldOutput::Te(p)) => item_tags(g, p, triple_redundant),
        _ => vec![ErrorTag::Incorrect],
    }
}

/// Tags every imperfect record with one or more error categories.
pub fn classify_errors(
    task: TaskKind,
    gold: &[Record],
    predictions: &[Prediction],
) -> Result<ErrorBreakdown, EvalError> {
    let pairs = align(task, gold, predictions)?;
    let tagged = par::map(&pairs, |(g, p)| RecordErrors {
        id: g.id.clone(),
        tags: record_error_tags(&g.gold, p),
    });
    let mut out = ErrorBreakdown::default();
    for r in tagged.into_iter().filter(|r| !r.tags.is_empty()) {
        for tag in &r.tags {
            match tag {
                ErrorTag::Redundant => out.redundant += 1,
                ErrorTag::Omission => out.omission += 1,
                ErrorTag::Incorrect => out.incorrect += 1,
                ErrorTag::Malformed => out.malformed += 1,
            }
        }
        out.records.push(r);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDrop {
    pub task: TaskKind,
    /// Baseline and current F1 as two-decimal percentages.
    pub baseline_f1: f64,
    pub f1: f64,
    /// Signed relative drop in percent; positive means the run is worse.
    pub drop_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub tasks: Vec<TaskDrop>,
    /// Mean of the four per-task drops.
    pub mean_of_drops: f64,
    /// Drop of the average F1 against the baseline average F1.
    pub drop_of_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// One entry per task, in NER, RE, TE, UC order.
    pub tasks: Vec<TaskMetrics>,
    /// Mean of the four F1 values, as a fraction.
    pub average_f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_policy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<BTreeMap<TaskKind, ErrorBreakdown>>,
}

impl RunReport {
    pub fn task(&self, task: TaskKind) -> Option<&TaskMetrics> {
        self.tasks.iter().find(|m| m.task == task)
    }

    /// Task F1 values as two-decimal percentages.
    pub fn f1_pct(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for m in &self.tasks {
            out[m.task.index()] = round2(m.f1 * 100.0);
        }
        out
    }
}

/// Combines four task metrics, and optionally compares against a baseline run.
///
/// Drops are computed from two-decimal F1 percentages, as reported scores are.
pub fn aggregate_report(metrics: Vec<TaskMetrics>, baseline: Option<&RunReport>) -> Result<RunReport, EvalError> {
    let mut slots: [Option<TaskMetrics>; 4] = Default::default();
    for m in metrics {
        let slot = &mut slots[m.task.index()];
        if slot.is_some() {
            return Err(EvalError::DuplicateTask(m.task));
        }
        *slot = Some(m);
    }
    let mut tasks = Vec::with_capacity(4);
    for (task, slot) in TaskKind::ALL.iter().zip(slots) {
        tasks.push(slot.ok_or(EvalError::MissingTask(*task))?);
    }
    let average_f1 = tasks.iter().map(|m| m.f1).sum::<f64>() / 4.0;
    let mut report = RunReport {
        tasks,
        average_f1,
        parse_policy: None,
        comparison: None,
        errors: None,
    };
    if let Some(base) = baseline {
        for task in TaskKind::ALL {
            base.task(task).ok_or(EvalError::MissingTask(task))?;
        }
        report.comparison = Some(compare_pct(&base.f1_pct(), &report.f1_pct()));
    }
    Ok(report)
}

/// Drop statistics of four F1 percentages against four baseline percentages.
pub fn compare_pct(baseline: &[f64; 4], current: &[f64; 4]) -> Comparison {
    let tasks: Vec<TaskDrop> = TaskKind::ALL
        .iter()
        .map(|&task| {
            let i = task.index();
            TaskDrop {
                task,
                baseline_f1: baseline[i],
                f1: current[i],
                drop_pct: relative_drop_pct(baseline[i], current[i]),
            }
        })
        .collect();
    let mean_of_drops = round2(tasks.iter().map(|t| t.drop_pct).sum::<f64>() / 4.0);
    let drop_of_mean = relative_drop_pct(average_f1_pct(baseline), average_f1_pct(current));
    Comparison {
        tasks,
        mean_of_drops,
        drop_of_mean,
    }
}

/// Aligned plain-text rendering of a report.
pub fn render_table(report: &RunReport) -> String {
    let mut out = String::new();
    let cmp = report.comparison.as_ref();
    let _ = write!(out, "{:<6}{:>11}{:>9}{:>9}", "Task", "Precision", "Recall", "F1");
    if cmp.is_some() {
        let _ = write!(out, "{:>13}{:>13}", "Baseline F1", "Perf. Drop");
    }
    let _ = writeln!(out, "{:>7}{:>11}{:>11}", "ok", "recovered", "malformed");
    for m in &report.tasks {
        let _ = write!(
            out,
            "{:<6}{:>11.2}{:>9.2}{:>9.2}",
            m.task.as_str(),
            round2(m.precision * 100.0),
            round2(m.recall * 100.0),
            round2(m.f1 * 100.0)
        );
        if let Some(c) = cmp {
            let d = &c.tasks[m.task.index()];
            let _ = write!(out, "{:>13.2}{:>12.2}%", d.baseline_f1, d.drop_pct);
        }
        let _ = writeln!(out, "{:>7}{:>11}{:>11}", m.n_ok, m.n_recovered, m.n_malformed);
    }
    let _ = writeln!(out, "Avg F1: {:.2}", average_f1_pct(&report.f1_pct()));
    if let Some(c) = cmp {
        let _ = writeln!(out, "Average Perf. Drop (drop of Avg F1): {:.2}%", c.drop_of_mean);
        let _ = writeln!(out, "Average Perf. Drop (mean of task drops): {:.2}%", c.mean_of_drops);
    }
    if let Some(policy) = &report.parse_policy {
        let _ = writeln!(out, "Parse policy: {policy}");
    }
    if let Some(errors) = &report.errors {
        let _ = writeln!(out, "Errors (records): task redundant omission incorrect malformed");
        for (task, e) in errors {
            let _ = writeln!(
                out,
                "  {:<4}{:>10}{:>9}{:>10}{:>10}",
                task.as_str(),
                e.redundant,
                e.omission,
                e.incorrect,
                e.malformed
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EntityType, RelationType, UsageStatus};
    use crate::parsing::Reason;

    fn ner_rec(id: &str, items: &[(&str, EntityType)]) -> Record {
        let ms = items.iter().map(|(s, t)| EntityMention::new(s, *t).unwrap()).collect();
        Record::new(id, "some sentence", None, GoldOutput::Ner(ms)).unwrap()
    }

    fn ner_pred(id: &str, items: &[(&str, EntityType)]) -> Prediction {
        let ms = items.iter().map(|(s, t)| EntityMention::new(s, *t).unwrap()).collect();
        Prediction::from_gold(id, GoldOutput::Ner(ms))
    }

    #[test]
    fn partial_ner_record() {
        use EntityType::*;
        let g = [ner_rec("1", &[("a", Event), ("b", Event), ("c", Ginger)])];
        let p = [ner_pred("1", &[("a", Event), ("b", Event)])];
        let m = score_task(TaskKind::Ner, &g, &p).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_), (2, 0, 1));
        assert!((m.precision - 1.0).abs() < 1e-12);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.f1 - 0.8).abs() < 1e-12);
        assert_eq!(m.strict_accuracy, 0.0);
    }

    #[test]
    fn single_label_identity() {
        let recs: Vec<Record> = (0..5)
            .map(|i| Record::new(i.to_string(), "s", None, GoldOutput::Uc(UsageStatus::Start)).unwrap())
            .collect();
        let preds: Vec<Prediction> = (0..5)
            .map(|i| {
                let s = if i < 3 {
                    UsageStatus::Start
                } else {
                    UsageStatus::Continue
                };
                Prediction::from_gold(i.to_string(), GoldOutput::Uc(s))
            })
            .collect();
        let m = score_task(TaskKind::Uc, &recs, &preds).unwrap();
        assert_eq!(m.precision, m.recall);
        assert_eq!(m.recall, m.f1);
        assert!((m.f1 - 0.6).abs() < 1e-12);
    }

    #[test]
    fn malformed_scores_as_empty_or_wrong() {
        let g = [ner_rec("1", &[("a", EntityType::Event)])];
        let p = [Prediction::malformed("1", TaskKind::Ner, Reason::Empty)];
        let m = score_task(TaskKind::Ner, &g, &p).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_, m.n_malformed), (0, 0, 1, 1));
        assert_eq!(
            record_counts(&GoldOutput::Re(RelationType::Positive), None),
            Counts { tp: 0, fp: 1, fn_: 1 }
        );
    }

    #[test]
    fn empty_task_is_perfect() {
        let g = [ner_rec("1", &[])];
        let p = [ner_pred("1", &[])];
        let m = score_task(TaskKind::Ner, &g, &p).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn alignment_errors() {
        let g = [ner_rec("1", &[]), ner_rec("2", &[])];
        let p = [ner_pred("1", &[])];
        assert_eq!(
            score_task(TaskKind::Ner, &g, &p).unwrap_err(),
            EvalError::MissingPrediction("2".into())
        );
        let p = [ner_pred("1", &[]), ner_pred("2", &[]), ner_pred("3", &[])];
        assert_eq!(
            score_task(TaskKind::Ner, &g, &p).unwrap_err(),
            EvalError::UnknownPrediction("3".into())
        );
        let p = [ner_pred("1", &[]), ner_pred("1", &[])];
        assert_eq!(
            score_task(TaskKind::Ner, &g, &p).unwrap_err(),
            EvalError::DuplicatePrediction("1".into())
        );
    }

    #[test]
    fn error_examples() {
        use EntityType::*;
        let g = ner_rec("1", &[("motion sickness", Event)]).gold;
        let p = ner_pred("1", &[("mild motion sickness", Event)]);
        assert_eq!(record_error_tags(&g, &p), vec![ErrorTag::Redundant]);

        let g = ner_rec("1", &[("a", Event), ("b", Event), ("c", Event), ("d", Ginger)]).gold;
        let p = ner_pred("1", &[("a", Event), ("b", Event), ("c", Event)]);
        assert_eq!(record_error_tags(&g, &p), vec![ErrorTag::Omission]);

        let g = GoldOutput::Re(RelationType::Negative);
        let p = Prediction::from_gold("1", GoldOutput::Re(RelationType::Positive));
        assert_eq!(record_error_tags(&g, &p), vec![ErrorTag::Incorrect]);

        let g = GoldOutput::Te(vec![Triple::new("garlic", RelationType::Negative, "bleeding").unwrap()]);
        let p = Prediction::from_gold(
            "1",
            GoldOutput::Te(vec![Triple::new("garlic", RelationType::Positive, "bleeding").unwrap()]),
        );
        assert_eq!(record_error_tags(&g, &p), vec![ErrorTag::Incorrect]);

        let p = Prediction::malformed("1", TaskKind::Te, Reason::NoExpression);
        assert_eq!(record_error_tags(&g, &p), vec![ErrorTag::Malformed]);
    }

    #[test]
    fn extra_after_full_match_is_redundant() {
        use EntityType::*;
        let g = ner_rec("1", &[("a", Event)]).gold;
        let p = ner_pred("1", &[("a", Event), ("zzz", Ginger)]);
        assert_eq!(record_error_tags(&g, &p), vec![ErrorTag::Redundant]);
        let g = ner_rec("1", &[]).gold;
        assert_eq!(record_error_tags(&g, &p), vec![ErrorTag::Incorrect]);
    }

    #[test]
    fn aggregate_requires_all_tasks() {
        let m = TaskMetrics::from_counts(TaskKind::Ner, Counts { tp: 1, fp: 0, fn_: 0 });
        assert_eq!(
            aggregate_report(vec![m.clone()], None).unwrap_err(),
            EvalError::MissingTask(TaskKind::Re)
        );
        assert_eq!(
            aggregate_report(vec![m.clone(), m], None).unwrap_err(),
            EvalError::DuplicateTask(TaskKind::Ner)
        );
    }

    #[test]
    fn report_examples() {
        assert_eq!(average_f1_pct(&[81.52, 92.22, 68.61, 86.03]), 82.10);
        assert_eq!(relative_drop_pct(85.95, 81.52), 5.15);
        assert_eq!(relative_drop_pct(83.37, 87.90), -5.43);
        assert_eq!(round2(86.005), 86.01);
        assert_eq!(round2(-0.125), -0.13);
    }

    #[test]
    fn table_has_drop_columns_with_baseline() {
        let ms: Vec<TaskMetrics> = TaskKind::ALL
            .iter()
            .map(|&t| TaskMetrics::from_counts(t, Counts { tp: 9, fp: 1, fn_: 1 }))
            .collect();
        let base = aggregate_report(ms.clone(), None).unwrap();
        assert!(!render_table(&base).contains("Perf. Drop"));
        let with = aggregate_report(ms, Some(&base)).unwrap();
        let text = render_table(&with);
        assert!(text.contains("Perf. Drop"));
        assert!(text.contains("Avg F1: 90.00"));
        assert_eq!(with.comparison.unwrap().drop_of_mean, 0.0);
    }
}
