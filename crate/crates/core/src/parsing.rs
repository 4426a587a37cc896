//! Parsing raw generations into structured predictions.
//!
//! Responses follow a small Python-literal-like grammar: lists, dicts and
//! quoted strings. Parsing runs through three tiers, each more forgiving:
//!
//! 1. **strict**: the whole trimmed output is one value, single quotes only,
//!    no trailing commas. Success yields [`ParseStatus::Ok`].
//! 2. **quote-tolerant**: double and typographic quotes, trailing commas.
//! 3. **prose-stripping**: the bracketed expression is cut out of surrounding
//!    text; with several candidates the last one wins by default.
//!
//! Anything accepted past tier 1 is [`ParseStatus::Recovered`] and carries a
//! reason code. Nothing here panics or returns an error: failures become
//! [`ParseStatus::Malformed`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{EntityMention, EntityType, GoldOutput, RelationType, TaskKind, Triple, UsageStatus};

const MAX_DEPTH: usize = 64;
const MAX_SPAN_ATTEMPTS: usize = 64;

/// Parsed literal value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Str(String),
    List(Vec<Value>),
    Dict(Vec<(String, Value)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    Ok,
    Recovered,
    Malformed,
}

impl ParseStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseStatus::Ok => "ok",
            ParseStatus::Recovered => "recovered",
            ParseStatus::Malformed => "malformed",
        }
    }
}

impl fmt::Display for ParseStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Reason code attached to recovered and malformed parses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    // recovered
    QuoteTolerant,
    ProseStripped,
    BareValue,
    MultiPairDict,
    // malformed
    Empty,
    NoExpression,
    TooDeep,
    WrongShape,
    LabelCount,
    UnknownLabel,
    EmptySurface,
    WrongKeys,
    GenerationFailed,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::QuoteTolerant => "quote_tolerant",
            Reason::ProseStripped => "prose_stripped",
            Reason::BareValue => "bare_value",
            Reason::MultiPairDict => "multi_pair_dict",
            Reason::Empty => "empty",
            Reason::NoExpression => "no_expression",
            Reason::TooDeep => "too_deep",
            Reason::WrongShape => "wrong_shape",
            Reason::LabelCount => "label_count",
            Reason::UnknownLabel => "unknown_label",
            Reason::EmptySurface => "empty_surface",
            Reason::WrongKeys => "wrong_keys",
            Reason::GenerationFailed => "generation_failed",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Most lenient tier the parser may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Leniency {
    Strict,
    QuoteTolerant,
    #[default]
    ProseStripping,
}

/// Which bracketed expression prose stripping keeps when there are several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pick {
    First,
    #[default]
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParsePolicy {
    #[serde(default)]
    pub leniency: Leniency,
    #[serde(default)]
    pub pick: Pick,
}

impl ParsePolicy {
    pub fn strict() -> Self {
        Self {
            leniency: Leniency::Strict,
            pick: Pick::Last,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub value: Option<GoldOutput>,
    pub status: ParseStatus,
    pub reason: Option<Reason>,
}

impl Parsed {
    fn ok(value: GoldOutput) -> Self {
        Self {
            value: Some(value),
            status: ParseStatus::Ok,
            reason: None,
        }
    }

    fn recovered(value: GoldOutput, reason: Reason) -> Self {
        Self {
            value: Some(value),
            status: ParseStatus::Recovered,
            reason: Some(reason),
        }
    }

    fn malformed(reason: Reason) -> Self {
        Self {
            value: None,
            status: ParseStatus::Malformed,
            reason: Some(reason),
        }
    }
}

/// A parsed generation tied to its record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub record_id: String,
    pub task: TaskKind,
    pub value: Option<GoldOutput>,
    pub status: ParseStatus,
    pub reason: Option<Reason>,
}

impl Prediction {
    pub fn new(record_id: impl Into<String>, task: TaskKind, parsed: Parsed) -> Self {
        Self {
            record_id: record_id.into(),
            task,
            value: parsed.value,
            status: parsed.status,
            reason: parsed.reason,
        }
    }

    /// Wraps a gold output as an ok prediction, as a perfect model would produce.
    pub fn from_gold(record_id: impl Into<String>, gold: GoldOutput) -> Self {
        let task = gold.task();
        Self::new(record_id, task, Parsed::ok(gold))
    }

    pub fn malformed(record_id: impl Into<String>, task: TaskKind, reason: Reason) -> Self {
        Self::new(record_id, task, Parsed::malformed(reason))
    }

    pub fn is_malformed(&self) -> bool {
        self.status == ParseStatus::Malformed
    }
}

/// Parses with the default (fully lenient, last expression) policy.
pub fn parse_generation(task: TaskKind, raw: &str) -> Parsed {
    parse_generation_with(task, raw, &ParsePolicy::default())
}

pub fn parse_generation_with(task: TaskKind, raw: &str, policy: &ParsePolicy) -> Parsed {
    let parsed = parse_tiers(task, raw, policy);
    if parsed.status != ParseStatus::Ok {
        log::debug!(
            "{task} generation parsed as {} ({})",
            parsed.status,
            parsed.reason.map(Reason::as_str).unwrap_or("-")
        );
    }
    parsed
}

fn parse_tiers(task: TaskKind, raw: &str, policy: &ParsePolicy) -> Parsed {
    let text = raw.trim();
    if text.is_empty() {
        return Parsed::malformed(Reason::Empty);
    }
    let mut deepest = false;
    match Grammar::STRICT.parse_all(text) {
        Ok(v) => return interpret(task, &v, None),
        Err(e) => deepest |= e == SyntaxError::TooDeep,
    }
    if policy.leniency == Leniency::Strict {
        return Parsed::malformed(if deepest { Reason::TooDeep } else { Reason::NoExpression });
    }
    match Grammar::TOLERANT.parse_all(text) {
        Ok(v) => return interpret(task, &v, Some(Reason::QuoteTolerant)),
        Err(e) => deepest |= e == SyntaxError::TooDeep,
    }
    if policy.leniency == Leniency::QuoteTolerant {
        return Parsed::malformed(if deepest { Reason::TooDeep } else { Reason::NoExpression });
    }
    for quote_aware in [true, false] {
        let mut spans = outermost_spans(text, quote_aware);
        if policy.pick == Pick::Last {
            spans.reverse();
        }
        for (start, end) in spans.into_iter().take(MAX_SPAN_ATTEMPTS) {
            match Grammar::TOLERANT.parse_all(&text[start..end]) {
                Ok(v) => return interpret(task, &v, Some(Reason::ProseStripped)),
                Err(e) => deepest |= e == SyntaxError::TooDeep,
            }
        }
    }
    Parsed::malformed(if deepest { Reason::TooDeep } else { Reason::NoExpression })
}

// ---------------------------------------------------------------------------
// Grammar

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SyntaxError {
    Invalid,
    TooDeep,
}

#[derive(Debug, Clone, Copy)]
struct Grammar {
    double_quotes: bool,
    trailing_commas: bool,
}

impl Grammar {
    const STRICT: Grammar = Grammar {
        double_quotes: false,
        trailing_commas: false,
    };
    const TOLERANT: Grammar = Grammar {
        double_quotes: true,
        trailing_commas: true,
    };

    fn parse_all(self, text: &str) -> Result<Value, SyntaxError> {
        let mut p = Parser {
            g: self,
            chars: text.chars().collect(),
            pos: 0,
        };
        let v = p.value(0)?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(SyntaxError::Invalid);
        }
        Ok(v)
    }
}

struct Parser {
    g: Grammar,
    chars: Vec<char>,
    pos: usize,
}

fn closing_quote(open: char, g: Grammar) -> Option<char> {
    match open {
        '\'' => Some('\''),
        '"' if g.double_quotes => Some('"'),
        '\u{2018}' if g.double_quotes => Some('\u{2019}'),
        '\u{201c}' if g.double_quotes => Some('\u{201d}'),
        _ => None,
    }
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn value(&mut self, depth: usize) -> Result<Value, SyntaxError> {
        if depth > MAX_DEPTH {
            return Err(SyntaxError::TooDeep);
        }
        self.skip_ws();
        match self.peek() {
            Some('[') => {
                self.pos += 1;
                let items = self.sequence(']', |p| p.value(depth + 1))?;
                Ok(Value::List(items))
            }
            Some('{') => {
                self.pos += 1;
                let pairs = self.sequence('}', |p| {
                    let k = p.string()?;
                    if !p.eat(':') {
                        return Err(SyntaxError::Invalid);
                    }
                    Ok((k, p.value(depth + 1)?))
                })?;
                Ok(Value::Dict(pairs))
            }
            _ => self.string().map(Value::Str),
        }
    }

    fn sequence<T>(
        &mut self,
        close: char,
        mut item: impl FnMut(&mut Self) -> Result<T, SyntaxError>,
    ) -> Result<Vec<T>, SyntaxError> {
        let mut out = Vec::new();
        if self.eat(close) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat(close) {
                return Ok(out);
            }
            if !self.eat(',') {
                return Err(SyntaxError::Invalid);
            }
            if self.g.trailing_commas && self.eat(close) {
                return Ok(out);
            }
        }
    }

    fn string(&mut self) -> Result<String, SyntaxError> {
        self.skip_ws();
        let open = self.peek().ok_or(SyntaxError::Invalid)?;
        let close = closing_quote(open, self.g).ok_or(SyntaxError::Invalid)?;
        self.pos += 1;
        let mut s = String::new();
        loop {
            let c = self.peek().ok_or(SyntaxError::Invalid)?;
            self.pos += 1;
            if c == close {
                return Ok(s);
            }
            if c == '\\' {
                let e = self.peek().ok_or(SyntaxError::Invalid)?;
                self.pos += 1;
                match e {
                    'n' => s.push('\n'),
                    't' => s.push('\t'),
                    other => s.push(other),
                }
            } else {
                s.push(c);
            }
        }
    }
}

/// Byte ranges of balanced top-level bracket expressions, in text order.
///
/// With `quote_aware`, quoted strings inside brackets are skipped so that
/// brackets within surfaces do not confuse the matcher. Unclosed openers are
/// ignored; their balanced descendants still count.
fn outermost_spans(text: &str, quote_aware: bool) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut closed: Vec<(usize, usize)> = Vec::new();
    let mut stack: Vec<(char, usize)> = Vec::new();
    let mut unclosed_quote: Vec<char> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (at, c) = chars[i];
        match c {
            '[' | '{' => stack.push((c, at)),
            ']' | '}' => {
                let open = if c == ']' { '[' } else { '{' };
                match stack.last() {
                    Some(&(o, start)) if o == open => {
                        stack.pop();
                        closed.push((start, at + c.len_utf8()));
                    }
                    Some(_) => stack.clear(),
                    None => {}
                }
            }
            _ if quote_aware && !stack.is_empty() && !unclosed_quote.contains(&c) => {
                if let Some(close) = closing_quote(c, Grammar::TOLERANT) {
                    let mut j = i + 1;
                    while j < chars.len() && chars[j].1 != close {
                        j += if chars[j].1 == '\\' { 2 } else { 1 };
                    }
                    if j < chars.len() {
                        i = j;
                    } else {
                        unclosed_quote.push(c);
                    }
                }
            }
            _ => {}
        }
        i += 1;
    }
    closed.sort_unstable();
    let mut out: Vec<(usize, usize)> = Vec::new();
    for span in closed {
        if out.last().is_none_or(|&(_, end)| span.0 >= end) {
            out.push(span);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Interpretation

fn interpret(task: TaskKind, value: &Value, tier: Option<Reason>) -> Parsed {
    let result = match task {
        TaskKind::Ner => interpret_ner(value),
        TaskKind::Te => interpret_te(value),
        TaskKind::Re => interpret_label(value, |s| s.parse::<RelationType>().ok().map(GoldOutput::Re)),
        TaskKind::Uc => interpret_label(value, |s| s.parse::<UsageStatus>().ok().map(GoldOutput::Uc)),
    };
    match result {
        Err(reason) => Parsed::malformed(reason),
        Ok((out, None)) => match tier {
            None => Parsed::ok(out),
            Some(r) => Parsed::recovered(out, r),
        },
        Ok((out, Some(shape))) => Parsed::recovered(out, tier.unwrap_or(shape)),
    }
}

type Interpreted = Result<(GoldOutput, Option<Reason>), Reason>;

/// Top-level items; a bare dict or string stands for a one-item list.
fn items(value: &Value) -> (Vec<&Value>, Option<Reason>) {
    match value {
        Value::List(items) => (items.iter().collect(), None),
        other => (vec![other], Some(Reason::BareValue)),
    }
}

fn interpret_ner(value: &Value) -> Interpreted {
    let (items, mut note) = items(value);
    let mut mentions = Vec::new();
    for item in items {
        let Value::Dict(pairs) = item else {
            return Err(Reason::WrongShape);
        };
        if pairs.len() > 1 {
            note = note.or(Some(Reason::MultiPairDict));
        }
        if pairs.is_empty() {
            return Err(Reason::WrongShape);
        }
        for (surface, label) in pairs {
            let Value::Str(label) = label else {
                return Err(Reason::WrongShape);
            };
            let etype: EntityType = label.parse().map_err(|_| Reason::UnknownLabel)?;
            mentions.push(EntityMention::new(surface, etype).map_err(|_| Reason::EmptySurface)?);
        }
    }
    Ok((GoldOutput::Ner(mentions), note))
}

fn interpret_te(value: &Value) -> Interpreted {
    let (items, note) = items(value);
    let mut triples = Vec::new();
    for item in items {
        let Value::Dict(pairs) = item else {
            return Err(Reason::WrongShape);
        };
        let mut head = None;
        let mut relation = None;
        let mut tail = None;
        for (key, v) in pairs {
            let Value::Str(v) = v else {
                return Err(Reason::WrongShape);
            };
            let slot = match crate::model::normalize_text(&key.replace('_', " ")).as_str() {
                "head entity" => &mut head,
                "relation" => &mut relation,
                "tail entity" => &mut tail,
                _ => return Err(Reason::WrongKeys),
            };
            if slot.replace(v).is_some() {
                return Err(Reason::WrongKeys);
            }
        }
        let (Some(head), Some(relation), Some(tail)) = (head, relation, tail) else {
            return Err(Reason::WrongKeys);
        };
        let relation: RelationType = relation.parse().map_err(|_| Reason::UnknownLabel)?;
        triples.push(Triple::new(head, relation, tail).map_err(|_| Reason::EmptySurface)?);
    }
    Ok((GoldOutput::Te(triples), note))
}

fn interpret_label(value: &Value, parse: impl Fn(&str) -> Option<GoldOutput>) -> Interpreted {
    let (items, note) = items(value);
    let [Value::Str(label)] = items.as_slice() else {
        return Err(if items.len() == 1 {
            Reason::WrongShape
        } else {
            Reason::LabelCount
        });
    };
    parse(label).map(|g| (g, note)).ok_or(Reason::UnknownLabel)
}

/// Persisted prediction line: `{id, task, value, parse_status, leniency_reason?}`.
///
/// `value` uses the response grammar text so the file stays readable.
pub fn prediction_to_line(p: &Prediction) -> String {
    let mut obj = serde_json::Map::new();
    obj.insert("id".into(), p.record_id.clone().into());
    obj.insert("task".into(), p.task.as_str().into());
    obj.insert(
        "value".into(),
        match &p.value {
            Some(v) => crate::prompting::serialize_gold(v).into(),
            None => serde_json::Value::Null,
        },
    );
    obj.insert("parse_status".into(), p.status.as_str().into());
    if let Some(r) = p.reason {
        obj.insert("leniency_reason".into(), r.as_str().into());
    }
    serde_json::Value::Object(obj).to_string()
}

#[derive(Debug, thiserror::Error)]
#[error("prediction line {line}: {message}")]
pub struct PredictionLineError {
    pub line: usize,
    pub message: String,
}

#[derive(Deserialize)]
struct PredictionLine {
    id: String,
    task: TaskKind,
    value: Option<String>,
    parse_status: ParseStatus,
    leniency_reason: Option<Reason>,
}

/// Reads a line written by [`prediction_to_line`].
pub fn prediction_from_line(raw: &str, line: usize) -> Result<Prediction, PredictionLineError> {
    let err = |message: String| PredictionLineError { line, message };
    let p: PredictionLine = serde_json::from_str(raw).map_err(|e| err(e.to_string()))?;
    let value = match (&p.value, p.parse_status) {
        (None, ParseStatus::Malformed) => None,
        (Some(text), ParseStatus::Ok | ParseStatus::Recovered) => {
            let parsed = parse_generation_with(p.task, text, &ParsePolicy::strict());
            if parsed.status != ParseStatus::Ok {
                return Err(err(format!("stored value `{text}` is not canonical")));
            }
            parsed.value
        }
        _ => return Err(err("value must be present iff parse_status is not malformed".into())),
    };
    Ok(Prediction {
        record_id: p.id,
        task: p.task,
        value,
        status: p.parse_status,
        reason: p.leniency_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompting::serialize_gold;

    fn status(task: TaskKind, raw: &str) -> (Option<GoldOutput>, ParseStatus, Option<Reason>) {
        let p = parse_generation(task, raw);
        (p.value, p.status, p.reason)
    }

    #[test]
    fn uc_canonical_is_ok() {
        assert_eq!(
            status(TaskKind::Uc, "['continue']"),
            (Some(GoldOutput::Uc(UsageStatus::Continue)), ParseStatus::Ok, None)
        );
    }

    #[test]
    fn te_canonical_is_ok() {
        let raw = "[{'head entity': 'ginseng tea', 'relation': 'positive', 'tail entity': 'constipation'}]";
        let t = Triple::new("ginseng tea", RelationType::Positive, "constipation").unwrap();
        assert_eq!(
            status(TaskKind::Te, raw),
            (Some(GoldOutput::Te(vec![t])), ParseStatus::Ok, None)
        );
    }

    #[test]
    fn prose_is_stripped() {
        assert_eq!(
            status(TaskKind::Re, "The answer is ['negative'] because..."),
            (
                Some(GoldOutput::Re(RelationType::Negative)),
                ParseStatus::Recovered,
                Some(Reason::ProseStripped)
            )
        );
    }

    #[test]
    fn last_expression_wins_unless_configured() {
        let raw = "First ['positive'], no wait: ['negative']";
        assert_eq!(
            parse_generation(TaskKind::Re, raw).value,
            Some(GoldOutput::Re(RelationType::Negative))
        );
        let first = ParsePolicy {
            leniency: Leniency::ProseStripping,
            pick: Pick::First,
        };
        assert_eq!(
            parse_generation_with(TaskKind::Re, raw, &first).value,
            Some(GoldOutput::Re(RelationType::Positive))
        );
    }

    #[test]
    fn double_quotes_and_trailing_commas_recover() {
        let (v, s, r) = status(TaskKind::Ner, r#"[{"Ginger": "ginger"}, {'nausea': 'event'},]"#);
        assert_eq!(s, ParseStatus::Recovered);
        assert_eq!(r, Some(Reason::QuoteTolerant));
        assert_eq!(
            v,
            Some(GoldOutput::Ner(vec![
                EntityMention::new("ginger", EntityType::Ginger).unwrap(),
                EntityMention::new("nausea", EntityType::Event).unwrap(),
            ]))
        );
        let (_, s, _) = status(TaskKind::Uc, "[\u{2018}start\u{2019}]");
        assert_eq!(s, ParseStatus::Recovered);
    }

    #[test]
    fn strict_policy_rejects_what_leniency_recovers() {
        let p = parse_generation_with(TaskKind::Uc, "[\"start\"]", &ParsePolicy::strict());
        assert_eq!(p.status, ParseStatus::Malformed);
        let p = parse_generation_with(TaskKind::Uc, "['start']", &ParsePolicy::strict());
        assert_eq!(p.status, ParseStatus::Ok);
    }

    #[test]
    fn labels_are_normalized_and_closed() {
        assert_eq!(
            parse_generation(TaskKind::Re, "['Not Related']").value,
            Some(GoldOutput::Re(RelationType::NotRelated))
        );
        assert_eq!(
            status(TaskKind::Ner, "[{'ginger': 'turmeric'}]").2,
            Some(Reason::UnknownLabel)
        );
        assert_eq!(
            parse_generation(TaskKind::Ner, "[{'Saw  Palmetto': 'saw_palmetto'}]").value,
            Some(GoldOutput::Ner(vec![EntityMention::new(
                "saw palmetto",
                EntityType::SawPalmetto
            )
            .unwrap()]))
        );
    }

    #[test]
    fn single_label_tasks_need_exactly_one() {
        assert_eq!(status(TaskKind::Uc, "[]").2, Some(Reason::LabelCount));
        assert_eq!(
            status(TaskKind::Uc, "['start', 'continue']").2,
            Some(Reason::LabelCount)
        );
        assert_eq!(status(TaskKind::Uc, "[['start']]").2, Some(Reason::WrongShape));
    }

    #[test]
    fn duplicates_and_multi_pair_dicts() {
        let p = parse_generation(TaskKind::Ner, "[{'rash': 'event'}, {'rash': 'event'}]");
        assert_eq!(p.value.unwrap().item_count(), 2);
        let p = parse_generation(TaskKind::Ner, "[{'rash': 'event', 'garlic': 'garlic'}]");
        assert_eq!(p.status, ParseStatus::Recovered);
        assert_eq!(p.reason, Some(Reason::MultiPairDict));
        assert_eq!(p.value.unwrap().item_count(), 2);
    }

    #[test]
    fn te_keys_checked() {
        let raw = "[{'head_entity': 'garlic', 'relation': 'negative', 'tail_entity': 'bleeding'}]";
        assert_eq!(parse_generation(TaskKind::Te, raw).status, ParseStatus::Ok);
        let raw = "[{'head entity': 'garlic', 'relation': 'negative'}]";
        assert_eq!(status(TaskKind::Te, raw).2, Some(Reason::WrongKeys));
        let raw = "[{'head entity': '', 'relation': 'negative', 'tail entity': 'x'}]";
        assert_eq!(status(TaskKind::Te, raw).2, Some(Reason::EmptySurface));
    }

    #[test]
    fn empty_lists_for_multi_item_tasks() {
        assert_eq!(
            status(TaskKind::Ner, "[]"),
            (Some(GoldOutput::Ner(vec![])), ParseStatus::Ok, None)
        );
        assert_eq!(parse_generation(TaskKind::Te, "[]").value, Some(GoldOutput::Te(vec![])));
    }

    #[test]
    fn garbage_is_malformed() {
        for raw in [
            "",
            "   ",
            "no brackets here",
            "[unterminated",
            "['a'",
            "{'x': }",
            "]]][",
        ] {
            let p = parse_generation(TaskKind::Re, raw);
            assert_eq!(p.status, ParseStatus::Malformed, "{raw:?}");
            assert!(p.value.is_none());
        }
    }

    #[test]
    fn deep_nesting_is_bounded() {
        let raw = format!("{}'start'{}", "[".repeat(10_000), "]".repeat(10_000));
        assert_eq!(status(TaskKind::Uc, &raw).2, Some(Reason::TooDeep));
    }

    #[test]
    fn brackets_inside_quotes() {
        let raw = "Result: [{'head entity': 'garlic [pills]', 'relation': 'negative', 'tail entity': 'bleeding'}] done";
        let p = parse_generation(TaskKind::Te, raw);
        assert_eq!(p.status, ParseStatus::Recovered);
        let GoldOutput::Te(t) = p.value.unwrap() else { panic!() };
        assert_eq!(t[0].head, "garlic [pills]");
    }

    #[test]
    fn escapes_round_trip() {
        let g = GoldOutput::Ner(vec![
            EntityMention::new("st. john's \\ wort", EntityType::Event).unwrap()
        ]);
        let p = parse_generation(TaskKind::Ner, &serialize_gold(&g));
        assert_eq!(p.status, ParseStatus::Ok);
        assert_eq!(p.value, Some(g));
    }

    #[test]
    fn persisted_line_round_trip() {
        let p = Prediction::new(
            "NER:1",
            TaskKind::Ner,
            parse_generation(TaskKind::Ner, "Sure: [{\"rash\": \"event\"}]"),
        );
        let line = prediction_to_line(&p);
        assert!(line.contains("\"leniency_reason\":\"prose_stripped\""));
        assert_eq!(prediction_from_line(&line, 1).unwrap(), p);
        let m = Prediction::malformed("UC:2", TaskKind::Uc, Reason::Empty);
        assert_eq!(prediction_from_line(&prediction_to_line(&m), 1).unwrap(), m);
        assert!(prediction_from_line("{\"id\":\"x\"}", 3).is_err());
    }
}
