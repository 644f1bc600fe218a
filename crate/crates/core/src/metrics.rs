//! Strict-match micro precision, recall and F1.
//!
//! Predictions and golds are reduced to multisets of match keys; a key is
//! correct as many times as it occurs on both sides (min-count
//! intersection), pooled over the corpus.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::{Argument, ExtractionSet};
use crate::schema::TaskKind;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("prediction for unknown example {0}")]
    UnknownExample(String),
    #[error("duplicate example id {0}")]
    DuplicateExample(String),
    #[error("head matching is only defined for eae, not {0}")]
    HeadModeUnsupported(TaskKind),
    #[error("invalid counts: correct {correct}, predicted {predicted}, gold {gold}")]
    InvalidCounts {
        correct: u64,
        predicted: u64,
        gold: u64,
    },
}

/// The tuple two items must share to count as a match.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatchKey {
    Entity {
        entity_type: String,
        text: String,
    },
    Relation {
        relation_type: String,
        head_type: String,
        head: String,
        tail_type: String,
        tail: String,
    },
    Trigger {
        event_type: String,
        trigger: String,
    },
    Argument {
        event_type: String,
        role: String,
        text: String,
    },
    ArgumentHead {
        event_type: String,
        role: String,
        head: String,
    },
}

impl MatchKey {
    /// Type used for the per-type breakdown.
    pub fn type_name(&self) -> &str {
        match self {
            MatchKey::Entity { entity_type, .. } => entity_type,
            MatchKey::Relation { relation_type, .. } => relation_type,
            MatchKey::Trigger { event_type, .. }
            | MatchKey::Argument { event_type, .. }
            | MatchKey::ArgumentHead { event_type, .. } => event_type,
        }
    }
}

/// Trim and collapse internal whitespace. Case is kept.
pub fn canonical_text(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Last token after stripping trailing punctuation.
pub fn head_word(text: &str) -> String {
    let canon = canonical_text(text);
    let stripped = canon.trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace());
    stripped.rsplit(' ').next().unwrap_or("").to_string()
}

fn argument_head(arg: &Argument) -> String {
    match &arg.head {
        Some(h) if !h.trim().is_empty() => canonical_text(h),
        _ => head_word(&arg.text),
    }
}

/// Match keys of one extraction set for a task.
pub fn match_keys(set: &ExtractionSet, task: TaskKind, head_mode: bool) -> Vec<MatchKey> {
    match task {
        TaskKind::Ner => set
            .entities
            .iter()
            .map(|e| MatchKey::Entity {
                entity_type: e.entity_type.clone(),
                text: canonical_text(&e.text),
            })
            .collect(),
        TaskKind::Re => set
            .relations
            .iter()
            .map(|r| MatchKey::Relation {
                relation_type: r.relation_type.clone(),
                head_type: r.head.entity_type.clone(),
                head: canonical_text(&r.head.text),
                tail_type: r.tail.entity_type.clone(),
                tail: canonical_text(&r.tail.text),
            })
            .collect(),
        TaskKind::Ed => set
            .events
            .iter()
            .map(|e| MatchKey::Trigger {
                event_type: e.event_type.clone(),
                trigger: canonical_text(&e.trigger),
            })
            .collect(),
        TaskKind::Eae | TaskKind::Ee => set
            .events
            .iter()
            .flat_map(|e| {
                e.args.iter().map(move |a| {
                    if head_mode {
                        MatchKey::ArgumentHead {
                            event_type: e.event_type.clone(),
                            role: a.role.clone(),
                            head: argument_head(a),
                        }
                    } else {
                        MatchKey::Argument {
                            event_type: e.event_type.clone(),
                            role: a.role.clone(),
                            text: canonical_text(&a.text),
                        }
                    }
                })
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeScore {
    pub correct: u64,
    pub predicted: u64,
    pub gold: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task: TaskKind,
    pub head_mode: bool,
    pub correct: u64,
    pub predicted: u64,
    pub gold: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_type: BTreeMap<String, TypeScore>,
}

/// `round(num / den, 4)` computed exactly, halves rounded up.
fn round4(num: u64, den: u64) -> f64 {
    if den == 0 {
        return 0.0;
    }
    let (num, den) = (num as u128, den as u128);
    let scaled = (num * 20_000 + den) / (2 * den);
    scaled as f64 / 10_000.0
}

/// Precision, recall and F1 from pooled counts, each rounded to 4 decimals.
pub fn f1_from_counts(
    correct: u64,
    predicted: u64,
    gold: u64,
) -> Result<(f64, f64, f64), MetricsError> {
    if correct > predicted.min(gold) {
        return Err(MetricsError::InvalidCounts {
            correct,
            predicted,
            gold,
        });
    }
    // 2PR/(P+R) reduces to 2c/(p+g).
    Ok((
        round4(correct, predicted),
        round4(correct, gold),
        round4(2 * correct, predicted + gold),
    ))
}

fn type_score(correct: u64, predicted: u64, gold: u64) -> TypeScore {
    let (precision, recall, f1) =
        f1_from_counts(correct, predicted, gold).expect("counts from a matching");
    TypeScore {
        correct,
        predicted,
        gold,
        precision,
        recall,
        f1,
    }
}

/// A report with only aggregate counts.
pub fn f1_report(task: TaskKind, correct: u64, predicted: u64, gold: u64) -> MetricsReport {
    let s = type_score(correct, predicted, gold);
    MetricsReport {
        task,
        head_mode: false,
        correct: s.correct,
        predicted: s.predicted,
        gold: s.gold,
        precision: s.precision,
        recall: s.recall,
        f1: s.f1,
        per_type: BTreeMap::new(),
    }
}

#[derive(Default, Clone, Copy)]
struct Counts {
    correct: u64,
    predicted: u64,
    gold: u64,
}

/// Merges two sorted key lists, crediting each shared key min(count) times.
fn match_sorted(pred: &[MatchKey], gold: &[MatchKey], per_type: &mut BTreeMap<String, Counts>) {
    for k in pred {
        per_type
            .entry(k.type_name().to_string())
            .or_default()
            .predicted += 1;
    }
    for k in gold {
        per_type.entry(k.type_name().to_string()).or_default().gold += 1;
    }
    let (mut i, mut j) = (0, 0);
    while i < pred.len() && j < gold.len() {
        match pred[i].cmp(&gold[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                per_type
                    .entry(pred[i].type_name().to_string())
                    .or_default()
                    .correct += 1;
                i += 1;
                j += 1;
            }
        }
    }
}

/// Scores predictions against golds. Gold examples without a prediction
/// count as empty predictions.
pub fn score(
    predictions: &[(String, ExtractionSet)],
    golds: &[(String, ExtractionSet)],
    task: TaskKind,
    head_mode: bool,
) -> Result<MetricsReport, MetricsError> {
    if head_mode && task != TaskKind::Eae {
        return Err(MetricsError::HeadModeUnsupported(task));
    }
    let mut gold_index: HashMap<&str, &ExtractionSet> = HashMap::with_capacity(golds.len());
    for (id, set) in golds {
        if gold_index.insert(id.as_str(), set).is_some() {
            return Err(MetricsError::DuplicateExample(id.clone()));
        }
    }
    let mut pred_index: HashMap<&str, &ExtractionSet> = HashMap::with_capacity(predictions.len());
    for (id, set) in predictions {
        if !gold_index.contains_key(id.as_str()) {
            return Err(MetricsError::UnknownExample(id.clone()));
        }
        if pred_index.insert(id.as_str(), set).is_some() {
            return Err(MetricsError::DuplicateExample(id.clone()));
        }
    }

    let empty = ExtractionSet::default();
    let mut per_type: BTreeMap<String, Counts> = BTreeMap::new();
    for (id, gold) in golds {
        let pred = pred_index.get(id.as_str()).copied().unwrap_or(&empty);
        let mut pk = match_keys(pred, task, head_mode);
        let mut gk = match_keys(gold, task, head_mode);
        pk.sort_unstable();
        gk.sort_unstable();
        match_sorted(&pk, &gk, &mut per_type);
    }

    let total = per_type.values().fold(Counts::default(), |acc, c| Counts {
        correct: acc.correct + c.correct,
        predicted: acc.predicted + c.predicted,
        gold: acc.gold + c.gold,
    });
    let overall = type_score(total.correct, total.predicted, total.gold);
    Ok(MetricsReport {
        task,
        head_mode,
        correct: overall.correct,
        predicted: overall.predicted,
        gold: overall.gold,
        precision: overall.precision,
        recall: overall.recall,
        f1: overall.f1,
        per_type: per_type
            .into_iter()
            .map(|(t, c)| (t, type_score(c.correct, c.predicted, c.gold)))
            .collect(),
    })
}

impl MetricsReport {
    /// Fixed-width table, one row per type then the micro total.
    pub fn to_table(&self) -> String {
        let metric = match (self.task, self.head_mode) {
            (TaskKind::Ner, _) => "entity",
            (TaskKind::Re, _) => "relation strict",
            (TaskKind::Ed, _) => "trigger",
            (TaskKind::Eae, true) => "argument head",
            (TaskKind::Eae | TaskKind::Ee, _) => "argument",
        };
        let width = self
            .per_type
            .keys()
            .map(|k| k.len())
            .max()
            .unwrap_or(0)
            .max(10);
        let mut out = String::new();
        let _ = writeln!(out, "task {} ({metric} F1)", self.task);
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>9}  {:>6}  {:>9}  {:>6}  {:>6}",
            "type", "correct", "predicted", "gold", "precision", "recall", "f1"
        );
        let row = |out: &mut String, name: &str, s: &TypeScore| {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8}  {:>9}  {:>6}  {:>9.4}  {:>6.4}  {:>6.4}",
                name, s.correct, s.predicted, s.gold, s.precision, s.recall, s.f1
            );
        };
        for (name, s) in &self.per_type {
            row(&mut out, name, s);
        }
        let _ = writeln!(out, "{}", "-".repeat(width + 56));
        row(
            &mut out,
            "micro",
            &TypeScore {
                correct: self.correct,
                predicted: self.predicted,
                gold: self.gold,
                precision: self.precision,
                recall: self.recall,
                f1: self.f1,
            },
        );
        out
    }
}
