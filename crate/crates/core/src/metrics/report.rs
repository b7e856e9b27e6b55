use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use super::kce::{kce, KeywordLexicon};
use super::neural::{neural_scores, NeuralError, NeuralMetric, ScoreItem, ScoreTransport};
use super::rouge::{rouge_l, rouge_n};
use crate::chat::Role;
use crate::taskgen::ConversationSample;

pub const NATIVE_COLUMNS: [&str; 6] = ["rouge1_f", "rouge2_f", "rougeL_f", "kce_p", "kce_r", "kce_f1"];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ids only in predictions: [{}]; ids only in references: [{}]", .only_pred.join(", "), .only_ref.join(", "))]
    Misaligned {
        only_pred: Vec<String>,
        only_ref: Vec<String>,
    },
    #[error("duplicate id {0}")]
    Duplicate(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("writing report: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing report: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub id: String,
    pub task: String,
    pub rouge1_f: f64,
    pub rouge2_f: f64,
    #[serde(rename = "rougeL_f")]
    pub rouge_l_f: f64,
    pub kce_p: f64,
    pub kce_r: f64,
    pub kce_f1: f64,
    pub neural: BTreeMap<NeuralMetric, Option<f64>>,
}

impl MetricRow {
    fn native(&self) -> [f64; 6] {
        [
            self.rouge1_f,
            self.rouge2_f,
            self.rouge_l_f,
            self.kce_p,
            self.kce_r,
            self.kce_f1,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub lexicon_version: String,
    /// Sorted by id.
    pub rows: Vec<MetricRow>,
    /// Neural metrics that produced a column.
    pub neural_columns: Vec<NeuralMetric>,
    /// Mean of present values per column.
    pub means: BTreeMap<String, f64>,
    pub scored: usize,
    /// Ids with no scoreable turn on one side, with the reason.
    pub skipped: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

fn scored_pair(pred: &ConversationSample, reference: &ConversationSample) -> Result<(String, String, String), String> {
    let task = reference.task;
    let turn = task.scored_turn();
    let r = reference
        .scored_text()
        .ok_or_else(|| format!("reference lacks assistant turn {}", turn + 1))?;
    let h = pred
        .assistant_turns()
        .nth(turn)
        .map(|m| m.content.as_str())
        .ok_or_else(|| format!("prediction lacks assistant turn {}", turn + 1))?;
    // the user turn that prompted the scored answer
    let src = reference
        .messages
        .iter()
        .filter(|m| m.role == Role::User)
        .nth(turn)
        .map(|m| m.content.clone())
        .unwrap_or_default();
    Ok((r.to_string(), h.to_string(), src))
}

fn by_id(samples: &[ConversationSample]) -> Result<BTreeMap<&str, &ConversationSample>, EvalError> {
    let mut m = BTreeMap::new();
    for s in samples {
        if m.insert(s.id.as_str(), s).is_some() {
            return Err(EvalError::Duplicate(s.id.clone()));
        }
    }
    Ok(m)
}

/// Scores predictions against references matched by id. With a scorer, every
/// neural metric is requested; a metric whose scorer is down is dropped with
/// a warning.
pub async fn evaluate(
    predictions: &[ConversationSample],
    references: &[ConversationSample],
    lexicon: &KeywordLexicon,
    scorer: Option<&dyn ScoreTransport>,
    batch_size: usize,
) -> Result<MetricReport, EvalError> {
    let preds = by_id(predictions)?;
    let refs = by_id(references)?;
    let pk: BTreeSet<&str> = preds.keys().copied().collect();
    let rk: BTreeSet<&str> = refs.keys().copied().collect();
    if pk != rk {
        return Err(EvalError::Misaligned {
            only_pred: pk.difference(&rk).map(|s| s.to_string()).collect(),
            only_ref: rk.difference(&pk).map(|s| s.to_string()).collect(),
        });
    }

    let mut rows = Vec::new();
    let mut items = Vec::new();
    let mut skipped = Vec::new();
    for (id, r) in &refs {
        match scored_pair(preds[id], r) {
            Err(reason) => skipped.push((id.to_string(), reason)),
            Ok((reference, hyp, src)) => {
                let k = kce(&reference, &hyp, lexicon);
                rows.push(MetricRow {
                    id: id.to_string(),
                    task: r.task.to_string(),
                    rouge1_f: rouge_n(&reference, &hyp, 1).f1,
                    rouge2_f: rouge_n(&reference, &hyp, 2).f1,
                    rouge_l_f: rouge_l(&reference, &hyp).f1,
                    kce_p: k.precision,
                    kce_r: k.recall,
                    kce_f1: k.f1,
                    neural: BTreeMap::new(),
                });
                items.push(ScoreItem {
                    reference,
                    hyp,
                    src: Some(src),
                });
            }
        }
    }

    let mut neural_columns = Vec::new();
    let mut warnings = Vec::new();
    if let Some(scorer) = scorer {
        for metric in NeuralMetric::ALL {
            match neural_scores(&items, metric, scorer, batch_size).await {
                Ok(out) => {
                    neural_columns.push(metric);
                    for &i in &out.clamped {
                        warnings.push(format!("{}: score for {} clamped to [0,1]", metric.name(), rows[i].id));
                    }
                    for (row, s) in rows.iter_mut().zip(out.scores) {
                        row.neural.insert(metric, s);
                    }
                }
                Err(NeuralError::Unavailable(e)) => {
                    tracing::warn!(metric = metric.name(), error = %e, "neural metric skipped");
                    warnings.push(format!("{}: scorer unavailable ({e}); column omitted", metric.name()));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    let mut means = BTreeMap::new();
    if !rows.is_empty() {
        for (c, name) in NATIVE_COLUMNS.iter().enumerate() {
            means.insert(name.to_string(), mean(rows.iter().map(|r| Some(r.native()[c]))).unwrap_or(0.0));
        }
    }
    for metric in &neural_columns {
        if let Some(m) = mean(rows.iter().map(|r| r.neural.get(metric).copied().flatten())) {
            means.insert(metric.name().to_string(), m);
        }
    }
    Ok(MetricReport {
        lexicon_version: lexicon.version.clone(),
        scored: rows.len(),
        rows,
        neural_columns,
        means,
        skipped,
        warnings,
    })
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl MetricReport {
    pub fn columns(&self) -> Vec<String> {
        let mut cols = vec!["id".to_string(), "task".to_string()];
        cols.extend(NATIVE_COLUMNS.iter().map(|s| s.to_string()));
        cols.extend(self.neural_columns.iter().map(|m| m.name().to_string()));
        cols
    }

    /// Per-sample CSV; an unscored neural cell is left empty.
    pub fn write_csv(&self, writer: impl Write) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns())?;
        for r in &self.rows {
            let mut rec = vec![r.id.clone(), r.task.clone()];
            rec.extend(r.native().iter().map(|v| v.to_string()));
            for m in &self.neural_columns {
                rec.push(r.neural.get(m).copied().flatten().map(|v| v.to_string()).unwrap_or_default());
            }
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "lexicon_version": self.lexicon_version,
            "columns": self.columns(),
            "means": self.means,
            "scored": self.scored,
            "skipped": self.skipped.len(),
            "skipped_ids": self.skipped,
            "warnings": self.warnings,
        })
    }
}
