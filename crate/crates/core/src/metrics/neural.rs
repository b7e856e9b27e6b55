//! Client side of the scorer protocol.
//!
//! `POST {base}/v1/score` with `{"metric": .., "items": [{"ref", "hyp",
//! "src"?}]}`, answered by `{"scores": [number | null]}` in item order.

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeuralMetric {
    Sbert,
    BertF1,
    Comet,
}

impl NeuralMetric {
    pub const ALL: [NeuralMetric; 3] = [NeuralMetric::Sbert, NeuralMetric::BertF1, NeuralMetric::Comet];

    pub fn name(self) -> &'static str {
        match self {
            NeuralMetric::Sbert => "sbert",
            NeuralMetric::BertF1 => "bert_f1",
            NeuralMetric::Comet => "comet",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreItem {
    #[serde(rename = "ref")]
    pub reference: String,
    pub hyp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub metric: NeuralMetric,
    pub items: Vec<ScoreItem>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NeuralError {
    #[error("item {index} has no src, which {metric} requires")]
    MissingSrc { index: usize, metric: &'static str },
    #[error("scorer unavailable: {0}")]
    Unavailable(String),
}

#[async_trait]
pub trait ScoreTransport: Send + Sync {
    async fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse, String>;
}

pub struct HttpScorer {
    client: reqwest::Client,
    url: String,
}

impl HttpScorer {
    /// `base` is the server root; requests go to `{base}/v1/score`.
    pub fn new(base: &str, timeout: Duration) -> Result<Self, String> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| e.to_string())?;
        Ok(Self {
            client,
            url: format!("{}/v1/score", base.trim_end_matches('/')),
        })
    }
}

#[async_trait]
impl ScoreTransport for HttpScorer {
    async fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse, String> {
        let resp = self
            .client
            .post(&self.url)
            .json(request)
            .send()
            .await
            .map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("HTTP {}", status.as_u16()));
        }
        resp.json::<ScoreResponse>().await.map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeuralScores {
    /// One entry per item; `None` where the scorer gave no usable value.
    pub scores: Vec<Option<f64>>,
    /// Items whose raw score fell outside [0, 1] and was clamped.
    pub clamped: Vec<usize>,
}

/// Scores `items` in batches of `batch_size`. A failed first batch means the
/// scorer is treated as unavailable; a later failed batch, or a reply of the
/// wrong length, leaves just that batch's items unscored.
pub async fn neural_scores(
    items: &[ScoreItem],
    metric: NeuralMetric,
    scorer: &dyn ScoreTransport,
    batch_size: usize,
) -> Result<NeuralScores, NeuralError> {
    if metric == NeuralMetric::Comet {
        if let Some(index) = items.iter().position(|i| i.src.is_none()) {
            return Err(NeuralError::MissingSrc {
                index,
                metric: metric.name(),
            });
        }
    }
    let mut out = NeuralScores::default();
    for (b, chunk) in items.chunks(batch_size.max(1)).enumerate() {
        let request = ScoreRequest {
            metric,
            items: chunk.to_vec(),
        };
        let reply = match scorer.score(&request).await {
            Ok(r) if r.scores.len() == chunk.len() => r.scores,
            Ok(r) => {
                tracing::warn!(metric = metric.name(), expected = chunk.len(), got = r.scores.len(), "scorer reply has wrong length");
                vec![None; chunk.len()]
            }
            Err(e) if b == 0 => return Err(NeuralError::Unavailable(e)),
            Err(e) => {
                tracing::warn!(metric = metric.name(), error = %e, "scorer batch failed");
                vec![None; chunk.len()]
            }
        };
        for s in reply {
            let idx = out.scores.len();
            out.scores.push(match s {
                Some(v) if v.is_finite() => {
                    if !(0.0..=1.0).contains(&v) {
                        out.clamped.push(idx);
                    }
                    Some(v.clamp(0.0, 1.0))
                }
                _ => None,
            });
        }
    }
    Ok(out)
}
