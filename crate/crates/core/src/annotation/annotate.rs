use std::collections::BTreeSet;
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::Serialize;
use thiserror::Error;

use super::prompt::{TemplateError, TemplateRegistry, CORRECTION_SUFFIX};
use super::sections::parse_sections;
use super::store::{AnnotationRecord, RecordStore, Status};
use crate::chat::{ChatBackend, ChatMessage, ChatRequest};
use crate::pairing::annotator_for;
use crate::sensors::EnrichedSample;
use crate::types::Annotator;

pub const MAX_ATTEMPTS: u32 = 3;
pub const DEFAULT_CONCURRENCY: usize = 4;

/// One annotator backend and the partition it serves.
#[derive(Clone)]
pub struct AnnotatorClient {
    pub annotator: Annotator,
    pub model: String,
    pub backend: Arc<dyn ChatBackend>,
}

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("pair {pair_id} belongs to annotator {expected}, not {got}")]
    WrongPartition {
        pair_id: String,
        expected: Annotator,
        got: Annotator,
    },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("record store: {0}")]
    Store(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// An ok record already existed; nothing was sent.
    Skipped,
    Fresh(Status),
}

/// Annotates one pair unless the store already holds an ok record for it.
/// Backend and parse failures produce a stored record, not an error.
pub async fn annotate_pair(
    sample: &EnrichedSample,
    client: &AnnotatorClient,
    templates: &TemplateRegistry,
    template_id: &str,
    store: &RecordStore,
) -> Result<(AnnotationRecord, Outcome), AnnotateError> {
    let pair = &sample.pair;
    let expected = annotator_for(pair.location_key());
    if expected != client.annotator {
        return Err(AnnotateError::WrongPartition {
            pair_id: pair.pair_id.clone(),
            expected,
            got: client.annotator,
        });
    }
    if let Some(existing) = store.get(&pair.pair_id)? {
        if existing.is_ok() {
            return Ok((existing, Outcome::Skipped));
        }
    }

    let prompt = templates.build_prompt(sample, template_id)?;
    let images = vec![pair.earlier.image_ref.clone(), pair.later.image_ref.clone()];
    let mut raw = String::new();
    let mut last_error = String::new();
    let mut record = None;
    for attempt in 1..=MAX_ATTEMPTS {
        let content = if attempt == 1 {
            prompt.clone()
        } else {
            format!("{prompt}{CORRECTION_SUFFIX}")
        };
        let request = ChatRequest {
            model: client.model.clone(),
            messages: vec![ChatMessage::user_with_images(content, images.clone())],
        };
        match client.backend.complete(&request).await {
            Err(e) => {
                tracing::warn!(pair_id = %pair.pair_id, error = %e, "annotation backend failed");
                record = Some(AnnotationRecord::failed(
                    &pair.pair_id,
                    client.annotator,
                    Status::BackendFailed,
                    raw.clone(),
                    attempt,
                    e.to_string(),
                ));
                break;
            }
            Ok(reply) => match parse_sections(&reply) {
                Ok(sections) => {
                    record = Some(AnnotationRecord::ok(&pair.pair_id, client.annotator, sections, reply, attempt));
                    break;
                }
                Err(e) => {
                    raw = reply;
                    last_error = e.to_string();
                }
            },
        }
    }
    let record = record.unwrap_or_else(|| {
        AnnotationRecord::failed(
            &pair.pair_id,
            client.annotator,
            Status::ParseFailed,
            raw,
            MAX_ATTEMPTS,
            last_error,
        )
    });
    store.put(&record)?;
    let status = record.status;
    Ok((record, Outcome::Fresh(status)))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BatchReport {
    pub ok: usize,
    pub parse_failed: usize,
    pub backend_failed: usize,
    pub skipped: usize,
    /// Pairs that could not be attempted at all, with the reason.
    pub errors: Vec<(String, String)>,
}

impl BatchReport {
    fn add(&mut self, pair_id: &str, result: Result<Outcome, AnnotateError>) {
        match result {
            Ok(Outcome::Skipped) => self.skipped += 1,
            Ok(Outcome::Fresh(Status::Ok)) => self.ok += 1,
            Ok(Outcome::Fresh(Status::ParseFailed)) => self.parse_failed += 1,
            Ok(Outcome::Fresh(Status::BackendFailed)) => self.backend_failed += 1,
            Err(e) => self.errors.push((pair_id.to_string(), e.to_string())),
        }
    }
}

/// Routes each pair to the client for its partition and runs each backend
/// with at most `concurrency` calls in flight. Duplicate pair ids are
/// processed once.
pub async fn annotate_batch(
    samples: &[EnrichedSample],
    clients: &[AnnotatorClient; 2],
    templates: &TemplateRegistry,
    template_id: &str,
    store: &RecordStore,
    concurrency: usize,
) -> BatchReport {
    let mut seen = BTreeSet::new();
    let unique: Vec<&EnrichedSample> = samples
        .iter()
        .filter(|s| seen.insert(s.pair.pair_id.as_str()))
        .collect();

    let (a, b) = futures::join!(
        run_partition(&unique, &clients[0], templates, template_id, store, concurrency),
        run_partition(&unique, &clients[1], templates, template_id, store, concurrency)
    );

    let mut report = BatchReport::default();
    let mut results: Vec<_> = a.into_iter().chain(b).collect();
    results.sort_by(|x, y| x.0.cmp(&y.0));
    for (id, r) in results {
        report.add(&id, r);
    }
    report
}

async fn run_partition(
    samples: &[&EnrichedSample],
    client: &AnnotatorClient,
    templates: &TemplateRegistry,
    template_id: &str,
    store: &RecordStore,
    concurrency: usize,
) -> Vec<(String, Result<Outcome, AnnotateError>)> {
    let mine = samples
        .iter()
        .copied()
        .filter(|s| annotator_for(s.pair.location_key()) == client.annotator);
    stream::iter(mine)
        .map(|s| async move {
            let r = annotate_pair(s, client, templates, template_id, store).await;
            (s.pair.pair_id.clone(), r.map(|(_, o)| o))
        })
        .buffer_unordered(concurrency.max(1))
        .collect()
        .await
}
