//! Pairs a session can be opened from, with their annotations when present.

use std::collections::BTreeMap;
use std::path::Path;

use envpair_core::annotation::{AnnotationRecord, RecordStore};
use envpair_core::jsonl;
use envpair_core::sensors::EnrichedSample;
use envpair_core::taskgen::render_sensor_block;
use serde::Serialize;

use crate::session::{GroundTruth, SessionSpec, SessionTask};

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub sample: EnrichedSample,
    /// Only successful annotations are kept.
    pub annotation: Option<AnnotationRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairSummary {
    pub pair_id: String,
    pub location_key: String,
    pub category: String,
    pub annotated: bool,
}

#[derive(Debug, Clone, Default)]
pub struct PairCatalog {
    entries: BTreeMap<String, CatalogEntry>,
}

impl PairCatalog {
    pub fn new(samples: Vec<EnrichedSample>, annotations: Vec<AnnotationRecord>) -> Self {
        let mut entries: BTreeMap<String, CatalogEntry> = samples
            .into_iter()
            .map(|s| {
                (
                    s.pair.pair_id.clone(),
                    CatalogEntry {
                        sample: s,
                        annotation: None,
                    },
                )
            })
            .collect();
        for a in annotations.into_iter().filter(|a| a.is_ok()) {
            if let Some(e) = entries.get_mut(&a.pair_id) {
                e.annotation = Some(a);
            }
        }
        Self { entries }
    }

    /// Enriched samples from JSONL, annotations from a record store directory.
    pub fn load(enriched: &Path, annotations: Option<&Path>) -> std::io::Result<Self> {
        let samples = jsonl::read_strict(enriched)?;
        let records = match annotations {
            Some(dir) => RecordStore::open(dir)?.load_all()?,
            None => Vec::new(),
        };
        Ok(Self::new(samples, records))
    }

    pub fn get(&self, pair_id: &str) -> Option<&CatalogEntry> {
        self.entries.get(pair_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn summaries(&self) -> Vec<PairSummary> {
        self.entries
            .values()
            .map(|e| PairSummary {
                pair_id: e.sample.pair.pair_id.clone(),
                location_key: e.sample.pair.earlier.location_key.clone(),
                category: e.sample.pair.earlier.category.clone(),
                annotated: e.annotation.is_some(),
            })
            .collect()
    }
}

impl CatalogEntry {
    /// Both images with their seasons and sensor blocks; the annotation
    /// supplies the what-if question and the reference answer.
    pub fn session_spec(&self, task: SessionTask) -> SessionSpec {
        let s = &self.sample;
        let block = |i| {
            let (w, e) = s.readings(i);
            Some(render_sensor_block(w, e))
        };
        let reference = self.annotation.as_ref().and_then(|a| match task {
            SessionTask::Describe => Some(a.description_1.clone()),
            SessionTask::Whatif => Some(a.whatif_answer.clone()),
            SessionTask::Difference => Some(a.difference_text.clone()),
            SessionTask::Freeform => None,
        });
        let ground_truth = (task != SessionTask::Freeform && self.annotation.is_some()).then(|| GroundTruth {
            image_ref_2: Some(s.pair.later.image_ref.clone()),
            reference_answer: reference,
        });
        SessionSpec {
            image_refs: vec![s.pair.earlier.image_ref.clone(), s.pair.later.image_ref.clone()],
            sensor_payloads: vec![block(0), block(1)],
            seasons: vec![
                Some(s.season_earlier.name().to_string()),
                Some(s.season_later.name().to_string()),
            ],
            pair_id: Some(s.pair.pair_id.clone()),
            whatif_question: self.annotation.as_ref().map(|a| a.whatif_question.clone()),
            ground_truth,
            ..Default::default()
        }
    }
}
