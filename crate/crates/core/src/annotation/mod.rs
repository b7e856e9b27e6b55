//! Prompting the two annotator backends, storing their replies, and the
//! scorecard-based curation pass.

pub mod annotate;
pub mod curation;
pub mod prompt;
pub mod sections;
pub mod store;

pub use annotate::{annotate_batch, annotate_pair, AnnotateError, AnnotatorClient, BatchReport, Outcome};
pub use curation::{apply_threshold, score_distribution, ScoreCard, ScoreDistribution, Selection};
pub use prompt::{TemplateRegistry, DEFAULT_TEMPLATE};
pub use sections::{parse_sections, Sections};
pub use store::{AnnotationRecord, RecordStore, Status};
