//! Building blocks for a sensor-aware remote-sensing change-captioning workbench.
//!
//! The pipeline runs in stages, each with its own module:
//!
//! - [`pairing`]: deduplicate imagery metadata, build temporal pairs per site and
//!   split them between two annotator backends.
//! - [`sensors`]: fetch historical weather and air-quality readings, cache them,
//!   and fuse them onto pairs.
//! - [`annotation`]: render prompts, drive the chat backends, parse the five
//!   annotation sections and apply the manual curation threshold.
//! - [`taskgen`]: turn curated annotations into describe / what-if / difference
//!   conversations.
//! - [`metrics`]: ROUGE, keyword-cluster evaluation and delegated neural scores.
//!
//! Shared domain types live in [`types`]; [`adapter`] holds the low-rank adapter
//! forward/merge arithmetic.

pub mod adapter;
pub mod annotation;
pub mod chat;
pub mod fnv;
pub mod jsonl;
pub mod metrics;
pub mod pairing;
pub mod season;
pub mod sensors;
pub mod taskgen;
pub mod types;

pub use season::{season_of, Season};
pub use types::{
    Annotator, EmissionReading, ImageRecord, TemporalPair, TypeError, WeatherReading,
};
