//! Weather and air-quality enrichment.
//!
//! Readings are fetched per capture from three providers: one weather source,
//! and two emissions sources chosen by country (European vs. rest of world).
//! Every response is cached on disk keyed by provider, rounded coordinates and
//! UTC date, so a warm cache replays a run without touching the network.

pub mod cache;
pub mod client;
pub mod config;
pub mod countries;
pub mod decode;
pub mod enrich;
pub mod limiter;
pub mod transport;

pub use cache::{CacheKey, FileCache};
pub use client::{FetchError, Provider, ProvenanceEntry, SensorClient};
pub use config::{ProviderConfig, RetryPolicy, Secret};
pub use countries::{route_emissions_provider, validate_country, EmissionsRoute};
pub use enrich::{drop_sparse_features, enrich_pairs, EnrichOutcome, EnrichedSample, PruneReport};
pub use transport::{HttpResponse, HttpTransport, RecordingTransport, ReqwestTransport};
