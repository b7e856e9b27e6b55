use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cache::{CacheEntry, CacheKey, FileCache};
use super::config::ProviderConfig;
use super::countries::{route_emissions_provider, EmissionsRoute};
use super::decode::{
    decode_emissions_eu, decode_emissions_row, decode_weather, DecodeError, DecodedEmissions,
    DecodedWeather,
};
use super::limiter::RateLimiter;
use super::transport::{HttpResponse, HttpTransport, Query};
use crate::fnv::fnv1a64;
use crate::types::{utc_seconds, EmissionReading, ImageRecord, WeatherReading};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    Weather,
    EmissionsEu,
    EmissionsRow,
}

impl Provider {
    pub fn name(self) -> &'static str {
        match self {
            Provider::Weather => "weather",
            Provider::EmissionsEu => "emissions_eu",
            Provider::EmissionsRow => "emissions_row",
        }
    }

    pub fn for_route(route: EmissionsRoute) -> Self {
        match route {
            EmissionsRoute::Eu => Provider::EmissionsEu,
            EmissionsRoute::Row => Provider::EmissionsRow,
        }
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("{provider} request failed after {attempts} attempt(s): {cause}")]
    Network {
        provider: &'static str,
        attempts: u32,
        cause: String,
    },
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("cache write failed: {0}")]
    Cache(#[from] std::io::Error),
}

/// Where a reading came from and when it was first fetched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub image_id: String,
    pub provider: Provider,
    #[serde(with = "utc_seconds")]
    pub fetched_at: DateTime<Utc>,
    pub from_cache: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherFetch {
    pub reading: WeatherReading,
    pub country_name: Option<String>,
    pub rejected: Vec<&'static str>,
    pub provenance: ProvenanceEntry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmissionsFetch {
    pub reading: Option<EmissionReading>,
    pub rejected: Vec<&'static str>,
    pub provenance: ProvenanceEntry,
}

/// Fetches sensor readings through a transport, one rate limiter per provider,
/// and a shared file cache.
pub struct SensorClient {
    cfg: ProviderConfig,
    transport: Arc<dyn HttpTransport>,
    cache: FileCache,
    limiters: [RateLimiter; 3],
    network_calls: AtomicUsize,
    cache_hits: AtomicUsize,
    warnings: AtomicUsize,
}

impl SensorClient {
    pub fn new(cfg: ProviderConfig, transport: Arc<dyn HttpTransport>, cache: FileCache) -> Self {
        let limiters = [
            RateLimiter::new(cfg.rate_limit),
            RateLimiter::new(cfg.rate_limit),
            RateLimiter::new(cfg.rate_limit),
        ];
        Self {
            cfg,
            transport,
            cache,
            limiters,
            network_calls: AtomicUsize::new(0),
            cache_hits: AtomicUsize::new(0),
            warnings: AtomicUsize::new(0),
        }
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.cfg
    }

    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    pub fn cache_hits(&self) -> usize {
        self.cache_hits.load(Ordering::SeqCst)
    }

    /// Values rejected during decoding, summed over all fetches.
    pub fn warnings(&self) -> usize {
        self.warnings.load(Ordering::SeqCst)
    }

    fn endpoint(&self, provider: Provider) -> (&str, &str) {
        match provider {
            Provider::Weather => (&self.cfg.weather_endpoint, self.cfg.weather_key.expose()),
            Provider::EmissionsEu => (
                &self.cfg.emissions_endpoint_eu,
                self.cfg.emissions_key_eu.expose(),
            ),
            Provider::EmissionsRow => (
                &self.cfg.emissions_endpoint_row,
                self.cfg.emissions_key_row.expose(),
            ),
        }
    }

    fn limiter(&self, provider: Provider) -> &RateLimiter {
        &self.limiters[provider as usize]
    }

    /// GET with rate limiting and retries; only 2xx comes back as `Ok`.
    async fn request(&self, provider: Provider, key: &CacheKey) -> Result<HttpResponse, FetchError> {
        let (url, secret) = self.endpoint(provider);
        let mut query: Query = vec![
            ("latitude".into(), key.lat.clone()),
            ("longitude".into(), key.lon.clone()),
            ("date".into(), key.date.to_string()),
        ];
        if !secret.is_empty() {
            query.push(("key".into(), secret.to_string()));
        }
        let salt = fnv1a64(key.digest().as_bytes());
        let max = self.cfg.retry.max_attempts;
        let mut last_cause = String::new();
        for attempt in 1..=max {
            self.limiter(provider).acquire().await;
            self.network_calls.fetch_add(1, Ordering::SeqCst);
            match self.transport.get(url, &query).await {
                Ok(resp) if resp.is_success() => return Ok(resp),
                Ok(resp) => {
                    last_cause = format!("HTTP {}", resp.status);
                    if !resp.is_retryable() {
                        return Err(FetchError::Network {
                            provider: provider.name(),
                            attempts: attempt,
                            cause: last_cause,
                        });
                    }
                }
                Err(e) => last_cause = e.to_string(),
            }
            if attempt < max {
                tracing::debug!(provider = provider.name(), attempt, cause = %last_cause, "retrying");
                tokio::time::sleep(self.cfg.retry.delay(attempt, salt)).await;
            }
        }
        Err(FetchError::Network {
            provider: provider.name(),
            attempts: max,
            cause: last_cause,
        })
    }

    /// Cached body for the key, or a fresh one that decodes cleanly. The cache
    /// is only written after a successful decode.
    async fn fetch_decoded<T>(
        &self,
        provider: Provider,
        record: &ImageRecord,
        decode: fn(&str) -> Result<T, DecodeError>,
    ) -> Result<(T, ProvenanceEntry), FetchError> {
        let key = CacheKey::new(provider.name(), record.latitude, record.longitude, record.date());
        let provenance = |fetched_at, from_cache| ProvenanceEntry {
            image_id: record.id.clone(),
            provider,
            fetched_at,
            from_cache,
        };
        if let Some(hit) = self.cache.get(&key) {
            if let Ok(value) = decode(&hit.body) {
                self.cache_hits.fetch_add(1, Ordering::SeqCst);
                return Ok((value, provenance(hit.fetched_at, true)));
            }
        }
        let resp = self.request(provider, &key).await?;
        let value = decode(&resp.body)?;
        let entry = CacheEntry {
            key,
            fetched_at: Utc::now(),
            status: resp.status,
            body: resp.body,
        };
        self.cache.put(&entry)?;
        Ok((value, provenance(entry.fetched_at, false)))
    }

    pub async fn fetch_weather(&self, record: &ImageRecord) -> Result<WeatherFetch, FetchError> {
        let (decoded, provenance): (DecodedWeather, _) = self
            .fetch_decoded(Provider::Weather, record, decode_weather)
            .await?;
        self.note_rejected(&record.id, Provider::Weather, &decoded.rejected);
        Ok(WeatherFetch {
            reading: decoded.reading,
            country_name: decoded.country_name,
            rejected: decoded.rejected,
            provenance,
        })
    }

    /// Routed by country code; a provider without coverage yields `reading: None`.
    pub async fn fetch_emissions(&self, record: &ImageRecord) -> Result<EmissionsFetch, FetchError> {
        let provider = Provider::for_route(route_emissions_provider(&record.country_code));
        let decode = match provider {
            Provider::EmissionsEu => decode_emissions_eu,
            _ => decode_emissions_row,
        };
        let (decoded, provenance): (DecodedEmissions, _) =
            self.fetch_decoded(provider, record, decode).await?;
        self.note_rejected(&record.id, provider, &decoded.rejected);
        Ok(EmissionsFetch {
            reading: decoded.reading,
            rejected: decoded.rejected,
            provenance,
        })
    }

    fn note_rejected(&self, image_id: &str, provider: Provider, fields: &[&'static str]) {
        if !fields.is_empty() {
            self.warnings.fetch_add(fields.len(), Ordering::SeqCst);
            tracing::warn!(image_id, provider = provider.name(), ?fields, "out-of-range values dropped");
        }
    }
}
