use std::fmt;
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

/// A credential that never shows up in logs or debug output.
#[derive(Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(transparent)]
pub struct Secret(String);

impl Secret {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.0.is_empty() { "Secret(<empty>)" } else { "Secret(***)" })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles each retry.
    pub backoff_base_ms: u64,
    /// Scale each delay by a factor in `[0.5, 1.0)`.
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            backoff_base_ms: 500,
            jitter: true,
        }
    }
}

impl RetryPolicy {
    /// Delay slept after failed attempt number `attempt` (1-based). Jitter is
    /// derived from `salt` so reruns sleep identically.
    pub fn delay(&self, attempt: u32, salt: u64) -> Duration {
        let base = self.backoff_base_ms.saturating_mul(1u64 << (attempt - 1).min(20));
        let ms = if self.jitter {
            let mixed = crate::fnv::fnv1a64(&[salt.to_le_bytes(), u64::from(attempt).to_le_bytes()].concat());
            let frac = 0.5 + (mixed >> 11) as f64 / (1u64 << 53) as f64 * 0.5;
            (base as f64 * frac) as u64
        } else {
            base
        };
        Duration::from_millis(ms)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("rate limit must be positive, got {0}")]
    RateLimit(f64),
    #[error("retry max_attempts must be at least 1")]
    Attempts,
    #[error("concurrency must be at least 1")]
    Concurrency,
    #[error("{0} endpoint is empty")]
    Endpoint(&'static str),
}

/// Provider endpoints, credentials and client behaviour.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub weather_endpoint: String,
    pub emissions_endpoint_eu: String,
    pub emissions_endpoint_row: String,
    pub weather_key: Secret,
    pub emissions_key_eu: Secret,
    pub emissions_key_row: Secret,
    /// Requests per second, per provider.
    pub rate_limit: f64,
    pub retry: RetryPolicy,
    /// In-flight requests across all providers.
    pub concurrency: usize,
    pub timeout_secs: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            weather_endpoint: String::new(),
            emissions_endpoint_eu: String::new(),
            emissions_endpoint_row: String::new(),
            weather_key: Secret::default(),
            emissions_key_eu: Secret::default(),
            emissions_key_row: Secret::default(),
            rate_limit: 5.0,
            retry: RetryPolicy::default(),
            concurrency: 8,
            timeout_secs: 30,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.rate_limit > 0.0 && self.rate_limit.is_finite()) {
            return Err(ConfigError::RateLimit(self.rate_limit));
        }
        if self.retry.max_attempts == 0 {
            return Err(ConfigError::Attempts);
        }
        if self.concurrency == 0 {
            return Err(ConfigError::Concurrency);
        }
        for (name, url) in [
            ("weather", &self.weather_endpoint),
            ("emissions EU", &self.emissions_endpoint_eu),
            ("emissions ROW", &self.emissions_endpoint_row),
        ] {
            if url.trim().is_empty() {
                return Err(ConfigError::Endpoint(name));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ProviderConfig {
        ProviderConfig {
            weather_endpoint: "http://w".into(),
            emissions_endpoint_eu: "http://eu".into(),
            emissions_endpoint_row: "http://row".into(),
            ..Default::default()
        }
    }

    #[test]
    fn validation() {
        assert_eq!(cfg().validate(), Ok(()));
        let mut c = cfg();
        c.rate_limit = 0.0;
        assert_eq!(c.validate(), Err(ConfigError::RateLimit(0.0)));
        let mut c = cfg();
        c.retry.max_attempts = 0;
        assert_eq!(c.validate(), Err(ConfigError::Attempts));
        let mut c = cfg();
        c.emissions_endpoint_row.clear();
        assert_eq!(c.validate(), Err(ConfigError::Endpoint("emissions ROW")));
    }

    #[test]
    fn secrets_are_redacted() {
        let mut c = cfg();
        c.weather_key = Secret::new("hunter2");
        assert!(!format!("{c:?}").contains("hunter2"));
        assert_eq!(c.weather_key.expose(), "hunter2");
    }

    #[test]
    fn backoff_doubles_within_jitter_band() {
        let p = RetryPolicy::default();
        for attempt in 1..=4 {
            let nominal = 500u64 << (attempt - 1);
            let d = p.delay(attempt, 42).as_millis() as u64;
            assert!(d >= nominal / 2 && d < nominal, "attempt {attempt}: {d}");
            assert_eq!(p.delay(attempt, 42), p.delay(attempt, 42));
        }
        let flat = RetryPolicy { jitter: false, ..p };
        assert_eq!(flat.delay(3, 0), Duration::from_millis(2000));
    }
}
