//! HTTP GET transport used by the sensor providers.
//!
//! [`ReqwestTransport`] talks to the network; [`RecordingTransport`] replays
//! canned responses and logs every request so tests can count calls and check
//! their timing.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::time::Instant;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

impl HttpResponse {
    pub fn ok(body: impl Into<String>) -> Self {
        Self {
            status: 200,
            body: body.into(),
        }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    /// 5xx and 429 are worth another attempt.
    pub fn is_retryable(&self) -> bool {
        self.status >= 500 || self.status == 429
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct TransportError(pub String);

pub type Query = Vec<(String, String)>;

#[async_trait]
pub trait HttpTransport: Send + Sync {
    async fn get(&self, url: &str, query: &Query) -> Result<HttpResponse, TransportError>;
}

pub struct ReqwestTransport {
    client: reqwest::Client,
}

impl ReqwestTransport {
    pub fn new(timeout: Duration) -> Result<Self, TransportError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(Self { client })
    }
}

#[async_trait]
impl HttpTransport for ReqwestTransport {
    async fn get(&self, url: &str, query: &Query) -> Result<HttpResponse, TransportError> {
        let resp = self
            .client
            .get(url)
            .query(query)
            .send()
            .await
            .map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.text().await.map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

#[derive(Debug, Clone)]
pub struct RecordedRequest {
    pub url: String,
    pub query: Query,
    pub at: Instant,
}

impl RecordedRequest {
    pub fn param(&self, name: &str) -> Option<&str> {
        self.query
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }
}

/// A recorded exchange, as stored in fixture files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fixture {
    pub endpoint: String,
    /// Query parameters to match; `key` is never compared.
    pub query: BTreeMap<String, String>,
    pub status: u16,
    pub body: serde_json::Value,
}

type Outcome = Result<HttpResponse, TransportError>;

#[derive(Default)]
struct Routes {
    exact: HashMap<(String, BTreeMap<String, String>), Outcome>,
    fallback: HashMap<String, Outcome>,
    queued: HashMap<String, VecDeque<Outcome>>,
}

/// In-memory transport: scripted failures first, then exact fixture matches,
/// then a per-endpoint fallback, else a 404.
#[derive(Default)]
pub struct RecordingTransport {
    routes: Mutex<Routes>,
    log: Mutex<Vec<RecordedRequest>>,
}

impl RecordingTransport {
    pub fn new() -> Self {
        Self::default()
    }

    fn match_key(query: &Query) -> BTreeMap<String, String> {
        query
            .iter()
            .filter(|(k, _)| k != "key")
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn add_fixture(&self, fx: Fixture) {
        let body = match &fx.body {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        let mut q = fx.query;
        q.remove("key");
        self.routes.lock().unwrap().exact.insert(
            (fx.endpoint, q),
            Ok(HttpResponse {
                status: fx.status,
                body,
            }),
        );
    }

    /// Loads every `*.json` file in `dir`; each holds one [`Fixture`] or an
    /// array of them.
    pub fn load_fixture_dir(&self, dir: &Path) -> std::io::Result<usize> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut n = 0;
        for path in paths {
            let text = std::fs::read_to_string(&path)?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            let fixtures: Vec<Fixture> = if value.is_array() {
                serde_json::from_value(value)
            } else {
                serde_json::from_value(value).map(|f| vec![f])
            }
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            for fx in fixtures {
                self.add_fixture(fx);
                n += 1;
            }
        }
        Ok(n)
    }

    pub fn fallback(&self, endpoint: &str, response: HttpResponse) {
        self.routes
            .lock()
            .unwrap()
            .fallback
            .insert(endpoint.to_string(), Ok(response));
    }

    /// Queues one-shot outcomes for an endpoint, consumed before any fixture.
    pub fn enqueue(&self, endpoint: &str, outcome: Outcome) {
        self.routes
            .lock()
            .unwrap()
            .queued
            .entry(endpoint.to_string())
            .or_default()
            .push_back(outcome);
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.log.lock().unwrap().clone()
    }

    pub fn request_count(&self) -> usize {
        self.log.lock().unwrap().len()
    }

    pub fn requests_to(&self, endpoint: &str) -> Vec<RecordedRequest> {
        self.requests().into_iter().filter(|r| r.url == endpoint).collect()
    }
}

#[async_trait]
impl HttpTransport for RecordingTransport {
    async fn get(&self, url: &str, query: &Query) -> Result<HttpResponse, TransportError> {
        self.log.lock().unwrap().push(RecordedRequest {
            url: url.to_string(),
            query: query.clone(),
            at: Instant::now(),
        });
        let mut routes = self.routes.lock().unwrap();
        if let Some(q) = routes.queued.get_mut(url) {
            if let Some(outcome) = q.pop_front() {
                return outcome;
            }
        }
        let key = (url.to_string(), Self::match_key(query));
        if let Some(outcome) = routes.exact.get(&key) {
            return outcome.clone();
        }
        if let Some(outcome) = routes.fallback.get(url) {
            return outcome.clone();
        }
        Ok(HttpResponse {
            status: 404,
            body: String::new(),
        })
    }
}
