//! Deterministic stand-in backends.
//!
//! The chat stub answers `STUB:<model>:<h>` where `h` is the FNV-1a 64-bit
//! hash (16 hex digits) of the request messages. Sessions send their task
//! name as the model unless told otherwise, so the tag reads as the task.
//! Each message is hashed as role, 0x1f, content, then 0x1f and each image,
//! closed by 0x1e.

use std::sync::Mutex;

use async_trait::async_trait;
use envpair_core::chat::{BackendError, ChatBackend, ChatRequest};
use envpair_core::fnv::Fnv1a64;
use envpair_core::metrics::neural::{ScoreRequest, ScoreResponse};

pub const STUB_SCORE: f64 = 0.5;

pub fn stub_digest(request: &ChatRequest) -> u64 {
    let mut h = Fnv1a64::default();
    for m in &request.messages {
        h.write(m.role.as_str().as_bytes());
        h.write(&[0x1f]);
        h.write(m.content.as_bytes());
        for image in m.images() {
            h.write(&[0x1f]);
            h.write(image.as_bytes());
        }
        h.write(&[0x1e]);
    }
    h.finish()
}

pub fn stub_reply(request: &ChatRequest) -> String {
    format!("STUB:{}:{:016x}", request.model, stub_digest(request))
}

pub fn stub_scores(request: &ScoreRequest) -> ScoreResponse {
    ScoreResponse {
        scores: vec![Some(STUB_SCORE); request.items.len()],
    }
}

/// Chat stub that keeps the serialized body of every request it receives.
#[derive(Debug, Default)]
pub struct StubBackend {
    log: Mutex<Vec<String>>,
}

impl StubBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn requests(&self) -> Vec<String> {
        self.log.lock().unwrap().clone()
    }

    pub fn request_count(&self) -> usize {
        self.log.lock().unwrap().len()
    }
}

#[async_trait]
impl ChatBackend for StubBackend {
    async fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let body = serde_json::to_string(request).map_err(|e| BackendError::Decode(e.to_string()))?;
        self.log.lock().unwrap().push(body);
        Ok(stub_reply(request))
    }
}
