//! Chat-backend wire protocol.
//!
//! `POST {base}/v1/chat` with `{"model": .., "messages": [{"role", "content",
//! "images"?}]}`, answered by `{"content": ..}`. Every backend, real or stub,
//! speaks this shape; the full history is resent on each call.

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensors::RetryPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<Vec<String>>,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
            images: None,
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
            images: None,
        }
    }

    pub fn user_with_images(content: impl Into<String>, images: Vec<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
            images: (!images.is_empty()).then_some(images),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
            images: None,
        }
    }

    pub fn images(&self) -> &[String] {
        self.images.as_deref().unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend unreachable: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("backend reply is not valid: {0}")]
    Decode(String),
}

impl BackendError {
    fn retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status { status, .. } => *status >= 500 || *status == 429,
            BackendError::Decode(_) => false,
        }
    }
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    async fn complete(&self, request: &ChatRequest) -> Result<String, BackendError>;
}

/// HTTP client for the chat protocol, retrying transient failures.
pub struct HttpChatBackend {
    client: reqwest::Client,
    url: String,
    retry: RetryPolicy,
}

impl HttpChatBackend {
    /// `base` is the server root; requests go to `{base}/v1/chat`.
    pub fn new(base: &str, timeout: Duration, retry: RetryPolicy) -> Result<Self, BackendError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            url: format!("{}/v1/chat", base.trim_end_matches('/')),
            retry,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    async fn once(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let resp = self
            .client
            .post(&self.url)
            .json(request)
            .send()
            .await
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .text()
            .await
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(BackendError::Status { status, body });
        }
        serde_json::from_str::<ChatResponse>(&body)
            .map(|r| r.content)
            .map_err(|e| BackendError::Decode(e.to_string()))
    }
}

#[async_trait]
impl ChatBackend for HttpChatBackend {
    async fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let max = self.retry.max_attempts.max(1);
        let salt = crate::fnv::fnv1a64(self.url.as_bytes());
        let mut attempt = 1;
        loop {
            match self.once(request).await {
                Ok(content) => return Ok(content),
                Err(e) if e.retryable() && attempt < max => {
                    tokio::time::sleep(self.retry.delay(attempt, salt)).await;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}
