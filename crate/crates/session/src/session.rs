use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use envpair_core::chat::{BackendError, ChatMessage, ChatRequest, Role};
use envpair_core::taskgen::{image_turn_text, DESCRIBE_PROMPT, DIFFERENCE_PROMPT, SECOND_IMAGE_PROMPT};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionTask {
    Describe,
    Whatif,
    Difference,
    Freeform,
}

impl SessionTask {
    pub fn name(self) -> &'static str {
        match self {
            SessionTask::Describe => "describe",
            SessionTask::Whatif => "whatif",
            SessionTask::Difference => "difference",
            SessionTask::Freeform => "freeform",
        }
    }

    pub fn min_images(self) -> usize {
        match self {
            SessionTask::Describe | SessionTask::Whatif => 1,
            SessionTask::Difference => 2,
            SessionTask::Freeform => 0,
        }
    }

    /// Assistant turns produced by the canonical script.
    pub fn script_turns(self) -> Option<usize> {
        match self {
            SessionTask::Describe => Some(1),
            SessionTask::Whatif => Some(2),
            SessionTask::Difference => Some(3),
            SessionTask::Freeform => None,
        }
    }
}

impl fmt::Display for SessionTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SessionTask {
    type Err = SessionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "describe" => Ok(SessionTask::Describe),
            "whatif" => Ok(SessionTask::Whatif),
            "difference" => Ok(SessionTask::Difference),
            "freeform" => Ok(SessionTask::Freeform),
            other => Err(SessionError::Validation(format!("unknown task {other:?}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{0}")]
    Validation(String),
    #[error("no such {kind}: {id}")]
    NotFound { kind: &'static str, id: String },
    #[error("{0}")]
    Conflict(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("journal: {0}")]
    Io(#[from] std::io::Error),
}

/// What a session is compared against after the dialogue, never sent to a
/// backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub image_ref_2: Option<String>,
    pub reference_answer: Option<String>,
}

/// Everything needed to open a session, before validation.
#[derive(Debug, Clone, Default)]
pub struct SessionSpec {
    pub image_refs: Vec<String>,
    /// Rendered sensor block per image; shorter than `image_refs` is fine.
    pub sensor_payloads: Vec<Option<String>>,
    pub seasons: Vec<Option<String>>,
    pub pair_id: Option<String>,
    pub whatif_question: Option<String>,
    pub ground_truth: Option<GroundTruth>,
    pub system_prompt: Option<String>,
    pub model: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub task: SessionTask,
    /// Images that may enter the dialogue, introduced one per user turn. For
    /// whatif sessions this is only the earlier image.
    pub image_refs: Vec<String>,
    pub sensor_payloads: Vec<Option<String>>,
    pub seasons: Vec<Option<String>>,
    pub history: Vec<ChatMessage>,
    pub created_at: DateTime<Utc>,
    pub backend: String,
    pub model: String,
    #[serde(default)]
    pub pair_id: Option<String>,
    #[serde(default)]
    pub whatif_question: Option<String>,
    #[serde(default)]
    pub ground_truth: Option<GroundTruth>,
}

/// Client view of a session: the message schema of conversation samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub session_id: String,
    pub task: SessionTask,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    pub images: Vec<String>,
    pub messages: Vec<ChatMessage>,
    pub created_at: DateTime<Utc>,
    pub backend: String,
}

impl Transcript {
    pub fn assistant_turns(&self) -> usize {
        self.messages.iter().filter(|m| m.role == Role::Assistant).count()
    }
}

impl Session {
    pub fn create(
        session_id: String,
        task: SessionTask,
        spec: SessionSpec,
        backend: &str,
        created_at: DateTime<Utc>,
    ) -> Result<Self, SessionError> {
        let SessionSpec {
            mut image_refs,
            mut sensor_payloads,
            mut seasons,
            pair_id,
            whatif_question,
            mut ground_truth,
            system_prompt,
            model,
        } = spec;
        if image_refs.len() < task.min_images() {
            return Err(SessionError::Validation(format!(
                "{task} needs at least {} image(s), got {}",
                task.min_images(),
                image_refs.len()
            )));
        }
        if image_refs.iter().any(|r| r.trim().is_empty()) {
            return Err(SessionError::Validation("empty image reference".into()));
        }
        if sensor_payloads.len() > image_refs.len() || seasons.len() > image_refs.len() {
            return Err(SessionError::Validation("more sensor payloads than images".into()));
        }
        if task == SessionTask::Whatif && image_refs.len() > 1 {
            let second = image_refs.remove(1);
            image_refs.truncate(1);
            sensor_payloads.truncate(1);
            seasons.truncate(1);
            let gt = ground_truth.get_or_insert(GroundTruth {
                image_ref_2: None,
                reference_answer: None,
            });
            gt.image_ref_2 = Some(second);
        }
        let history = system_prompt
            .filter(|p| !p.trim().is_empty())
            .map(ChatMessage::system)
            .into_iter()
            .collect();
        Ok(Self {
            session_id,
            task,
            image_refs,
            sensor_payloads,
            seasons,
            history,
            created_at,
            backend: backend.to_string(),
            model: model.unwrap_or_else(|| task.name().to_string()),
            pair_id,
            whatif_question: whatif_question.filter(|q| !q.trim().is_empty()),
            ground_truth,
        })
    }

    fn preamble_len(&self) -> usize {
        self.history.iter().take_while(|m| m.role == Role::System).count()
    }

    pub fn dialogue(&self) -> &[ChatMessage] {
        &self.history[self.preamble_len()..]
    }

    pub fn user_turns(&self) -> usize {
        self.history.iter().filter(|m| m.role == Role::User).count()
    }

    /// Next user message: the first user turn per image carries that image
    /// and its sensor block.
    pub fn compose_user(&self, text: &str) -> Result<ChatMessage, SessionError> {
        if text.trim().is_empty() {
            return Err(SessionError::Validation("empty message".into()));
        }
        if self.dialogue().last().is_some_and(|m| m.role == Role::User) {
            return Err(SessionError::Conflict("previous user turn has no reply".into()));
        }
        let i = self.user_turns();
        let Some(image) = self.image_refs.get(i) else {
            return Ok(ChatMessage::user(text));
        };
        let season = self.seasons.get(i).cloned().flatten();
        let block = self.sensor_payloads.get(i).cloned().flatten();
        Ok(ChatMessage::user_with_images(
            image_turn_text(text, season.as_deref(), block.as_deref()),
            vec![image.clone()],
        ))
    }

    /// Full history plus the pending user message.
    pub fn request_with(&self, pending: &ChatMessage) -> ChatRequest {
        let mut messages = self.history.clone();
        messages.push(pending.clone());
        ChatRequest {
            model: self.model.clone(),
            messages,
        }
    }

    /// User texts of the canonical turn sequence.
    pub fn script(&self) -> Result<Vec<String>, SessionError> {
        match self.task {
            SessionTask::Describe => Ok(vec![DESCRIBE_PROMPT.into()]),
            SessionTask::Whatif => {
                let q = self
                    .whatif_question
                    .clone()
                    .ok_or_else(|| SessionError::Validation("no what-if question configured".into()))?;
                Ok(vec![DESCRIBE_PROMPT.into(), q])
            }
            SessionTask::Difference => Ok(vec![
                DESCRIBE_PROMPT.into(),
                SECOND_IMAGE_PROMPT.into(),
                DIFFERENCE_PROMPT.into(),
            ]),
            SessionTask::Freeform => Err(SessionError::Validation("freeform sessions have no script".into())),
        }
    }

    pub fn transcript(&self) -> Transcript {
        Transcript {
            session_id: self.session_id.clone(),
            task: self.task,
            pair_id: self.pair_id.clone(),
            images: self.image_refs.clone(),
            messages: self.history.clone(),
            created_at: self.created_at,
            backend: self.backend.clone(),
        }
    }
}
