//! Multi-turn chat sessions over satellite image pairs.
//!
//! A session pins a task, its images and their sensor blocks, and forwards
//! the whole history to a chat backend on every turn. The canonical scripts
//! are: describe (one exchange), what-if (describe the earlier image, then
//! ask the question) and difference (describe both images, then ask what
//! changed). What-if sessions never send the later image; it is kept for
//! the ground-truth reveal only.
//!
//! HTTP surface, all JSON:
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | `{task, image_refs \| pair_id, sensors?, backend?, model?, whatif_question?}` → `{session_id}` |
//! | POST | `/sessions/{id}/messages` | `{text}` → `{reply}` |
//! | POST | `/sessions/{id}/script` | → transcript |
//! | GET | `/sessions/{id}` | → transcript |
//! | GET | `/sessions/{id}/ground_truth` | → `{image_ref_2, reference_answer}` or 404 |
//! | DELETE | `/sessions/{id}` | → 204 |
//! | GET | `/pairs` | → pairs a session can be opened from |
//! | POST | `/stub/v1/chat` | deterministic chat stub |
//! | POST | `/stub/v1/score` | constant-score stub |
//! | GET | `/stub/requests` | bodies the chat stub has received |
//!
//! Errors are `{error, message}` with 400, 404, 409 (ordering), or 502
//! (backend failure).

pub mod api;
pub mod catalog;
pub mod session;
pub mod store;
pub mod stub;

pub use api::{router, serve, CreateRequest, SensorInput, Service, ServiceConfig};
pub use catalog::PairCatalog;
pub use session::{GroundTruth, Session, SessionError, SessionTask, Transcript};
pub use store::SessionStore;
pub use stub::{stub_reply, StubBackend};
