//! In-memory session table with an optional append-only JSONL journal.
//!
//! Each journal line is `{"op":"put","session":{..}}` or
//! `{"op":"delete","session_id":".."}`; replaying the lines in order rebuilds
//! the table. A torn last line is ignored.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::session::Session;

pub type SessionHandle = Arc<tokio::sync::Mutex<Session>>;

#[derive(Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum JournalEntry {
    Put { session: Box<Session> },
    Delete { session_id: String },
}

#[derive(Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, SessionHandle>>,
    journal: Option<Mutex<File>>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Replays `path` if it exists, then appends to it.
    pub fn with_journal(path: &Path) -> std::io::Result<Self> {
        let mut sessions = HashMap::new();
        let mut torn = false;
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            torn = !text.is_empty() && !text.ends_with('\n');
            for (n, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<JournalEntry>(line) {
                    Ok(JournalEntry::Put { session }) => {
                        sessions.insert(session.session_id.clone(), Arc::new(tokio::sync::Mutex::new(*session)));
                    }
                    Ok(JournalEntry::Delete { session_id }) => {
                        sessions.remove(&session_id);
                    }
                    Err(e) => warn!(line = n + 1, error = %e, "skipping unreadable journal line"),
                }
            }
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if torn {
            file.write_all(b"\n")?;
        }
        Ok(Self {
            sessions: RwLock::new(sessions),
            journal: Some(Mutex::new(file)),
        })
    }

    fn append(&self, entry: &JournalEntry) -> std::io::Result<()> {
        let Some(journal) = &self.journal else {
            return Ok(());
        };
        let mut line = serde_json::to_string(entry)?;
        line.push('\n');
        let mut f = journal.lock().unwrap();
        f.write_all(line.as_bytes())?;
        f.flush()
    }

    pub fn insert(&self, session: Session) -> std::io::Result<SessionHandle> {
        self.append(&JournalEntry::Put {
            session: Box::new(session.clone()),
        })?;
        let id = session.session_id.clone();
        let handle = Arc::new(tokio::sync::Mutex::new(session));
        self.sessions.write().unwrap().insert(id, handle.clone());
        Ok(handle)
    }

    pub fn get(&self, id: &str) -> Option<SessionHandle> {
        self.sessions.read().unwrap().get(id).cloned()
    }

    /// Journals a changed session, unless it was deleted meanwhile.
    pub fn persist(&self, session: &Session) -> std::io::Result<()> {
        if !self.sessions.read().unwrap().contains_key(&session.session_id) {
            return Ok(());
        }
        self.append(&JournalEntry::Put {
            session: Box::new(session.clone()),
        })
    }

    pub fn remove(&self, id: &str) -> std::io::Result<bool> {
        let removed = self.sessions.write().unwrap().remove(id).is_some();
        if removed {
            self.append(&JournalEntry::Delete { session_id: id.into() })?;
        }
        Ok(removed)
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use chrono::Utc;
    use envpair_core::chat::ChatMessage;

    use super::*;
    use crate::session::{SessionSpec, SessionTask};

    fn session(id: &str) -> Session {
        let spec = SessionSpec {
            image_refs: vec!["a.png".into()],
            ..Default::default()
        };
        Session::create(id.into(), SessionTask::Describe, spec, "stub", Utc::now()).unwrap()
    }

    #[test]
    fn journal_replays_puts_and_deletes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j/sessions.jsonl");
        {
            let store = SessionStore::with_journal(&path).unwrap();
            store.insert(session("one")).unwrap();
            store.insert(session("two")).unwrap();
            let mut s = session("one");
            s.history.push(ChatMessage::user("hi"));
            s.history.push(ChatMessage::assistant("hello"));
            store.persist(&s).unwrap();
            assert!(store.remove("two").unwrap());
            assert!(!store.remove("two").unwrap());
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"op\":\"put\",\"sess").unwrap();
        drop(f);

        let store = SessionStore::with_journal(&path).unwrap();
        store.insert(session("three")).unwrap();
        drop(store);
        let store = SessionStore::with_journal(&path).unwrap();
        assert_eq!(store.len(), 2);
        let one = store.get("one").unwrap();
        assert_eq!(one.try_lock().unwrap().history.len(), 2);
    }

    #[test]
    fn persist_skips_deleted_sessions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let store = SessionStore::with_journal(&path).unwrap();
        store.insert(session("x")).unwrap();
        store.remove("x").unwrap();
        store.persist(&session("x")).unwrap();
        drop(store);
        assert!(SessionStore::with_journal(&path).unwrap().is_empty());
    }
}
