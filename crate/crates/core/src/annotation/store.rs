use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::sections::Sections;
use crate::fnv::fnv1a64;
use crate::types::Annotator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ParseFailed,
    BackendFailed,
}

/// The ground-truth text for one pair, with who produced it and how.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRecord")]
pub struct AnnotationRecord {
    pub pair_id: String,
    pub annotator: Annotator,
    pub description_1: String,
    pub description_2: String,
    pub difference_text: String,
    pub whatif_question: String,
    pub whatif_answer: String,
    pub raw_response: String,
    pub status: Status,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Deserialize)]
struct RawRecord {
    pair_id: String,
    annotator: Annotator,
    description_1: String,
    description_2: String,
    difference_text: String,
    whatif_question: String,
    whatif_answer: String,
    raw_response: String,
    status: Status,
    attempts: u32,
    #[serde(default)]
    error: Option<String>,
}

impl TryFrom<RawRecord> for AnnotationRecord {
    type Error = String;

    fn try_from(r: RawRecord) -> Result<Self, Self::Error> {
        let rec = AnnotationRecord {
            pair_id: r.pair_id,
            annotator: r.annotator,
            description_1: r.description_1,
            description_2: r.description_2,
            difference_text: r.difference_text,
            whatif_question: r.whatif_question,
            whatif_answer: r.whatif_answer,
            raw_response: r.raw_response,
            status: r.status,
            attempts: r.attempts,
            error: r.error,
        };
        if rec.status == Status::Ok && !rec.sections().is_complete() {
            return Err(format!("record {} is ok but has empty sections", rec.pair_id));
        }
        Ok(rec)
    }
}

impl AnnotationRecord {
    pub fn ok(pair_id: &str, annotator: Annotator, sections: Sections, raw: String, attempts: u32) -> Self {
        debug_assert!(sections.is_complete());
        Self {
            pair_id: pair_id.to_string(),
            annotator,
            description_1: sections.description_1,
            description_2: sections.description_2,
            difference_text: sections.difference_text,
            whatif_question: sections.whatif_question,
            whatif_answer: sections.whatif_answer,
            raw_response: raw,
            status: Status::Ok,
            attempts,
            error: None,
        }
    }

    pub fn failed(
        pair_id: &str,
        annotator: Annotator,
        status: Status,
        raw: String,
        attempts: u32,
        error: String,
    ) -> Self {
        Self {
            pair_id: pair_id.to_string(),
            annotator,
            description_1: String::new(),
            description_2: String::new(),
            difference_text: String::new(),
            whatif_question: String::new(),
            whatif_answer: String::new(),
            raw_response: raw,
            status,
            attempts,
            error: Some(error),
        }
    }

    pub fn sections(&self) -> Sections {
        Sections {
            description_1: self.description_1.clone(),
            description_2: self.description_2.clone(),
            difference_text: self.difference_text.clone(),
            whatif_question: self.whatif_question.clone(),
            whatif_answer: self.whatif_answer.clone(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

/// One JSON document per pair under a directory.
#[derive(Debug, Clone)]
pub struct RecordStore {
    dir: PathBuf,
}

fn is_safe(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | '~')
}

impl RecordStore {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Safe ids map to `<id>.json`; anything else is escaped and suffixed with
    /// a hash so distinct ids never share a file.
    pub fn path_for(&self, pair_id: &str) -> PathBuf {
        let name = if !pair_id.is_empty() && pair_id.chars().all(is_safe) && !pair_id.starts_with('.') {
            pair_id.to_string()
        } else {
            let escaped: String = pair_id.chars().map(|c| if is_safe(c) { c } else { '_' }).collect();
            format!("{escaped}-{:016x}", fnv1a64(pair_id.as_bytes()))
        };
        self.dir.join(format!("{name}.json"))
    }

    pub fn get(&self, pair_id: &str) -> std::io::Result<Option<AnnotationRecord>> {
        match std::fs::read_to_string(self.path_for(pair_id)) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn put(&self, record: &AnnotationRecord) -> std::io::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        serde_json::to_writer_pretty(&mut tmp, record)?;
        tmp.write_all(b"\n")?;
        tmp.persist(self.path_for(&record.pair_id)).map_err(|e| e.error)?;
        Ok(())
    }

    /// Every record, sorted by pair id.
    pub fn load_all(&self) -> std::io::Result<Vec<AnnotationRecord>> {
        let mut out = Vec::new();
        for entry in std::fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|x| x == "json") {
                let text = std::fs::read_to_string(&path)?;
                let rec: AnnotationRecord = serde_json::from_str(&text).map_err(|e| {
                    std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: {e}", path.display()))
                })?;
                out.push(rec);
            }
        }
        out.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
        Ok(out)
    }
}
