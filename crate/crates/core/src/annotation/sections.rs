//! The five-section reply format imposed on annotator backends.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MARKERS: [&str; 5] = [
    "[DESCRIPTION_1]",
    "[DESCRIPTION_2]",
    "[DIFFERENCE]",
    "[WHATIF_Q]",
    "[WHATIF_A]",
];

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Sections {
    pub description_1: String,
    pub description_2: String,
    pub difference_text: String,
    pub whatif_question: String,
    pub whatif_answer: String,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("reply is missing or has empty sections: {}", .missing.join(", "))]
pub struct SectionError {
    pub missing: Vec<&'static str>,
}

impl Sections {
    pub fn fields(&self) -> [&str; 5] {
        [
            &self.description_1,
            &self.description_2,
            &self.difference_text,
            &self.whatif_question,
            &self.whatif_answer,
        ]
    }

    pub fn is_complete(&self) -> bool {
        self.fields().iter().all(|f| !f.trim().is_empty())
    }

    /// Canonical rendering; [`parse_sections`] reads it back unchanged.
    pub fn render(&self) -> String {
        MARKERS
            .iter()
            .zip(self.fields())
            .map(|(m, f)| format!("{m}\n{f}\n"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Splits a reply on the five markers. Each section runs from its marker to
/// the next marker (of any kind) and is trimmed; text before the first marker
/// is ignored. A marker may only appear once.
pub fn parse_sections(text: &str) -> Result<Sections, SectionError> {
    let mut found: Vec<(usize, usize)> = Vec::new();
    for (idx, m) in MARKERS.iter().enumerate() {
        for (pos, _) in text.match_indices(m) {
            found.push((pos, idx));
        }
    }
    found.sort_unstable();

    let mut slots: [Option<String>; 5] = Default::default();
    let mut repeated = [false; 5];
    for (i, &(pos, idx)) in found.iter().enumerate() {
        let start = pos + MARKERS[idx].len();
        let end = found.get(i + 1).map_or(text.len(), |n| n.0);
        let body = text[start..end].trim().to_string();
        if slots[idx].is_some() {
            repeated[idx] = true;
        }
        slots[idx] = Some(body);
    }

    let missing: Vec<&'static str> = MARKERS
        .iter()
        .enumerate()
        .filter(|(i, _)| repeated[*i] || slots[*i].as_deref().is_none_or(str::is_empty))
        .map(|(_, m)| *m)
        .collect();
    if !missing.is_empty() {
        return Err(SectionError { missing });
    }
    let [d1, d2, diff, q, a] = slots.map(Option::unwrap_or_default);
    Ok(Sections {
        description_1: d1,
        description_2: d2,
        difference_text: diff,
        whatif_question: q,
        whatif_answer: a,
    })
}
