//! Versioned annotation prompt templates.
//!
//! Templates are plain text with `{placeholder}` slots. Every template must
//! carry the category, both seasons, both sensor blocks and all five section
//! markers; [`TemplateRegistry::insert`] rejects one that does not.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use super::sections::MARKERS;
use crate::sensors::EnrichedSample;
use crate::taskgen::render_sensor_block;

pub const DEFAULT_TEMPLATE: &str = "change-caption-v1";

const CHANGE_CAPTION_V1: &str = "\
You are annotating two satellite images of the same site, taken {gap_days} days apart.
Semantic category: {category}

Image 1 (captured {date_1}, {season_1}):
{sensors_1}

Image 2 (captured {date_2}, {season_2}):
{sensors_2}

Use the season and sensor readings as context for what is visible. Answer in exactly five \
sections, each introduced by its marker on its own line and nothing else:
[DESCRIPTION_1] a detailed description of image 1, naming the {category} and the surrounding land use
[DESCRIPTION_2] a detailed description of image 2
[DIFFERENCE] what changed between image 1 and image 2, including directional changes in the readings
[WHATIF_Q] one hypothetical question starting with \"What if\" that follows from the differences
[WHATIF_A] an answer to that question grounded in what image 2 and its readings show";

/// Appended to the prompt when a reply could not be split into sections.
pub const CORRECTION_SUFFIX: &str = "\n\nYour previous reply could not be parsed. Reply again with \
all five sections, each starting with its marker on its own line: [DESCRIPTION_1] [DESCRIPTION_2] \
[DIFFERENCE] [WHATIF_Q] [WHATIF_A].";

const REQUIRED_SLOTS: [&str; 5] = [
    "{category}",
    "{season_1}",
    "{season_2}",
    "{sensors_1}",
    "{sensors_2}",
];

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("unknown template {0:?}")]
    Unknown(String),
    #[error("template {id:?} lacks {missing}")]
    Incomplete { id: String, missing: String },
    #[error("reading templates: {0}")]
    Io(String),
}

#[derive(Debug, Clone)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, String>,
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        let mut templates = BTreeMap::new();
        templates.insert(DEFAULT_TEMPLATE.to_string(), CHANGE_CAPTION_V1.to_string());
        Self { templates }
    }
}

impl TemplateRegistry {
    pub fn insert(&mut self, id: &str, body: &str) -> Result<(), TemplateError> {
        for needle in REQUIRED_SLOTS.iter().chain(MARKERS.iter()) {
            if !body.contains(needle) {
                return Err(TemplateError::Incomplete {
                    id: id.to_string(),
                    missing: needle.to_string(),
                });
            }
        }
        self.templates.insert(id.to_string(), body.to_string());
        Ok(())
    }

    /// Adds every `<id>.txt` in `dir` on top of the built-ins.
    pub fn load_dir(&mut self, dir: &Path) -> Result<usize, TemplateError> {
        let io = |e: std::io::Error| TemplateError::Io(e.to_string());
        let mut n = 0;
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        paths.sort();
        for path in paths {
            let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let body = std::fs::read_to_string(&path).map_err(io)?;
            self.insert(&id, &body)?;
            n += 1;
        }
        Ok(n)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn build_prompt(&self, sample: &EnrichedSample, template_id: &str) -> Result<String, TemplateError> {
        let body = self
            .templates
            .get(template_id)
            .ok_or_else(|| TemplateError::Unknown(template_id.to_string()))?;
        let pair = &sample.pair;
        let (w1, e1) = sample.readings(0);
        let (w2, e2) = sample.readings(1);
        let slots = [
            ("{category}", pair.earlier.category.clone()),
            ("{gap_days}", pair.gap_days.to_string()),
            ("{date_1}", pair.earlier.date().to_string()),
            ("{date_2}", pair.later.date().to_string()),
            ("{season_1}", sample.season_earlier.to_string()),
            ("{season_2}", sample.season_later.to_string()),
            ("{sensors_1}", render_sensor_block(w1, e1)),
            ("{sensors_2}", render_sensor_block(w2, e2)),
            ("{country_code}", pair.earlier.country_code.clone()),
        ];
        Ok(substitute(body, &slots))
    }
}

/// Single left-to-right pass so substituted text is never re-scanned.
fn substitute(template: &str, slots: &[(&str, String)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        match slots.iter().find(|(k, _)| tail.starts_with(k)) {
            Some((k, v)) => {
                out.push_str(v);
                rest = &tail[k.len()..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}
