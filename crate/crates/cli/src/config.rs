//! Run configuration: a TOML file whose string values may reference
//! environment variables as `${NAME}` (`$$` is a literal `$`). Command-line
//! flags override file values.
//!
//! ```toml
//! [paths]
//! metadata = "data/metadata.jsonl"
//! output_dir = "out"
//!
//! [providers]
//! weather_endpoint = "https://weather.example/v1/day"
//! weather_key = "${WEATHER_API_KEY}"
//!
//! [thresholds]
//! min_gap_days = 365
//!
//! [seeds]
//! mix = 17
//! ```

use std::path::{Path, PathBuf};

use envpair_core::sensors::ProviderConfig;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub metadata: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub enriched: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub split_manifest: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub retained: Option<PathBuf>,
    pub journal: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Backends {
    pub annotator_a: Option<String>,
    pub annotator_b: Option<String>,
    pub model_a: Option<String>,
    pub model_b: Option<String>,
    pub template: Option<String>,
    /// Chat backend for `serve`: a URL or `stub`.
    pub session: Option<String>,
    pub system_prompt: Option<String>,
    pub scorer: Option<String>,
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub min_gap_days: Option<i64>,
    pub curation: Option<u32>,
    pub max_missing_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub mix: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    pub annotate_concurrency: Option<usize>,
    pub session_in_flight: Option<usize>,
    pub eval_batch: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub providers: ProviderConfig,
    pub backends: Backends,
    pub thresholds: Thresholds,
    pub seeds: Seeds,
    pub limits: Limits,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                CliError::Validation(format!("config file not found: {}", path.display()))
            } else {
                CliError::io(format!("reading {}", path.display()), e)
            }
        })?;
        Self::parse(&text, |name| std::env::var(name).ok())
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str, env: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let mut value: toml::Value = toml::from_str(text).map_err(|e| e.to_string())?;
        interpolate(&mut value, &env)?;
        value.try_into().map_err(|e: toml::de::Error| e.to_string())
    }
}

fn interpolate(value: &mut toml::Value, env: &impl Fn(&str) -> Option<String>) -> Result<(), String> {
    match value {
        toml::Value::String(s) => *s = expand(s, env)?,
        toml::Value::Array(items) => {
            for v in items {
                interpolate(v, env)?;
            }
        }
        toml::Value::Table(t) => {
            for (_, v) in t.iter_mut() {
                interpolate(v, env)?;
            }
        }
        _ => {}
    }
    Ok(())
}

pub fn expand(s: &str, env: &impl Fn(&str) -> Option<String>) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('$') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        if let Some(tail) = rest.strip_prefix("$$") {
            out.push('$');
            rest = tail;
        } else if let Some(tail) = rest.strip_prefix("${") {
            let end = tail.find('}').ok_or_else(|| format!("unterminated ${{ in {s:?}"))?;
            let name = &tail[..end];
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(format!("bad variable name {name:?}"));
            }
            let v = env(name).ok_or_else(|| format!("environment variable {name} is not set"))?;
            out.push_str(&v);
            rest = &tail[end + 1..];
        } else {
            out.push('$');
            rest = &rest[1..];
        }
    }
    out.push_str(rest);
    Ok(out)
}
