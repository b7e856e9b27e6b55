//! Keyword cluster evaluation: which directional-language clusters a text
//! mentions, compared as sets between reference and hypothesis.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{tokenize, Prf};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("variant {variant:?} is in both {first} and {second}")]
    Overlap {
        variant: String,
        first: String,
        second: String,
    },
    #[error("variant {0:?} is not a single lowercase token")]
    BadVariant(String),
    #[error("cluster {0:?} is empty")]
    EmptyCluster(String),
    #[error("lexicon has no clusters")]
    NoClusters,
    #[error("lexicon file: {0}")]
    Read(String),
}

/// Versioned cluster table. Construct through [`KeywordLexicon::new`] or
/// deserialization, both of which validate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLexicon")]
pub struct KeywordLexicon {
    pub version: String,
    pub clusters: BTreeMap<String, BTreeSet<String>>,
    #[serde(skip)]
    index: HashMap<String, String>,
}

#[derive(Deserialize)]
struct RawLexicon {
    version: String,
    clusters: BTreeMap<String, BTreeSet<String>>,
}

impl TryFrom<RawLexicon> for KeywordLexicon {
    type Error = LexiconError;

    fn try_from(raw: RawLexicon) -> Result<Self, Self::Error> {
        KeywordLexicon::new(&raw.version, raw.clusters)
    }
}

const DEFAULT_CLUSTERS: [(&str, &[&str]); 5] = [
    (
        "INCREASE",
        &[
            "increase", "increases", "increased", "increasing", "rise", "rises", "rose", "risen", "rising",
            "grow", "grows", "grew", "growing", "higher", "more", "expand", "expanded", "expansion",
        ],
    ),
    (
        "DECREASE",
        &[
            "decrease", "decreases", "decreased", "decreasing", "fall", "falls", "fell", "fallen", "falling",
            "drop", "drops", "dropped", "decline", "declined", "lower", "fewer", "less", "reduce", "reduced",
            "shrink", "shrank",
        ],
    ),
    (
        "APPEARANCE",
        &["new", "appear", "appears", "appeared", "added", "built", "constructed", "emerged"],
    ),
    (
        "REMOVAL",
        &["removed", "demolished", "cleared", "vanished", "disappeared", "lost"],
    ),
    ("UNCHANGED", &["unchanged", "same", "stable", "constant", "similar"]),
];

pub const DEFAULT_VERSION: &str = "kce-default-v1";

impl Default for KeywordLexicon {
    fn default() -> Self {
        let clusters = DEFAULT_CLUSTERS
            .iter()
            .map(|(name, vs)| (name.to_string(), vs.iter().map(|v| v.to_string()).collect()))
            .collect();
        KeywordLexicon::new(DEFAULT_VERSION, clusters).expect("built-in lexicon is valid")
    }
}

impl KeywordLexicon {
    pub fn new(version: &str, clusters: BTreeMap<String, BTreeSet<String>>) -> Result<Self, LexiconError> {
        if clusters.is_empty() {
            return Err(LexiconError::NoClusters);
        }
        let mut index: HashMap<String, String> = HashMap::new();
        for (name, variants) in &clusters {
            if variants.is_empty() {
                return Err(LexiconError::EmptyCluster(name.clone()));
            }
            for v in variants {
                if tokenize(v) != [v.as_str()] {
                    return Err(LexiconError::BadVariant(v.clone()));
                }
                if let Some(first) = index.insert(v.clone(), name.clone()) {
                    return Err(LexiconError::Overlap {
                        variant: v.clone(),
                        first,
                        second: name.clone(),
                    });
                }
            }
        }
        Ok(Self {
            version: version.to_string(),
            clusters,
            index,
        })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|e| LexiconError::Read(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| LexiconError::Read(e.to_string()))
    }

    pub fn cluster_of(&self, token: &str) -> Option<&str> {
        self.index.get(token).map(String::as_str)
    }

    /// Names of the clusters with at least one variant among the text's tokens.
    pub fn clusters_in(&self, text: &str) -> BTreeSet<&str> {
        tokenize(text)
            .iter()
            .filter_map(|t| self.cluster_of(t))
            .collect()
    }
}

/// Set-based precision/recall/F1 over mentioned clusters; a side with no
/// clusters follows the usual empty conventions.
pub fn kce(reference: &str, hypothesis: &str, lexicon: &KeywordLexicon) -> Prf {
    let r = lexicon.clusters_in(reference);
    let h = lexicon.clusters_in(hypothesis);
    Prf::from_counts(r.intersection(&h).count(), h.len(), r.len())
}
