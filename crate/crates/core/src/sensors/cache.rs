//! Content-addressed response cache.
//!
//! One JSON document per key at `<root>/<provider>/<sha256(key)>.json`. Files
//! are written to a temporary name and renamed into place, so concurrent
//! readers see either nothing or a complete document.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::types::utc_seconds;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub provider: String,
    /// Latitude rounded to four decimals, as text.
    pub lat: String,
    pub lon: String,
    pub date: NaiveDate,
}

fn round4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

impl CacheKey {
    pub fn new(provider: &str, latitude: f64, longitude: f64, date: NaiveDate) -> Self {
        Self {
            provider: provider.to_string(),
            lat: round4(latitude),
            lon: round4(longitude),
            date,
        }
    }

    pub fn digest(&self) -> String {
        let canonical = format!("{}|{}|{}|{}", self.provider, self.lat, self.lon, self.date);
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// A cached provider response with the instant it was first fetched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: CacheKey,
    #[serde(with = "utc_seconds")]
    pub fetched_at: DateTime<Utc>,
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone)]
pub struct FileCache {
    root: PathBuf,
}

impl FileCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.root
            .join(&key.provider)
            .join(format!("{}.json", key.digest()))
    }

    /// A missing or unreadable entry is a miss.
    pub fn get(&self, key: &CacheKey) -> Option<CacheEntry> {
        let text = std::fs::read_to_string(self.path_for(key)).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        (entry.key == *key).then_some(entry)
    }

    pub fn put(&self, entry: &CacheEntry) -> std::io::Result<()> {
        let path = self.path_for(&entry.key);
        let dir = path.parent().expect("cache path has a parent");
        std::fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        serde_json::to_writer_pretty(&mut tmp, entry)?;
        tmp.write_all(b"\n")?;
        tmp.persist(&path).map_err(|e| e.error)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn key_rounds_to_four_places() {
        let d = NaiveDate::from_ymd_opt(2015, 7, 10).unwrap();
        let a = CacheKey::new("weather", 48.856_61, 2.351_49, d);
        let b = CacheKey::new("weather", 48.856_64, 2.351_51, d);
        assert_eq!(a, b);
        assert_eq!(a.lat, "48.8566");
        assert_eq!(CacheKey::new("w", -0.00001, 0.0, d).lat, "0.0000");
        assert_ne!(a.digest(), CacheKey::new("emissions_eu", 48.8566, 2.3515, d).digest());
    }

    #[test]
    fn put_then_get() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FileCache::new(dir.path());
        let key = CacheKey::new("weather", 1.0, 2.0, NaiveDate::from_ymd_opt(2012, 1, 1).unwrap());
        assert!(cache.get(&key).is_none());
        let entry = CacheEntry {
            key: key.clone(),
            fetched_at: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
            status: 200,
            body: "{\"days\":[]}".into(),
        };
        cache.put(&entry).unwrap();
        assert_eq!(cache.get(&key), Some(entry));
        assert!(cache.path_for(&key).starts_with(dir.path().join("weather")));
    }
}
