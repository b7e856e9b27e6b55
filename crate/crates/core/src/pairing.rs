//! Temporal pair construction.
//!
//! Metadata is deduplicated per `(location_key, UTC date)`, every ordered
//! same-site pair at least `min_gap_days` apart is emitted, and pairs are split
//! between the two annotator backends by a hash of the location key so that a
//! site never straddles both.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::fnv::fnv1a64;
use crate::jsonl::{self, BadLine};
use crate::types::{Annotator, ImageRecord, TemporalPair, MIN_GAP_DAYS};

/// Keep-first deduplication on `(location_key, calendar date)`, preserving
/// input order.
pub fn dedup(records: &[ImageRecord]) -> Vec<ImageRecord> {
    let mut seen: HashSet<(&str, NaiveDate)> = HashSet::new();
    records
        .iter()
        .filter(|r| seen.insert((r.location_key.as_str(), r.date())))
        .cloned()
        .collect()
}

/// Every ordered same-location pair with a gap of at least `min_gap_days`
/// whole days, sorted by `(location_key, earlier, later)`.
pub fn build_pairs(records: &[ImageRecord], min_gap_days: i64) -> Vec<TemporalPair> {
    let mut by_location: BTreeMap<&str, Vec<&ImageRecord>> = BTreeMap::new();
    for r in records {
        by_location.entry(&r.location_key).or_default().push(r);
    }

    let mut pairs = Vec::new();
    for group in by_location.values_mut() {
        group.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
        for (i, earlier) in group.iter().enumerate() {
            for later in &group[i + 1..] {
                if let Ok(pair) =
                    TemporalPair::with_min_gap((*earlier).clone(), (*later).clone(), min_gap_days)
                {
                    pairs.push(pair);
                }
            }
        }
    }
    pairs.sort_by(|a, b| {
        (a.location_key(), a.earlier.timestamp, a.later.timestamp, &a.pair_id).cmp(&(
            b.location_key(),
            b.earlier.timestamp,
            b.later.timestamp,
            &b.pair_id,
        ))
    });
    pairs
}

/// Backend owning a location: even FNV-1a hash goes to A, odd to B.
pub fn annotator_for(location_key: &str) -> Annotator {
    if fnv1a64(location_key.as_bytes()) % 2 == 0 {
        Annotator::A
    } else {
        Annotator::B
    }
}

/// Splits pairs by [`annotator_for`], keeping input order within each side.
pub fn partition_for_annotation(pairs: &[TemporalPair]) -> (Vec<TemporalPair>, Vec<TemporalPair>) {
    pairs
        .iter()
        .cloned()
        .partition(|p| annotator_for(p.location_key()) == Annotator::A)
}

/// Summary of one pairing run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub input_count: usize,
    pub malformed_count: usize,
    pub deduped_count: usize,
    pub pair_count: usize,
    /// Number of sites having exactly `n` pairs, keyed by `n`.
    pub pairs_per_location: BTreeMap<usize, usize>,
    pub annotator_a_count: usize,
    pub annotator_b_count: usize,
}

/// One line of the pairs file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairLine {
    pub pair_id: String,
    pub earlier_id: String,
    pub later_id: String,
    pub location_key: String,
    pub gap_days: i64,
    pub partition: Annotator,
}

impl From<&TemporalPair> for PairLine {
    fn from(p: &TemporalPair) -> Self {
        Self {
            pair_id: p.pair_id.clone(),
            earlier_id: p.earlier.id.clone(),
            later_id: p.later.id.clone(),
            location_key: p.location_key().to_string(),
            gap_days: p.gap_days,
            partition: annotator_for(p.location_key()),
        }
    }
}

#[derive(Debug)]
pub struct PairingOutput {
    pub pairs: Vec<TemporalPair>,
    pub malformed: Vec<BadLine>,
    pub report: PairingReport,
}

/// Runs dedup, pairing and partitioning over already-parsed records.
pub fn run(records: &[ImageRecord], malformed: Vec<BadLine>, min_gap_days: i64) -> PairingOutput {
    let deduped = dedup(records);
    let pairs = build_pairs(&deduped, min_gap_days);

    let mut per_site: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &pairs {
        *per_site.entry(p.location_key()).or_default() += 1;
    }
    let mut pairs_per_location = BTreeMap::new();
    for n in per_site.values() {
        *pairs_per_location.entry(*n).or_default() += 1;
    }
    let a = pairs
        .iter()
        .filter(|p| annotator_for(p.location_key()) == Annotator::A)
        .count();

    let report = PairingReport {
        input_count: records.len() + malformed.len(),
        malformed_count: malformed.len(),
        deduped_count: deduped.len(),
        pair_count: pairs.len(),
        pairs_per_location,
        annotator_a_count: a,
        annotator_b_count: pairs.len() - a,
    };
    PairingOutput {
        pairs,
        malformed,
        report,
    }
}

/// Reads a metadata JSONL file and runs [`run`]; unparseable or invalid lines
/// are skipped and counted.
pub fn run_file(metadata: &Path, min_gap_days: i64) -> std::io::Result<PairingOutput> {
    let (records, bad) = jsonl::read_lenient::<ImageRecord>(metadata)?;
    Ok(run(&records, bad, min_gap_days))
}

pub fn default_min_gap() -> i64 {
    MIN_GAP_DAYS
}
