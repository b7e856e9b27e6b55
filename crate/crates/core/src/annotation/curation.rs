//! Manual-curation scorecards: three criteria rated 1 to 5, summed, and a
//! retention threshold on the sum.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_THRESHOLD: u32 = 9;
pub const MIN_TOTAL: u32 = 3;
pub const MAX_TOTAL: u32 = 15;

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("sample {sample_id}: {field} = {value} is outside 1..=5")]
    OutOfRange {
        sample_id: String,
        field: &'static str,
        value: i64,
    },
    #[error("duplicate sample ids: {}", .0.join(", "))]
    Duplicates(Vec<String>),
    #[error("scorecard csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScoreCard {
    pub sample_id: String,
    pub annotator_id: String,
    q1: u8,
    q2: u8,
    q3: u8,
}

#[derive(Deserialize)]
struct CsvRow {
    sample_id: String,
    annotator_id: String,
    q1: i64,
    q2: i64,
    q3: i64,
}

impl ScoreCard {
    pub fn new(sample_id: &str, annotator_id: &str, q1: i64, q2: i64, q3: i64) -> Result<Self, CurationError> {
        let check = |field, value: i64| {
            if (1..=5).contains(&value) {
                Ok(value as u8)
            } else {
                Err(CurationError::OutOfRange {
                    sample_id: sample_id.to_string(),
                    field,
                    value,
                })
            }
        };
        Ok(Self {
            sample_id: sample_id.to_string(),
            annotator_id: annotator_id.to_string(),
            q1: check("q1", q1)?,
            q2: check("q2", q2)?,
            q3: check("q3", q3)?,
        })
    }

    pub fn scores(&self) -> [u8; 3] {
        [self.q1, self.q2, self.q3]
    }

    pub fn total(&self) -> u32 {
        self.scores().iter().map(|&q| u32::from(q)).sum()
    }
}

/// Reads `sample_id,annotator_id,q1,q2,q3` rows.
pub fn read_scorecards(reader: impl Read) -> Result<Vec<ScoreCard>, CurationError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize::<CsvRow>()
        .map(|row| {
            let r = row?;
            ScoreCard::new(&r.sample_id, &r.annotator_id, r.q1, r.q2, r.q3)
        })
        .collect()
}

pub fn write_scorecards(cards: &[ScoreCard], writer: impl std::io::Write) -> Result<(), CurationError> {
    let mut w = csv::Writer::from_writer(writer);
    for c in cards {
        w.serialize(c)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Selection {
    pub retained: Vec<String>,
    pub discarded: Vec<String>,
}

/// Keeps cards whose total is at least `threshold`. Both lists are sorted by
/// sample id.
pub fn apply_threshold(cards: &[ScoreCard], threshold: u32) -> Result<Selection, CurationError> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for c in cards {
        *counts.entry(&c.sample_id).or_default() += 1;
    }
    let dups: Vec<String> = counts
        .iter()
        .filter(|(_, &n)| n > 1)
        .map(|(id, _)| id.to_string())
        .collect();
    if !dups.is_empty() {
        return Err(CurationError::Duplicates(dups));
    }
    let mut sorted: Vec<&ScoreCard> = cards.iter().collect();
    sorted.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    let (keep, drop): (Vec<&ScoreCard>, Vec<&ScoreCard>) = sorted.into_iter().partition(|c| c.total() >= threshold);
    Ok(Selection {
        retained: keep.into_iter().map(|c| c.sample_id.clone()).collect(),
        discarded: drop.into_iter().map(|c| c.sample_id.clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScoreDistribution {
    /// Count per total, keys 3..=15 always present.
    pub buckets: BTreeMap<u32, usize>,
    pub threshold: u32,
    pub below: usize,
    pub at_or_above: usize,
    pub total: usize,
}

pub fn score_distribution(cards: &[ScoreCard], threshold: u32) -> ScoreDistribution {
    let mut buckets: BTreeMap<u32, usize> = (MIN_TOTAL..=MAX_TOTAL).map(|t| (t, 0)).collect();
    for c in cards {
        *buckets.entry(c.total()).or_default() += 1;
    }
    let below = buckets.range(..threshold).map(|(_, n)| n).sum();
    let at_or_above = buckets.range(threshold..).map(|(_, n)| n).sum();
    ScoreDistribution {
        buckets,
        threshold,
        below,
        at_or_above,
        total: cards.len(),
    }
}

impl ScoreDistribution {
    /// Fixed-width text table, one row per total then the subtotals.
    pub fn render(&self) -> String {
        let mut out = String::from("total  count\n");
        for (t, n) in &self.buckets {
            out.push_str(&format!("{t:>5}  {n}\n"));
        }
        out.push_str(&format!("   <{}  {}\n", self.threshold, self.below));
        out.push_str(&format!("  >={}  {}\n", self.threshold, self.at_or_above));
        out.push_str(&format!("  all  {}\n", self.total));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn card(id: &str, q: [i64; 3]) -> ScoreCard {
        ScoreCard::new(id, "r1", q[0], q[1], q[2]).unwrap()
    }

    #[test]
    fn threshold_examples() {
        let cards = [card("a", [5, 5, 5]), card("b", [3, 3, 3]), card("c", [1, 2, 5])];
        let s = apply_threshold(&cards, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(s.retained, vec!["a", "b"]);
        assert_eq!(s.discarded, vec!["c"]);
    }

    #[test]
    fn strict_reading_is_a_parameter() {
        let s = apply_threshold(&[card("b", [3, 3, 3])], 10).unwrap();
        assert_eq!(s.discarded, vec!["b"]);
    }

    #[test]
    fn duplicates_are_listed() {
        let cards = [card("x", [1, 1, 1]), card("y", [1, 1, 1]), card("x", [2, 2, 2])];
        match apply_threshold(&cards, 9) {
            Err(CurationError::Duplicates(ids)) => assert_eq!(ids, vec!["x"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ratings_are_range_checked() {
        assert!(ScoreCard::new("s", "r", 0, 3, 3).is_err());
        assert!(ScoreCard::new("s", "r", 3, 6, 3).is_err());
    }

    #[test]
    fn distribution_by_hand() {
        let cards = [card("a", [3, 3, 3]), card("b", [4, 4, 1]), card("c", [4, 3, 1])];
        let d = score_distribution(&cards, 9);
        assert_eq!(d.buckets[&9], 2);
        assert_eq!(d.buckets[&8], 1);
        assert_eq!(d.at_or_above, 2);
        assert_eq!(d.below, 1);
        let empty = score_distribution(&[], 9);
        assert_eq!(empty.buckets.len(), 13);
        assert!(empty.buckets.values().all(|&n| n == 0));
        assert_eq!(empty.total, 0);
    }

    #[test]
    fn csv_roundtrip() {
        let text = "sample_id,annotator_id,q1,q2,q3\ns1,ann-1,5,4,3\ns2, ann-2 ,1,1,1\n";
        let cards = read_scorecards(text.as_bytes()).unwrap();
        assert_eq!(cards[0].total(), 12);
        assert_eq!(cards[1].annotator_id, "ann-2");
        let mut out = Vec::new();
        write_scorecards(&cards, &mut out).unwrap();
        assert_eq!(read_scorecards(out.as_slice()).unwrap(), cards);
        assert!(String::from_utf8(out).unwrap().starts_with("sample_id,annotator_id,q1,q2,q3\n"));
    }

    #[test]
    fn csv_rejects_bad_rating() {
        let text = "sample_id,annotator_id,q1,q2,q3\ns1,a,5,4,9\n";
        assert!(matches!(
            read_scorecards(text.as_bytes()),
            Err(CurationError::OutOfRange { field: "q3", value: 9, .. })
        ));
    }

    proptest! {
        #[test]
        fn retained_matches_buckets(qs in prop::collection::vec((1i64..=5, 1i64..=5, 1i64..=5), 0..200), th in 3u32..=15) {
            let cards: Vec<_> = qs.iter().enumerate().map(|(i, q)| card(&format!("s{i:04}"), [q.0, q.1, q.2])).collect();
            let sel = apply_threshold(&cards, th).unwrap();
            let dist = score_distribution(&cards, th);
            prop_assert_eq!(sel.retained.len(), dist.at_or_above);
            prop_assert_eq!(sel.discarded.len(), dist.below);
            prop_assert_eq!(dist.below + dist.at_or_above, dist.total);
            prop_assert!(sel.retained.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
