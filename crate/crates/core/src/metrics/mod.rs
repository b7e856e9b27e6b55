//! Text-generation metrics: ROUGE-1/2/L, keyword-cluster evaluation (KCE),
//! delegated neural scores, and a corpus report over conversation files.

pub mod kce;
pub mod neural;
pub mod report;
pub mod rouge;

use serde::{Deserialize, Serialize};

pub use kce::{kce, KeywordLexicon, LexiconError};
pub use neural::{neural_scores, HttpScorer, NeuralError, NeuralMetric, ScoreItem, ScoreTransport};
pub use report::{evaluate, EvalError, MetricReport, MetricRow};
pub use rouge::{rouge_l, rouge_n};

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub const PERFECT: Prf = Prf {
        precision: 1.0,
        recall: 1.0,
        f1: 1.0,
    };
    pub const ZERO: Prf = Prf {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    /// From an overlap count and the two side sizes, with the empty-side
    /// conventions: both empty is perfect, one empty is zero.
    pub fn from_counts(overlap: usize, hyp_total: usize, ref_total: usize) -> Prf {
        match (hyp_total, ref_total) {
            (0, 0) => Prf::PERFECT,
            (0, _) | (_, 0) => Prf::ZERO,
            (h, r) => {
                let precision = overlap as f64 / h as f64;
                let recall = overlap as f64 / r as f64;
                // equal to 2PR/(P+R), with a single rounding
                let f1 = 2.0 * overlap as f64 / (h + r) as f64;
                Prf {
                    precision,
                    recall,
                    f1,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("The cat sat."), ["the", "cat", "sat"]);
        assert_eq!(tokenize("PM10 rose; NO2 fell!"), ["pm10", "rose", "no2", "fell"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ,.;").is_empty());
        assert_eq!(tokenize("Süd-Straße"), ["süd", "straße"]);
    }

    #[test]
    fn prf_conventions() {
        assert_eq!(Prf::from_counts(0, 0, 0), Prf::PERFECT);
        assert_eq!(Prf::from_counts(0, 0, 3), Prf::ZERO);
        assert_eq!(Prf::from_counts(0, 2, 0), Prf::ZERO);
        let p = Prf::from_counts(1, 2, 3);
        assert_eq!(p.precision, 0.5);
        assert!((p.f1 - 0.4).abs() < 1e-12);
    }
}
