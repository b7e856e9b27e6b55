use std::collections::HashMap;

use super::{tokenize, Prf};

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram overlap. `n` must be at least 1.
pub fn rouge_n(reference: &str, hypothesis: &str, n: usize) -> Prf {
    assert!(n >= 1, "rouge_n needs n >= 1");
    let r = tokenize(reference);
    let h = tokenize(hypothesis);
    let rc = ngrams(&r, n);
    let hc = ngrams(&h, n);
    let overlap = hc
        .iter()
        .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
        .sum();
    Prf::from_counts(overlap, hc.values().sum(), rc.values().sum())
}

/// Length of the longest common subsequence, two-row dynamic programme.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l_tokens(reference: &[String], hypothesis: &[String]) -> Prf {
    let l = lcs_len(reference, hypothesis);
    Prf::from_counts(l, hypothesis.len(), reference.len())
}

/// LCS-based ROUGE-L with F1 (beta = 1).
pub fn rouge_l(reference: &str, hypothesis: &str) -> Prf {
    rouge_l_tokens(&tokenize(reference), &tokenize(hypothesis))
}
