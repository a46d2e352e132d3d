//! Word-level similarity metrics and the two task rewards.
//!
//! All functions work over pre-tokenized word sequences. No stemming, no
//! stopword removal.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PrfScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrfScore {
    pub fn from_counts(matched: usize, hyp_total: usize, ref_total: usize) -> Self {
        if hyp_total == 0 || ref_total == 0 {
            return Self::default();
        }
        let precision = matched as f64 / hyp_total as f64;
        let recall = matched as f64 / ref_total as f64;
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// ROUGE-N with clipped multiset n-gram counts.
pub fn rouge_n<T: Eq + Hash>(reference: &[T], hypothesis: &[T], n: usize) -> PrfScore {
    assert!(n >= 1, "rouge_n requires n >= 1");
    let ref_counts = ngram_counts(reference, n);
    let hyp_counts = ngram_counts(hypothesis, n);
    let ref_total: usize = ref_counts.values().sum();
    let hyp_total: usize = hyp_counts.values().sum();
    let matched = hyp_counts
        .iter()
        .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    PrfScore::from_counts(matched, hyp_total, ref_total)
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            cur[j + 1] = if ai == bj {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L from the longest common subsequence.
pub fn rouge_l<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> PrfScore {
    PrfScore::from_counts(
        lcs_len(reference, hypothesis),
        hypothesis.len(),
        reference.len(),
    )
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("mean-ROUGE reward needs at least one reference")]
pub struct NoReferences;

/// Mean of ROUGE-1/2/L F1, maximized over references.
pub fn mean_rouge_reward<T, R>(hypothesis: &[T], references: &[R]) -> Result<f64, NoReferences>
where
    T: Eq + Hash,
    R: AsRef<[T]>,
{
    references
        .iter()
        .map(|r| {
            let r = r.as_ref();
            (rouge_n(r, hypothesis, 1).f1 + rouge_n(r, hypothesis, 2).f1 + rouge_l(r, hypothesis).f1)
                / 3.0
        })
        .reduce(f64::max)
        .ok_or(NoReferences)
}

/// Word-level Levenshtein distance (insert, delete, substitute; unit costs).
pub fn word_levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ai) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, bj) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ai != bj);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - lev / max(len)`; two empty sequences score 1.
pub fn inverse_levenshtein_reward<T: PartialEq>(hypothesis: &[T], reference: &[T]) -> f64 {
    let longest = hypothesis.len().max(reference.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - word_levenshtein(hypothesis, reference) as f64 / longest as f64
}

pub fn exact_match<T: PartialEq>(hypothesis: &[T], reference: &[T]) -> bool {
    hypothesis == reference
}
