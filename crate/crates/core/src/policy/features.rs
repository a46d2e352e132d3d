//! Token layout and structural comparison features for `[x | ||| | y_hat]`.
//!
//! Besides hashed word identity, each position carries a small vector of
//! exact comparisons between the two lists (membership, duplication, order
//! violations). These are fixed functions of the input, not parameters.

use std::collections::HashMap;

use crate::rng::fnv1a64;

pub const NUM_FEATURES: usize = 14;

pub const SEG_X: usize = 0;
pub const SEG_SEP: usize = 1;
pub const SEG_YHAT: usize = 2;

/// Per-position inputs to the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenInput {
    /// Two hashed vocabulary ids; `None` for the separator.
    pub ids: Option<[usize; 2]>,
    pub segment: usize,
    /// Index within the segment.
    pub position: usize,
    pub features: [f64; NUM_FEATURES],
}

/// The tokenized `[x | separator | y_hat]` sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct StateInput {
    pub tokens: Vec<TokenInput>,
    pub x: Vec<String>,
    pub y_hat: Vec<String>,
}

impl StateInput {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn x_len(&self) -> usize {
        self.x.len()
    }

    pub fn y_hat_len(&self) -> usize {
        self.y_hat.len()
    }

    pub fn separator(&self) -> usize {
        self.x.len()
    }

    /// Sequence index of the `j`-th element of `y_hat`.
    pub fn y_hat_pos(&self, j: usize) -> usize {
        self.x.len() + 1 + j
    }

    pub fn is_y_hat_pos(&self, i: usize) -> bool {
        i > self.x.len() && i < self.len()
    }
}

pub(crate) fn hash_ids(word: &str, vocab: usize, seeds: [u64; 2]) -> [usize; 2] {
    seeds.map(|s| (fnv1a64(word.as_bytes(), s) % vocab as u64) as usize)
}

fn inversions(list: &[String], i: usize) -> usize {
    let w = &list[i];
    list[..i].iter().filter(|v| *v > w).count() + list[i + 1..].iter().filter(|v| *v < w).count()
}

struct WordStats {
    in_x: bool,
    count_y: usize,
    first_y: Option<usize>,
}

pub fn featurize(x: &[String], y_hat: &[String], vocab: usize, seeds: [u64; 2]) -> StateInput {
    let mut stats: HashMap<&str, WordStats> = HashMap::new();
    for w in x {
        stats
            .entry(w)
            .or_insert(WordStats {
                in_x: false,
                count_y: 0,
                first_y: None,
            })
            .in_x = true;
    }
    for (j, w) in y_hat.iter().enumerate() {
        let s = stats.entry(w).or_insert(WordStats {
            in_x: false,
            count_y: 0,
            first_y: None,
        });
        s.count_y += 1;
        s.first_y.get_or_insert(j);
    }

    let n_y = y_hat.len();
    let inv: Vec<usize> = (0..n_y).map(|j| inversions(y_hat, j)).collect();
    let max_inv = inv.iter().copied().max().unwrap_or(0);
    let norm = (n_y.max(2) - 1) as f64;
    let missing = x.iter().filter(|w| stats[w.as_str()].count_y == 0).count();
    let extra = y_hat.iter().filter(|w| !stats[w.as_str()].in_x).count();
    let len_diff = (n_y as f64 - x.len() as f64).clamp(-3.0, 3.0) / 3.0;
    let unsorted = y_hat.windows(2).any(|p| p[0] > p[1]);

    let word_features = |w: &str| -> [f64; NUM_FEATURES] {
        let s = &stats[w];
        let mut f = [0.0; NUM_FEATURES];
        f[0] = f64::from(u8::from(s.in_x));
        f[1] = f64::from(u8::from(s.count_y > 0));
        f[2] = f64::from(u8::from(s.count_y > 1));
        if let Some(j) = s.first_y {
            f[4] = inv[j] as f64 / norm;
            f[5] = f64::from(u8::from(max_inv > 0 && inv[j] == max_inv));
            let rank = y_hat.iter().filter(|v| v.as_str() < w).count();
            f[6] = j.abs_diff(rank) as f64 / n_y as f64;
            f[7] = f64::from(u8::from(j > 0 && y_hat[j - 1].as_str() > w));
            f[8] = f64::from(u8::from(j + 1 < n_y && w > y_hat[j + 1].as_str()));
        }
        f[9] = len_diff;
        f[10] = f64::from(u8::from(unsorted));
        f[12] = missing as f64 / 3.0;
        f[13] = extra as f64 / 3.0;
        f
    };

    let mut tokens = Vec::with_capacity(x.len() + n_y + 1);
    for (i, w) in x.iter().enumerate() {
        tokens.push(TokenInput {
            ids: Some(hash_ids(w, vocab, seeds)),
            segment: SEG_X,
            position: i,
            features: word_features(w),
        });
    }
    let mut sep = [0.0; NUM_FEATURES];
    sep[9] = len_diff;
    sep[10] = f64::from(u8::from(unsorted));
    sep[12] = missing as f64 / 3.0;
    sep[13] = extra as f64 / 3.0;
    tokens.push(TokenInput {
        ids: None,
        segment: SEG_SEP,
        position: 0,
        features: sep,
    });
    for (j, w) in y_hat.iter().enumerate() {
        let mut f = word_features(w);
        f[3] = f64::from(u8::from(stats[w.as_str()].first_y != Some(j)));
        f[11] = inv[j] as f64 / norm;
        tokens.push(TokenInput {
            ids: Some(hash_ids(w, vocab, seeds)),
            segment: SEG_YHAT,
            position: j,
            features: f,
        });
    }
    StateInput {
        tokens,
        x: x.to_vec(),
        y_hat: y_hat.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn layout_and_membership() {
        let s = featurize(&w("mug greek book house"), &w("book greek mug"), 4096, [1, 2]);
        assert_eq!(s.len(), 4 + 3 + 1);
        assert_eq!(s.separator(), 4);
        assert!(s.tokens[4].ids.is_none());
        // "house" (x position 3) is missing from y_hat
        assert_eq!(s.tokens[3].features[1], 0.0);
        assert_eq!(s.tokens[0].features[1], 1.0);
        assert!((s.tokens[0].features[9] + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn reorder_marks_moved_word() {
        let s = featurize(
            &w("a b c d e"),
            &w("a c d e b"),
            4096,
            [1, 2],
        );
        // "b" moved three places; it carries the max inversion flag.
        let b_in_x = &s.tokens[1];
        assert_eq!(b_in_x.features[5], 1.0);
        assert_eq!(s.tokens[0].features[5], 0.0);
    }

    #[test]
    fn later_duplicate_flagged() {
        let s = featurize(&w("a b"), &w("a b b"), 4096, [1, 2]);
        let last = s.y_hat_pos(2);
        assert_eq!(s.tokens[last].features[3], 1.0);
        assert_eq!(s.tokens[s.y_hat_pos(1)].features[3], 0.0);
        assert_eq!(s.tokens[1].features[2], 1.0);
    }
}
