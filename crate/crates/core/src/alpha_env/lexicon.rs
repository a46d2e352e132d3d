use std::collections::HashSet;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sorted_words, EnvError};

const BUNDLED: &str = include_str!("../../data/lexicon.txt");

/// Alphabetically ordered, duplicate-free set of lowercase words.
#[derive(Debug, Clone)]
pub struct Lexicon {
    words: Vec<String>,
    index: HashSet<String>,
}

impl Lexicon {
    pub fn from_words<I, S>(words: I) -> Result<Self, EnvError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut words: Vec<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        words.sort();
        words.dedup();
        if words.is_empty() {
            return Err(EnvError::EmptyLexicon);
        }
        let index = words.iter().cloned().collect();
        Ok(Self { words, index })
    }

    /// The 43,000-word English lexicon shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_words(BUNDLED.lines()).expect("bundled lexicon is non-empty")
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains(word)
    }

    /// Draws a word not in `exclude`, giving up after a bounded number of tries.
    pub(crate) fn sample_outside<R: Rng + ?Sized>(
        &self,
        exclude: &[&[String]],
        rng: &mut R,
    ) -> Option<String> {
        for _ in 0..256 {
            let w = &self.words[rng.random_range(0..self.words.len())];
            if !exclude.iter().any(|list| list.contains(w)) {
                return Some(w.clone());
            }
        }
        None
    }
}

/// Reads one word per line; blank lines are skipped, case is folded.
pub fn load_lexicon<R: BufRead>(source: R) -> Result<Lexicon, EnvError> {
    let mut lines = Vec::new();
    for line in source.lines() {
        lines.push(line?);
    }
    Lexicon::from_words(lines)
}

/// An unsorted word list and its alphabetical sorting.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskInstance {
    pub x: Vec<String>,
    pub y: Vec<String>,
}

impl TaskInstance {
    pub fn from_unsorted(x: Vec<String>) -> Self {
        let y = sorted_words(&x);
        Self { x, y }
    }
}

/// Samples `x` uniformly without replacement, shuffled, with a length drawn
/// uniformly from the inclusive range.
pub fn sample_instance<R: Rng + ?Sized>(
    lexicon: &Lexicon,
    length_range: (usize, usize),
    rng: &mut R,
) -> Result<TaskInstance, EnvError> {
    let (min, max) = length_range;
    if min == 0 || min > max || max > lexicon.len() {
        return Err(EnvError::InfeasibleLength {
            min,
            max,
            lexicon: lexicon.len(),
        });
    }
    let n = rng.random_range(min..=max);
    let mut x: Vec<String> = rand::seq::index::sample(rng, lexicon.len(), n)
        .into_iter()
        .map(|i| lexicon.words[i].clone())
        .collect();
    x.shuffle(rng);
    Ok(TaskInstance::from_unsorted(x))
}
