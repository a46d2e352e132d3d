//! Synthetic word-alphabetization environment.
//!
//! An instance is an unsorted word list `x` and its sorted ground truth `y`.
//! Initial answers `y_hat` are produced by corrupting `y` with one of five
//! distortion operations, each paired with a template critique saying what is
//! wrong. The corrective edit implied by a critique undoes its distortion.

mod critique;
mod dataset;
mod edit;
mod lexicon;

pub use critique::{parse_critique, render_critique, Critique, CritiqueKind, ParseError};
pub use dataset::{
    generate_dataset, read_jsonl, write_jsonl, DatasetConfig, DatasetRecord, DatasetSplits,
    SplitName,
};
pub(crate) use dataset::record_is_valid;
pub use edit::{
    apply_corrective_edit, apply_distortion, distort, distort_list, oracle_critique, Distortion,
};
pub use lexicon::{load_lexicon, sample_instance, Lexicon, TaskInstance};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("length range [{min}, {max}] is infeasible for a lexicon of {lexicon} words")]
    InfeasibleLength { min: usize, max: usize, lexicon: usize },
    #[error("cannot apply {0:?} distortion to this list")]
    ImpossibleDistortion(CritiqueKind),
    #[error("lexicon too small to keep {0} instances disjoint across splits")]
    LexiconTooSmall(usize),
    #[error("invalid dataset config: {0}")]
    Config(String),
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Returns `words` sorted alphabetically (byte order on lowercase ASCII).
pub fn sorted_words(words: &[String]) -> Vec<String> {
    let mut y = words.to_vec();
    y.sort();
    y
}

/// Position at which `word` would sit in alphabetical order among `list`.
pub(crate) fn rank_position(list: &[String], word: &str) -> usize {
    list.iter().filter(|w| w.as_str() < word).count()
}

#[cfg(test)]
pub(crate) fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}
