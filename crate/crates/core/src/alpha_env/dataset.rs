use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    distort, parse_critique, render_critique, sample_instance, CritiqueKind, EnvError, Lexicon,
    TaskInstance,
};
use crate::rng::{self, label};

/// One `(x, y, y_hat, critique)` tuple, serialized as a JSON Lines object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub y_hat: Vec<String>,
    pub critique: String,
}

impl DatasetRecord {
    pub fn instance(&self) -> TaskInstance {
        TaskInstance {
            x: self.x.clone(),
            y: self.y.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    WarmStart,
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 4] = [
        SplitName::WarmStart,
        SplitName::Train,
        SplitName::Dev,
        SplitName::Test,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            SplitName::WarmStart => "warm_start.jsonl",
            SplitName::Train => "train.jsonl",
            SplitName::Dev => "dev.jsonl",
            SplitName::Test => "test.jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub warm_start: usize,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability a record is left intact (NOTHING critique).
    pub nothing_fraction: f64,
    /// Relative weights of REORDER, REPLACE, ADD, REPEAT, REMOVE.
    pub kind_weights: [f64; 5],
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            warm_start: 40_000,
            train: 10_000,
            dev: 1_000,
            test: 1_000,
            min_len: 3,
            max_len: 12,
            nothing_fraction: 0.55,
            kind_weights: [1.0; 5],
        }
    }
}

impl DatasetConfig {
    pub fn count(&self, split: SplitName) -> usize {
        match split {
            SplitName::WarmStart => self.warm_start,
            SplitName::Train => self.train,
            SplitName::Dev => self.dev,
            SplitName::Test => self.test,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if !(0.0..=1.0).contains(&self.nothing_fraction) {
            return Err(EnvError::Config("nothing_fraction must be in [0, 1]".into()));
        }
        if self.kind_weights.iter().any(|w| !w.is_finite() || *w < 0.0)
            || self.kind_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(EnvError::Config(
                "kind_weights must be non-negative with positive sum".into(),
            ));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(EnvError::Config("need 1 <= min_len <= max_len".into()));
        }
        Ok(())
    }

    fn sample_kind<R: Rng + ?Sized>(&self, rng: &mut R) -> CritiqueKind {
        if rng.random::<f64>() < self.nothing_fraction {
            return CritiqueKind::Nothing;
        }
        let total: f64 = self.kind_weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (kind, w) in CritiqueKind::CORRUPTING.iter().zip(self.kind_weights) {
            if u < w {
                return *kind;
            }
            u -= w;
        }
        CritiqueKind::CORRUPTING[4]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSplits {
    pub warm_start: Vec<DatasetRecord>,
    pub train: Vec<DatasetRecord>,
    pub dev: Vec<DatasetRecord>,
    pub test: Vec<DatasetRecord>,
}

impl DatasetSplits {
    pub fn split(&self, name: SplitName) -> &[DatasetRecord] {
        match name {
            SplitName::WarmStart => &self.warm_start,
            SplitName::Train => &self.train,
            SplitName::Dev => &self.dev,
            SplitName::Test => &self.test,
        }
    }

    fn split_mut(&mut self, name: SplitName) -> &mut Vec<DatasetRecord> {
        match name {
            SplitName::WarmStart => &mut self.warm_start,
            SplitName::Train => &mut self.train,
            SplitName::Dev => &mut self.dev,
            SplitName::Test => &mut self.test,
        }
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), EnvError> {
        std::fs::create_dir_all(dir)?;
        for name in SplitName::ALL {
            write_jsonl(&dir.join(name.file_name()), self.split(name))?;
        }
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self, EnvError> {
        let mut out = Self::default();
        for name in SplitName::ALL {
            *out.split_mut(name) = read_jsonl(&dir.join(name.file_name()))?;
        }
        Ok(out)
    }
}

fn make_record(
    config: &DatasetConfig,
    lexicon: &Lexicon,
    seed: u64,
    split: SplitName,
    index: usize,
    attempt: u64,
) -> Result<DatasetRecord, EnvError> {
    let mut r = rng::stream(seed, &[label::DATASET, split as u64, index as u64, attempt]);
    let inst = sample_instance(lexicon, (config.min_len, config.max_len), &mut r)?;
    // Impossible kinds are rare (REORDER on one word); resample the kind.
    for _ in 0..64 {
        let kind = config.sample_kind(&mut r);
        if let Ok((y_hat, critique)) = distort(&inst, kind, lexicon, &mut r) {
            return Ok(DatasetRecord {
                x: inst.x,
                y: inst.y,
                y_hat,
                critique: render_critique(&critique),
            });
        }
    }
    Err(EnvError::ImpossibleDistortion(CritiqueKind::Reorder))
}

/// Generates all four splits. Each record draws from its own stream keyed by
/// `(seed, split, index, attempt)`; a record whose word set already appeared in
/// any split is regenerated with the next attempt number, so splits are
/// disjoint in `x` and output does not depend on thread scheduling.
pub fn generate_dataset(
    config: &DatasetConfig,
    lexicon: &Lexicon,
    seed: u64,
) -> Result<DatasetSplits, EnvError> {
    config.validate()?;
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    let mut out = DatasetSplits::default();
    for split in SplitName::ALL {
        let n = config.count(split);
        let drafts: Vec<DatasetRecord> = (0..n)
            .into_par_iter()
            .map(|i| make_record(config, lexicon, seed, split, i, 0))
            .collect::<Result<_, _>>()?;
        let records = out.split_mut(split);
        for (i, mut rec) in drafts.into_iter().enumerate() {
            let mut attempt = 0;
            while !seen.insert(rec.y.clone()) {
                attempt += 1;
                if attempt > 32 {
                    return Err(EnvError::LexiconTooSmall(seen.len() + 1));
                }
                rec = make_record(config, lexicon, seed, split, i, attempt)?;
            }
            records.push(rec);
        }
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), EnvError> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|source| EnvError::Json {
            path: path.to_owned(),
            line: 0,
            source,
        })?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, EnvError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| EnvError::Json {
                path: path.to_owned(),
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(out)
}

/// Checks that a record's critique parses and its `y` is sorted.
pub(crate) fn record_is_valid(rec: &DatasetRecord) -> bool {
    parse_critique(&rec.critique).is_ok() && rec.y.windows(2).all(|w| w[0] <= w[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DatasetConfig {
        DatasetConfig {
            warm_start: 300,
            train: 100,
            dev: 20,
            test: 20,
            ..Default::default()
        }
    }

    #[test]
    fn default_split_sizes() {
        let c = DatasetConfig::default();
        assert_eq!((c.warm_start, c.train, c.dev, c.test), (40_000, 10_000, 1_000, 1_000));
    }

    #[test]
    fn generation_is_deterministic_and_disjoint() {
        let lex = Lexicon::bundled();
        let a = generate_dataset(&small(), &lex, 9).unwrap();
        let b = generate_dataset(&small(), &lex, 9).unwrap();
        assert_eq!(a, b);
        let mut seen = HashSet::new();
        for name in SplitName::ALL {
            assert_eq!(a.split(name).len(), small().count(name));
            for r in a.split(name) {
                assert!(record_is_valid(r));
                assert!(seen.insert(r.y.clone()));
            }
        }
    }

    #[test]
    fn nothing_fraction_one_keeps_lists_intact() {
        let lex = Lexicon::bundled();
        let cfg = DatasetConfig {
            nothing_fraction: 1.0,
            ..small()
        };
        let d = generate_dataset(&cfg, &lex, 1).unwrap();
        assert!(d.warm_start.iter().all(|r| r.y_hat == r.y));
    }

    #[test]
    fn jsonl_round_trip_is_byte_identical() {
        let lex = Lexicon::bundled();
        let d = generate_dataset(&small(), &lex, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        d.write_dir(dir.path()).unwrap();
        let back = DatasetSplits::read_dir(dir.path()).unwrap();
        assert_eq!(back, d);
        let first = std::fs::read(dir.path().join("dev.jsonl")).unwrap();
        let line = String::from_utf8(first).unwrap();
        let v: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
        for key in ["x", "y", "y_hat", "critique"] {
            assert!(v.get(key).is_some());
        }
    }

    #[test]
    fn tiny_lexicon_cannot_stay_disjoint() {
        let lex = Lexicon::from_words(["a", "b", "c"]).unwrap();
        let cfg = DatasetConfig {
            warm_start: 5,
            train: 0,
            dev: 0,
            test: 0,
            min_len: 3,
            max_len: 3,
            ..Default::default()
        };
        assert!(matches!(
            generate_dataset(&cfg, &lex, 0),
            Err(EnvError::LexiconTooSmall(_))
        ));
    }
}
