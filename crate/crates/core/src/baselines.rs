//! Comparison critique sources: a fixed "Improve the answer." critique,
//! BM25 retrieval of stored critiques, the gold oracle, and critiques the
//! task model writes for itself.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alpha_env::{
    oracle_critique, read_jsonl, render_critique, write_jsonl, Critique, DatasetRecord, EnvError,
};
use crate::rng::Rng;
use crate::task_model::{format_words, BackendError, TaskBackend, DIRECT_REFINE_CRITIQUE};

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

/// Refines under the fixed critique "Improve the answer.".
pub fn direct_refinement(
    backend: &dyn TaskBackend,
    x: &[String],
    y_hat: &[String],
    rng: &mut Rng,
) -> Result<Vec<String>, BackendError> {
    backend.refine(x, y_hat, DIRECT_REFINE_CRITIQUE, rng)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub key: String,
    pub critique: String,
}

/// Stored `(key, critique)` pairs with BM25 corpus statistics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CritiqueMemory {
    entries: Vec<MemoryEntry>,
    term_freqs: Vec<HashMap<String, usize>>,
    lengths: Vec<usize>,
    doc_freq: HashMap<String, usize>,
    avg_len: f64,
}

fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// Memory key for an `(x, y_hat)` pair.
pub fn memory_key(x: &[String], y_hat: &[String]) -> String {
    let mut k = format_words(x);
    if !y_hat.is_empty() {
        k.push(' ');
        k.push_str(&format_words(y_hat));
    }
    k
}

impl CritiqueMemory {
    pub fn new(entries: Vec<MemoryEntry>) -> Self {
        let mut m = Self {
            entries,
            ..Self::default()
        };
        m.rebuild();
        m
    }

    /// One entry per record, keyed by `x` then `y_hat`.
    pub fn from_records(records: &[DatasetRecord]) -> Self {
        Self::new(
            records
                .iter()
                .map(|r| MemoryEntry {
                    key: memory_key(&r.x, &r.y_hat),
                    critique: r.critique.clone(),
                })
                .collect(),
        )
    }

    fn rebuild(&mut self) {
        self.term_freqs.clear();
        self.lengths.clear();
        self.doc_freq.clear();
        for e in &self.entries {
            let toks = tokenize(&e.key);
            let mut tf: HashMap<String, usize> = HashMap::new();
            for t in &toks {
                *tf.entry(t.clone()).or_default() += 1;
            }
            for t in tf.keys() {
                *self.doc_freq.entry(t.clone()).or_default() += 1;
            }
            self.lengths.push(toks.len());
            self.term_freqs.push(tf);
        }
        self.avg_len = if self.entries.is_empty() {
            0.0
        } else {
            self.lengths.iter().sum::<usize>() as f64 / self.entries.len() as f64
        };
    }

    pub fn push(&mut self, entry: MemoryEntry) {
        self.entries.push(entry);
        self.rebuild();
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`; always positive.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.entries.len() as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    pub fn save(&self, path: &Path) -> Result<(), EnvError> {
        write_jsonl(path, &self.entries)
    }

    /// Reads JSONL `{key, critique}` lines and rebuilds the statistics.
    pub fn load(path: &Path) -> Result<Self, EnvError> {
        Ok(Self::new(read_jsonl(path)?))
    }
}

/// Okapi BM25 of entry `index` for the query tokens.
pub fn bm25_score<S: AsRef<str>>(query: &[S], index: usize, memory: &CritiqueMemory, k1: f64, b: f64) -> f64 {
    let tf = &memory.term_freqs[index];
    let norm = 1.0 - b + b * memory.lengths[index] as f64 / memory.avg_len.max(f64::MIN_POSITIVE);
    query
        .iter()
        .map(|q| {
            let q = q.as_ref().to_lowercase();
            match tf.get(&q) {
                Some(&f) => {
                    let f = f as f64;
                    memory.idf(&q) * f * (k1 + 1.0) / (f + k1 * norm)
                }
                None => 0.0,
            }
        })
        .sum()
}

/// Entry indices ordered by BM25 score, best first; ties by lower index.
pub fn memprompt_ranking(memory: &CritiqueMemory, x: &[String], y_hat: &[String], top_k: usize) -> Vec<usize> {
    let query: Vec<&String> = x.iter().chain(y_hat).collect();
    let mut scored: Vec<(f64, usize)> = (0..memory.len())
        .map(|i| (bm25_score(&query, i, memory, BM25_K1, BM25_B), i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(top_k).map(|(_, i)| i).collect()
}

/// The critique of the best-matching stored pair, or "correctly sorted" for
/// an empty memory.
pub fn memprompt_retrieve(memory: &CritiqueMemory, x: &[String], y_hat: &[String], top_k: usize) -> String {
    match memprompt_ranking(memory, x, y_hat, top_k.max(1)).first() {
        Some(&i) => memory.entries[i].critique.clone(),
        None => render_critique(&Critique::Nothing),
    }
}

/// The oracle critique, rendered.
pub fn gold_feedback(x: &[String], y_hat: &[String], y: &[String]) -> String {
    render_critique(&oracle_critique(x, y_hat, y))
}

const SELF_REFINE_PREFIX: &str = "Below is a given list of words which are supposed to be sorted in alphabetical order. Describe what is wrong in the provided ordering.

---

Ordering: quirky whimsical bubbly joyous delightful melodic glimmering vivacious radiant lively zestful spontaneous
Feedback: Whimsical should come in the end. Delightful should come before joyous.

---

Ordering: airy amiable animated ardent astute beaming blithe brilliant
Feedback: This listed is correctly sorted.

---

Ordering: curious sprightly vivacious tenacious passionate vivacious
Feedback: The list contains duplicates and passionate should come before sprightly.

---

Ordering: ";

/// Few-shot prompt asking the task model to critique its own ordering.
pub fn self_refine_prompt<S: AsRef<str>>(y_hat: &[S]) -> String {
    format!("{SELF_REFINE_PREFIX}{}\nFeedback:", format_words(y_hat))
}

/// A critique written by the task model itself; needs raw completion support.
pub fn self_refine_critique<S: AsRef<str>>(backend: &dyn TaskBackend, y_hat: &[S]) -> Result<String, BackendError> {
    backend
        .complete(&self_refine_prompt(y_hat), 0.0)
        .map(|t| t.trim().to_owned())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::alpha_env::{distort, sample_instance, CritiqueKind, Lexicon};
    use crate::rng::stream;
    use crate::task_model::{Simulator, SimulatorParams};

    fn w(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn entry(key: &str, critique: &str) -> MemoryEntry {
        MemoryEntry {
            key: key.into(),
            critique: critique.into(),
        }
    }

    #[test]
    fn bm25_single_entry_oracle() {
        let m = CritiqueMemory::new(vec![entry("apple", "c")]);
        let want = (4.0f64 / 3.0).ln();
        assert!((m.idf("apple") - want).abs() < 1e-15);
        assert!((bm25_score(&["apple"], 0, &m, 1.2, 0.75) - want).abs() < 1e-15);
        assert_eq!(bm25_score(&["pear"], 0, &m, 1.2, 0.75), 0.0);
    }

    #[test]
    fn bm25_term_frequency_is_monotone() {
        let m = CritiqueMemory::new(vec![entry("apple pear", "a"), entry("apple apple pear", "b"), entry("fig", "c")]);
        // compare at equal length by normalizing b away
        let one = bm25_score(&["apple"], 0, &m, 1.2, 0.0);
        let two = bm25_score(&["apple"], 1, &m, 1.2, 0.0);
        assert!(two > one);
    }

    #[test]
    fn bm25_hand_computed_two_docs() {
        // N=2, "a" in both (df 2), "b" in one (df 1); lengths 2 and 1, avg 1.5
        let m = CritiqueMemory::new(vec![entry("a b", "x"), entry("a", "y")]);
        let idf_a = (1.0f64 + 0.5 / 2.5).ln();
        let idf_b = (1.0f64 + 1.5 / 1.5).ln();
        let norm0 = 1.0 - 0.75 + 0.75 * 2.0 / 1.5;
        let want = idf_a * 2.2 / (1.0 + 1.2 * norm0) + idf_b * 2.2 / (1.0 + 1.2 * norm0);
        assert!((bm25_score(&["a", "b"], 0, &m, 1.2, 0.75) - want).abs() < 1e-12);
    }

    #[test]
    fn retrieval_rules() {
        let m = CritiqueMemory::new(vec![
            entry("mug greek book", "first"),
            entry("zebra yak xylophone zebra yak", "second"),
        ]);
        assert_eq!(memprompt_retrieve(&m, &w("yak zebra xylophone"), &w("xylophone yak zebra"), 1), "second");
        // no overlap: index 0 wins the tie
        assert_eq!(memprompt_retrieve(&m, &w("quartz"), &[], 1), "first");
        assert_eq!(
            memprompt_retrieve(&CritiqueMemory::default(), &w("a"), &w("a"), 1),
            "The list is correctly sorted."
        );
    }

    #[test]
    fn self_retrieval_from_records() {
        let lex = Lexicon::bundled();
        let mut rng = stream(3, &[]);
        let records: Vec<DatasetRecord> = (0..200)
            .map(|i| {
                let inst = sample_instance(&lex, (3, 12), &mut rng).unwrap();
                let (y_hat, c) = distort(&inst, CritiqueKind::ALL[i % 6], &lex, &mut rng).unwrap();
                DatasetRecord {
                    x: inst.x,
                    y: inst.y,
                    y_hat,
                    critique: render_critique(&c),
                }
            })
            .collect();
        let m = CritiqueMemory::from_records(&records);
        for r in records.iter().take(50) {
            assert_eq!(memprompt_retrieve(&m, &r.x, &r.y_hat, 1), r.critique);
        }
    }

    #[test]
    fn memory_jsonl_round_trip() {
        let mut m = CritiqueMemory::new(vec![entry("a b", "x")]);
        m.push(entry("c", "y"));
        assert_eq!(m.doc_freq("c"), 1);
        assert!((m.avg_len() - 1.5).abs() < 1e-15);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("memory.jsonl");
        m.save(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("{\"key\":\"a b\",\"critique\":\"x\"}\n"));
        assert_eq!(CritiqueMemory::load(&p).unwrap(), m);
    }

    #[test]
    fn gold_feedback_cases() {
        let x = w("mug greek book house");
        let y = w("book greek house mug");
        assert_eq!(gold_feedback(&x, &y, &y), "The list is correctly sorted.");
        assert_eq!(gold_feedback(&x, &w("book greek mug"), &y), "The word house is missing");
    }

    #[test]
    fn self_refine_prompt_is_verbatim() {
        let p = self_refine_prompt(&["b", "a"]);
        assert!(p.starts_with("Below is a given list of words which are supposed to be sorted"));
        assert!(p.contains("\nFeedback: This listed is correctly sorted.\n\n---\n\n"));
        assert!(p.ends_with("\n\n---\n\nOrdering: b a\nFeedback:"));
        assert_eq!(p.matches("Ordering: ").count(), 4);
    }

    #[test]
    fn simulator_cannot_self_critique() {
        let sim = Simulator::new(SimulatorParams::default(), Arc::new(Lexicon::bundled())).unwrap();
        assert!(matches!(
            self_refine_critique(&sim, &["a"]),
            Err(BackendError::Unsupported(_))
        ));
    }

    #[test]
    fn direct_refinement_keeps_sorted_when_told_to() {
        let params = SimulatorParams {
            p_keep_correct: 1.0,
            ..SimulatorParams::default()
        };
        let sim = Simulator::new(params, Arc::new(Lexicon::bundled())).unwrap();
        let x = w("mug greek book");
        let y = w("book greek mug");
        for s in 0..20 {
            assert_eq!(direct_refinement(&sim, &x, &y, &mut stream(s, &[])).unwrap(), y);
        }
    }
}
