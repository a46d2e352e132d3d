//! A seeded stand-in for a prompted LLM on the alphabetization task.
//!
//! Predictions are the sorted list, or the sorted list hit by one to three
//! chained distortions. Critique-driven refinement parses the critique and
//! applies its corrective edit with probability `comprehension`. Unaided
//! refinement repairs a given wrong ordering or not as a fixed function of the
//! prompt (the refine model runs at temperature 0), and occasionally scrambles
//! a correct one.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{BackendError, TaskBackend, DIRECT_REFINE_CRITIQUE};
use crate::alpha_env::{
    apply_corrective_edit, distort_list, parse_critique, sorted_words, Critique, CritiqueKind,
    Lexicon,
};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Miscomprehension {
    /// Leave the answer as it was.
    NoOp,
    /// Corrupt the answer with one random distortion.
    RandomDistortion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorParams {
    /// Probability a prediction is exactly sorted.
    pub p_correct: f64,
    /// Weights over 1, 2, 3 chained distortions in a wrong prediction.
    pub error_counts: [f64; 3],
    /// Weights over REORDER, REPLACE, ADD, REPEAT, REMOVE in prediction errors.
    pub kind_weights: [f64; 5],
    /// Probability a parsed critique's corrective edit is carried out.
    pub comprehension: f64,
    pub miscomprehension: Miscomprehension,
    /// Probability unaided refinement repairs a wrong ordering.
    pub p_direct_fix: f64,
    /// Probability unaided refinement leaves a correct ordering alone.
    pub p_keep_correct: f64,
    /// Salt for the prompt-keyed draws of unaided refinement.
    pub salt: u64,
}

impl Default for SimulatorParams {
    fn default() -> Self {
        Self {
            p_correct: 0.637,
            error_counts: [0.28, 0.42, 0.30],
            kind_weights: [1.0; 5],
            comprehension: 0.9,
            miscomprehension: Miscomprehension::NoOp,
            p_direct_fix: 0.105,
            p_keep_correct: 0.98,
            salt: 0,
        }
    }
}

impl SimulatorParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        let probs = [
            self.p_correct,
            self.comprehension,
            self.p_direct_fix,
            self.p_keep_correct,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(BackendError::Config("probabilities must lie in [0, 1]".into()));
        }
        let ok = |w: &[f64]| w.iter().all(|v| v.is_finite() && *v >= 0.0) && w.iter().sum::<f64>() > 0.0;
        if !ok(&self.error_counts) || !ok(&self.kind_weights) {
            return Err(BackendError::Config(
                "weights must be non-negative with positive sum".into(),
            ));
        }
        Ok(())
    }
}

fn weighted_index(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

fn random_distortion(
    list: &[String],
    x: &[String],
    kind_weights: &[f64; 5],
    lexicon: &Lexicon,
    rng: &mut Rng,
) -> Option<Vec<String>> {
    for _ in 0..32 {
        let kind = CritiqueKind::CORRUPTING[weighted_index(kind_weights, rng)];
        if let Ok((out, _)) = distort_list(list, x, kind, lexicon, rng) {
            return Some(out);
        }
    }
    None
}

/// PREDICT: sorted `x`, or sorted `x` with `k` chained distortions.
pub fn simulated_predict(
    x: &[String],
    params: &SimulatorParams,
    lexicon: &Lexicon,
    rng: &mut Rng,
) -> Vec<String> {
    let y = sorted_words(x);
    if rng.random::<f64>() < params.p_correct {
        return y;
    }
    let k = 1 + weighted_index(&params.error_counts, rng);
    // Chained distortions can cancel (a REMOVE undoing a REPEAT); redraw then.
    for _ in 0..64 {
        let mut cur = y.clone();
        for _ in 0..k {
            if let Some(next) = random_distortion(&cur, x, &params.kind_weights, lexicon, rng) {
                cur = next;
            }
        }
        if cur != y {
            return cur;
        }
    }
    y
}

/// REFINE with a critique. Unparseable critiques leave `y_hat` unchanged.
pub fn simulated_refine(
    x: &[String],
    y_hat: &[String],
    critique_text: &str,
    params: &SimulatorParams,
    lexicon: &Lexicon,
    rng: &mut Rng,
) -> Vec<String> {
    if critique_text == DIRECT_REFINE_CRITIQUE {
        return simulated_direct_refine(x, y_hat, params, lexicon, rng);
    }
    let Ok(critique) = parse_critique(critique_text) else {
        return y_hat.to_vec();
    };
    if rng.random::<f64>() < params.comprehension {
        return apply_corrective_edit(y_hat, x, &critique);
    }
    match params.miscomprehension {
        Miscomprehension::NoOp => y_hat.to_vec(),
        // "correctly sorted" gives nothing to misread into an edit
        Miscomprehension::RandomDistortion if critique == Critique::Nothing => y_hat.to_vec(),
        Miscomprehension::RandomDistortion => {
            random_distortion(y_hat, x, &params.kind_weights, lexicon, rng)
                .unwrap_or_else(|| y_hat.to_vec())
        }
    }
}

/// DIRECTREFINE: whether a wrong ordering gets repaired is a fixed function of
/// `(salt, x, y_hat)`; a correct ordering is kept with `p_keep_correct` per call.
pub fn simulated_direct_refine(
    x: &[String],
    y_hat: &[String],
    params: &SimulatorParams,
    lexicon: &Lexicon,
    rng: &mut Rng,
) -> Vec<String> {
    let y = sorted_words(x);
    if y_hat != y {
        let mut key: Vec<&str> = x.iter().map(String::as_str).collect();
        key.push("|||");
        key.extend(y_hat.iter().map(String::as_str));
        let u = rng::unit_from_hash(rng::hash_words(&key, params.salt));
        return if u < params.p_direct_fix { y } else { y_hat.to_vec() };
    }
    if rng.random::<f64>() < params.p_keep_correct {
        return y;
    }
    random_distortion(&y, x, &params.kind_weights, lexicon, rng).unwrap_or(y)
}

/// The simulator as a [`TaskBackend`].
#[derive(Debug, Clone)]
pub struct Simulator {
    params: SimulatorParams,
    lexicon: std::sync::Arc<Lexicon>,
}

impl Simulator {
    pub fn new(params: SimulatorParams, lexicon: std::sync::Arc<Lexicon>) -> Result<Self, BackendError> {
        params.validate()?;
        Ok(Self { params, lexicon })
    }

    pub fn params(&self) -> &SimulatorParams {
        &self.params
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }
}

impl TaskBackend for Simulator {
    fn predict(&self, x: &[String], rng: &mut Rng) -> Result<Vec<String>, BackendError> {
        Ok(simulated_predict(x, &self.params, &self.lexicon, rng))
    }

    fn refine(
        &self,
        x: &[String],
        y_hat: &[String],
        critique: &str,
        rng: &mut Rng,
    ) -> Result<Vec<String>, BackendError> {
        Ok(simulated_refine(x, y_hat, critique, &self.params, &self.lexicon, rng))
    }
}
