//! The critique policy: a pointer-network over structured critiques.
//!
//! A critique is factored as template, then slot word(s) picked by pointing
//! at positions of `[x | ||| | y_hat]`. Slot `a` may point anywhere in `x` or
//! `y_hat` (missing words only live in `x`); slot `b` points into `y_hat`.

mod checkpoint;
mod features;
mod net;
mod optim;
mod warm_start;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError, CHECKPOINT_VERSION};
pub use features::{featurize, StateInput, TokenInput, NUM_FEATURES};
pub use net::{
    backward, encode, encode_input, EncodedState, HeadGrads, PolicyConfig, PolicyParams, Tensor,
    NUM_TEMPLATES,
};
pub use optim::{clip_grad_norm, Adam, AdamConfig};
pub use warm_start::{
    evaluate_critic, prepare_examples, supervised_step, train_warm_start, CriticAccuracy,
    SupervisedExample, WarmStartConfig, WarmStartReport,
};

use rand::distr::{weighted::WeightedIndex, Distribution};
use serde::{Deserialize, Serialize};

use crate::alpha_env::{Critique, CritiqueKind};
use crate::rng::Rng;

/// Sampling temperature for warm-start likelihoods and greedy decoding.
pub const TRAIN_TEMPERATURE: f64 = 1.0;
/// Sampling temperature for rollouts.
pub const ROLLOUT_TEMPERATURE: f64 = 0.7;

/// Template index plus pointer positions into the encoded sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CritiqueAction {
    pub template: usize,
    pub slot_a: Option<usize>,
    pub slot_b: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Factor {
    Template,
    SlotA,
    SlotB,
}

impl CritiqueAction {
    pub fn kind(&self) -> CritiqueKind {
        CritiqueKind::from_index(self.template).expect("template index in range")
    }

    /// The factors this action samples, in ancestral order.
    pub fn factors(&self) -> Vec<Factor> {
        let mut f = vec![Factor::Template];
        if self.slot_a.is_some() {
            f.push(Factor::SlotA);
        }
        if self.slot_b.is_some() {
            f.push(Factor::SlotB);
        }
        f
    }

    pub fn is_valid_for(&self, input: &StateInput) -> bool {
        let Some(kind) = CritiqueKind::from_index(self.template) else {
            return false;
        };
        if !template_mask(input)[self.template] {
            return false;
        }
        let a_ok = match (kind.has_slot_a(), self.slot_a) {
            (true, Some(i)) => i < input.len() && i != input.separator(),
            (false, None) => true,
            _ => false,
        };
        let b_ok = match (kind.has_slot_b(), self.slot_b) {
            (true, Some(j)) => input.is_y_hat_pos(j),
            (false, None) => true,
            _ => false,
        };
        a_ok && b_ok
    }
}

fn word_at<'a>(pos: usize, x: &'a [String], y_hat: &'a [String]) -> &'a str {
    if pos < x.len() {
        &x[pos]
    } else {
        &y_hat[pos - x.len() - 1]
    }
}

/// Resolves pointer positions to words.
pub fn action_to_critique(action: &CritiqueAction, x: &[String], y_hat: &[String]) -> Critique {
    let a = action.slot_a.map(|i| word_at(i, x, y_hat));
    let b = action.slot_b.map(|j| word_at(j, x, y_hat));
    Critique::from_parts(action.kind(), a, b).expect("action arity matches its template")
}

/// Maps a critique to an action by first occurrence of each slot word;
/// `None` if a slot word does not occur where it is allowed to.
pub fn critique_to_action(critique: &Critique, x: &[String], y_hat: &[String]) -> Option<CritiqueAction> {
    let slot_a = match critique.slot_a() {
        Some(w) => Some(
            x.iter()
                .position(|v| v == w)
                .or_else(|| y_hat.iter().position(|v| v == w).map(|j| x.len() + 1 + j))?,
        ),
        None => None,
    };
    let slot_b = match critique.slot_b() {
        Some(w) => Some(x.len() + 1 + y_hat.iter().position(|v| v == w)?),
        None => None,
    };
    Some(CritiqueAction {
        template: critique.kind().index(),
        slot_a,
        slot_b,
    })
}

/// Templates available for this input: REPLACE needs a `y_hat` word.
pub fn template_mask(input: &StateInput) -> [bool; NUM_TEMPLATES] {
    let mut m = [true; NUM_TEMPLATES];
    m[CritiqueKind::Replace.index()] = input.y_hat_len() > 0;
    m
}

fn slot_a_mask(input: &StateInput) -> Vec<bool> {
    (0..input.len()).map(|i| i != input.separator()).collect()
}

fn slot_b_mask(input: &StateInput) -> Vec<bool> {
    (0..input.len()).map(|i| input.is_y_hat_pos(i)).collect()
}

/// Softmax of `logits / temperature` restricted to `mask`; masked entries
/// get probability 0.
pub fn masked_softmax(logits: &[f64], mask: &[bool], temperature: f64) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(z, _)| z / temperature)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(z, &m)| if m { (z / temperature - max).exp() } else { 0.0 })
        .collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    p
}

fn masked_log_softmax(logits: &[f64], mask: &[bool], temperature: f64) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(z, _)| z / temperature)
        .fold(f64::NEG_INFINITY, f64::max);
    let lse = max
        + logits
            .iter()
            .zip(mask)
            .filter(|(_, m)| **m)
            .map(|(z, _)| (z / temperature - max).exp())
            .sum::<f64>()
            .ln();
    logits
        .iter()
        .zip(mask)
        .map(|(z, &m)| if m { z / temperature - lse } else { f64::NEG_INFINITY })
        .collect()
}

/// The three factor distributions at one temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    pub temperature: f64,
    pub template: Vec<f64>,
    /// Per template, by sequence position; empty for NOTHING.
    pub slot_a: Vec<Vec<f64>>,
    /// By sequence position; nonzero only on `y_hat`.
    pub slot_b: Vec<f64>,
}

pub fn action_distribution(state: &EncodedState, temperature: f64) -> ActionDistribution {
    let input = &state.input;
    let template = masked_softmax(&state.template_logits, &template_mask(input), temperature);
    let am = slot_a_mask(input);
    let slot_a = (0..NUM_TEMPLATES)
        .map(|t| {
            if CritiqueKind::ALL[t].has_slot_a() {
                masked_softmax(&state.slot_a_logits[t], &am, temperature)
            } else {
                Vec::new()
            }
        })
        .collect();
    let slot_b = if input.y_hat_len() > 0 {
        masked_softmax(&state.slot_b_logits, &slot_b_mask(input), temperature)
    } else {
        vec![0.0; input.len()]
    };
    ActionDistribution {
        temperature,
        template,
        slot_a,
        slot_b,
    }
}

fn draw(p: &[f64], rng: &mut Rng) -> usize {
    WeightedIndex::new(p)
        .expect("a categorical with positive mass")
        .sample(rng)
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

impl ActionDistribution {
    fn pick(&self, mut choose: impl FnMut(&[f64]) -> usize) -> CritiqueAction {
        let template = choose(&self.template);
        let kind = CritiqueKind::ALL[template];
        let slot_a = kind.has_slot_a().then(|| choose(&self.slot_a[template]));
        let slot_b = kind.has_slot_b().then(|| choose(&self.slot_b));
        CritiqueAction {
            template,
            slot_a,
            slot_b,
        }
    }

    /// Ancestral sample: template, then its slots. Returns the summed log-probability.
    pub fn sample(&self, rng: &mut Rng) -> (CritiqueAction, f64) {
        let a = self.pick(|p| draw(p, rng));
        let lp = self.log_prob(&a);
        (a, lp)
    }

    /// Argmax of each factor.
    pub fn greedy(&self) -> CritiqueAction {
        self.pick(argmax)
    }

    pub fn log_prob(&self, action: &CritiqueAction) -> f64 {
        let mut lp = self.template[action.template].ln();
        if let Some(i) = action.slot_a {
            lp += self.slot_a[action.template][i].ln();
        }
        if let Some(j) = action.slot_b {
            lp += self.slot_b[j].ln();
        }
        lp
    }
}

pub fn sample_action(dist: &ActionDistribution, rng: &mut Rng) -> (CritiqueAction, f64) {
    dist.sample(rng)
}

pub fn greedy_action(state: &EncodedState) -> CritiqueAction {
    action_distribution(state, TRAIN_TEMPERATURE).greedy()
}

fn factor_logits<'a>(
    state: &'a EncodedState,
    action: &CritiqueAction,
    factor: Factor,
) -> (&'a [f64], Vec<bool>, usize) {
    let input = &state.input;
    match factor {
        Factor::Template => (
            &state.template_logits,
            template_mask(input).to_vec(),
            action.template,
        ),
        Factor::SlotA => (
            &state.slot_a_logits[action.template],
            slot_a_mask(input),
            action.slot_a.expect("slot_a factor of a slot_a action"),
        ),
        Factor::SlotB => (
            &state.slot_b_logits,
            slot_b_mask(input),
            action.slot_b.expect("slot_b factor of a slot_b action"),
        ),
    }
}

/// Log-probability and entropy of one factor of `action`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorStats {
    pub log_prob: f64,
    pub entropy: f64,
}

fn entropy_of(logp: &[f64]) -> f64 {
    logp.iter()
        .filter(|l| l.is_finite())
        .map(|l| -l.exp() * l)
        .sum()
}

pub fn factor_stats(state: &EncodedState, action: &CritiqueAction, factor: Factor, temperature: f64) -> FactorStats {
    let (z, mask, chosen) = factor_logits(state, action, factor);
    let logp = masked_log_softmax(z, &mask, temperature);
    FactorStats {
        log_prob: logp[chosen],
        entropy: entropy_of(&logp),
    }
}

/// Adds `w_logp * d(log p_chosen)/dz + w_ent * dH/dz` for one factor into `head`.
pub fn add_factor_grad(
    state: &EncodedState,
    action: &CritiqueAction,
    factor: Factor,
    temperature: f64,
    w_logp: f64,
    w_ent: f64,
    head: &mut HeadGrads,
) {
    let (z, mask, chosen) = factor_logits(state, action, factor);
    let logp = masked_log_softmax(z, &mask, temperature);
    let h = entropy_of(&logp);
    let dz: Vec<f64> = logp
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            if !l.is_finite() {
                return 0.0;
            }
            let p = l.exp();
            let onehot = if k == chosen { 1.0 } else { 0.0 };
            (w_logp * (onehot - p) - w_ent * p * (l + h)) / temperature
        })
        .collect();
    match factor {
        Factor::Template => {
            for (t, v) in head.template.iter_mut().zip(&dz) {
                *t += v;
            }
        }
        Factor::SlotA => match &mut head.slot_a {
            Some((t, acc)) => {
                assert_eq!(*t, action.template, "one slot_a template per backward pass");
                acc.iter_mut().zip(&dz).for_each(|(a, v)| *a += v);
            }
            None => head.slot_a = Some((action.template, dz)),
        },
        Factor::SlotB => match &mut head.slot_b {
            Some(acc) => acc.iter_mut().zip(&dz).for_each(|(a, v)| *a += v),
            None => head.slot_b = Some(dz),
        },
    }
}

/// Total log-probability of `action`.
pub fn log_prob(state: &EncodedState, action: &CritiqueAction, temperature: f64) -> f64 {
    assert!(action.is_valid_for(&state.input), "invalid action for state");
    action
        .factors()
        .into_iter()
        .map(|f| factor_stats(state, action, f, temperature).log_prob)
        .sum()
}

/// Accumulates `scale * d log p(action) / d params` into `grads`.
pub fn log_prob_grad(
    params: &PolicyParams,
    state: &EncodedState,
    action: &CritiqueAction,
    temperature: f64,
    scale: f64,
    grads: &mut PolicyParams,
) {
    assert!(action.is_valid_for(&state.input), "invalid action for state");
    let mut head = HeadGrads::zero();
    for f in action.factors() {
        add_factor_grad(state, action, f, temperature, scale, 0.0, &mut head);
    }
    backward(params, state, &head, grads);
}

pub fn value(state: &EncodedState) -> f64 {
    state.value
}

/// Accumulates `scale * d value / d params` into `grads`.
pub fn value_grad(params: &PolicyParams, state: &EncodedState, scale: f64, grads: &mut PolicyParams) {
    let mut head = HeadGrads::zero();
    head.value = scale;
    backward(params, state, &head, grads);
}
