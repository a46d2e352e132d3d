//! Supervised warm-start: maximum likelihood of gold critiques.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::net::{encode_input, PolicyConfig, PolicyParams};
use super::optim::{Adam, AdamConfig};
use super::{action_distribution, action_to_critique, critique_to_action, log_prob, log_prob_grad};
use super::{CritiqueAction, StateInput, TRAIN_TEMPERATURE};
use crate::alpha_env::{parse_critique, Critique, DatasetRecord};
use crate::rng::{label, stream};

/// A featurized record with its gold action.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedExample {
    pub input: StateInput,
    pub action: CritiqueAction,
    pub critique: Critique,
}

/// Featurizes records and converts gold critiques to actions. Records whose
/// critique does not parse or whose slot words do not occur are skipped and
/// counted.
pub fn prepare_examples(config: &PolicyConfig, records: &[DatasetRecord]) -> (Vec<SupervisedExample>, usize) {
    let mut skipped = 0;
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let Ok(critique) = parse_critique(&r.critique) else {
            skipped += 1;
            continue;
        };
        let Some(action) = critique_to_action(&critique, &r.x, &r.y_hat) else {
            skipped += 1;
            continue;
        };
        if r.x.is_empty() {
            skipped += 1;
            continue;
        }
        out.push(SupervisedExample {
            input: super::featurize(&r.x, &r.y_hat, config.vocab_size, config.hash_seeds),
            action,
            critique,
        });
    }
    (out, skipped)
}

/// One Adam step on the batch mean negative log-likelihood; returns the
/// pre-step loss.
pub fn supervised_step(params: &mut PolicyParams, adam: &mut Adam, batch: &[SupervisedExample]) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let mut grads = params.zeros_like();
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for ex in batch {
        let state = encode_input(params, ex.input.clone());
        loss -= log_prob(&state, &ex.action, TRAIN_TEMPERATURE) * scale;
        // descend on -log p
        log_prob_grad(params, &state, &ex.action, TRAIN_TEMPERATURE, -scale, &mut grads);
    }
    adam.step(params, &grads);
    loss
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticAccuracy {
    pub n: usize,
    pub template: f64,
    pub full: f64,
}

/// Greedy-decoding accuracy against gold critiques.
pub fn evaluate_critic(params: &PolicyParams, examples: &[SupervisedExample]) -> CriticAccuracy {
    use rayon::prelude::*;
    let hits: Vec<(bool, bool)> = examples
        .par_iter()
        .map(|ex| {
            let state = encode_input(params, ex.input.clone());
            let a = action_distribution(&state, TRAIN_TEMPERATURE).greedy();
            let template = a.template == ex.action.template;
            let full = template && action_to_critique(&a, &ex.input.x, &ex.input.y_hat) == ex.critique;
            (template, full)
        })
        .collect();
    let n = hits.len().max(1) as f64;
    CriticAccuracy {
        n: hits.len(),
        template: hits.iter().filter(|h| h.0).count() as f64 / n,
        full: hits.iter().filter(|h| h.1).count() as f64 / n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WarmStartConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    pub seed: u64,
}

impl Default for WarmStartConfig {
    fn default() -> Self {
        Self {
            epochs: 6,
            batch_size: 64,
            optimizer: AdamConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStartReport {
    pub skipped: usize,
    pub epoch_loss: Vec<f64>,
    pub dev: Option<CriticAccuracy>,
}

/// Initializes a policy and trains it on `train`; `dev` (if given) is scored
/// after the last epoch.
pub fn train_warm_start(
    policy: PolicyConfig,
    config: &WarmStartConfig,
    train: &[DatasetRecord],
    dev: &[DatasetRecord],
    mut on_epoch: impl FnMut(usize, f64),
) -> (PolicyParams, WarmStartReport) {
    let mut params = PolicyParams::init(policy, &mut stream(config.seed, &[label::INIT]));
    let (mut examples, skipped) = prepare_examples(&policy, train);
    let mut adam = Adam::new(config.optimizer, &params);
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        examples.shuffle(&mut stream(config.seed, &[label::SHUFFLE, epoch as u64]));
        let mut total = 0.0;
        let mut batches = 0;
        for batch in examples.chunks(config.batch_size.max(1)) {
            total += supervised_step(&mut params, &mut adam, batch);
            batches += 1;
        }
        let mean = total / batches.max(1) as f64;
        on_epoch(epoch, mean);
        epoch_loss.push(mean);
    }
    let dev = (!dev.is_empty()).then(|| evaluate_critic(&params, &prepare_examples(&policy, dev).0));
    (
        params,
        WarmStartReport {
            skipped,
            epoch_loss,
            dev,
        },
    )
}
