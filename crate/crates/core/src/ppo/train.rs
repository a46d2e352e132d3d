use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rollout::{collect_rollouts, EpisodeSource, RewardKind};
use super::update::{ppo_update, UpdateHyper};
use super::{adapt_kl_coeff, prepare_buffer, KlController};
use crate::alpha_env::{render_critique, TaskInstance};
use crate::metrics::{exact_match, inverse_levenshtein_reward};
use crate::policy::{
    action_distribution, action_to_critique, encode, Adam, AdamConfig, PolicyParams, TRAIN_TEMPERATURE,
};
use crate::rng::{label, stream};
use crate::task_model::{BackendError, TaskBackend};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    /// Episodes collected per update (one episode = one environment step).
    pub steps_per_update: usize,
    pub total_steps: usize,
    /// Episodes per minibatch.
    pub minibatch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub entropy_coeff: f64,
    pub vf_coeff: f64,
    pub clip_ratio: f64,
    pub init_kl_coeff: f64,
    pub target_kl: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub max_grad_norm: f64,
    pub temperature: f64,
    pub reward: RewardKind,
    /// Reuse one frozen initial prediction per training instance.
    pub frozen_y_hat: bool,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            steps_per_update: 512,
            total_steps: 40_000,
            minibatch_size: 64,
            epochs: 5,
            lr: 3e-4,
            entropy_coeff: 0.001,
            vf_coeff: 0.5,
            clip_ratio: 0.2,
            init_kl_coeff: 1e-5,
            target_kl: 3.0,
            gamma: 0.99,
            gae_lambda: 0.95,
            max_grad_norm: 0.5,
            temperature: crate::policy::ROLLOUT_TEMPERATURE,
            reward: RewardKind::InverseLevenshtein,
            frozen_y_hat: false,
            seed: 0,
        }
    }
}

impl PpoConfig {
    /// Slower, smaller-batch settings for steering a large hosted model.
    pub fn large_model() -> Self {
        Self {
            steps_per_update: 240,
            total_steps: 96_000,
            minibatch_size: 24,
            lr: 1e-6,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let pos = [
            ("steps_per_update", self.steps_per_update as f64),
            ("minibatch_size", self.minibatch_size as f64),
            ("target_kl", self.target_kl),
            ("temperature", self.temperature),
        ];
        for (name, v) in pos {
            if v.is_nan() || v <= 0.0 {
                return Err(format!("ppo.{name} must be positive"));
            }
        }
        let nonneg = [
            ("lr", self.lr),
            ("entropy_coeff", self.entropy_coeff),
            ("vf_coeff", self.vf_coeff),
            ("clip_ratio", self.clip_ratio),
            ("init_kl_coeff", self.init_kl_coeff),
            ("max_grad_norm", self.max_grad_norm),
        ];
        for (name, v) in nonneg {
            if v.is_nan() || v < 0.0 {
                return Err(format!("ppo.{name} must be non-negative"));
            }
        }
        for (name, v) in [("gamma", self.gamma), ("gae_lambda", self.gae_lambda)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("ppo.{name} must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn num_updates(&self) -> usize {
        self.total_steps / self.steps_per_update
    }

    fn hyper(&self) -> UpdateHyper {
        UpdateHyper {
            clip_ratio: self.clip_ratio,
            vf_coeff: self.vf_coeff,
            entropy_coeff: self.entropy_coeff,
            epochs: self.epochs,
            minibatch_size: self.minibatch_size,
            max_grad_norm: self.max_grad_norm,
            target_kl: self.target_kl,
            temperature: self.temperature,
        }
    }
}

/// A held-out instance with a frozen initial prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DevInstance {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub y_hat: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DevScore {
    pub exact_match: f64,
    pub reward: f64,
    pub backend_errors: usize,
}

/// One refine round with greedy critiques; backend failures count as a
/// zero-reward miss.
pub fn evaluate_policy(
    params: &PolicyParams,
    dev: &[DevInstance],
    backend: &dyn TaskBackend,
    seed: u64,
) -> DevScore {
    let rows: Vec<Option<(bool, f64)>> = dev
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let state = encode(&d.x, &d.y_hat, params);
            let action = action_distribution(&state, TRAIN_TEMPERATURE).greedy();
            let critique = render_critique(&action_to_critique(&action, &d.x, &d.y_hat));
            let mut rng = stream(seed, &[label::DEV, i as u64]);
            let y_new = backend.refine(&d.x, &d.y_hat, &critique, &mut rng).ok()?;
            Some((exact_match(&y_new, &d.y), inverse_levenshtein_reward(&y_new, &d.y)))
        })
        .collect();
    let n = dev.len().max(1) as f64;
    DevScore {
        exact_match: rows.iter().flatten().filter(|r| r.0).count() as f64 / n,
        reward: rows.iter().flatten().map(|r| r.1).sum::<f64>() / n,
        backend_errors: rows.iter().filter(|r| r.is_none()).count(),
    }
}

/// One learning-curve row. Rollout columns are empty for the warm-start row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub update_index: usize,
    pub env_steps: usize,
    pub mean_reward: Option<f64>,
    pub dev_exact_match: f64,
    pub dev_reward: f64,
    pub mean_kl: Option<f64>,
    pub beta: f64,
    pub policy_loss: Option<f64>,
    pub value_loss: Option<f64>,
    pub entropy: Option<f64>,
}

pub fn write_curve_csv(path: &Path, records: &[CurveRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid PPO configuration: {0}")]
    Config(String),
    #[error("backend unusable at startup: {0}")]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: PolicyParams,
    pub best_update: usize,
    pub last: PolicyParams,
    pub curve: Vec<CurveRecord>,
    pub rollout_errors: usize,
    pub aborted_updates: usize,
}

/// Collect, shape, GAE, update, adapt beta; score the greedy policy on `dev`
/// after every update and keep the best-scoring parameters (by dev reward).
/// Update 0 scores the warm start itself.
pub fn train_rl4f(
    config: &PpoConfig,
    warm_start: &PolicyParams,
    backend: &dyn TaskBackend,
    train: &[TaskInstance],
    dev: &[DevInstance],
    mut on_update: impl FnMut(&CurveRecord),
) -> Result<TrainOutcome, TrainError> {
    config.validate().map_err(TrainError::Config)?;
    if train.is_empty() {
        return Err(TrainError::Config("no training instances".into()));
    }
    backend.predict(&train[0].x, &mut stream(config.seed, &[label::PREDICT]))?;

    let frozen: Option<Vec<Vec<String>>> = config.frozen_y_hat.then(|| {
        train
            .par_iter()
            .enumerate()
            .map(|(i, inst)| {
                let mut rng = stream(config.seed, &[label::PREDICT, i as u64]);
                backend.predict(&inst.x, &mut rng).unwrap_or_else(|_| inst.y.clone())
            })
            .collect()
    });
    let source = EpisodeSource {
        instances: train,
        frozen_y_hat: frozen.as_deref(),
    };

    let reference = warm_start;
    let mut params = warm_start.clone();
    let mut adam = Adam::new(
        AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        },
        &params,
    );
    let mut kl = KlController::new(config.init_kl_coeff, config.target_kl);
    let hyper = config.hyper();

    let dev_seed = crate::rng::derive_seed(config.seed, &[label::DEV]);
    let score = evaluate_policy(&params, dev, backend, dev_seed);
    let first = CurveRecord {
        update_index: 0,
        env_steps: 0,
        mean_reward: None,
        dev_exact_match: score.exact_match,
        dev_reward: score.reward,
        mean_kl: None,
        beta: kl.beta,
        policy_loss: None,
        value_loss: None,
        entropy: None,
    };
    on_update(&first);
    let mut curve = vec![first];
    let mut best = params.clone();
    let mut best_reward = score.reward;
    let mut best_update = 0;
    let mut rollout_errors = 0;
    let mut aborted_updates = 0;

    for u in 1..=config.num_updates() {
        let mut buffer = collect_rollouts(
            &params,
            reference,
            source,
            backend,
            config.steps_per_update,
            config.temperature,
            config.reward,
            config.seed,
            u as u64,
        );
        rollout_errors += buffer.backend_errors;
        let mean_kl = prepare_buffer(&mut buffer, &kl, config.gamma, config.gae_lambda);
        let mut rng = stream(config.seed, &[label::SHUFFLE, u as u64]);
        let stats = ppo_update(&mut params, &mut adam, &buffer, &hyper, &mut rng);
        if stats.aborted {
            aborted_updates += 1;
        }
        kl = adapt_kl_coeff(kl, mean_kl.max(0.0));

        let score = evaluate_policy(&params, dev, backend, dev_seed);
        if score.reward > best_reward {
            best_reward = score.reward;
            best = params.clone();
            best_update = u;
        }
        let rec = CurveRecord {
            update_index: u,
            env_steps: u * config.steps_per_update,
            mean_reward: Some(buffer.mean_task_reward()),
            dev_exact_match: score.exact_match,
            dev_reward: score.reward,
            mean_kl: Some(mean_kl),
            beta: kl.beta,
            policy_loss: Some(stats.policy_loss),
            value_loss: Some(stats.value_loss),
            entropy: Some(stats.entropy),
        };
        on_update(&rec);
        curve.push(rec);
    }
    Ok(TrainOutcome {
        best,
        best_update,
        last: params,
        curve,
        rollout_errors,
        aborted_updates,
    })
}
