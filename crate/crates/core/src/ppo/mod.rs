//! KL-regularized PPO over factored critique actions.
//!
//! One episode = one instance: the policy samples a critique (template, then
//! slots), the frozen task model refines, and the task reward lands on the
//! last factor. Each factor is a transition, so a NOTHING critique is one
//! step and REPLACE is three.

mod rollout;
mod train;
mod update;

pub use rollout::{collect_rollouts, Episode, EpisodeSource, RewardKind, RolloutBuffer, Transition};
pub use train::{
    evaluate_policy, train_rl4f, write_curve_csv, CurveRecord, DevInstance, DevScore, PpoConfig,
    TrainError, TrainOutcome,
};
pub use update::{clipped_objective, ppo_update, UpdateHyper, UpdateStats};

use serde::{Deserialize, Serialize};

/// Adaptive KL coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlController {
    pub beta: f64,
    pub target_kl: f64,
}

impl KlController {
    pub fn new(beta: f64, target_kl: f64) -> Self {
        Self {
            beta: beta.max(0.0),
            target_kl,
        }
    }
}

/// Proportional update: `e = clamp((kl - target) / target, -0.2, 0.2)`,
/// `beta *= 1 + 0.1 e`.
pub fn adapt_kl_coeff(controller: KlController, observed_mean_kl: f64) -> KlController {
    let e = ((observed_mean_kl - controller.target_kl) / controller.target_kl).clamp(-0.2, 0.2);
    KlController {
        beta: (controller.beta * (1.0 + 0.1 * e)).max(0.0),
        ..controller
    }
}

/// Per-transition `r_t - beta * (logp_behavior_t - logp_reference_t)`, grouped
/// by episode, plus the mean per-episode KL estimate (summed log-ratios).
pub fn kl_penalized_rewards(buffer: &RolloutBuffer, controller: &KlController) -> (Vec<Vec<f64>>, f64) {
    let mut kl_total = 0.0;
    let shaped = buffer
        .episodes
        .iter()
        .map(|ep| {
            ep.transitions
                .iter()
                .map(|t| {
                    let log_ratio = t.log_prob - t.ref_log_prob;
                    kl_total += log_ratio;
                    t.reward - controller.beta * log_ratio
                })
                .collect()
        })
        .collect();
    let mean_kl = if buffer.episodes.is_empty() {
        0.0
    } else {
        kl_total / buffer.episodes.len() as f64
    };
    (shaped, mean_kl)
}

/// GAE over one episode with terminal bootstrap 0:
/// `delta_t = r_t + gamma V_{t+1} - V_t`, `A_t = delta_t + gamma lambda A_{t+1}`.
pub fn compute_gae(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(rewards.len(), values.len(), "rewards and values must align");
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { 0.0 };
        let delta = rewards[t] + gamma * next_value - values[t];
        next_adv = delta + gamma * lambda * next_adv;
        adv[t] = next_adv;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// Shapes rewards, runs GAE per episode and normalizes advantages over the
/// whole buffer. Returns the mean KL used for the controller.
pub fn prepare_buffer(buffer: &mut RolloutBuffer, controller: &KlController, gamma: f64, lambda: f64) -> f64 {
    let (shaped, mean_kl) = kl_penalized_rewards(buffer, controller);
    for (ep, rewards) in buffer.episodes.iter_mut().zip(&shaped) {
        let values: Vec<f64> = ep.transitions.iter().map(|t| t.value).collect();
        let (adv, ret) = compute_gae(rewards, &values, gamma, lambda);
        for ((t, a), r) in ep.transitions.iter_mut().zip(adv).zip(ret) {
            t.advantage = a;
            t.ret = r;
        }
    }
    normalize_advantages(buffer);
    mean_kl
}

/// Rescales advantages to mean 0, std 1 across all transitions.
pub fn normalize_advantages(buffer: &mut RolloutBuffer) {
    let all: Vec<f64> = buffer
        .episodes
        .iter()
        .flat_map(|e| e.transitions.iter().map(|t| t.advantage))
        .collect();
    if all.is_empty() {
        return;
    }
    let n = all.len() as f64;
    let mean = all.iter().sum::<f64>() / n;
    let std = (all.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    let denom = if std > 1e-12 { std } else { 1.0 };
    for t in buffer.episodes.iter_mut().flat_map(|e| e.transitions.iter_mut()) {
        t.advantage = (t.advantage - mean) / denom;
    }
}
