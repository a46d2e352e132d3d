use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::RolloutBuffer;
use crate::policy::{
    add_factor_grad, backward, clip_grad_norm, encode_input, factor_stats, Adam, HeadGrads,
    PolicyParams,
};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateHyper {
    pub clip_ratio: f64,
    pub vf_coeff: f64,
    pub entropy_coeff: f64,
    pub epochs: usize,
    /// Episodes per minibatch.
    pub minibatch_size: usize,
    pub max_grad_norm: f64,
    pub target_kl: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub epochs_run: usize,
    /// Set when a non-finite loss forced a rollback.
    pub aborted: bool,
}

/// `min(rho A, clip(rho, 1-eps, 1+eps) A)`.
pub fn clipped_objective(ratio: f64, advantage: f64, clip: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - clip, 1.0 + clip) * advantage)
}

struct Batch {
    grads: PolicyParams,
    policy_loss: f64,
    value_loss: f64,
    entropy: f64,
    kl: f64,
    clipped: usize,
    n: usize,
}

fn minibatch_grads(params: &PolicyParams, buffer: &RolloutBuffer, episodes: &[usize], hyper: &UpdateHyper) -> Batch {
    let n: usize = episodes
        .iter()
        .map(|&e| buffer.episodes[e].transitions.len())
        .sum();
    let inv_n = 1.0 / n.max(1) as f64;
    let mut b = Batch {
        grads: params.zeros_like(),
        policy_loss: 0.0,
        value_loss: 0.0,
        entropy: 0.0,
        kl: 0.0,
        clipped: 0,
        n,
    };
    for &e in episodes {
        let ep = &buffer.episodes[e];
        let state = encode_input(params, ep.input.clone());
        let mut head = HeadGrads::zero();
        for t in &ep.transitions {
            let stats = factor_stats(&state, &ep.action, t.factor, hyper.temperature);
            let log_ratio = stats.log_prob - t.log_prob;
            let ratio = log_ratio.exp();
            let a = t.advantage;
            let surr = clipped_objective(ratio, a, hyper.clip_ratio);
            b.policy_loss -= surr * inv_n;
            b.entropy += stats.entropy * inv_n;
            b.kl += (ratio - 1.0 - log_ratio) * inv_n;
            let active = ratio * a <= ratio.clamp(1.0 - hyper.clip_ratio, 1.0 + hyper.clip_ratio) * a;
            if (ratio - 1.0).abs() > hyper.clip_ratio {
                b.clipped += 1;
            }
            // d loss / d logp: -A rho when the unclipped branch is active
            let w_logp = if active { -a * ratio * inv_n } else { 0.0 };
            add_factor_grad(
                &state,
                &ep.action,
                t.factor,
                hyper.temperature,
                w_logp,
                -hyper.entropy_coeff * inv_n,
                &mut head,
            );
            let err = state.value - t.ret;
            b.value_loss += err * err * inv_n;
            head.value += hyper.vf_coeff * 2.0 * err * inv_n;
        }
        backward(params, &state, &head, &mut b.grads);
    }
    b
}

/// Clipped-surrogate PPO over `epochs` passes of shuffled episode minibatches.
/// Stops early once the epoch's approximate KL exceeds `1.5 * target_kl`. A
/// non-finite loss restores the parameters to their pre-update values.
pub fn ppo_update(
    params: &mut PolicyParams,
    adam: &mut Adam,
    buffer: &RolloutBuffer,
    hyper: &UpdateHyper,
    rng: &mut Rng,
) -> UpdateStats {
    let backup = params.clone();
    let backup_adam = adam.clone();
    let mut order: Vec<usize> = (0..buffer.episodes.len()).collect();
    let mut stats = UpdateStats::default();
    let mut last_epoch = UpdateStats::default();
    for _ in 0..hyper.epochs {
        order.shuffle(rng);
        let mut epoch = UpdateStats::default();
        let mut total = 0usize;
        let mut clipped = 0usize;
        for mb in order.chunks(hyper.minibatch_size.max(1)) {
            let mut b = minibatch_grads(params, buffer, mb, hyper);
            let loss = b.policy_loss + hyper.vf_coeff * b.value_loss - hyper.entropy_coeff * b.entropy;
            if !loss.is_finite() || !b.grads.is_finite() {
                *params = backup;
                *adam = backup_adam;
                return UpdateStats {
                    aborted: true,
                    ..stats
                };
            }
            clip_grad_norm(&mut b.grads, hyper.max_grad_norm);
            adam.step(params, &b.grads);
            let w = b.n as f64;
            epoch.policy_loss += b.policy_loss * w;
            epoch.value_loss += b.value_loss * w;
            epoch.entropy += b.entropy * w;
            epoch.approx_kl += b.kl * w;
            clipped += b.clipped;
            total += b.n;
        }
        let w = total.max(1) as f64;
        last_epoch = UpdateStats {
            policy_loss: epoch.policy_loss / w,
            value_loss: epoch.value_loss / w,
            entropy: epoch.entropy / w,
            approx_kl: epoch.approx_kl / w,
            clip_fraction: clipped as f64 / w,
            epochs_run: stats.epochs_run + 1,
            aborted: false,
        };
        stats = last_epoch;
        if last_epoch.approx_kl > 1.5 * hyper.target_kl {
            break;
        }
    }
    stats.epochs_run = last_epoch.epochs_run;
    stats
}
