use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha_env::{render_critique, TaskInstance};
use crate::metrics::{inverse_levenshtein_reward, mean_rouge_reward};
use crate::policy::{
    action_distribution, action_to_critique, encode_input, factor_stats, CritiqueAction, Factor,
    PolicyParams, StateInput,
};
use crate::rng::{label, stream};
use crate::task_model::TaskBackend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    /// `1 - lev / max_len` over words (list tasks).
    #[default]
    InverseLevenshtein,
    /// Mean of ROUGE-1/2/L F1 (free-text tasks).
    MeanRouge,
}

impl RewardKind {
    pub fn score(self, hypothesis: &[String], reference: &[String]) -> f64 {
        match self {
            RewardKind::InverseLevenshtein => inverse_levenshtein_reward(hypothesis, reference),
            RewardKind::MeanRouge => mean_rouge_reward(hypothesis, &[reference]).unwrap_or(0.0),
        }
    }
}

/// One factor of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub factor: Factor,
    /// Behavior-policy log-probability of the chosen index.
    pub log_prob: f64,
    pub ref_log_prob: f64,
    pub value: f64,
    /// Task reward; nonzero only on the terminal factor.
    pub reward: f64,
    pub done: bool,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub index: usize,
    pub input: StateInput,
    pub action: CritiqueAction,
    pub critique: String,
    pub y: Vec<String>,
    pub y_new: Vec<String>,
    pub task_reward: f64,
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutBuffer {
    /// Contiguous episodes in index order.
    pub episodes: Vec<Episode>,
    pub backend_errors: usize,
}

impl RolloutBuffer {
    pub fn num_transitions(&self) -> usize {
        self.episodes.iter().map(|e| e.transitions.len()).sum()
    }

    pub fn mean_task_reward(&self) -> f64 {
        if self.episodes.is_empty() {
            return 0.0;
        }
        self.episodes.iter().map(|e| e.task_reward).sum::<f64>() / self.episodes.len() as f64
    }
}

/// Where episodes come from: instances, and optionally a frozen initial
/// prediction per instance instead of a fresh backend PREDICT.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeSource<'a> {
    pub instances: &'a [TaskInstance],
    pub frozen_y_hat: Option<&'a [Vec<String>]>,
}

/// Runs `episodes` episodes in parallel. Episode `i` of round `round` uses
/// the stream `(seed, ROLLOUT, round, i)`, so the buffer is independent of
/// thread scheduling.
#[allow(clippy::too_many_arguments)]
pub fn collect_rollouts(
    policy: &PolicyParams,
    reference: &PolicyParams,
    source: EpisodeSource<'_>,
    backend: &dyn TaskBackend,
    episodes: usize,
    temperature: f64,
    reward: RewardKind,
    seed: u64,
    round: u64,
) -> RolloutBuffer {
    assert!(!source.instances.is_empty(), "no instances to roll out on");
    let results: Vec<Option<Episode>> = (0..episodes)
        .into_par_iter()
        .map(|i| {
            use rand::Rng as _;
            let mut rng = stream(seed, &[label::ROLLOUT, round, i as u64]);
            let k = rng.random_range(0..source.instances.len());
            let inst = &source.instances[k];
            let y_hat = match source.frozen_y_hat {
                Some(frozen) => frozen[k].clone(),
                None => backend.predict(&inst.x, &mut rng).ok()?,
            };
            let input = policy.featurize(&inst.x, &y_hat);
            let state = encode_input(policy, input.clone());
            let (action, _) = action_distribution(&state, temperature).sample(&mut rng);
            let ref_state = encode_input(reference, input.clone());
            let critique = render_critique(&action_to_critique(&action, &inst.x, &y_hat));
            let y_new = backend.refine(&inst.x, &y_hat, &critique, &mut rng).ok()?;
            let task_reward = reward.score(&y_new, &inst.y);

            let factors = action.factors();
            let last = factors.len() - 1;
            let transitions = factors
                .into_iter()
                .enumerate()
                .map(|(t, f)| Transition {
                    factor: f,
                    log_prob: factor_stats(&state, &action, f, temperature).log_prob,
                    ref_log_prob: factor_stats(&ref_state, &action, f, temperature).log_prob,
                    value: state.value,
                    reward: if t == last { task_reward } else { 0.0 },
                    done: t == last,
                    advantage: 0.0,
                    ret: 0.0,
                })
                .collect();
            Some(Episode {
                index: i,
                input,
                action,
                critique,
                y: inst.y.clone(),
                y_new,
                task_reward,
                transitions,
            })
        })
        .collect();
    let backend_errors = results.iter().filter(|r| r.is_none()).count();
    RolloutBuffer {
        episodes: results.into_iter().flatten().collect(),
        backend_errors,
    }
}
