//! Reinforcement learning for natural-language critiques.
//!
//! A small critique policy reads a word list `x` and a frozen task model's
//! attempt `y_hat` at sorting it, and writes a one-sentence critique. The task
//! model then revises its answer given that critique. The policy is
//! warm-started by maximum likelihood on synthetic critiques and then trained
//! with KL-regularized PPO to maximize the quality of the revised answer.
//!
//! Modules, bottom-up:
//!
//! - [`metrics`]: ROUGE, word-level Levenshtein, and the two task rewards.
//! - [`alpha_env`]: the alphabetization task, distortions, critiques, datasets.
//! - [`task_model`]: the frozen task model (seeded simulator or HTTP LLM).
//! - [`policy`]: the critique policy, its gradients, and warm-start training.
//! - [`ppo`]: rollouts, KL shaping, GAE, and the clipped PPO update.
//! - [`baselines`]: Direct-Refinement, BM25 MemPrompt, gold feedback, Self-Refine.
//! - [`harness`]: configs, evaluation, iterative refinement, training pipeline.

pub mod alpha_env;
pub mod baselines;
pub mod harness;
pub mod metrics;
pub mod policy;
pub mod ppo;
pub mod rng;
pub mod task_model;
