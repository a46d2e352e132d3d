use rayon::prelude::*;

use super::config::{CritiqueSource, ExperimentConfig, InstanceFilter};
use super::report::{aggregate, round_summaries, EvalReport, SeedRow};
use super::{build_backend, HarnessError};
use crate::alpha_env::{
    apply_corrective_edit, oracle_critique, parse_critique, read_jsonl, render_critique,
    DatasetRecord, TaskInstance,
};
use crate::baselines::{gold_feedback, memprompt_retrieve, self_refine_critique, CritiqueMemory};
use crate::metrics::{exact_match, inverse_levenshtein_reward, mean_rouge_reward};
use crate::policy::{action_distribution, action_to_critique, encode, load_checkpoint, PolicyParams};
use crate::rng::{label, stream, Rng};
use crate::task_model::{BackendError, TaskBackend, DIRECT_REFINE_CRITIQUE};

/// A ready-to-query critique source.
#[derive(Debug, Clone)]
pub enum Critic {
    Policy(Box<PolicyParams>),
    Direct,
    Memory(CritiqueMemory),
    Gold,
    SelfRefine,
    None,
}

impl Critic {
    /// Critique text for one `(x, y_hat)`; `y` is only read by the oracle.
    pub fn critique(
        &self,
        backend: &dyn TaskBackend,
        x: &[String],
        y_hat: &[String],
        y: &[String],
    ) -> Result<String, BackendError> {
        Ok(match self {
            Critic::Policy(params) => {
                let state = encode(x, y_hat, params);
                let action = action_distribution(&state, crate::policy::TRAIN_TEMPERATURE).greedy();
                render_critique(&action_to_critique(&action, x, y_hat))
            }
            Critic::Direct => DIRECT_REFINE_CRITIQUE.to_owned(),
            Critic::Memory(m) => memprompt_retrieve(m, x, y_hat, 1),
            Critic::Gold => gold_feedback(x, y_hat, y),
            Critic::SelfRefine => self_refine_critique(backend, y_hat)?,
            Critic::None => String::new(),
        })
    }

    fn is_structured(&self) -> bool {
        !matches!(self, Critic::Direct | Critic::None)
    }

    pub fn load(config: &ExperimentConfig, source: CritiqueSource) -> Result<Self, HarnessError> {
        Ok(match source {
            CritiqueSource::Rl4f => Critic::Policy(Box::new(load_checkpoint(&config.rl4f_path())?.params)),
            CritiqueSource::Supervised => {
                Critic::Policy(Box::new(load_checkpoint(&config.supervised_path())?.params))
            }
            CritiqueSource::Direct => Critic::Direct,
            CritiqueSource::Memprompt => Critic::Memory(match &config.checkpoints.memory {
                Some(p) => CritiqueMemory::load(p)?,
                None => {
                    let path = config.data.dir.join(crate::alpha_env::SplitName::WarmStart.file_name());
                    let records: Vec<DatasetRecord> = read_jsonl(&path)?;
                    CritiqueMemory::from_records(&records)
                }
            }),
            CritiqueSource::Gold => Critic::Gold,
            CritiqueSource::SelfRefine => Critic::SelfRefine,
            CritiqueSource::None => Critic::None,
        })
    }
}

/// The configured evaluation split, truncated to `eval_limit`.
pub fn load_eval_instances(config: &ExperimentConfig) -> Result<Vec<TaskInstance>, HarnessError> {
    let path = config.data.dir.join(config.data.eval_split.file_name());
    if !path.exists() {
        return Err(HarnessError::Data(format!(
            "{} not found; run gen-data first",
            path.display()
        )));
    }
    let records: Vec<DatasetRecord> = read_jsonl(&path)?;
    let limit = config.data.eval_limit.unwrap_or(records.len());
    Ok(records.iter().take(limit).map(DatasetRecord::instance).collect())
}

/// Frozen PREDICT outputs for one seed: instance `i` draws from
/// `(seed, PREDICT, i)`, independent of the critique source.
pub fn initial_predictions(
    backend: &dyn TaskBackend,
    instances: &[TaskInstance],
    seed: u64,
) -> Vec<Result<Vec<String>, BackendError>> {
    instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| backend.predict(&inst.x, &mut stream(seed, &[label::PREDICT, i as u64])))
        .collect()
}

fn keep(filter: InstanceFilter, inst: &TaskInstance, y_hat: &[String]) -> bool {
    match filter {
        InstanceFilter::All => true,
        InstanceFilter::Incorrect => y_hat != inst.y,
        InstanceFilter::MultiError => {
            y_hat != inst.y
                && apply_corrective_edit(y_hat, &inst.x, &oracle_critique(&inst.x, y_hat, &inst.y)) != inst.y
        }
    }
}

struct Step {
    y: Vec<String>,
    error: bool,
    unparsed: bool,
}

fn refine_step(
    critic: &Critic,
    backend: &dyn TaskBackend,
    inst: &TaskInstance,
    y_hat: &[String],
    rng: &mut Rng,
) -> Step {
    let critique = match critic.critique(backend, &inst.x, y_hat, &inst.y) {
        Ok(c) => c,
        Err(_) => {
            return Step {
                y: y_hat.to_vec(),
                error: true,
                unparsed: false,
            }
        }
    };
    let unparsed = critic.is_structured() && parse_critique(&critique).is_err();
    match backend.refine(&inst.x, y_hat, &critique, rng) {
        Ok(y) => Step {
            y,
            error: false,
            unparsed,
        },
        Err(_) => Step {
            y: y_hat.to_vec(),
            error: true,
            unparsed,
        },
    }
}

fn eval_seed(
    config: &ExperimentConfig,
    critic: &Critic,
    backend: &dyn TaskBackend,
    all: &[TaskInstance],
    seed: u64,
    rounds: usize,
) -> SeedRow {
    let mut backend_errors = 0;
    let mut parse_failures = 0;
    let mut insts = Vec::new();
    let mut current = Vec::new();
    for (i, (inst, pred)) in all.iter().zip(initial_predictions(backend, all, seed)).enumerate() {
        let y_hat = match pred {
            Ok(p) => p,
            Err(_) => {
                backend_errors += 1;
                Vec::new()
            }
        };
        if keep(config.data.filter, inst, &y_hat) {
            insts.push((i, inst));
            current.push(y_hat);
        }
    }
    let solved = |cur: &[Vec<String>]| insts.iter().zip(cur).filter(|((_, inst), y)| **y == inst.y).count();
    let mut solved_per_round = vec![solved(&current)];
    for r in 1..=rounds {
        let steps: Vec<Step> = insts
            .par_iter()
            .zip(&current)
            .map(|((i, inst), y_hat)| {
                let mut rng = stream(seed, &[label::REFINE, r as u64, *i as u64]);
                refine_step(critic, backend, inst, y_hat, &mut rng)
            })
            .collect();
        for (cur, step) in current.iter_mut().zip(steps) {
            backend_errors += usize::from(step.error);
            parse_failures += usize::from(step.unparsed);
            *cur = step.y;
        }
        solved_per_round.push(solved(&current));
    }

    let n = insts.len().max(1) as f64;
    let sum = |f: &dyn Fn(&[String], &[String]) -> f64| {
        insts
            .iter()
            .zip(&current)
            .map(|((_, inst), y)| f(y, &inst.y))
            .sum::<f64>()
            / n
    };
    SeedRow {
        seed,
        instances: insts.len(),
        exact_match: sum(&|a, b| f64::from(u8::from(exact_match(a, b)))),
        inverse_levenshtein: sum(&|a, b| inverse_levenshtein_reward(a, b)),
        mean_rouge: sum(&|a, b| mean_rouge_reward(a, &[b]).unwrap_or(0.0)),
        backend_errors,
        parse_failures,
        solved_per_round,
    }
}

fn evaluate(config: &ExperimentConfig, rounds: usize, with_series: bool) -> Result<EvalReport, HarnessError> {
    let backend = build_backend(config)?;
    let instances = load_eval_instances(config)?;
    let critic = Critic::load(config, config.critique_source)?;
    let rounds = if matches!(critic, Critic::None) { 0 } else { rounds };
    let per_seed: Vec<SeedRow> = config
        .seeds
        .par_iter()
        .map(|&seed| eval_seed(config, &critic, backend.as_ref(), &instances, seed, rounds))
        .collect();
    let source = serde_json::to_value(config.critique_source)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    Ok(EvalReport {
        config_digest: config.digest(),
        critique_source: source,
        seeds: config.seeds.clone(),
        aggregate: aggregate(&per_seed),
        rounds: with_series.then(|| round_summaries(&per_seed)),
        per_seed,
    })
}

/// One critique → refine round per instance, for every seed.
pub fn run_eval(config: &ExperimentConfig) -> Result<EvalReport, HarnessError> {
    evaluate(config, 1, false)
}

/// `config.rounds` chained rounds on the evolving output; solved instances
/// stay in the pool.
pub fn iterate_refine(config: &ExperimentConfig) -> Result<EvalReport, HarnessError> {
    evaluate(config, config.rounds, true)
}
