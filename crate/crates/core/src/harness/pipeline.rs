use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::{build_backend, io_error, load_configured_lexicon, HarnessError};
use crate::alpha_env::{generate_dataset, record_is_valid, DatasetRecord, DatasetSplits, SplitName};
use crate::policy::{load_checkpoint, save_checkpoint, train_warm_start, PolicyConfig, PolicyParams};
use crate::ppo::{train_rl4f, write_curve_csv, DevInstance, TrainError, TrainOutcome};
use crate::rng::{label, stream};
use crate::task_model::TaskBackend;

impl From<TrainError> for HarnessError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(m) => HarnessError::Config(m),
            TrainError::Backend(b) => HarnessError::Backend(b),
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(path, text + "\n").map_err(|e| io_error(path, e))
}

/// Generates all splits from `config.seed` and writes them to `data.dir`.
pub fn generate_data(config: &ExperimentConfig, log: &mut dyn FnMut(&str)) -> Result<DatasetSplits, HarnessError> {
    let lexicon = load_configured_lexicon(config)?;
    let splits = generate_dataset(&config.data.generation, &lexicon, config.seed)?;
    splits.write_dir(&config.data.dir)?;
    log(&format!(
        "wrote {} / {} / {} / {} records to {}",
        splits.warm_start.len(),
        splits.train.len(),
        splits.dev.len(),
        splits.test.len(),
        config.data.dir.display()
    ));
    Ok(splits)
}

/// Reads the dataset from `data.dir`, generating it first when asked to or
/// when any split file is missing. Every record is checked on load.
pub fn ensure_dataset(config: &ExperimentConfig, log: &mut dyn FnMut(&str)) -> Result<DatasetSplits, HarnessError> {
    let missing = SplitName::ALL
        .iter()
        .any(|s| !config.data.dir.join(s.file_name()).exists());
    if config.stages.generate_data || missing {
        return generate_data(config, log);
    }
    let splits = DatasetSplits::read_dir(&config.data.dir)?;
    for name in SplitName::ALL {
        if let Some(i) = splits.split(name).iter().position(|r| !record_is_valid(r)) {
            return Err(HarnessError::Data(format!(
                "{}: record {} has an unparseable critique or unsorted y",
                config.data.dir.join(name.file_name()).display(),
                i + 1
            )));
        }
    }
    Ok(splits)
}

/// Supervised warm start on the warm-start split; saves the checkpoint and a
/// JSON training report next to it.
pub fn run_warm_start(
    config: &ExperimentConfig,
    policy: PolicyConfig,
    data: &DatasetSplits,
    checkpoint: &Path,
    log: &mut dyn FnMut(&str),
) -> Result<PolicyParams, HarnessError> {
    let (params, report) = train_warm_start(policy, &config.warm_start, &data.warm_start, &data.dev, |e, loss| {
        log(&format!("warm start epoch {e}: mean nll {loss:.4}"))
    });
    if let Some(dev) = &report.dev {
        log(&format!(
            "warm start dev: template {:.3}, full critique {:.3}",
            dev.template, dev.full
        ));
    }
    if let Some(dir) = checkpoint.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    save_checkpoint(checkpoint, &params, config.warm_start.seed)?;
    write_json(&checkpoint.with_extension("report.json"), &report)?;
    log(&format!("saved {}", checkpoint.display()));
    Ok(params)
}

/// Dev instances with frozen initial predictions drawn from
/// `(seed, DEV, PREDICT, i)`.
pub fn dev_instances(
    backend: &dyn TaskBackend,
    records: &[DatasetRecord],
    seed: u64,
) -> Result<Vec<DevInstance>, HarnessError> {
    records
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let mut rng = stream(seed, &[label::DEV, label::PREDICT, i as u64]);
            Ok(DevInstance {
                x: r.x.clone(),
                y: r.y.clone(),
                y_hat: backend.predict(&r.x, &mut rng)?,
            })
        })
        .collect()
}

/// PPO from `warm`; saves the best-dev parameters to `checkpoint` and the
/// learning curve to `curve`.
pub fn run_ppo(
    config: &ExperimentConfig,
    warm: &PolicyParams,
    data: &DatasetSplits,
    backend: &dyn TaskBackend,
    checkpoint: &Path,
    curve: &Path,
    log: &mut dyn FnMut(&str),
) -> Result<TrainOutcome, HarnessError> {
    let train: Vec<_> = data.train.iter().map(DatasetRecord::instance).collect();
    let dev = dev_instances(backend, &data.dev, config.seed)?;
    let out = train_rl4f(&config.ppo, warm, backend, &train, &dev, |r| {
        log(&format!(
            "update {:4} steps {:6} reward {} dev em {:.3} dev reward {:.4} kl {} beta {:.2e}",
            r.update_index,
            r.env_steps,
            r.mean_reward.map_or("-".into(), |v| format!("{v:.3}")),
            r.dev_exact_match,
            r.dev_reward,
            r.mean_kl.map_or("-".into(), |v| format!("{v:.3}")),
            r.beta
        ))
    })?;
    if out.rollout_errors > 0 || out.aborted_updates > 0 {
        log(&format!(
            "{} rollout backend errors, {} aborted updates",
            out.rollout_errors, out.aborted_updates
        ));
    }
    if let Some(dir) = checkpoint.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    save_checkpoint(checkpoint, &out.best, config.ppo.seed)?;
    if let Some(dir) = curve.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    write_curve_csv(curve, &out.curve).map_err(|e| io_error(curve, e))?;
    log(&format!(
        "saved {} (best update {}) and {}",
        checkpoint.display(),
        out.best_update,
        curve.display()
    ));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineArtifacts {
    pub supervised: PathBuf,
    pub rl4f: Option<PathBuf>,
    pub curve: Option<PathBuf>,
}

/// dataset → warm start → PPO, honouring the stage flags. A skipped warm
/// start loads the existing supervised checkpoint instead.
pub fn train_pipeline(
    config: &ExperimentConfig,
    log: &mut dyn FnMut(&str),
) -> Result<PipelineArtifacts, HarnessError> {
    let data = ensure_dataset(config, log).map_err(|e| e.in_stage("dataset"))?;
    let supervised = config.supervised_path();
    let warm = if config.stages.warm_start {
        run_warm_start(config, config.policy, &data, &supervised, log).map_err(|e| e.in_stage("warm_start"))?
    } else {
        load_checkpoint(&supervised)
            .map_err(|e| HarnessError::from(e).in_stage("warm_start"))?
            .params
    };
    if !config.stages.rl {
        return Ok(PipelineArtifacts {
            supervised,
            rl4f: None,
            curve: None,
        });
    }
    let backend = build_backend(config).map_err(|e| e.in_stage("rl"))?;
    let rl4f = config.rl4f_path();
    let curve = config.output_dir.join("curve.csv");
    run_ppo(config, &warm, &data, backend.as_ref(), &rl4f, &curve, log).map_err(|e| e.in_stage("rl"))?;
    Ok(PipelineArtifacts {
        supervised,
        rl4f: Some(rl4f),
        curve: Some(curve),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub hidden: usize,
    pub parameters: usize,
    pub warm_start_dev_reward: f64,
    pub best_dev_reward: f64,
    pub best_dev_exact_match: f64,
    pub best_update: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config_digest: String,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>7} {:>10} {:>14} {:>14} {:>12} {:>6}",
            "hidden", "params", "warm dev r", "best dev r", "best dev em", "update"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>7} {:>10} {:>14.4} {:>14.4} {:>12.4} {:>6}",
                r.hidden, r.parameters, r.warm_start_dev_reward, r.best_dev_reward, r.best_dev_exact_match, r.best_update
            );
        }
        s
    }
}

/// Warm start + PPO for each hidden width in `sweep.hidden`; artifacts go to
/// `{output_dir}/sweep/h{width}/`, the summary to `{output_dir}/sweep.{json,txt}`.
pub fn run_sweep(config: &ExperimentConfig, log: &mut dyn FnMut(&str)) -> Result<SweepReport, HarnessError> {
    let data = ensure_dataset(config, log).map_err(|e| e.in_stage("dataset"))?;
    let backend = build_backend(config)?;
    let mut rows = Vec::new();
    for &hidden in &config.sweep.hidden {
        log(&format!("width {hidden}"));
        let dir = config.output_dir.join("sweep").join(format!("h{hidden}"));
        let policy = PolicyConfig {
            hidden,
            ..config.policy
        };
        policy.validate().map_err(HarnessError::Config)?;
        let warm = run_warm_start(config, policy, &data, &dir.join("warm_start.json"), log)
            .map_err(|e| e.in_stage("warm_start"))?;
        let out = run_ppo(
            config,
            &warm,
            &data,
            backend.as_ref(),
            &dir.join("rl4f.json"),
            &dir.join("curve.csv"),
            log,
        )
        .map_err(|e| e.in_stage("rl"))?;
        let best = &out.curve[out.best_update];
        rows.push(SweepRow {
            hidden,
            parameters: warm.num_parameters(),
            warm_start_dev_reward: out.curve[0].dev_reward,
            best_dev_reward: best.dev_reward,
            best_dev_exact_match: best.dev_exact_match,
            best_update: out.best_update,
        });
    }
    let report = SweepReport {
        config_digest: config.digest(),
        rows,
    };
    write_json(&config.output_dir.join("sweep.json"), &report)?;
    let txt = config.output_dir.join("sweep.txt");
    std::fs::write(&txt, report.render()).map_err(|e| io_error(&txt, e))?;
    Ok(report)
}
