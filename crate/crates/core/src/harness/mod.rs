//! Experiment orchestration: configs, evaluation, iterative refinement,
//! the warm-start → PPO pipeline and the width sweep.

mod config;
mod eval;
mod pipeline;
mod report;

pub use config::{
    BackendKind, BackendSection, CheckpointPaths, CritiqueSource, DataSection, ExperimentConfig,
    InstanceFilter, Stages, SweepSection,
};
pub use eval::{initial_predictions, iterate_refine, load_eval_instances, run_eval, Critic};
pub use pipeline::{
    dev_instances, ensure_dataset, generate_data, run_ppo, run_sweep, run_warm_start,
    train_pipeline, PipelineArtifacts, SweepReport, SweepRow,
};
pub use report::{mean_std, render_table, write_report, EvalReport, MeanStd, RoundSummary, SeedRow};

use std::sync::Arc;

use crate::alpha_env::{load_lexicon, EnvError, Lexicon};
use crate::policy::CheckpointError;
use crate::task_model::{BackendError, LlmBackend, LlmClient, PromptExemplars, Simulator, TaskBackend};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("backend error: {0}")]
    Backend(#[from] BackendError),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<HarnessError>,
    },
}

impl HarnessError {
    /// Process exit code: 2 config, 3 data, 4 backend.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Data(_) => 3,
            HarnessError::Backend(_) => 4,
            HarnessError::Stage { source, .. } => source.exit_code(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        HarnessError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

impl From<EnvError> for HarnessError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::Config(m) => HarnessError::Config(m),
            other => HarnessError::Data(other.to_string()),
        }
    }
}

impl From<CheckpointError> for HarnessError {
    fn from(e: CheckpointError) -> Self {
        HarnessError::Data(e.to_string())
    }
}

pub(crate) fn io_error(path: &std::path::Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Data(format!("{}: {e}", path.display()))
}

pub fn load_configured_lexicon(config: &ExperimentConfig) -> Result<Lexicon, HarnessError> {
    match &config.data.lexicon {
        None => Ok(Lexicon::bundled()),
        Some(p) => {
            let f = std::fs::File::open(p).map_err(|e| io_error(p, e))?;
            Ok(load_lexicon(std::io::BufReader::new(f))?)
        }
    }
}

/// The configured task model.
pub fn build_backend(config: &ExperimentConfig) -> Result<Arc<dyn TaskBackend>, HarnessError> {
    Ok(match config.backend.kind {
        BackendKind::Simulator => Arc::new(Simulator::new(
            config.backend.simulator.clone(),
            Arc::new(load_configured_lexicon(config)?),
        )?),
        BackendKind::Llm => Arc::new(LlmBackend::new(
            LlmClient::from_env(config.backend.llm.clone())?,
            PromptExemplars::alphabetization_default(),
            config.task,
        )),
    })
}
