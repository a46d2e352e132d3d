//! The frozen task model behind a uniform contract.
//!
//! A backend can predict an answer, refine an answer given a critique, and
//! refine without one. Nothing in the crate trains or mutates a backend: the
//! trait only takes `&self`.

mod llm;
mod prompt;
mod simulator;

pub use llm::{LlmBackend, LlmClient, LlmConfig, LlmRequest, API_KEY_ENV};
pub use prompt::{
    build_predict_prompt, build_refine_prompt, format_words, PromptExemplars, PromptTask,
    RefineExemplar,
};
pub use simulator::{
    simulated_direct_refine, simulated_predict, simulated_refine, Miscomprehension, Simulator,
    SimulatorParams,
};

use crate::rng::Rng;

/// The fixed critique used by Direct-Refinement.
pub const DIRECT_REFINE_CRITIQUE: &str = "Improve the answer.";

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("network failure after {attempts} attempts: {message}")]
    Network { attempts: u32, message: String },
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response body: {0}")]
    Malformed(String),
    #[error("backend does not support {0}")]
    Unsupported(&'static str),
    #[error("backend configuration: {0}")]
    Config(String),
}

pub trait TaskBackend: Send + Sync {
    /// PREDICT: `x -> y_hat`.
    fn predict(&self, x: &[String], rng: &mut Rng) -> Result<Vec<String>, BackendError>;

    /// REFINE: `x, y_hat, critique -> y_new`.
    fn refine(
        &self,
        x: &[String],
        y_hat: &[String],
        critique: &str,
        rng: &mut Rng,
    ) -> Result<Vec<String>, BackendError>;

    /// DIRECTREFINE: refinement under the fixed critique "Improve the answer.".
    fn direct_refine(
        &self,
        x: &[String],
        y_hat: &[String],
        rng: &mut Rng,
    ) -> Result<Vec<String>, BackendError> {
        self.refine(x, y_hat, DIRECT_REFINE_CRITIQUE, rng)
    }

    /// Raw text completion, for prompts built outside the backend.
    fn complete(&self, _prompt: &str, _temperature: f64) -> Result<String, BackendError> {
        Err(BackendError::Unsupported("raw completion"))
    }
}
