use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::alpha_env::{DatasetConfig, SplitName};
use crate::policy::{PolicyConfig, WarmStartConfig};
use crate::ppo::PpoConfig;
use crate::task_model::{LlmConfig, PromptTask, SimulatorParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CritiqueSource {
    Rl4f,
    Supervised,
    Direct,
    Memprompt,
    Gold,
    SelfRefine,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Simulator,
    Llm,
}

/// Which evaluation instances to keep, judged on each seed's initial prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceFilter {
    All,
    /// Initial prediction is wrong.
    Incorrect,
    /// Initial prediction is wrong and one gold critique cannot repair it.
    MultiError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub dir: PathBuf,
    /// Word list, one per line; the bundled lexicon when absent.
    pub lexicon: Option<PathBuf>,
    pub generation: DatasetConfig,
    pub eval_split: SplitName,
    /// Evaluate on at most this many instances of the split.
    pub eval_limit: Option<usize>,
    pub filter: InstanceFilter,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("data"),
            lexicon: None,
            generation: DatasetConfig::default(),
            eval_split: SplitName::Test,
            eval_limit: None,
            filter: InstanceFilter::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSection {
    pub kind: BackendKind,
    pub simulator: SimulatorParams,
    pub llm: LlmConfig,
}

impl Default for BackendSection {
    fn default() -> Self {
        Self {
            kind: BackendKind::Simulator,
            simulator: SimulatorParams::default(),
            llm: LlmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckpointPaths {
    /// Defaults to `{output_dir}/warm_start.json`.
    pub supervised: Option<PathBuf>,
    /// Defaults to `{output_dir}/rl4f.json`.
    pub rl4f: Option<PathBuf>,
    /// JSONL `{key, critique}`; built from the warm-start split when absent.
    pub memory: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stages {
    /// Regenerate the dataset even if `data.dir` already holds one.
    pub generate_data: bool,
    pub warm_start: bool,
    pub rl: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Self {
            generate_data: false,
            warm_start: true,
            rl: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub hidden: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            hidden: vec![16, 64, 256],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: PromptTask,
    /// Master seed for data generation and training.
    pub seed: u64,
    /// Evaluation seeds; each draws its own frozen initial predictions.
    pub seeds: Vec<u64>,
    pub critique_source: CritiqueSource,
    /// Refinement rounds for `iterate`.
    pub rounds: usize,
    pub output_dir: PathBuf,
    pub data: DataSection,
    pub backend: BackendSection,
    pub policy: PolicyConfig,
    pub warm_start: WarmStartConfig,
    pub ppo: PpoConfig,
    pub checkpoints: CheckpointPaths,
    pub stages: Stages,
    pub sweep: SweepSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: PromptTask::Alphabetization,
            seed: 0,
            seeds: vec![0, 1, 2, 3, 4],
            critique_source: CritiqueSource::Rl4f,
            rounds: 5,
            output_dir: PathBuf::from("runs/default"),
            data: DataSection::default(),
            backend: BackendSection::default(),
            policy: PolicyConfig::default(),
            warm_start: WarmStartConfig::default(),
            ppo: PpoConfig::default(),
            checkpoints: CheckpointPaths::default(),
            stages: Stages::default(),
            sweep: SweepSection::default(),
        }
    }
}

/// Parses a `--set` value as a TOML value, falling back to a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()))
}

fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<(), HarnessError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("override `{assignment}` is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(HarnessError::Config(format!("bad override key `{key}`")));
    }
    let mut table = root;
    for part in &path[..path.len() - 1] {
        let next = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = next
            .as_table_mut()
            .ok_or_else(|| HarnessError::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    table.insert(path[path.len() - 1].to_owned(), parse_override_value(raw.trim()));
    Ok(())
}

impl ExperimentConfig {
    /// Parses TOML text, applies `key=value` overrides, and validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, HarnessError> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| HarnessError::Config(format!("config: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Loads a config file (defaults when `path` is `None`).
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, HarnessError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must be non-empty".into());
        }
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.sweep.hidden.iter().any(|h| *h == 0) {
            return bad("sweep widths must be positive".into());
        }
        self.data
            .generation
            .validate()
            .map_err(|e| HarnessError::Config(format!("data.generation: {e}")))?;
        self.backend
            .simulator
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.policy.validate().map_err(HarnessError::Config)?;
        self.ppo.validate().map_err(HarnessError::Config)?;
        if self.warm_start.batch_size == 0 {
            return bad("warm_start.batch_size must be positive".into());
        }
        if let Some(lex) = &self.data.lexicon {
            if !lex.exists() {
                return bad(format!("lexicon {} does not exist", lex.display()));
            }
        }
        Ok(())
    }

    pub fn supervised_path(&self) -> PathBuf {
        self.checkpoints
            .supervised
            .clone()
            .unwrap_or_else(|| self.output_dir.join("warm_start.json"))
    }

    pub fn rl4f_path(&self) -> PathBuf {
        self.checkpoints
            .rl4f
            .clone()
            .unwrap_or_else(|| self.output_dir.join("rl4f.json"))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = ExperimentConfig::from_toml_str("", &[]).unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string(), &[]).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.digest(), c.digest());
    }

    #[test]
    fn overrides_apply_by_dotted_path() {
        let c = ExperimentConfig::from_toml_str(
            "rounds = 2\n[ppo]\nlr = 0.1\n",
            &[
                "ppo.lr=0.001".into(),
                "critique_source=gold".into(),
                "seeds=[7]".into(),
                "backend.simulator.comprehension=1.0".into(),
                "output_dir=out/x".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.ppo.lr, 0.001);
        assert_eq!(c.rounds, 2);
        assert_eq!(c.critique_source, CritiqueSource::Gold);
        assert_eq!(c.seeds, vec![7]);
        assert_eq!(c.backend.simulator.comprehension, 1.0);
        assert_eq!(c.output_dir, PathBuf::from("out/x"));
        assert_ne!(c.digest(), ExperimentConfig::default().digest());
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        for (text, ov) in [
            ("seeds = []", vec![]),
            ("bogus_key = 1", vec![]),
            ("", vec!["rounds=0".to_string()]),
            ("", vec!["noequals".to_string()]),
            ("", vec!["critique_source=psychic".to_string()]),
            ("", vec!["ppo.gamma=2.0".to_string()]),
            ("", vec!["rounds.x=1".to_string()]),
        ] {
            let err = ExperimentConfig::from_toml_str(text, &ov).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text} {ov:?}: {err}");
        }
    }
}
