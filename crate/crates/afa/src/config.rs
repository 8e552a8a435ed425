//! Run configuration: one JSON document that carries every module's
//! settings, with defaults for anything left out and rejection of anything
//! unrecognized. Commands echo the fully-defaulted ("effective") form into
//! their output directory so a run can always be reproduced from its own
//! artifacts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::classifier::ClassifierConfig;
use crate::env::RewardSpec;
use crate::error::{Error, Result};
use crate::synth::GeneratorSpec;

/// Where study data lives and how to split it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// JSON-lines dataset path; commands that need data require it here or
    /// via `--data`.
    pub path: Option<PathBuf>,
    /// Slots per study; every loaded study must match.
    pub n_slots: usize,
    pub val_frac: f64,
    pub test_frac: f64,
    /// Seed for the shuffle that produces the train/val/test split. When
    /// unset the run seed is used; pin it to keep one split across stages
    /// that train with different seeds.
    pub split_seed: Option<u64>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            path: None,
            n_slots: 4,
            val_frac: 0.15,
            test_frac: 0.15,
            split_seed: None,
        }
    }
}

impl DataConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_slots == 0 {
            return Err(Error::InvalidConfig("n_slots must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.val_frac)
            || !(0.0..1.0).contains(&self.test_frac)
            || self.val_frac + self.test_frac >= 1.0
        {
            return Err(Error::InvalidConfig(format!(
                "split fractions val={} test={} must be in [0, 1) and sum below 1",
                self.val_frac, self.test_frac
            )));
        }
        Ok(())
    }
}

/// Settings for evaluation sweeps and the random-mask baseline curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Cost-weight grid for sweeps, any order; reported sorted ascending.
    pub lambdas: Vec<f64>,
    /// One agent is trained per (lambda, seed) pair.
    pub seeds: Vec<u64>,
    /// Seeds for the matched-budget random-mask baseline.
    pub baseline_seeds: Vec<u64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            lambdas: vec![0.001, 0.01, 0.1, 0.2, 0.25],
            seeds: vec![1, 2, 3],
            baseline_seeds: vec![11, 12, 13],
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::InvalidConfig("eval.lambdas must be nonempty".into()));
        }
        for &l in &self.lambdas {
            if !l.is_finite() || l < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "eval lambda {l} must be finite and non-negative"
                )));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("eval.seeds must be nonempty".into()));
        }
        if self.baseline_seeds.is_empty() {
            return Err(Error::InvalidConfig(
                "eval.baseline_seeds must be nonempty".into(),
            ));
        }
        Ok(())
    }
}

/// The whole run's settings. Every section and field is optional in the
/// JSON; omitted parts take the module defaults, unknown keys are errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub generator: GeneratorSpec,
    pub classifier: ClassifierConfig,
    pub agent: AgentConfig,
    pub reward: RewardSpec,
    pub eval: EvalConfig,
    /// Master seed for training, splitting, and rollouts.
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataConfig::default(),
            generator: GeneratorSpec::default(),
            classifier: ClassifierConfig::default(),
            agent: AgentConfig::default(),
            reward: RewardSpec::default(),
            eval: EvalConfig::default(),
            seed: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Name of the effective-config echo written into every output directory.
pub const EFFECTIVE_CONFIG_FILE: &str = "effective_config.json";

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        self.generator.validate()?;
        self.classifier.validate()?;
        self.agent.validate()?;
        self.reward.validate()?;
        self.eval.validate()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        RunConfig::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    /// Write the fully-defaulted config into `dir` for provenance; loading
    /// the echoed file reproduces this exact configuration.
    pub fn echo(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let path = dir.join(EFFECTIVE_CONFIG_FILE);
        std::fs::write(&path, self.to_json_pretty())
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(path)
    }
}

/// Serialize any value as pretty JSON with a trailing newline.
pub fn write_json_pretty<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}
