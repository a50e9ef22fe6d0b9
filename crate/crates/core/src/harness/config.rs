use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::problems::{Problem, ProblemSpec};
use crate::rng;
use crate::solvers::SolverConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    #[default]
    Csv,
    Json,
    Both,
}

impl Emit {
    pub fn csv(self) -> bool {
        matches!(self, Emit::Csv | Emit::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Emit::Json | Emit::Both)
    }
}

/// One experiment: a problem, the solvers to run on it, and where to write.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub solvers: Vec<SolverConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub emit: Emit,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("cannot parse config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::Config("solver list is empty".into()));
        }
        let mut labels: Vec<String> = self.solvers.iter().map(|s| s.label()).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("solver labels must be unique; set `name` to disambiguate".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form (seed included).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Builds the problem from stream 0 of the seed; config errors map to [`Error::Config`].
    pub fn build_problem(&self) -> Result<Problem> {
        let mut r = rng::stream(self.seed, 0);
        self.problem.build(&mut r).map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(format!("problem construction failed: {other}")),
        })
    }
}
