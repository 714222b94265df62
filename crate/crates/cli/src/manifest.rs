use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Command, Experiment};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
}

/// Everything needed to regenerate a run's artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config_sha256: String,
    /// Resolved config (after command-line overrides) as TOML.
    pub config: String,
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn new(exp: &Experiment, artifacts: &[(String, Vec<u8>)]) -> Result<Self, CliError> {
        let config = exp.to_toml()?;
        Ok(Manifest {
            command: exp.command().name().to_string(),
            version: pilattice::VERSION.to_string(),
            seed: exp.seed(),
            config_sha256: sha256_hex(config.as_bytes()),
            config,
            artifacts: artifacts
                .iter()
                .map(|(file, bytes)| ArtifactEntry {
                    file: file.clone(),
                    sha256: sha256_hex(bytes),
                })
                .collect(),
        })
    }

    pub fn experiment(&self) -> Result<Experiment, CliError> {
        let command = Command::from_name(&self.command)
            .ok_or_else(|| CliError::Config(format!("unknown command '{}' in manifest", self.command)))?;
        if sha256_hex(self.config.as_bytes()) != self.config_sha256 {
            return Err(CliError::Config("manifest config does not match its hash".into()));
        }
        Experiment::parse(command, &self.config)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
