//! Command line configuration: the evaluation run configuration plus a
//! `[synth]` section for the generator.

use std::path::Path;

use chapterfn_core::synth::SynthConfig;
use chapterfn_core::{Error, Result};
use chapterfn_eval::RunConfig;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CliConfig {
    pub run: RunConfig,
    pub synth: SynthConfig,
}

impl CliConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let synth = match table.remove("synth") {
            Some(v) => v.try_into::<SynthConfig>().map_err(|e| Error::Config(format!("[synth]: {e}")))?,
            None => SynthConfig::default(),
        };
        synth.validate()?;
        let rest = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
        Ok(CliConfig { run: RunConfig::from_toml_str(&rest)?, synth })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// `--seed` replaces every seed, the generator's included.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.run = self.run.with_seed(seed);
        self.synth.seed = seed;
        self
    }

    pub fn seed(&self) -> u64 {
        self.run.seed
    }

    pub fn digest(&self) -> String {
        chapterfn_core::digest::digest_json(&(&self.run, &self.synth))
    }
}
