//! Run configuration: every simulation parameter is a first-class key in a
//! plain TOML file with one section per subsystem. Unknown keys are
//! rejected with the list of valid ones; every field has a default so an
//! empty file is a valid config.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arena::WorldConfig;
use crate::connectivity::ConnectivityParams;
use crate::controllers::{ControllerKind, ControllerParams};
use crate::error::{Error, Result};
use crate::neat::NeatParams;
use crate::odneat::OdNeatParams;

/// Fully resolved configuration for one simulation run.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub arena: WorldConfig,
    pub connectivity: ConnectivityParams,
    pub neat: NeatParams,
    pub odneat: OdNeatParams,
    pub controller: ControllerParams,
}

impl SimConfig {
    /// Parse a TOML config string, filling unset keys with defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn controller_kind(&self) -> ControllerKind {
        self.controller.kind
    }

    /// Check cross-field invariants that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        self.arena.validate()?;
        self.connectivity.validate()?;
        self.neat.validate()?;
        self.odneat.validate()?;
        self.controller.validate()?;
        Ok(())
    }
}
