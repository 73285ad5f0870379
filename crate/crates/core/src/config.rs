use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adcl::DEFAULT_POOL_CAPACITY;
use crate::error::{Error, Result};
use crate::fusion::DEFAULT_CONFIDENCE_FLOOR;
use crate::opll::{BranchParams, ThresholdParams};

pub const DEFAULT_SEMANTIC: ThresholdParams = ThresholdParams::new(0.5, 0.8);
pub const DEFAULT_INSTANCE: ThresholdParams = ThresholdParams::new(0.5, 0.3);
pub const DEFAULT_AMODAL: ThresholdParams = ThresholdParams::new(0.3, 0.5);
pub const DEFAULT_STRICT: ThresholdParams = ThresholdParams::new(0.95, 0.1);
pub const DEFAULT_MIX_COUNT: usize = 10;

/// Every tunable of the pipeline. Missing keys take the defaults; unknown
/// keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub semantic: ThresholdParams,
    pub instance: ThresholdParams,
    pub amodal: ThresholdParams,
    /// Thresholds for pool admission, applied to the amodal branch.
    pub strict: ThresholdParams,
    /// Pool objects pasted per mixed sample.
    pub r: usize,
    pub pool_capacity: usize,
    pub confidence_floor: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            semantic: DEFAULT_SEMANTIC,
            instance: DEFAULT_INSTANCE,
            amodal: DEFAULT_AMODAL,
            strict: DEFAULT_STRICT,
            r: DEFAULT_MIX_COUNT,
            pool_capacity: DEFAULT_POOL_CAPACITY,
            confidence_floor: DEFAULT_CONFIDENCE_FLOOR,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("semantic", self.semantic),
            ("instance", self.instance),
            ("amodal", self.amodal),
            ("strict", self.strict),
        ] {
            p.validate().map_err(|e| match e {
                Error::ConfigInvalid(msg) => Error::ConfigInvalid(format!("{name}: {msg}")),
                other => other,
            })?;
        }
        if !(0.0..=1.0).contains(&self.confidence_floor) {
            return Err(Error::ConfigInvalid(format!(
                "confidence_floor {} outside [0, 1]",
                self.confidence_floor
            )));
        }
        Ok(())
    }

    pub fn branch_params(&self) -> BranchParams {
        BranchParams {
            semantic: self.semantic,
            instance: self.instance,
            amodal: self.amodal,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PipelineConfig::from_json(&text)
            .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
