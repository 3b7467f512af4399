use std::collections::HashSet;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cores::LogBase;
use crate::error::{Error, Result};
use crate::model::Alphabet;
use crate::structures::{Aggregator, DiffMetric, StructureSpec, System};

fn one() -> f64 {
    1.0
}

/// Weights and operators for the distribution- and trajectory-level scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreConfig {
    #[serde(default = "one")]
    pub lambda_e: f64,
    #[serde(default = "one")]
    pub lambda_var: f64,
    #[serde(default = "one")]
    pub lambda_d0: f64,
    #[serde(default = "one")]
    pub lambda_d1: f64,
    #[serde(default = "one")]
    pub lambda_f0: f64,
    #[serde(default = "one")]
    pub lambda_f1: f64,
    #[serde(default = "one")]
    pub lambda_c0: f64,
    #[serde(default = "one")]
    pub lambda_c1: f64,
    #[serde(default = "one")]
    pub lambda_c2: f64,
    #[serde(default = "one")]
    pub lambda_d: f64,
    #[serde(default = "one")]
    pub lambda_f: f64,
    #[serde(default = "one")]
    pub lambda_c: f64,
    #[serde(default = "one")]
    pub beta_rho: f64,
    #[serde(default = "one")]
    pub beta_r: f64,
    #[serde(default)]
    pub aggregator: Aggregator,
    #[serde(default)]
    pub metric: DiffMetric,
    #[serde(default)]
    pub log_base: LogBase,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            lambda_e: 1.0,
            lambda_var: 1.0,
            lambda_d0: 1.0,
            lambda_d1: 1.0,
            lambda_f0: 1.0,
            lambda_f1: 1.0,
            lambda_c0: 1.0,
            lambda_c1: 1.0,
            lambda_c2: 1.0,
            lambda_d: 1.0,
            lambda_f: 1.0,
            lambda_c: 1.0,
            beta_rho: 1.0,
            beta_r: 1.0,
            aggregator: Aggregator::default(),
            metric: DiffMetric::default(),
            log_base: LogBase::default(),
        }
    }
}

impl ScoreConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("lambda_e", self.lambda_e),
            ("lambda_var", self.lambda_var),
            ("lambda_d0", self.lambda_d0),
            ("lambda_d1", self.lambda_d1),
            ("lambda_f0", self.lambda_f0),
            ("lambda_f1", self.lambda_f1),
            ("lambda_c0", self.lambda_c0),
            ("lambda_c1", self.lambda_c1),
            ("lambda_c2", self.lambda_c2),
            ("lambda_d", self.lambda_d),
            ("lambda_f", self.lambda_f),
            ("lambda_c", self.lambda_c),
            ("beta_rho", self.beta_rho),
            ("beta_r", self.beta_r),
        ];
        for (name, v) in weights {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if let Aggregator::PNorm(p) = self.aggregator {
            if !(p >= 1.0) {
                return Err(Error::InvalidConfig(format!("p_norm needs p >= 1, got {p}")));
            }
        }
        Ok(())
    }
}

/// Serializable constraint roles; absent roles are empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    #[serde(default)]
    pub target: Vec<StructureSpec>,
    #[serde(default)]
    pub avoid: Vec<StructureSpec>,
    #[serde(default)]
    pub conserve: Vec<StructureSpec>,
}

#[derive(Clone, Debug, Default)]
pub struct ConstraintSystems {
    pub target: Option<System>,
    pub avoid: Option<System>,
    pub conserve: Option<System>,
}

impl ConstraintSystems {
    pub fn new(target: Option<System>, avoid: Option<System>, conserve: Option<System>) -> Result<Self> {
        let mut seen = HashSet::new();
        for system in [&target, &avoid, &conserve].into_iter().flatten() {
            for name in system.names() {
                if !seen.insert(name.clone()) {
                    return Err(Error::InvalidSystem(format!("structure '{name}' appears in more than one constraint role")));
                }
            }
        }
        Ok(Self { target, avoid, conserve })
    }

    pub fn from_spec(spec: &ConstraintSpec, alphabet: &Arc<Alphabet>) -> Result<Self> {
        let role = |specs: &[StructureSpec]| -> Result<Option<System>> {
            if specs.is_empty() {
                Ok(None)
            } else {
                System::from_specs(specs, alphabet).map(Some)
            }
        };
        Self::new(role(&spec.target)?, role(&spec.avoid)?, role(&spec.conserve)?)
    }

    pub fn from_json_str(text: &str, alphabet: &Arc<Alphabet>) -> Result<Self> {
        let spec: ConstraintSpec = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        Self::from_spec(&spec, alphabet)
    }

    pub fn load(path: impl AsRef<Path>, alphabet: &Arc<Alphabet>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?, alphabet)
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_none() && self.avoid.is_none() && self.conserve.is_none()
    }
}
