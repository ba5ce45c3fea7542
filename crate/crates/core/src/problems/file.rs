use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{KnownMin, Objective, ProblemInstance};
use crate::scalar::Scalar;
use crate::set::ConstraintSet;

use super::ProblemSpec;

pub const INSTANCE_VERSION: u32 = 1;

/// Serialized problem instance. The oracle and `L` are rebuilt on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar", deny_unknown_fields)]
pub struct InstanceFile<S> {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<ProblemSpec>,
    pub objective: Objective<S>,
    pub noise: S,
    pub set: ConstraintSet<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_min: Option<KnownMin<S>>,
}

impl<S: Scalar> InstanceFile<S> {
    pub fn from_instance(instance: &ProblemInstance<S>, spec: Option<ProblemSpec>) -> Self {
        Self {
            version: INSTANCE_VERSION,
            spec,
            objective: instance.objective().clone(),
            noise: instance.noise(),
            set: instance.set().clone(),
            known_min: instance.known_min().cloned(),
        }
    }

    pub fn into_instance(self) -> Result<ProblemInstance<S>> {
        if self.version != INSTANCE_VERSION {
            return Err(Error::Config(format!(
                "instance file version {} is not supported (expected {INSTANCE_VERSION})",
                self.version
            )));
        }
        ProblemInstance::new(self.objective, self.noise, self.set, self.known_min)
    }
}

pub fn write_instance<S: Scalar>(path: &Path, instance: &ProblemInstance<S>, spec: Option<ProblemSpec>) -> Result<()> {
    let file = InstanceFile::from_instance(instance, spec);
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn read_instance<S: Scalar>(path: &Path) -> Result<ProblemInstance<S>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let file: InstanceFile<S> =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    file.into_instance()
}
