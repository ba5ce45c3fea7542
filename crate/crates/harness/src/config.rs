use std::path::{Path, PathBuf};

use gradreg::algorithms::{averaging_rounds, convex_budget, ConvexParams};
use gradreg::{generate, CheckpointPolicy, EnvelopeParams, ProblemInstance, ProblemSpec};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const CONFIG_VERSION: u32 = 1;

pub const DEFAULT_PROX_TOL: f64 = 1e-12;

/// Which solver a run uses, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    PssmSc {
        mu: f64,
        iterations: u64,
    },
    GrSc {
        mu: f64,
        lambda: f64,
        iterations: u64,
        /// Defaults to the smallest round count with `M >= lambda`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rounds: Option<u32>,
    },
    GrConvex {
        rho: f64,
        epsilon: f64,
        /// Inner iterations per round; defaults to the budget that guarantees `epsilon`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        iterations: Option<u64>,
    },
    BaselinePsgd {
        iterations: u64,
        /// Step `c / sqrt(t+1)`; defaults to `D / L`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step_scale: Option<f64>,
        /// Sets the reporting envelope `phi_{1/(2 rho)}`.
        rho: f64,
    },
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PssmSc { .. } => "pssm_sc",
            Self::GrSc { .. } => "gr_sc",
            Self::GrConvex { .. } => "gr_convex",
            Self::BaselinePsgd { .. } => "baseline_psgd",
        }
    }

    /// Copy with the iteration count `T` replaced.
    pub fn with_iterations(&self, t: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::PssmSc { iterations, .. } | Self::GrSc { iterations, .. } | Self::BaselinePsgd { iterations, .. } => {
                *iterations = t
            }
            Self::GrConvex { iterations, .. } => *iterations = Some(t),
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub id: String,
    pub replicates: u32,
    /// Base seed; replicate `r` uses `replicate_seed(seed, r)`.
    pub seed: u64,
    #[serde(default)]
    pub checkpoints: CheckpointPolicy,
    /// Records CSV; the summary goes next to it with a `_summary` suffix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Overrides the reporting envelope parameter (`phi_lambda` convention).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope_lambda: Option<f64>,
    #[serde(default = "default_prox_tol")]
    pub prox_tol: f64,
    pub problem: ProblemSpec,
    pub algorithm: AlgorithmSpec,
}

fn default_prox_tol() -> f64 {
    DEFAULT_PROX_TOL
}

/// A config checked against its problem instance, with every default filled in.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub instance: ProblemInstance<f64>,
    pub algorithm: AlgorithmSpec,
    pub envelope: EnvelopeParams<f64>,
    pub iterations: u64,
}

impl ExperimentConfig {
    pub fn new(id: impl Into<String>, problem: ProblemSpec, algorithm: AlgorithmSpec, replicates: u32, seed: u64) -> Self {
        Self {
            version: CONFIG_VERSION,
            id: id.into(),
            replicates,
            seed,
            checkpoints: CheckpointPolicy::Final,
            output: None,
            envelope_lambda: None,
            prox_tol: DEFAULT_PROX_TOL,
            problem,
            algorithm,
        }
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let cfg = Self::from_toml(&text)
            .map_err(|e| HarnessError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn with_iterations(&self, t: u64) -> Self {
        Self { algorithm: self.algorithm.with_iterations(t), ..self.clone() }
    }

    /// Builds the instance and checks every precondition of the chosen solver.
    pub fn resolve(&self) -> Result<Resolved> {
        if self.version != CONFIG_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.id.is_empty() || self.id.contains(|c: char| c == ',' || c == '"' || c.is_control()) {
            return Err(HarnessError::Config(format!("experiment id {:?} must be non-empty CSV-safe text", self.id)));
        }
        if self.replicates == 0 {
            return Err(HarnessError::Config("replicates must be at least 1".into()));
        }
        if !(self.prox_tol > 0.0 && self.prox_tol.is_finite()) {
            return Err(HarnessError::Config(format!("prox_tol must be positive, got {}", self.prox_tol)));
        }
        self.problem.validate()?;
        let instance = generate::<f64>(&self.problem)?;
        let pre = |m: String| HarnessError::Precondition(m);
        let modulus = self.problem.params.strong_convexity.unwrap_or(0.0);
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(pre(format!("{name} must be positive, got {v}")))
            }
        };
        let at_least_one = |t: u64| if t >= 1 { Ok(()) } else { Err(pre("iterations must be at least 1".into())) };

        let (algorithm, default_envelope, iterations) = match &self.algorithm {
            AlgorithmSpec::PssmSc { mu, iterations } => {
                positive("mu", *mu)?;
                at_least_one(*iterations)?;
                if *mu > modulus {
                    return Err(pre(format!("pssm_sc needs a {mu}-strongly convex problem; strong_convexity is {modulus}")));
                }
                (self.algorithm.clone(), 1.0 / mu, *iterations)
            }
            AlgorithmSpec::GrSc { mu, lambda, iterations, rounds } => {
                positive("mu", *mu)?;
                positive("lambda", *lambda)?;
                at_least_one(*iterations)?;
                if *mu > modulus {
                    return Err(pre(format!("gr_sc needs a {mu}-strongly convex problem; strong_convexity is {modulus}")));
                }
                let rounds = Some(match rounds {
                    Some(r) => *r,
                    None => averaging_rounds(*mu, *lambda)?,
                });
                let resolved = AlgorithmSpec::GrSc { mu: *mu, lambda: *lambda, iterations: *iterations, rounds };
                (resolved, 1.0 / (2.0 * lambda), *iterations)
            }
            AlgorithmSpec::GrConvex { rho, epsilon, iterations } => {
                let params = ConvexParams::from_target(*rho, *epsilon, instance.diameter())?;
                let t = match iterations {
                    Some(t) => *t,
                    None => convex_budget(*rho, *epsilon, instance.lipschitz(), instance.diameter())?,
                };
                at_least_one(t)?;
                let resolved = AlgorithmSpec::GrConvex { rho: *rho, epsilon: *epsilon, iterations: Some(t) };
                (resolved, params.envelope_lambda(), t)
            }
            AlgorithmSpec::BaselinePsgd { iterations, step_scale, rho } => {
                positive("rho", *rho)?;
                at_least_one(*iterations)?;
                let c = step_scale.unwrap_or(instance.diameter() / instance.lipschitz().max(f64::MIN_POSITIVE));
                positive("step_scale", c)?;
                let resolved = AlgorithmSpec::BaselinePsgd { iterations: *iterations, step_scale: Some(c), rho: *rho };
                (resolved, 1.0 / (2.0 * rho), *iterations)
            }
        };
        let envelope = EnvelopeParams::new(self.envelope_lambda.unwrap_or(default_envelope))?;
        Ok(Resolved { instance, algorithm, envelope, iterations })
    }
}
