use serde::{Deserialize, Serialize};

use crate::envelope::{prox, EnvelopeParams};
use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::scalar::Scalar;
use crate::vector::Vector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Checkpoint<S> {
    pub oracle_calls: u64,
    pub iterate: Vector<S>,
    /// `|grad phi_lambda(iterate)|` at the record's envelope parameter.
    pub envelope_grad_norm: S,
    /// `g(iterate) - min g`, when the minimum is known.
    pub function_gap: Option<S>,
}

/// Checkpoints of a single run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ConvergenceRecord<S> {
    pub rows: Vec<Checkpoint<S>>,
    /// Echo of the configuration that produced the run.
    pub config: String,
    pub seed: u64,
    /// Envelope parameter in the `phi_lambda` convention.
    pub envelope_lambda: S,
}

impl<S: Scalar> ConvergenceRecord<S> {
    /// Measures each traced point on `problem`. Call counts must be strictly
    /// increasing and every point must be feasible.
    pub fn from_trace(
        points: &[(u64, Vector<S>)],
        problem: &ProblemInstance<S>,
        params: EnvelopeParams<S>,
        prox_tol: S,
        config: impl Into<String>,
        seed: u64,
    ) -> Result<Self> {
        let slack = S::lit(1e-9) * (S::one() + problem.diameter());
        let mut rows = Vec::with_capacity(points.len());
        let mut last: Option<u64> = None;
        for (calls, point) in points {
            if last.is_some_and(|l| *calls <= l) {
                return Err(Error::Contract(format!("oracle-call counts not increasing at {calls}")));
            }
            last = Some(*calls);
            if !problem.set().contains(point, slack) {
                return Err(Error::Contract(format!("checkpoint at {calls} calls left the feasible set")));
            }
            let pr = prox(problem, params.lambda(), point, prox_tol)?;
            let function_gap = problem.known_min().map(|km| problem.value(point) - km.value);
            rows.push(Checkpoint {
                oracle_calls: *calls,
                iterate: point.clone(),
                envelope_grad_norm: pr.gradient.norm(),
                function_gap,
            });
        }
        Ok(Self { rows, config: config.into(), seed, envelope_lambda: params.lambda() })
    }

    pub fn last(&self) -> Option<&Checkpoint<S>> {
        self.rows.last()
    }
}
