use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointPolicy {
    /// Only the returned point.
    #[default]
    Final,
    /// Power-of-two oracle-call counts (inner methods) or round ends
    /// (gradual regularization), plus the returned point.
    Geometric,
}

/// Candidate outputs collected during a run, keyed by oracle calls so far.
#[derive(Clone, Debug, Default)]
pub struct Trace<S> {
    policy: Option<CheckpointPolicy>,
    points: Vec<(u64, Vector<S>)>,
}

impl<S: Scalar> Trace<S> {
    pub fn new(policy: CheckpointPolicy) -> Self {
        Self { policy: Some(policy), points: Vec::new() }
    }

    pub fn disabled() -> Self {
        Self { policy: None, points: Vec::new() }
    }

    pub fn is_enabled(&self) -> bool {
        self.policy.is_some()
    }

    pub(crate) fn geometric(&self) -> bool {
        self.policy == Some(CheckpointPolicy::Geometric)
    }

    #[inline]
    pub(crate) fn wants_call(&self, calls: u64) -> bool {
        self.geometric() && calls.is_power_of_two()
    }

    /// Records a candidate; a later point at the same call count replaces the earlier one.
    pub(crate) fn record(&mut self, calls: u64, point: &[S]) {
        if self.policy.is_none() {
            return;
        }
        if matches!(self.points.last(), Some((c, _)) if *c == calls) {
            self.points.pop();
        }
        self.points.push((calls, Vector::from_vec_unchecked(point.to_vec())));
    }

    pub(crate) fn map_points(&mut self, f: impl Fn(&Vector<S>) -> Vector<S>) {
        for (_, p) in self.points.iter_mut() {
            *p = f(p);
        }
    }

    pub fn points(&self) -> &[(u64, Vector<S>)] {
        &self.points
    }

    pub fn into_points(self) -> Vec<(u64, Vector<S>)> {
        self.points
    }
}
