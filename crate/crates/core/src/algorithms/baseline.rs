use crate::error::{Error, Result};
use crate::oracle::{StochasticOracle, Stream};
use crate::scalar::Scalar;
use crate::set::ConstraintSet;
use crate::vector::Vector;

use super::pssm::check_start;
use super::trace::Trace;

/// Plain projected stochastic subgradient with steps `c / sqrt(t+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineConfig<S> {
    pub x0: Vector<S>,
    /// `c` in the step `c / sqrt(t+1)`.
    pub step_scale: S,
    pub iterations: u64,
}

impl<S: Scalar> BaselineConfig<S> {
    pub fn new(x0: Vector<S>, step_scale: S, iterations: u64) -> Result<Self> {
        if !(step_scale > S::zero() && step_scale.is_finite()) {
            return Err(Error::Precondition(format!("step scale must be positive, got {step_scale}")));
        }
        if iterations == 0 {
            return Err(Error::Precondition("iteration count must be at least 1".into()));
        }
        Ok(Self { x0, step_scale, iterations })
    }
}

/// Uniform average of `x_0..x_{T-1}`; `T - 1` oracle calls.
pub fn baseline_psgd<S: Scalar>(
    config: &BaselineConfig<S>,
    oracle: &dyn StochasticOracle<S>,
    set: &ConstraintSet<S>,
    stream: &mut Stream,
) -> Result<Vector<S>> {
    baseline_psgd_traced(config, oracle, set, stream, &mut Trace::disabled())
}

pub fn baseline_psgd_traced<S: Scalar>(
    config: &BaselineConfig<S>,
    oracle: &dyn StochasticOracle<S>,
    set: &ConstraintSet<S>,
    stream: &mut Stream,
    trace: &mut Trace<S>,
) -> Result<Vector<S>> {
    crate::error::check_dim(oracle.dim(), set.dim())?;
    check_start(&config.x0, set)?;
    let mut x = config.x0.clone().into_vec();
    let mut avg = x.clone();
    let mut g = vec![S::zero(); x.len()];
    for t in 0..config.iterations - 1 {
        oracle.sample_into(&x, stream, &mut g);
        let step = config.step_scale / S::lit((t + 1) as f64).sqrt();
        for (xi, &gi) in x.iter_mut().zip(&g) {
            *xi -= step * gi;
        }
        set.project_in_place(&mut x);
        let frac = S::one() / S::lit((t + 2) as f64);
        for (a, &xi) in avg.iter_mut().zip(&x) {
            *a += frac * (xi - *a);
        }
        let calls = t + 1;
        if trace.wants_call(calls) {
            trace.record(calls, &avg);
        }
    }
    trace.record(config.iterations - 1, &avg);
    Ok(Vector::from_vec_unchecked(avg))
}
