use crate::error::{check_dim, Error, Result};
use crate::oracle::{StochasticOracle, Stream};
use crate::scalar::Scalar;
use crate::set::ConstraintSet;
use crate::vector::Vector;

use super::trace::Trace;

/// Input to the strongly convex projected stochastic subgradient method.
#[derive(Clone, Debug, PartialEq)]
pub struct PssmConfig<S> {
    pub x0: Vector<S>,
    /// Strong convexity constant of the oracle's objective on `X`.
    pub mu: S,
    /// `T`: number of averaged iterates.
    pub iterations: u64,
}

impl<S: Scalar> PssmConfig<S> {
    pub fn new(x0: Vector<S>, mu: S, iterations: u64) -> Result<Self> {
        if !(mu > S::zero() && mu.is_finite()) {
            return Err(Error::Precondition(format!("strong convexity constant must be positive, got {mu}")));
        }
        if iterations == 0 {
            return Err(Error::Precondition("iteration count must be at least 1".into()));
        }
        Ok(Self { x0, mu, iterations })
    }
}

pub(crate) fn check_start<S: Scalar>(x0: &Vector<S>, set: &ConstraintSet<S>) -> Result<()> {
    check_dim(set.dim(), x0.dim())?;
    let slack = S::lit(1e-9) * (S::one() + set.diameter());
    if !set.contains(x0, slack) {
        return Err(Error::Precondition("initial point must lie in the constraint set".into()));
    }
    Ok(())
}

/// Projected stochastic subgradient method for strongly convex objectives.
///
/// Steps `x_{t+1} = proj_X(x_t - 2/(mu (t+1)) G(x_t, xi_t))` for
/// `t = 0..T-2` and returns `sum_{t<T} (t+1) x_t` normalized by `T(T+1)/2`.
/// Makes exactly `T - 1` oracle calls.
pub fn pssm_sc<S: Scalar>(
    config: &PssmConfig<S>,
    oracle: &dyn StochasticOracle<S>,
    set: &ConstraintSet<S>,
    stream: &mut Stream,
) -> Result<Vector<S>> {
    pssm_sc_traced(config, oracle, set, stream, &mut Trace::disabled())
}

pub fn pssm_sc_traced<S: Scalar>(
    config: &PssmConfig<S>,
    oracle: &dyn StochasticOracle<S>,
    set: &ConstraintSet<S>,
    stream: &mut Stream,
    trace: &mut Trace<S>,
) -> Result<Vector<S>> {
    check_dim(oracle.dim(), set.dim())?;
    check_start(&config.x0, set)?;
    let mut x = config.x0.clone().into_vec();
    let mut avg = x.clone();
    let mut g = vec![S::zero(); x.len()];
    let two_over_mu = S::lit(2.0) / config.mu;
    let mut weight_total = S::one();

    for t in 0..config.iterations - 1 {
        oracle.sample_into(&x, stream, &mut g);
        let step = two_over_mu / S::lit((t + 1) as f64);
        for (xi, &gi) in x.iter_mut().zip(&g) {
            *xi -= step * gi;
        }
        set.project_in_place(&mut x);

        // x is x_{t+1}, weighted by t+2
        let w = S::lit((t + 2) as f64);
        weight_total += w;
        let frac = w / weight_total;
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
