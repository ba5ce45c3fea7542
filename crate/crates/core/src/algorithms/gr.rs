use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::oracle::{shift_oracle, ShiftedOracle, StochasticOracle, Stream};
use crate::problem::ProblemInstance;
use crate::scalar::Scalar;
use crate::set::ConstraintSet;
use crate::vector::Vector;

use super::params::ConvexParams;
use super::pssm::{check_start, pssm_sc, PssmConfig};
use super::schedule::RegularizationSchedule;
use super::trace::Trace;

/// Gradual regularization for a `mu`-strongly convex objective.
#[derive(Clone, Debug, PartialEq)]
pub struct GrScConfig<S> {
    /// Initial point, used as `x_hat_0`.
    pub x_init: Vector<S>,
    pub mu: S,
    /// Averaging parameter `lambda`.
    pub lambda: S,
    /// Inner iterations `T` per round.
    pub iterations: u64,
    /// Outer rounds `I`; the method runs `I + 1` inner solves.
    pub rounds: u32,
}

impl<S: Scalar> GrScConfig<S> {
    pub fn new(x_init: Vector<S>, mu: S, lambda: S, iterations: u64, rounds: u32) -> Result<Self> {
        if !(mu > S::zero() && mu.is_finite()) {
            return Err(Error::Precondition(format!("mu must be positive, got {mu}")));
        }
        if !(lambda > S::zero() && lambda.is_finite()) {
            return Err(Error::Precondition(format!("lambda must be positive, got {lambda}")));
        }
        if iterations == 0 {
            return Err(Error::Precondition("inner iterations must be at least 1".into()));
        }
        Ok(Self { x_init, mu, lambda, iterations, rounds })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrScOutput<S> {
    /// `(lambda x_hat_{I+1} + sum_i mu_i x_hat_i) / (lambda + M)`
    pub point: Vector<S>,
    pub schedule: RegularizationSchedule<S>,
    pub oracle_calls: u64,
}

pub fn gr_sc<S: Scalar>(
    config: &GrScConfig<S>,
    oracle: Arc<dyn StochasticOracle<S>>,
    set: &ConstraintSet<S>,
    stream: &mut Stream,
) -> Result<GrScOutput<S>> {
    gr_sc_traced(config, oracle, set, stream, &mut Trace::disabled())
}

/// Runs `I + 1` inner solves. Solve `i` starts at `x_hat_i`, uses strong
/// convexity constant `mu + M_i`, and samples the oracle shifted by every
/// quadratic `(mu_j/2)|x - x_hat_j|^2` added so far. Traced checkpoints are the
/// output formula applied to the centers available at each round's end.
pub fn gr_sc_traced<S: Scalar>(
    config: &GrScConfig<S>,
    oracle: Arc<dyn StochasticOracle<S>>,
    set: &ConstraintSet<S>,
    stream: &mut Stream,
    trace: &mut Trace<S>,
) -> Result<GrScOutput<S>> {
    check_dim(set.dim(), oracle.dim())?;
    check_start(&config.x_init, set)?;
    let mut schedule = RegularizationSchedule::new(config.mu, config.rounds)?;
    schedule.check_ratio_bound()?;

    let per_round = config.iterations - 1;
    let mut shifted: Option<ShiftedOracle<S>> = None;
    let mut start = config.x_init.clone();
    let mut weighted_centers = Vector::zeros(set.dim());

    for round in 0..=config.rounds as usize {
        let inner = PssmConfig::new(start, schedule.inner_constant(round), config.iterations)?;
        let current: &dyn StochasticOracle<S> = match &shifted {
            Some(s) => s,
            None => oracle.as_ref(),
        };
        let center = pssm_sc(&inner, current, set, stream)?;
        schedule.push_center(center.clone());

        let calls = per_round * (round as u64 + 1);
        let m_round = schedule.partial_sums()[round];
        if trace.geometric() || round == config.rounds as usize {
            let mut candidate = weighted_centers.clone();
            candidate.axpy(config.lambda, &center);
            trace.record(calls, candidate.scaled(S::one() / (config.lambda + m_round)).as_slice());
        }

        if round < config.rounds as usize {
            // the final round's weight would belong to a perturbation nothing consumes
            let weight = schedule.weights()[round];
            weighted_centers.axpy(weight, &center);
            shifted = Some(match shifted {
                Some(s) => s.shift(weight, &center)?,
                None => shift_oracle(Arc::clone(&oracle), weight, &center, set.diameter())?,
            });
        }
        start = center;
    }

    let total = config.lambda + schedule.total_weight();
    let mut point = weighted_centers;
    point.axpy(config.lambda, schedule.centers().last().expect("at least one round"));
    let point = point.scaled(S::one() / total);
    Ok(GrScOutput { point, schedule, oracle_calls: per_round * (config.rounds as u64 + 1) })
}

/// Regularized gradual regularization for plain convex problems.
#[derive(Clone, Debug, PartialEq)]
pub struct GrConvexConfig<S> {
    /// `x_c`: regularization center and starting point.
    pub center: Vector<S>,
    pub rho: S,
    pub epsilon: S,
    /// Inner iterations `T` per round.
    pub iterations: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrConvexOutput<S> {
    /// `z_bar = (mu x_c + lambda x_bar) / (mu + lambda)`
    pub point: Vector<S>,
    /// `x_bar` returned by the strongly convex method on the regularized problem.
    pub inner: GrScOutput<S>,
    pub params: ConvexParams<S>,
    pub oracle_calls: u64,
}

pub fn gr_convex<S: Scalar>(
    config: &GrConvexConfig<S>,
    problem: &ProblemInstance<S>,
    stream: &mut Stream,
) -> Result<GrConvexOutput<S>> {
    gr_convex_traced(config, problem, stream, &mut Trace::disabled())
}

/// Adds `(mu/2)|x - x_c|^2` to the objective, runs the strongly convex method
/// with averaging parameter `lambda/2`, and pulls the result back toward `x_c`.
pub fn gr_convex_traced<S: Scalar>(
    config: &GrConvexConfig<S>,
    problem: &ProblemInstance<S>,
    stream: &mut Stream,
    trace: &mut Trace<S>,
) -> Result<GrConvexOutput<S>> {
    let set = problem.set();
    let params = ConvexParams::from_target(config.rho, config.epsilon, problem.diameter())?;
    let two_rho = S::lit(2.0) * params.rho;
    if (params.lambda + params.mu - two_rho).abs() > S::lit(1e-12) * two_rho {
        return Err(Error::Contract("lambda + mu must equal 2 rho".into()));
    }
    check_start(&config.center, set)?;

    let regularized = shift_oracle(problem.oracle(), params.mu, &config.center, problem.diameter())?;
    let inner_config = GrScConfig::new(
        config.center.clone(),
        params.mu,
        params.lambda / S::lit(2.0),
        config.iterations,
        params.rounds,
    )?;
    let inner = gr_sc_traced(&inner_config, Arc::new(regularized), set, stream, trace)?;

    let total = params.mu + params.lambda;
    let pull_back = |x_bar: &Vector<S>| config.center.lincomb(params.mu / total, params.lambda / total, x_bar);
    trace.map_points(pull_back);
    let point = pull_back(&inner.point);
    let oracle_calls = inner.oracle_calls;
    Ok(GrConvexOutput { point, inner, params, oracle_calls })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{seeded_stream, DeterministicOracle};

    fn quadratic_oracle(mu: f64) -> Arc<dyn StochasticOracle<f64>> {
        Arc::new(DeterministicOracle::new(2, 10.0, move |x: &[f64], out: &mut [f64]| {
            for (o, &xi) in out.iter_mut().zip(x) {
                *o = mu * xi;
            }
        }))
    }

    #[test]
    fn zero_rounds_is_one_inner_solve() {
        let set = ConstraintSet::cube(2, 1.0).unwrap();
        let x0 = Vector::from_f64(&[0.5, -0.25]).unwrap();
        let cfg = GrScConfig::new(x0.clone(), 1.0, 3.0, 5, 0).unwrap();
        let out = gr_sc(&cfg, quadratic_oracle(1.0), &set, &mut seeded_stream(1)).unwrap();
        let direct = pssm_sc(
            &PssmConfig::new(x0, 1.0, 5).unwrap(),
            quadratic_oracle(1.0).as_ref(),
            &set,
            &mut seeded_stream(1),
        )
        .unwrap();
        assert!(out.point.max_abs_diff(&direct) < 1e-15);
        assert_eq!(out.oracle_calls, 4);
        assert_eq!(out.schedule.centers().len(), 1);
    }

    #[test]
    fn output_weights_sum_to_lambda_plus_m() {
        let set = ConstraintSet::cube(2, 1.0).unwrap();
        let cfg = GrScConfig::new(Vector::from_f64(&[0.5, 0.5]).unwrap(), 1.0, 6.0, 4, 2).unwrap();
        let out = gr_sc(&cfg, quadratic_oracle(1.0), &set, &mut seeded_stream(2)).unwrap();
        let weights = out.schedule.averaging_weights(6.0);
        assert!(weights.iter().all(|&w| w >= 0.0));
        assert_eq!(weights.iter().sum::<f64>(), 6.0 + out.schedule.total_weight());
        // I = log2(1 + lambda/(2 mu)) makes M = lambda exactly
        assert_eq!(out.schedule.total_weight(), 6.0);
        assert_eq!(out.oracle_calls, 3 * 3);
        assert_eq!(out.schedule.centers().len(), 3);
        let mut manual = Vector::zeros(2);
        for (w, c) in weights.iter().zip(out.schedule.centers()) {
            manual.axpy(*w, c);
        }
        assert!(manual.scaled(1.0 / 12.0).max_abs_diff(&out.point) < 1e-15);
    }
}
