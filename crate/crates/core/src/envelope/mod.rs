//! Moreau envelopes, proximal points and near-stationarity certificates.
//!
//! The envelope parameter is always stored in the `phi_lambda` convention:
//!
//! ```text
//! phi_lambda(x) = min_y { phi(y) + |y - x|^2 / (2 lambda) }
//! grad phi_lambda(x) = (x - prox_{lambda phi}(x)) / lambda
//! ```
//!
//! Call sites that think in terms of `phi_{1/rho}` convert through
//! [`EnvelopeParams::reciprocal`].

mod inner;
mod perturbation;
mod witness;

use serde::{Deserialize, Serialize};

pub use perturbation::{complete_square, CompletedSquare, QuadraticPerturbation};
pub use witness::{near_stationarity_witness, Witness, ACTIVATION_TOL};

pub(crate) use inner::{interval_of, minimize_on_interval};

use crate::algorithms::{pssm_sc, PssmConfig};
use crate::error::{check_dim, Error, Result};
use crate::oracle::{seeded_stream, DeterministicOracle};
use crate::problem::{Objective, ProblemInstance};
use crate::scalar::Scalar;
use crate::set::ConstraintSet;
use crate::vector::Vector;
use inner::{InnerProblem, InnerSolution};

/// Default certified gap for identity checks.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Default tolerance for near-stationarity witnesses.
pub const WITNESS_TOL: f64 = 1e-6;

/// Envelope parameter `lambda > 0` (the `phi_lambda` convention).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeParams<S> {
    lambda: S,
}

impl<S: Scalar> EnvelopeParams<S> {
    pub fn new(lambda: S) -> Result<Self> {
        if lambda > S::zero() && lambda.is_finite() {
            Ok(Self { lambda })
        } else {
            Err(Error::Precondition(format!("envelope parameter must be positive, got {lambda}")))
        }
    }

    /// Parameters for `phi_{1/inverse}`.
    pub fn reciprocal(inverse: S) -> Result<Self> {
        if !(inverse > S::zero()) {
            return Err(Error::Precondition(format!("reciprocal parameter must be positive, got {inverse}")));
        }
        Self::new(S::one() / inverse)
    }

    pub fn lambda(&self) -> S {
        self.lambda
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxMethod {
    /// Closed form when available, otherwise the dual solver.
    #[default]
    Auto,
    /// Accelerated dual ascent certified by the Fenchel gap.
    Dual,
    /// Deterministic weighted-average projected subgradient on the strongly
    /// convex inner objective, run for the iteration count its gap bound needs.
    Subgradient,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxOptions {
    pub method: ProxMethod,
    pub max_dual_iterations: u64,
    pub max_subgradient_iterations: u64,
}

impl Default for ProxOptions {
    fn default() -> Self {
        Self {
            method: ProxMethod::Auto,
            max_dual_iterations: 2_000_000,
            max_subgradient_iterations: 20_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProxResult<S> {
    /// `prox_{lambda phi}(x)`
    pub prox_point: Vector<S>,
    /// `phi_lambda(x)`, evaluated at `prox_point` (over-estimates by at most `residual`).
    pub envelope_value: S,
    /// `(x - prox_point) / lambda`
    pub gradient: Vector<S>,
    /// Certified optimality gap of the inner solve.
    pub residual: S,
    /// `sqrt(2 residual / kappa)`: bound on the distance to the exact prox point.
    pub distance_bound: S,
    /// Dual weights certifying the solve, when the method produces them.
    pub dual: Option<Vec<S>>,
    pub iterations: u64,
}

/// Proximal point of `phi = g + indicator(X)` with default options.
pub fn prox<S: Scalar>(
    problem: &ProblemInstance<S>,
    lambda: S,
    x: &Vector<S>,
    tol: S,
) -> Result<ProxResult<S>> {
    prox_with(problem, EnvelopeParams::new(lambda)?, x, tol, &ProxOptions::default())
}

pub fn prox_with<S: Scalar>(
    problem: &ProblemInstance<S>,
    params: EnvelopeParams<S>,
    x: &Vector<S>,
    tol: S,
    options: &ProxOptions,
) -> Result<ProxResult<S>> {
    prox_objective(problem.objective(), problem.set(), params, x, tol, options)
}

pub(crate) fn prox_objective<S: Scalar>(
    objective: &Objective<S>,
    set: &ConstraintSet<S>,
    params: EnvelopeParams<S>,
    x: &Vector<S>,
    tol: S,
    options: &ProxOptions,
) -> Result<ProxResult<S>> {
    check_dim(set.dim(), x.dim())?;
    if !x.is_finite() {
        return Err(Error::Precondition("prox center must be finite".into()));
    }
    if !(tol > S::zero()) {
        return Err(Error::Precondition(format!("prox tolerance must be positive, got {tol}")));
    }
    let lambda = params.lambda();
    let inner = InnerProblem::new(objective, set, x.as_slice(), lambda);
    let solution = match options.method {
        ProxMethod::Auto => match inner.solve_single_piece().or_else(|| inner.solve_interval()) {
            Some(sol) => sol,
            None => inner.solve_dual(tol, options.max_dual_iterations)?,
        },
        ProxMethod::Dual => inner.solve_dual(tol, options.max_dual_iterations)?,
        ProxMethod::Subgradient => solve_by_subgradient(&inner, tol, options.max_subgradient_iterations)?,
    };
    let InnerSolution { point, residual, dual, iterations } = solution;
    let envelope_value = inner.primal(&point);
    let prox_point = Vector::from_vec_unchecked(point);
    let gradient = x.sub(&prox_point).scaled(S::one() / lambda);
    let distance_bound = (S::lit(2.0) * residual / inner.kappa).sqrt();
    Ok(ProxResult { prox_point, envelope_value, gradient, residual, distance_bound, dual, iterations })
}

/// Runs the deterministic strongly convex subgradient method with
/// `T + 1 >= 2 G^2 / (kappa tol)`, which certifies `gap <= 2 G^2 / (kappa (T+1))`.
fn solve_by_subgradient<S: Scalar>(
    inner: &InnerProblem<'_, S>,
    tol: S,
    cap: u64,
) -> Result<InnerSolution<S>> {
    let g = inner.subgradient_bound()?;
    let bound = |t: u64| S::lit(2.0) * g * g / (inner.kappa * S::lit((t + 1) as f64));
    let needed = (S::lit(2.0) * g * g / (inner.kappa * tol)).ceil().to_f64_lossy();
    if !needed.is_finite() || needed - 1.0 > cap as f64 {
        return Err(Error::ProxTolerance {
            tol: tol.to_f64_lossy(),
            best: bound(cap).to_f64_lossy(),
            iterations: cap,
        });
    }
    let iterations = (needed as u64).saturating_sub(1).max(1);
    let oracle = DeterministicOracle::new(inner.x.len(), g, |y: &[S], out: &mut [S]| inner.subgradient(y, out));
    let mut start = Vector::from_vec_unchecked(inner.center.clone());
    inner.set.project_in_place(start.as_mut_slice());
    let config = PssmConfig::new(start, inner.kappa, iterations)?;
    // the oracle never draws from the stream
    let point = pssm_sc(&config, &oracle, inner.set, &mut seeded_stream(0))?;
    Ok(InnerSolution { point: point.into_vec(), residual: bound(iterations), dual: None, iterations })
}

/// `grad phi_lambda(x) = (x - prox_{lambda phi}(x)) / lambda`.
pub fn envelope_gradient<S: Scalar>(
    problem: &ProblemInstance<S>,
    lambda: S,
    x: &Vector<S>,
    tol: S,
) -> Result<Vector<S>> {
    Ok(prox(problem, lambda, x, tol)?.gradient)
}

/// Both sides of the envelope-of-regularization identity.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizationIdentity<S> {
    /// `grad f_{1/lambda}(x)` via a prox solve on `f = h + Q`.
    pub lhs: Vector<S>,
    /// `lambda/(lambda+A) (grad h_{1/(lambda+A)}(x_bar) + sum_i a_i (x - z_i))`.
    pub rhs: Vector<S>,
    /// `x_bar = (lambda x + sum_i a_i z_i) / (lambda + A)`
    pub centroid: Vector<S>,
}

impl<S: Scalar> RegularizationIdentity<S> {
    pub fn discrepancy(&self) -> S {
        self.lhs.dist(&self.rhs)
    }
}

/// Evaluates the gradient of the envelope `f_{1/lambda}` of `f = h + Q` two
/// ways: directly, and through the envelope of `h` at the weighted centroid.
pub fn envelope_of_regularization<S: Scalar>(
    h: &ProblemInstance<S>,
    pert: &QuadraticPerturbation<S>,
    lambda: S,
    x: &Vector<S>,
    tol: S,
) -> Result<RegularizationIdentity<S>> {
    check_dim(h.dim(), x.dim())?;
    check_dim(h.dim(), pert.dim())?;
    let f = h.perturbed(pert)?;
    let lhs = envelope_gradient(&f, EnvelopeParams::reciprocal(lambda)?.lambda(), x, tol)?;

    let a = pert.total_weight();
    let weight = lambda + a;
    let mut centroid = x.scaled(lambda);
    centroid.axpy(a, pert.centroid());
    let centroid = centroid.scaled(S::one() / weight);
    let inner_grad = envelope_gradient(h, EnvelopeParams::reciprocal(weight)?.lambda(), &centroid, tol)?;

    let mut rhs = inner_grad;
    rhs.axpy(a, &x.sub(pert.centroid()));
    let rhs = rhs.scaled(lambda / weight);
    Ok(RegularizationIdentity { lhs, rhs, centroid })
}

#[cfg(test)]
mod tests;
