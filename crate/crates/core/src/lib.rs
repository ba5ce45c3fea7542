//! Stochastic subgradient methods that drive the Moreau-envelope gradient of
//! a nonsmooth convex objective to zero, with certified prox computations for
//! measuring near-stationarity.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix the double-precision versions used by the harness.

pub mod algorithms;
pub mod envelope;
mod error;
pub mod oracle;
pub mod problem;
pub mod problems;
mod scalar;
pub mod set;
mod vector;

pub use algorithms::{
    baseline_psgd, gr_convex, gr_sc, pssm_sc, convex_budget, BaselineConfig, CheckpointPolicy,
    ConvergenceRecord, GrConvexConfig, GrScConfig, PssmConfig, RegularizationSchedule,
};
pub use envelope::{
    complete_square, envelope_gradient, envelope_of_regularization, near_stationarity_witness, prox,
    EnvelopeParams, ProxResult, QuadraticPerturbation,
};
pub use error::{Error, Result};
pub use oracle::{replicate_seed, seeded_stream, shift_oracle, StochasticOracle, Stream};
pub use problem::{KnownMin, ProblemInstance};
pub use problems::{generate, true_min, ProblemSpec};
pub use scalar::Scalar;
pub use set::ConstraintSet;
pub use vector::Vector;

pub type Vector64 = Vector<f64>;
pub type Vector32 = Vector<f32>;
pub type ConstraintSet64 = ConstraintSet<f64>;
pub type ConstraintSet32 = ConstraintSet<f32>;
pub type ProblemInstance64 = ProblemInstance<f64>;
pub type ProblemInstance32 = ProblemInstance<f32>;
pub type QuadraticPerturbation64 = QuadraticPerturbation<f64>;
pub type ProxResult64 = ProxResult<f64>;
pub type ConvergenceRecord64 = ConvergenceRecord<f64>;
