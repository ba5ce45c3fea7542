//! Stochastic subgradient solvers: the weighted-average strongly convex
//! method, gradual regularization on top of it, the regularized variant for
//! plain convex problems, and a uniform-average baseline.

mod baseline;
mod gr;
mod params;
mod pssm;
mod record;
mod schedule;
mod trace;

pub use baseline::{baseline_psgd, baseline_psgd_traced, BaselineConfig};
pub use gr::{
    gr_convex, gr_convex_traced, gr_sc, gr_sc_traced, GrConvexConfig, GrConvexOutput, GrScConfig,
    GrScOutput,
};
pub use params::{ceil_log2, averaging_rounds, convex_bound, convex_budget, ConvexParams};
pub use pssm::{pssm_sc, pssm_sc_traced, PssmConfig};
pub use record::{Checkpoint, ConvergenceRecord};
pub use schedule::RegularizationSchedule;
pub use trace::{CheckpointPolicy, Trace};
