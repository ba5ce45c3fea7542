//! Stochastic subgradient oracles and the seeded random streams that drive them.
//!
//! An oracle maps a point `x` and a fresh draw from the stream to a random
//! vector `G(x, xi)` whose mean lies in the subdifferential of the objective
//! at `x` and whose second moment is bounded by `L^2` on the feasible set.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;
use crate::vector::Vector;

/// The random stream owned by a single run.
pub type Stream = ChaCha8Rng;

/// Deterministic stream for `seed`; equal seeds replay bit-for-bit.
pub fn seeded_stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replicate `index` of an experiment with `base` seed.
pub fn replicate_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index.wrapping_add(1)))
}

pub trait StochasticOracle<S: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes one sample `G(x, xi)` into `out`, consuming draws from `stream`.
    /// Dimensions are the caller's responsibility.
    fn sample_into(&self, x: &[S], stream: &mut Stream, out: &mut [S]);

    /// `L` such that `E|G(x, xi)|^2 <= L^2` for all feasible `x`.
    fn second_moment_bound(&self) -> S;

    /// Bound of the innermost unshifted oracle.
    fn base_bound(&self) -> S {
        self.second_moment_bound()
    }

    /// Total quadratic weight added on top of the base oracle.
    fn shift_weight(&self) -> S {
        S::zero()
    }

    fn sample(&self, x: &Vector<S>, stream: &mut Stream) -> Result<Vector<S>> {
        check_dim(self.dim(), x.dim())?;
        let mut out = Vector::zeros(x.dim());
        self.sample_into(x.as_slice(), stream, out.as_mut_slice());
        Ok(out)
    }
}

/// Noise-free oracle backed by a closure; draws nothing from the stream.
pub struct DeterministicOracle<S, F> {
    dim: usize,
    bound: S,
    f: F,
}

impl<S: Scalar, F> DeterministicOracle<S, F>
where
    F: Fn(&[S], &mut [S]) + Send + Sync,
{
    pub fn new(dim: usize, bound: S, f: F) -> Self {
        Self { dim, bound, f }
    }
}

impl<S: Scalar, F> StochasticOracle<S> for DeterministicOracle<S, F>
where
    F: Fn(&[S], &mut [S]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_into(&self, x: &[S], _stream: &mut Stream, out: &mut [S]) {
        (self.f)(x, out)
    }

    fn second_moment_bound(&self) -> S {
        self.bound
    }
}

/// `G(x, xi) + sum_i a_i (x - z_i)`, stored in the flattened form
/// `G(x, xi) + A x - sum_i a_i z_i` so repeated shifts cost O(d) per sample.
#[derive(Clone)]
pub struct ShiftedOracle<S: Scalar> {
    base: Arc<dyn StochasticOracle<S>>,
    total_weight: S,
    weighted_centers: Vec<S>,
    terms: usize,
    diameter: S,
}

impl<S: Scalar> fmt::Debug for ShiftedOracle<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ShiftedOracle")
            .field("total_weight", &self.total_weight)
            .field("terms", &self.terms)
            .field("diameter", &self.diameter)
            .finish_non_exhaustive()
    }
}

/// Adds the quadratic term `(weight/2)|x - center|^2` to the oracle's objective.
///
/// `diameter` is the feasible set's `D`, used to update the second-moment
/// bound to `2 (L^2 + D^2 M^2)` with `M` the accumulated weight.
pub fn shift_oracle<S: Scalar>(
    base: Arc<dyn StochasticOracle<S>>,
    weight: S,
    center: &Vector<S>,
    diameter: S,
) -> Result<ShiftedOracle<S>> {
    check_dim(base.dim(), center.dim())?;
    check_weight(weight)?;
    if !(diameter > S::zero()) {
        return Err(Error::Config("diameter must be positive".into()));
    }
    Ok(ShiftedOracle {
        base,
        total_weight: weight,
        weighted_centers: center.scaled(weight).into_vec(),
        terms: 1,
        diameter,
    })
}

fn check_weight<S: Scalar>(weight: S) -> Result<()> {
    if weight > S::zero() && weight.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("shift weight must be positive, got {weight}")))
    }
}

impl<S: Scalar> ShiftedOracle<S> {
    /// Adds one more quadratic term without nesting another wrapper.
    pub fn shift(&self, weight: S, center: &Vector<S>) -> Result<Self> {
        check_dim(self.dim(), center.dim())?;
        check_weight(weight)?;
        let mut next = self.clone();
        next.total_weight += weight;
        for (acc, &c) in next.weighted_centers.iter_mut().zip(center.iter()) {
            *acc += weight * c;
        }
        next.terms += 1;
        Ok(next)
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn own_weight(&self) -> S {
        self.total_weight
    }
}

impl<S: Scalar> StochasticOracle<S> for ShiftedOracle<S> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    #[inline]
    fn sample_into(&self, x: &[S], stream: &mut Stream, out: &mut [S]) {
        self.base.sample_into(x, stream, out);
        for ((o, &xi), &wc) in out.iter_mut().zip(x).zip(&self.weighted_centers) {
            *o += self.total_weight * xi - wc;
        }
    }

    fn second_moment_bound(&self) -> S {
        let l = self.base_bound();
        let m = self.shift_weight();
        let dm = self.diameter * m;
        (S::lit(2.0) * (l * l + dm * dm)).sqrt()
    }

    fn base_bound(&self) -> S {
        self.base.base_bound()
    }

    fn shift_weight(&self) -> S {
        self.base.shift_weight() + self.total_weight
    }
}
