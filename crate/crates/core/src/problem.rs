//! Structured nonsmooth convex objectives and problem-instance packaging.
//!
//! Every objective shipped here has the form
//!
//! ```text
//! g(x) = sup_{w in W} sum_j w_j (<a_j, x> + b_j)  +  sum_i (a_i/2) |x - z_i|^2
//! ```
//!
//! where `W` is the unit simplex (pointwise max of affine pieces) or the box
//! `[-1/n, 1/n]^n` (mean of absolute values). The dual description is what
//! the envelope module uses for certified prox solves.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::envelope::QuadraticPerturbation;
use crate::error::{check_dim, Error, Result};
use crate::oracle::{shift_oracle, StochasticOracle, Stream};
use crate::scalar::Scalar;
use crate::set::ConstraintSet;
use crate::vector::{dot, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// `max_j (<a_j, x> + b_j)`
    Max,
    /// `(1/n) sum_j |<a_j, x> + b_j|`
    MeanAbs,
}

/// Affine pieces combined by [`Aggregation`]; rows stored densely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PiecewiseLinear<S> {
    dim: usize,
    slopes: Vec<S>,
    offsets: Vec<S>,
    aggregation: Aggregation,
}

impl<S: Scalar> PiecewiseLinear<S> {
    pub fn new(slopes: &[Vector<S>], offsets: Vec<S>, aggregation: Aggregation) -> Result<Self> {
        let Some(first) = slopes.first() else {
            return Err(Error::Config("need at least one affine piece".into()));
        };
        check_dim(slopes.len(), offsets.len())?;
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        let mut flat = Vec::with_capacity(dim * slopes.len());
        for s in slopes {
            check_dim(dim, s.dim())?;
            flat.extend_from_slice(s.as_slice());
        }
        if !flat.iter().chain(&offsets).all(|v| v.is_finite()) {
            return Err(Error::Config("non-finite piece data".into()));
        }
        Ok(Self { dim, slopes: flat, offsets, aggregation })
    }

    /// `max(x, -x)` style pointwise maximum.
    pub fn max_of(slopes: &[Vector<S>], offsets: Vec<S>) -> Result<Self> {
        Self::new(slopes, offsets, Aggregation::Max)
    }

    /// `(1/n) sum_k |<a_k, x> - b_k|` from regression rows `(a_k, b_k)`.
    pub fn mean_abs_residual(rows: &[(Vector<S>, S)]) -> Result<Self> {
        let slopes: Vec<Vector<S>> = rows.iter().map(|(a, _)| a.clone()).collect();
        let offsets = rows.iter().map(|(_, b)| -*b).collect();
        Self::new(&slopes, offsets, Aggregation::MeanAbs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> usize {
        self.offsets.len()
    }

    pub fn aggregation(&self) -> Aggregation {
        self.aggregation
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[S] {
        &self.slopes[j * self.dim..(j + 1) * self.dim]
    }

    #[inline]
    pub fn offset(&self, j: usize) -> S {
        self.offsets[j]
    }

    #[inline]
    pub fn affine(&self, j: usize, x: &[S]) -> S {
        dot(self.row(j), x) + self.offsets[j]
    }

    /// Radius `r` of the dual box `[-r, r]^n` for `MeanAbs`; one for `Max`.
    pub fn dual_scale(&self) -> S {
        match self.aggregation {
            Aggregation::Max => S::one(),
            Aggregation::MeanAbs => S::one() / S::from_usize_lossy(self.pieces()),
        }
    }

    pub fn value(&self, x: &[S]) -> S {
        match self.aggregation {
            Aggregation::Max => (0..self.pieces())
                .map(|j| self.affine(j, x))
                .fold(S::neg_infinity(), S::max),
            Aggregation::MeanAbs => {
                (0..self.pieces()).map(|j| self.affine(j, x).abs()).sum::<S>() * self.dual_scale()
            }
        }
    }

    /// Lowest index attaining the maximum.
    pub fn active_piece(&self, x: &[S]) -> usize {
        let mut best = 0;
        let mut best_val = self.affine(0, x);
        for j in 1..self.pieces() {
            let v = self.affine(j, x);
            if v > best_val {
                best = j;
                best_val = v;
            }
        }
        best
    }

    /// Deterministic subgradient written into `out` (overwrites).
    pub fn subgradient_into(&self, x: &[S], out: &mut [S]) {
        match self.aggregation {
            Aggregation::Max => out.copy_from_slice(self.row(self.active_piece(x))),
            Aggregation::MeanAbs => {
                out.iter_mut().for_each(|o| *o = S::zero());
                let r = self.dual_scale();
                for j in 0..self.pieces() {
                    let s = sign(self.affine(j, x));
                    if s != S::zero() {
                        for (o, &a) in out.iter_mut().zip(self.row(j)) {
                            *o += r * s * a;
                        }
                    }
                }
            }
        }
    }

    pub fn max_row_norm(&self) -> S {
        (0..self.pieces())
            .map(|j| dot(self.row(j), self.row(j)).sqrt())
            .fold(S::zero(), S::max)
    }

    /// Lipschitz constant of the value function.
    pub fn lipschitz(&self) -> S {
        match self.aggregation {
            Aggregation::Max => self.max_row_norm(),
            Aggregation::MeanAbs => {
                (0..self.pieces()).map(|j| dot(self.row(j), self.row(j)).sqrt()).sum::<S>()
                    * self.dual_scale()
            }
        }
    }

    /// `sum_j w_j a_j` into `out` (overwrites).
    pub fn transpose_mul(&self, w: &[S], out: &mut [S]) {
        out.iter_mut().for_each(|o| *o = S::zero());
        for (j, &wj) in w.iter().enumerate() {
            if wj != S::zero() {
                for (o, &a) in out.iter_mut().zip(self.row(j)) {
                    *o += wj * a;
                }
            }
        }
    }

    /// Affine values `<a_j, x> + b_j` for every piece.
    pub fn affine_all(&self, x: &[S], out: &mut [S]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.affine(j, x);
        }
    }

    pub fn cast<T: Scalar>(&self) -> PiecewiseLinear<T> {
        PiecewiseLinear {
            dim: self.dim,
            slopes: self.slopes.iter().map(|&v| T::lit(v.to_f64_lossy())).collect(),
            offsets: self.offsets.iter().map(|&v| T::lit(v.to_f64_lossy())).collect(),
            aggregation: self.aggregation,
        }
    }
}

#[inline]
fn sign<S: Scalar>(v: S) -> S {
    if v > S::zero() {
        S::one()
    } else if v < S::zero() {
        -S::one()
    } else {
        S::zero()
    }
}

/// Piecewise-linear part plus an optional quadratic perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Objective<S> {
    pub pieces: PiecewiseLinear<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<QuadraticPerturbation<S>>,
}

impl<S: Scalar> Objective<S> {
    pub fn new(pieces: PiecewiseLinear<S>) -> Self {
        Self { pieces, quadratic: None }
    }

    pub fn dim(&self) -> usize {
        self.pieces.dim()
    }

    pub fn value(&self, x: &[S]) -> S {
        let q = self.quadratic.as_ref().map_or(S::zero(), |q| q.value(x));
        self.pieces.value(x) + q
    }

    pub fn subgradient(&self, x: &[S], out: &mut [S]) {
        self.pieces.subgradient_into(x, out);
        if let Some(q) = &self.quadratic {
            q.add_gradient(x, out);
        }
    }

    pub fn with_perturbation(&self, pert: &QuadraticPerturbation<S>) -> Result<Self> {
        check_dim(self.dim(), pert.dim())?;
        let quadratic = match &self.quadratic {
            Some(q) => q.merged(pert)?,
            None => pert.clone(),
        };
        Ok(Self { pieces: self.pieces.clone(), quadratic: Some(quadratic) })
    }
}

/// Oracle for a pointwise max: active row (lowest index) plus noise uniform on
/// a centered ball of radius `noise`.
pub struct MaxPieceOracle<S> {
    pieces: Arc<PiecewiseLinear<S>>,
    noise: S,
}

impl<S: Scalar> MaxPieceOracle<S> {
    pub fn new(pieces: Arc<PiecewiseLinear<S>>, noise: S) -> Self {
        Self { pieces, noise }
    }
}

/// `E|xi|^2` for `xi` uniform on the radius-`r` ball in `R^d`.
pub fn uniform_ball_second_moment<S: Scalar>(radius: S, dim: usize) -> S {
    let d = S::from_usize_lossy(dim);
    radius * radius * d / (d + S::lit(2.0))
}

impl<S: Scalar> StochasticOracle<S> for MaxPieceOracle<S> {
    fn dim(&self) -> usize {
        self.pieces.dim()
    }

    fn sample_into(&self, x: &[S], stream: &mut Stream, out: &mut [S]) {
        let row = self.pieces.row(self.pieces.active_piece(x));
        if self.noise == S::zero() {
            out.copy_from_slice(row);
            return;
        }
        // direction drawn into `out` first, then shifted by the active row
        let d = out.len();
        let mut norm_sq = S::zero();
        for o in out.iter_mut() {
            let z: f64 = stream.sample(StandardNormal);
            *o = S::lit(z);
            norm_sq += *o * *o;
        }
        let u: f64 = stream.gen();
        let radius = self.noise * S::lit(u.powf(1.0 / d as f64));
        let scale = radius / norm_sq.sqrt().max(S::min_positive_value());
        for (o, &a) in out.iter_mut().zip(row) {
            *o = a + scale * *o;
        }
    }

    fn second_moment_bound(&self) -> S {
        let a = self.pieces.max_row_norm();
        (a * a + uniform_ball_second_moment(self.noise, self.pieces.dim())).sqrt()
    }
}

/// Finite-sum oracle for a mean of absolute values: one uniformly drawn row
/// `k`, returning `sign(<a_k, x> + b_k) a_k`.
pub struct RowSampleOracle<S> {
    pieces: Arc<PiecewiseLinear<S>>,
}

impl<S: Scalar> RowSampleOracle<S> {
    pub fn new(pieces: Arc<PiecewiseLinear<S>>) -> Self {
        Self { pieces }
    }
}

impl<S: Scalar> StochasticOracle<S> for RowSampleOracle<S> {
    fn dim(&self) -> usize {
        self.pieces.dim()
    }

    #[inline]
    fn sample_into(&self, x: &[S], stream: &mut Stream, out: &mut [S]) {
        let k = stream.gen_range(0..self.pieces.pieces());
        let s = sign(self.pieces.affine(k, x));
        for (o, &a) in out.iter_mut().zip(self.pieces.row(k)) {
            *o = s * a;
        }
    }

    fn second_moment_bound(&self) -> S {
        self.pieces.max_row_norm()
    }
}

/// A minimizer and the minimal value of `phi` over the constraint set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct KnownMin<S> {
    pub point: Vector<S>,
    pub value: S,
}

/// `min_{x in X} g(x)` with a stochastic oracle for `g` and certified constants.
#[derive(Clone)]
pub struct ProblemInstance<S: Scalar> {
    objective: Objective<S>,
    noise: S,
    oracle: Arc<dyn StochasticOracle<S>>,
    set: ConstraintSet<S>,
    lipschitz: S,
    known_min: Option<KnownMin<S>>,
}

impl<S: Scalar> fmt::Debug for ProblemInstance<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("objective", &self.objective)
            .field("noise", &self.noise)
            .field("set", &self.set)
            .field("lipschitz", &self.lipschitz)
            .field("known_min", &self.known_min)
            .finish_non_exhaustive()
    }
}

impl<S: Scalar> ProblemInstance<S> {
    /// Builds the oracle and the constant `L` from the objective.
    ///
    /// `noise` is the radius of the uniform ball noise added by max-type
    /// oracles; mean-abs objectives are already stochastic through row
    /// sampling and reject extra noise.
    pub fn new(
        objective: Objective<S>,
        noise: S,
        set: ConstraintSet<S>,
        known_min: Option<KnownMin<S>>,
    ) -> Result<Self> {
        check_dim(set.dim(), objective.dim())?;
        if !(noise >= S::zero() && noise.is_finite()) {
            return Err(Error::Config(format!("noise scale must be >= 0, got {noise}")));
        }
        let pieces = Arc::new(objective.pieces.clone());
        let base: Arc<dyn StochasticOracle<S>> = match objective.pieces.aggregation() {
            Aggregation::Max => Arc::new(MaxPieceOracle::new(pieces, noise)),
            Aggregation::MeanAbs => {
                if noise > S::zero() {
                    return Err(Error::Config("mean-abs objectives take no additive noise".into()));
                }
                Arc::new(RowSampleOracle::new(pieces))
            }
        };
        let mut lipschitz = base.second_moment_bound().max(objective.pieces.lipschitz());
        let oracle: Arc<dyn StochasticOracle<S>> = match &objective.quadratic {
            None => base,
            Some(q) => {
                let terms = q.terms();
                let mut shifted = shift_oracle(base, terms[0].0, &terms[0].1, set.diameter())?;
                for (a, z) in &terms[1..] {
                    shifted = shifted.shift(*a, z)?;
                }
                // sup_{x in X} |x - z_bar| <= D + dist(z_bar, X)
                let c = q.centroid();
                let reach = set.diameter() + set.project(c)?.dist(c);
                lipschitz += q.total_weight() * reach;
                Arc::new(shifted)
            }
        };
        if let Some(km) = &known_min {
            check_dim(set.dim(), km.point.dim())?;
        }
        Ok(Self { objective, noise, oracle, set, lipschitz, known_min })
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn objective(&self) -> &Objective<S> {
        &self.objective
    }

    pub fn noise(&self) -> S {
        self.noise
    }

    pub fn oracle(&self) -> Arc<dyn StochasticOracle<S>> {
        Arc::clone(&self.oracle)
    }

    pub fn set(&self) -> &ConstraintSet<S> {
        &self.set
    }

    /// `L`: Lipschitz constant of `g` on `X` and bound on the oracle's second moment.
    pub fn lipschitz(&self) -> S {
        self.lipschitz
    }

    /// `D`
    pub fn diameter(&self) -> S {
        self.set.diameter()
    }

    pub fn known_min(&self) -> Option<&KnownMin<S>> {
        self.known_min.as_ref()
    }

    /// `g(x)`. Verification only; solvers never call this.
    pub fn value(&self, x: &Vector<S>) -> S {
        self.objective.value(x.as_slice())
    }

    /// `phi(x)`: `g(x)` on `X` (up to `tol`), `+inf` elsewhere.
    pub fn phi(&self, x: &Vector<S>, tol: S) -> S {
        if self.set.contains(x, tol) {
            self.value(x)
        } else {
            S::infinity()
        }
    }

    /// Same instance with `pert` added to the objective. The known minimum is
    /// carried over only if its point is the perturbation's centroid.
    pub fn perturbed(&self, pert: &QuadraticPerturbation<S>) -> Result<Self> {
        let objective = self.objective.with_perturbation(pert)?;
        let known_min = self.known_min.as_ref().and_then(|km| {
            let at_centroid = km.point.max_abs_diff(pert.centroid()) == S::zero();
            at_centroid.then(|| KnownMin {
                point: km.point.clone(),
                value: km.value + pert.value(km.point.as_slice()),
            })
        });
        Self::new(objective, self.noise, self.set.clone(), known_min)
    }

    /// `g + (mu/2)|x - center|^2`, strongly convex with modulus `mu` on `X`.
    pub fn strongly_convex_wrap(&self, mu: S, center: Vector<S>) -> Result<Self> {
        self.perturbed(&QuadraticPerturbation::single(mu, center)?)
    }

    pub fn cast<T: Scalar>(&self) -> Result<ProblemInstance<T>> {
        let objective = Objective {
            pieces: self.objective.pieces.cast(),
            quadratic: match &self.objective.quadratic {
                None => None,
                Some(q) => Some(QuadraticPerturbation::new(
                    q.terms().iter().map(|(a, z)| (T::lit(a.to_f64_lossy()), z.cast())).collect(),
                )?),
            },
        };
        let known_min = self.known_min.as_ref().map(|km| KnownMin {
            point: km.point.cast(),
            value: T::lit(km.value.to_f64_lossy()),
        });
        ProblemInstance::new(objective, T::lit(self.noise.to_f64_lossy()), self.set.cast(), known_min)
    }
}
