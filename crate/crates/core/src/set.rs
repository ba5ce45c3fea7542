//! Closed convex constraint sets with exact Euclidean projections.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;
use crate::vector::{dist_sq, Vector};

/// Shape of a constraint set, as written to instance and config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[serde(bound = "S: Scalar")]
pub enum SetKind<S> {
    Ball { center: Vector<S>, radius: S },
    Box { lower: Vector<S>, upper: Vector<S> },
    /// `{ x >= 0 : sum(x) = scale }`
    Simplex { dim: usize, scale: S },
}

/// A closed convex set `X` together with its stored diameter bound `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetKind<S>", into = "SetKind<S>")]
#[serde(bound = "S: Scalar")]
pub struct ConstraintSet<S> {
    kind: SetKind<S>,
    dim: usize,
    diameter: S,
}

impl<S: Scalar> TryFrom<SetKind<S>> for ConstraintSet<S> {
    type Error = Error;

    fn try_from(kind: SetKind<S>) -> Result<Self> {
        match kind {
            SetKind::Ball { center, radius } => Self::ball(center, radius),
            SetKind::Box { lower, upper } => Self::boxed(lower, upper),
            SetKind::Simplex { dim, scale } => Self::simplex(dim, scale),
        }
    }
}

impl<S: Scalar> From<ConstraintSet<S>> for SetKind<S> {
    fn from(set: ConstraintSet<S>) -> Self {
        set.kind
    }
}

impl<S: Scalar> ConstraintSet<S> {
    pub fn ball(center: Vector<S>, radius: S) -> Result<Self> {
        if !(radius > S::zero() && radius.is_finite()) || !center.is_finite() {
            return Err(Error::Config(format!("ball radius must be positive, got {radius}")));
        }
        let dim = center.dim();
        let diameter = S::lit(2.0) * radius;
        Ok(Self { kind: SetKind::Ball { center, radius }, dim, diameter })
    }

    pub fn boxed(lower: Vector<S>, upper: Vector<S>) -> Result<Self> {
        check_dim(lower.dim(), upper.dim())?;
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::Config("box bounds must be finite".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::Config("box lower bound exceeds upper bound".into()));
        }
        let diameter = upper.dist(&lower);
        if diameter <= S::zero() {
            return Err(Error::Config("box must have positive diameter".into()));
        }
        let dim = lower.dim();
        Ok(Self { kind: SetKind::Box { lower, upper }, dim, diameter })
    }

    /// Symmetric box `[-half_width, half_width]^dim`.
    pub fn cube(dim: usize, half_width: S) -> Result<Self> {
        Self::boxed(Vector::filled(dim, -half_width), Vector::filled(dim, half_width))
    }

    pub fn simplex(dim: usize, scale: S) -> Result<Self> {
        if dim == 0 || !(scale > S::zero() && scale.is_finite()) {
            return Err(Error::Config("simplex needs dim >= 1 and positive scale".into()));
        }
        let diameter = scale * S::SQRT_2();
        Ok(Self { kind: SetKind::Simplex { dim, scale }, dim, diameter })
    }

    pub fn kind(&self) -> &SetKind<S> {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored diameter bound: `2r` for balls, `|upper - lower|` for boxes, `s*sqrt(2)` for simplices.
    pub fn diameter(&self) -> S {
        self.diameter
    }

    /// A canonical interior-ish point: ball center, box midpoint, simplex barycenter.
    pub fn center(&self) -> Vector<S> {
        match &self.kind {
            SetKind::Ball { center, .. } => center.clone(),
            SetKind::Box { lower, upper } => lower.lincomb(S::lit(0.5), S::lit(0.5), upper),
            SetKind::Simplex { dim, scale } => {
                Vector::filled(*dim, *scale / S::from_usize_lossy(*dim))
            }
        }
    }

    pub fn project(&self, x: &Vector<S>) -> Result<Vector<S>> {
        check_dim(self.dim, x.dim())?;
        if !x.is_finite() {
            return Err(Error::Contract("cannot project a non-finite point".into()));
        }
        let mut out = x.clone();
        self.project_in_place(out.as_mut_slice());
        Ok(out)
    }

    /// Projects in place. Caller guarantees the dimension.
    pub fn project_in_place(&self, x: &mut [S]) {
        match &self.kind {
            SetKind::Ball { center, radius } => {
                let c = center.as_slice();
                let d2 = dist_sq(x, c);
                if d2 > *radius * *radius {
                    let factor = *radius / d2.sqrt();
                    for (xi, &ci) in x.iter_mut().zip(c) {
                        *xi = ci + factor * (*xi - ci);
                    }
                }
            }
            SetKind::Box { lower, upper } => {
                for ((xi, &l), &u) in x.iter_mut().zip(lower.as_slice()).zip(upper.as_slice()) {
                    *xi = xi.max(l).min(u);
                }
            }
            SetKind::Simplex { scale, .. } => project_simplex(x, *scale),
        }
    }

    pub fn contains(&self, x: &Vector<S>, tol: S) -> bool {
        if x.dim() != self.dim {
            return false;
        }
        match &self.kind {
            SetKind::Ball { center, radius } => x.dist(center) <= *radius + tol,
            SetKind::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(&xi, (&l, &u))| xi >= l - tol && xi <= u + tol),
            SetKind::Simplex { scale, .. } => {
                let sum: S = x.iter().copied().sum();
                x.iter().all(|&xi| xi >= -tol) && (sum - *scale).abs() <= tol
            }
        }
    }

    /// Residual `s - proj_{-N_X(x)}(s)`, whose norm is `dist(0; s + N_X(x))`.
    ///
    /// Constraints within `act_tol` of `x` count as active. Returns `None` for
    /// simplices, whose normal cone is not handled.
    pub fn normal_residual(&self, x: &[S], s: &[S], act_tol: S) -> Option<Vec<S>> {
        match &self.kind {
            SetKind::Ball { center, radius } => {
                let c = center.as_slice();
                let r = dist_sq(x, c).sqrt();
                let mut out = s.to_vec();
                if r >= *radius - act_tol && r > S::zero() {
                    let inner: S = s.iter().zip(x.iter().zip(c)).map(|(&si, (&xi, &ci))| si * (xi - ci)).sum::<S>() / r;
                    if inner < S::zero() {
                        for (o, (&xi, &ci)) in out.iter_mut().zip(x.iter().zip(c)) {
                            *o -= inner * (xi - ci) / r;
                        }
                    }
                }
                Some(out)
            }
            SetKind::Box { lower, upper } => Some(
                s.iter()
                    .zip(x)
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|((&si, &xi), (&l, &u))| {
                        if xi <= l + act_tol {
                            si.min(S::zero())
                        } else if xi >= u - act_tol {
                            si.max(S::zero())
                        } else {
                            si
                        }
                    })
                    .collect(),
            ),
            SetKind::Simplex { .. } => None,
        }
    }

    pub fn cast<T: Scalar>(&self) -> ConstraintSet<T> {
        let kind = match &self.kind {
            SetKind::Ball { center, radius } => {
                SetKind::Ball { center: center.cast(), radius: T::lit(radius.to_f64_lossy()) }
            }
            SetKind::Box { lower, upper } => SetKind::Box { lower: lower.cast(), upper: upper.cast() },
            SetKind::Simplex { dim, scale } => {
                SetKind::Simplex { dim: *dim, scale: T::lit(scale.to_f64_lossy()) }
            }
        };
        ConstraintSet { kind, dim: self.dim, diameter: T::lit(self.diameter.to_f64_lossy()) }
    }
}

/// Sort-based projection onto `{x >= 0, sum x = scale}`. Stable sort, so equal
/// coordinates are taken in index order when locating the threshold.
pub(crate) fn project_simplex<S: Scalar>(x: &mut [S], scale: S) {
    let mut sorted: Vec<S> = x.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumsum = S::zero();
    let mut theta = S::zero();
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - scale) / S::from_usize_lossy(j + 1);
        if u - candidate > S::zero() {
            theta = candidate;
        }
    }
    for xi in x.iter_mut() {
        *xi = (*xi - theta).max(S::zero());
    }
}

/// Projection onto the box `[-bound, bound]^n`.
#[inline]
pub(crate) fn project_symmetric_box<S: Scalar>(x: &mut [S], bound: S) {
    for xi in x.iter_mut() {
        *xi = xi.max(-bound).min(bound);
    }
}
