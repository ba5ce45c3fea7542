use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{seeded_stream, Stream};
use crate::problem::{KnownMin, Objective, PiecewiseLinear, ProblemInstance};
use crate::scalar::Scalar;
use crate::set::ConstraintSet;
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// `(1/n) sum_k |<a_k, x> - b_k|`; noise-free responses give a known minimizer.
    L1Regression,
    /// Random pointwise max of affine pieces.
    PiecewiseMax,
    /// Pointwise max with a planted minimizer where zero is a strict convex
    /// combination of the active slopes.
    DesignedMax,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetShape {
    /// `[-radius, radius]^d`
    #[default]
    Box,
    /// Euclidean ball of `radius` around the origin.
    Ball,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    /// Regression rows; defaults to `20 d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    /// Affine pieces; defaults to `5 d` (at least `d + 2` for designed instances).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pieces: Option<usize>,
    /// Oracle noise radius for max-type problems; response noise scale for regression.
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default)]
    pub set: SetShape,
    /// Gap between the planted active value and inactive pieces.
    #[serde(default = "tenth")]
    pub margin: f64,
    /// Adds `(mu/2)|x - c|^2`, centered at the planted minimizer when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_convexity: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn tenth() -> f64 {
    0.1
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self { rows: None, pieces: None, noise: 0.0, radius: 1.0, set: SetShape::Box, margin: 0.1, strong_convexity: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub dimension: usize,
    pub seed: u64,
    #[serde(default)]
    pub params: ProblemParams,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind, dimension: usize, seed: u64) -> Self {
        Self { kind, dimension, seed, params: ProblemParams::default() }
    }

    pub fn with_params(mut self, params: ProblemParams) -> Self {
        self.params = params;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        if self.dimension == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if !(p.radius > 0.0 && p.radius.is_finite()) {
            return Err(Error::Config(format!("radius must be positive, got {}", p.radius)));
        }
        if !(p.noise >= 0.0 && p.noise.is_finite()) {
            return Err(Error::Config(format!("noise must be >= 0, got {}", p.noise)));
        }
        if !(p.margin > 0.0 && p.margin.is_finite()) {
            return Err(Error::Config(format!("margin must be positive, got {}", p.margin)));
        }
        if let Some(mu) = p.strong_convexity {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::Config(format!("strong convexity must be positive, got {mu}")));
            }
        }
        if p.rows == Some(0) || p.pieces == Some(0) {
            return Err(Error::Config("rows and pieces must be positive".into()));
        }
        if self.kind == ProblemKind::DesignedMax {
            if let Some(m) = p.pieces {
                if m < self.dimension + 1 {
                    return Err(Error::Config(format!(
                        "designed max needs at least d + 1 = {} pieces, got {m}",
                        self.dimension + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `(1/n) sum_k |<a_k, x> - b_k|` on `set`; the row oracle has `L = max_k |a_k|`.
pub fn l1_regression<S: Scalar>(
    rows: &[(Vector<S>, S)],
    set: ConstraintSet<S>,
    known_min: Option<KnownMin<S>>,
) -> Result<ProblemInstance<S>> {
    let pieces = PiecewiseLinear::mean_abs_residual(rows)?;
    ProblemInstance::new(Objective::new(pieces), S::zero(), set, known_min)
}

/// `max_j (<a_j, x> + b_j)` with ball noise of radius `noise` on the oracle.
pub fn piecewise_max<S: Scalar>(
    slopes: &[Vector<S>],
    offsets: Vec<S>,
    noise: S,
    set: ConstraintSet<S>,
    known_min: Option<KnownMin<S>>,
) -> Result<ProblemInstance<S>> {
    let pieces = PiecewiseLinear::max_of(slopes, offsets)?;
    ProblemInstance::new(Objective::new(pieces), noise, set, known_min)
}

/// Builds the instance described by `spec`. Identical specs give bit-identical instances.
pub fn generate<S: Scalar>(spec: &ProblemSpec) -> Result<ProblemInstance<S>> {
    spec.validate()?;
    generate_f64(spec)?.cast()
}

fn gaussian_row(stream: &mut Stream, d: usize) -> Vector<f64> {
    let scale = 1.0 / (d as f64).sqrt();
    Vector::from_vec_unchecked((0..d).map(|_| stream.sample::<f64, _>(StandardNormal) * scale).collect())
}

/// Planted point inside both the cube and the ball of the given radius.
fn planted_point(stream: &mut Stream, d: usize, radius: f64) -> Vector<f64> {
    let scale = radius / (2.0 * (d as f64).sqrt());
    Vector::from_vec_unchecked((0..d).map(|_| stream.gen_range(-1.0..=1.0) * scale).collect())
}

fn build_set(d: usize, p: &ProblemParams) -> Result<ConstraintSet<f64>> {
    match p.set {
        SetShape::Box => ConstraintSet::cube(d, p.radius),
        SetShape::Ball => ConstraintSet::ball(Vector::zeros(d), p.radius),
    }
}

fn generate_f64(spec: &ProblemSpec) -> Result<ProblemInstance<f64>> {
    let d = spec.dimension;
    let p = &spec.params;
    let mut stream = seeded_stream(spec.seed);
    let set = build_set(d, p)?;

    let base = match spec.kind {
        ProblemKind::L1Regression => {
            let n = p.rows.unwrap_or(20 * d);
            let x_star = planted_point(&mut stream, d, p.radius);
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                let a = gaussian_row(&mut stream, d);
                let mut b = a.dot(&x_star);
                if p.noise > 0.0 {
                    // Laplace residuals
                    let u: f64 = stream.gen_range(-0.5..0.5);
                    b -= p.noise * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln();
                }
                rows.push((a, b));
            }
            let known = (p.noise == 0.0).then(|| KnownMin { point: x_star, value: 0.0 });
            l1_regression(&rows, set, known)?
        }
        ProblemKind::PiecewiseMax => {
            let m = p.pieces.unwrap_or(5 * d);
            let slopes: Vec<_> = (0..m).map(|_| gaussian_row(&mut stream, d)).collect();
            let offsets = (0..m).map(|_| 0.1 * stream.sample::<f64, _>(StandardNormal)).collect();
            piecewise_max(&slopes, offsets, p.noise, set, None)?
        }
        ProblemKind::DesignedMax => {
            let m = p.pieces.unwrap_or(5 * d).max(d + 2);
            let x_star = planted_point(&mut stream, d, p.radius);
            let weights: Vec<f64> = (0..=d).map(|_| stream.gen_range(0.5..1.5)).collect();
            let mut slopes: Vec<Vector<f64>> = (0..d).map(|_| gaussian_row(&mut stream, d)).collect();
            let mut last = Vector::zeros(d);
            for (w, a) in weights.iter().zip(&slopes) {
                last.axpy(-w / weights[d], a);
            }
            slopes.push(last);
            let mut offsets: Vec<f64> = slopes.iter().map(|a| -a.dot(&x_star)).collect();
            for _ in d + 1..m {
                let a = gaussian_row(&mut stream, d);
                let gap = p.margin * (1.0 + stream.gen::<f64>());
                offsets.push(-a.dot(&x_star) - gap);
                slopes.push(a);
            }
            let known = KnownMin { point: x_star, value: 0.0 };
            piecewise_max(&slopes, offsets, p.noise, set, Some(known))?
        }
    };

    match p.strong_convexity {
        None => Ok(base),
        Some(mu) => {
            let center = match base.known_min() {
                Some(km) => km.point.clone(),
                None => base.set().center(),
            };
            base.strongly_convex_wrap(mu, center)
        }
    }
}
