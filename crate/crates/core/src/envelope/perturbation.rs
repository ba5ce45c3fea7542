use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;
use crate::vector::{dist_sq, Vector};

/// `Q(y) = sum_i (a_i / 2) |y - z_i|^2` with every `a_i > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(S, Vector<S>)>", into = "Vec<(S, Vector<S>)>")]
#[serde(bound = "S: Scalar")]
pub struct QuadraticPerturbation<S> {
    terms: Vec<(S, Vector<S>)>,
    total_weight: S,
    centroid: Vector<S>,
}

impl<S: Scalar> TryFrom<Vec<(S, Vector<S>)>> for QuadraticPerturbation<S> {
    type Error = Error;
    fn try_from(terms: Vec<(S, Vector<S>)>) -> Result<Self> {
        Self::new(terms)
    }
}

impl<S: Scalar> From<QuadraticPerturbation<S>> for Vec<(S, Vector<S>)> {
    fn from(q: QuadraticPerturbation<S>) -> Self {
        q.terms
    }
}

impl<S: Scalar> QuadraticPerturbation<S> {
    pub fn new(terms: Vec<(S, Vector<S>)>) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::Contract("quadratic perturbation needs at least one term".into()));
        };
        let dim = first.dim();
        for (a, z) in &terms {
            check_dim(dim, z.dim())?;
            if !(*a > S::zero() && a.is_finite()) {
                return Err(Error::Contract(format!("term weight must be positive, got {a}")));
            }
        }
        let (total_weight, centroid) = centroid_of(&terms);
        Ok(Self { terms, total_weight, centroid })
    }

    pub fn single(weight: S, center: Vector<S>) -> Result<Self> {
        Self::new(vec![(weight, center)])
    }

    /// A copy with one more term appended.
    pub fn with_term(&self, weight: S, center: Vector<S>) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.push((weight, center));
        Self::new(terms)
    }

    /// Concatenation of both term lists.
    pub fn merged(&self, other: &Self) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(terms)
    }

    pub fn terms(&self) -> &[(S, Vector<S>)] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.centroid.dim()
    }

    /// `A = sum_i a_i`
    pub fn total_weight(&self) -> S {
        self.total_weight
    }

    /// `(sum_i a_i z_i) / A`
    pub fn centroid(&self) -> &Vector<S> {
        &self.centroid
    }

    /// Recomputes the centroid from the terms and compares with the stored one.
    pub fn centroid_consistent(&self, tol: S) -> bool {
        let (a, c) = centroid_of(&self.terms);
        (a - self.total_weight).abs() <= tol * (S::one() + a) && c.max_abs_diff(&self.centroid) <= tol
    }

    pub fn value(&self, y: &[S]) -> S {
        self.terms
            .iter()
            .map(|(a, z)| S::lit(0.5) * *a * dist_sq(y, z.as_slice()))
            .sum()
    }

    /// `out += sum_i a_i (y - z_i)`
    pub fn add_gradient(&self, y: &[S], out: &mut [S]) {
        for (a, z) in &self.terms {
            for ((o, &yi), &zi) in out.iter_mut().zip(y).zip(z.as_slice()) {
                *o += *a * (yi - zi);
            }
        }
    }
}

fn centroid_of<S: Scalar>(terms: &[(S, Vector<S>)]) -> (S, Vector<S>) {
    let dim = terms[0].1.dim();
    let mut total = S::zero();
    let mut sum = Vector::zeros(dim);
    for (a, z) in terms {
        total += *a;
        sum.axpy(*a, z);
    }
    (total, sum.scaled(S::one() / total))
}

/// Both sides of the completing-the-square identity at `y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompletedSquare<S> {
    /// `Q(z_bar)`
    pub value_at_centroid: S,
    /// `Q(z_bar) + (A/2) |y - z_bar|^2`
    pub reconstructed: S,
    /// `Q(y)` evaluated term by term.
    pub direct: S,
}

/// Evaluates `Q(y)` directly and through `Q(z_bar) + (A/2)|y - z_bar|^2`.
pub fn complete_square<S: Scalar>(
    pert: &QuadraticPerturbation<S>,
    y: &Vector<S>,
) -> Result<CompletedSquare<S>> {
    check_dim(pert.dim(), y.dim())?;
    let value_at_centroid = pert.value(pert.centroid.as_slice());
    let reconstructed = value_at_centroid
        + S::lit(0.5) * pert.total_weight * dist_sq(y.as_slice(), pert.centroid.as_slice());
    Ok(CompletedSquare { value_at_centroid, reconstructed, direct: pert.value(y.as_slice()) })
}
