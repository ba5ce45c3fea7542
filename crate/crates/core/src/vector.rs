use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

/// Dense point in `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound = "S: Scalar")]
pub struct Vector<S>(Vec<S>);

impl<S: Scalar> Vector<S> {
    /// Builds a vector, rejecting NaN or infinite coordinates.
    pub fn new(coords: Vec<S>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(coords))
    }

    pub fn from_f64(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|&c| S::lit(c)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![S::zero(); dim])
    }

    pub fn filled(dim: usize, value: S) -> Self {
        Self(vec![value; dim])
    }

    /// Unit vector along `axis`.
    pub fn basis(dim: usize, axis: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[axis] = S::one();
        v
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<S>) -> Self {
        Self(coords)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<S> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &Self) -> S {
        dot(&self.0, &other.0)
    }

    pub fn norm_sq(&self) -> S {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> S {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, other: &Self) -> S {
        dist_sq(&self.0, &other.0).sqrt()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| a - b).collect())
    }

    pub fn scaled(&self, factor: S) -> Self {
        Self(self.0.iter().map(|&a| a * factor).collect())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: S, other: &Self) {
        axpy(alpha, &other.0, &mut self.0);
    }

    /// `alpha * self + beta * other`
    pub fn lincomb(&self, alpha: S, beta: S, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| alpha * a + beta * b)
                .collect(),
        )
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        check_dim(expected, self.dim())
    }

    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.0
            .iter()
            .zip(&other.0)
            .fold(S::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn cast<T: Scalar>(&self) -> Vector<T> {
        Vector(self.0.iter().map(|&c| T::lit(c.to_f64_lossy())).collect())
    }
}

impl<S> std::ops::Index<usize> for Vector<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.0[i]
    }
}

impl<S> std::ops::IndexMut<usize> for Vector<S> {
    fn index_mut(&mut self, i: usize) -> &mut S {
        &mut self.0[i]
    }
}

// slice kernels used by the hot loops

#[inline]
pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub(crate) fn dist_sq<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

#[inline]
pub(crate) fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Solves the square system `m z = rhs` by Gaussian elimination with partial
/// pivoting. `None` when a pivot falls below `1e-12` of the largest entry.
pub(crate) fn solve_dense<S: Scalar>(mut m: Vec<Vec<S>>, mut rhs: Vec<S>) -> Option<Vec<S>> {
    let n = rhs.len();
    let scale = m.iter().flat_map(|r| r.iter()).fold(S::zero(), |a, &v| a.max(v.abs()));
    if scale == S::zero() || !scale.is_finite() {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if m[pivot][col].abs() <= S::lit(1e-12) * scale {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != S::zero() {
                for k in col..n {
                    let v = m[col][k];
                    m[r][k] -= f * v;
                }
                let v = rhs[col];
                rhs[r] -= f * v;
            }
        }
    }
    let mut z = vec![S::zero(); n];
    for i in (0..n).rev() {
        let tail: S = (i + 1..n).map(|k| m[i][k] * z[k]).sum();
        z[i] = (rhs[i] - tail) / m[i][i];
    }
    z.iter().all(|v| v.is_finite()).then_some(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert_eq!(
            Vector::<f64>::new(vec![0.0, f64::NAN]).unwrap_err(),
            Error::NonFinite(1)
        );
        assert!(Vector::<f32>::new(vec![1.0, f32::INFINITY]).is_err());
    }

    #[test]
    fn basic_algebra() {
        let a = Vector::<f64>::from_f64(&[3.0, 4.0]).unwrap();
        let b = Vector::from_f64(&[1.0, 0.0]).unwrap();
        assert_eq!(a.norm(), 5.0);
        assert_eq!(a.dot(&b), 3.0);
        assert_eq!(a.sub(&b).as_slice(), &[2.0, 4.0]);
        assert_eq!(a.lincomb(0.5, 2.0, &b).as_slice(), &[3.5, 2.0]);
        let mut c = b.clone();
        c.axpy(2.0, &a);
        assert_eq!(c.as_slice(), &[7.0, 8.0]);
    }

    #[test]
    fn dense_solve() {
        let m = vec![vec![0.0, 2.0], vec![1.0, 1.0]];
        assert_eq!(solve_dense(m, vec![4.0, 3.0]), Some(vec![1.0, 2.0]));
        assert_eq!(solve_dense(vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![1.0, 2.0]), None);
    }
}
