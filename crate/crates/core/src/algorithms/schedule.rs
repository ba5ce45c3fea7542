use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vector::Vector;

/// Regularization weights and centers accumulated by gradual regularization.
///
/// With base weight `mu` and `I` outer rounds: `mu_i = mu * 2^i` for
/// `i = 1..=I`, `M_i = mu_1 + ... + mu_i` (`M_0 = 0`), and inner solve `i`
/// (for `i = 0..=I`) runs with strong convexity constant `mu + M_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizationSchedule<S> {
    mu0: S,
    mus: Vec<S>,
    partial_sums: Vec<S>,
    centers: Vec<Vector<S>>,
}

impl<S: Scalar> RegularizationSchedule<S> {
    pub fn new(mu: S, rounds: u32) -> Result<Self> {
        if !(mu > S::zero() && mu.is_finite()) {
            return Err(Error::Precondition(format!("base weight must be positive, got {mu}")));
        }
        let mut mus = Vec::with_capacity(rounds as usize);
        let mut partial_sums = Vec::with_capacity(rounds as usize + 1);
        partial_sums.push(S::zero());
        let mut weight = mu;
        for _ in 0..rounds {
            weight = weight * S::lit(2.0);
            mus.push(weight);
            let last = *partial_sums.last().expect("M_0 present");
            partial_sums.push(last + weight);
        }
        Ok(Self { mu0: mu, mus, partial_sums, centers: Vec::new() })
    }

    pub fn mu(&self) -> S {
        self.mu0
    }

    /// `I`
    pub fn rounds(&self) -> u32 {
        self.mus.len() as u32
    }

    /// `mu_1, ..., mu_I`
    pub fn weights(&self) -> &[S] {
        &self.mus
    }

    /// `M_0, ..., M_I`
    pub fn partial_sums(&self) -> &[S] {
        &self.partial_sums
    }

    /// `M = M_I`
    pub fn total_weight(&self) -> S {
        *self.partial_sums.last().expect("M_0 present")
    }

    /// Strong convexity constant `mu + M_i` of inner solve `i`.
    pub fn inner_constant(&self, round: usize) -> S {
        self.mu0 + self.partial_sums[round]
    }

    /// `x_hat_1, ..., x_hat_{I+1}` recorded so far.
    pub fn centers(&self) -> &[Vector<S>] {
        &self.centers
    }

    pub(crate) fn push_center(&mut self, center: Vector<S>) {
        self.centers.push(center);
    }

    /// `mu_1 / mu = 2` and `mu_i / (mu + M_{i-1}) <= 2` for `i > 1`.
    pub fn check_ratio_bound(&self) -> Result<()> {
        let two = S::lit(2.0);
        let slack = S::lit(1e-12) * two;
        for (k, &mu_i) in self.mus.iter().enumerate() {
            let ratio = mu_i / (self.mu0 + self.partial_sums[k]);
            let ok = if k == 0 { (ratio - two).abs() <= slack } else { ratio <= two + slack };
            if !ok {
                return Err(Error::Contract(format!("ratio bound violated at round {}: {ratio}", k + 1)));
            }
        }
        Ok(())
    }

    /// Output weights `(mu_1, ..., mu_I, lambda)`.
    pub fn averaging_weights(&self, lambda: S) -> Vec<S> {
        let mut w = self.mus.clone();
        w.push(lambda);
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrences_for_unit_mu() {
        let s = RegularizationSchedule::new(1.0f64, 3).unwrap();
        assert_eq!(s.weights(), &[2.0, 4.0, 8.0]);
        assert_eq!(s.partial_sums(), &[0.0, 2.0, 6.0, 14.0]);
        let inner: Vec<f64> = (0..=3).map(|i| s.inner_constant(i)).collect();
        assert_eq!(inner, vec![1.0, 3.0, 7.0, 15.0]);
        s.check_ratio_bound().unwrap();
    }

    #[test]
    fn closed_form_total() {
        for rounds in 0..20u32 {
            let s = RegularizationSchedule::new(0.3f64, rounds).unwrap();
            let expected = 2.0 * 0.3 * (2f64.powi(rounds as i32) - 1.0);
            assert!((s.total_weight() - expected).abs() <= 1e-12 * (1.0 + expected));
            assert!(s.partial_sums().windows(2).all(|w| w[1] > w[0]));
            s.check_ratio_bound().unwrap();
            assert_eq!(s.averaging_weights(1.0).len(), rounds as usize + 1);
        }
    }
}
