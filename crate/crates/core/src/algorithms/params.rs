use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `ceil(log2(v))`, treating values within `1e-12` of an integer as that integer.
pub fn ceil_log2(v: f64) -> u32 {
    let l = v.log2();
    let r = l.round();
    let exp = if (l - r).abs() < 1e-12 { r } else { l.ceil() };
    exp.max(0.0) as u32
}

/// Outer rounds `ceil(log2(1 + lambda/(2 mu)))`, the smallest count with `M >= lambda`.
pub fn averaging_rounds<S: Scalar>(mu: S, lambda: S) -> Result<u32> {
    if !(mu > S::zero() && lambda > S::zero()) {
        return Err(Error::Precondition("mu and lambda must be positive".into()));
    }
    Ok(ceil_log2(1.0 + lambda.to_f64_lossy() / (2.0 * mu.to_f64_lossy())))
}

/// Parameters of the regularized method for a target accuracy `epsilon`:
/// `mu = eps/(2D)`, `lambda = 2 rho - mu`, `I = ceil(log2(3/4 + rho D / eps))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ConvexParams<S> {
    pub rho: S,
    pub epsilon: S,
    pub diameter: S,
    pub mu: S,
    pub lambda: S,
    pub rounds: u32,
}

impl<S: Scalar> ConvexParams<S> {
    pub fn from_target(rho: S, epsilon: S, diameter: S) -> Result<Self> {
        if !(diameter > S::zero() && diameter.is_finite()) {
            return Err(Error::Config(format!("diameter must be positive, got {diameter}")));
        }
        if !(rho > S::zero() && rho.is_finite()) {
            return Err(Error::Config(format!("rho must be positive, got {rho}")));
        }
        if !(epsilon > S::zero()) {
            return Err(Error::Precondition(format!("epsilon must be positive, got {epsilon}")));
        }
        let two = S::lit(2.0);
        if epsilon > two * rho * diameter {
            return Err(Error::Precondition(format!(
                "epsilon {epsilon} exceeds 2 rho D = {}",
                two * rho * diameter
            )));
        }
        let mu = epsilon / (two * diameter);
        let lambda = two * rho - mu;
        let ratio = (rho * diameter / epsilon).to_f64_lossy();
        let rounds = ceil_log2(0.75 + ratio);
        Ok(Self { rho, epsilon, diameter, mu, lambda, rounds })
    }

    /// Envelope parameter `1/(2 rho)` (in the `phi_lambda` convention) the guarantee is stated for.
    pub fn envelope_lambda(&self) -> S {
        S::one() / (self.lambda + self.mu)
    }
}

/// Right-hand side of the convex-case guarantee for `T` inner iterations:
/// `28 sqrt(2) log2(3/4 + rho D/eps) sqrt(2 L^2 + 3 rho^2 D^2) / sqrt(T+1) + eps/2`.
pub fn convex_bound(rho: f64, epsilon: f64, lipschitz: f64, diameter: f64, iterations: u64) -> f64 {
    let log = (0.75 + rho * diameter / epsilon).log2();
    let constant = 28.0 * std::f64::consts::SQRT_2 * log;
    let scale = (2.0 * lipschitz * lipschitz + 3.0 * rho * rho * diameter * diameter).sqrt();
    constant * scale / ((iterations + 1) as f64).sqrt() + epsilon / 2.0
}

/// Smallest `T` for which [`convex_bound`] is at most `epsilon`:
/// `T + 1 >= (2/eps)^2 (28 sqrt(2) log2(3/4 + rho D/eps))^2 (2 L^2 + 3 rho^2 D^2)`.
pub fn convex_budget(rho: f64, epsilon: f64, lipschitz: f64, diameter: f64) -> Result<u64> {
    ConvexParams::from_target(rho, epsilon, diameter)?;
    if !(lipschitz >= 0.0) {
        return Err(Error::Config("Lipschitz constant must be >= 0".into()));
    }
    let log = (0.75 + rho * diameter / epsilon).log2();
    let constant = 28.0 * std::f64::consts::SQRT_2 * log;
    let needed = (2.0 / epsilon).powi(2)
        * constant
        * constant
        * (2.0 * lipschitz * lipschitz + 3.0 * rho * rho * diameter * diameter);
    if !needed.is_finite() || needed > u64::MAX as f64 {
        return Err(Error::Config("iteration budget overflows".into()));
    }
    Ok((needed.ceil() as u64).saturating_sub(1).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_epsilon() {
        let p = ConvexParams::from_target(1.0f64, 2.0, 1.0).unwrap();
        assert_eq!((p.mu, p.lambda, p.rounds), (1.0, 1.0, 1));
        let p = ConvexParams::from_target(0.5f64, 3.0, 3.0).unwrap();
        assert_eq!((p.mu, p.lambda, p.rounds), (0.5, 0.5, 1));
    }

    #[test]
    fn quarter_epsilon() {
        let p = ConvexParams::from_target(1.0f64, 0.25, 1.0).unwrap();
        assert_eq!((p.mu, p.lambda, p.rounds), (0.125, 1.875, 3));
        assert_eq!(p.lambda + p.mu, 2.0 * p.rho);
        assert_eq!(p.envelope_lambda(), 0.5);
    }

    #[test]
    fn precondition_errors() {
        assert!(matches!(ConvexParams::from_target(1.0f64, 2.5, 1.0), Err(Error::Precondition(_))));
        assert!(matches!(ConvexParams::from_target(1.0f64, 0.5, 0.0), Err(Error::Config(_))));
        assert!(convex_budget(1.0, 3.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn rounds_exact_powers() {
        assert_eq!(ceil_log2(4.0), 2);
        assert_eq!(ceil_log2(4.000001), 3);
        assert_eq!(ceil_log2(1.0), 0);
        assert_eq!(averaging_rounds(1.0f64, 6.0).unwrap(), 2);
        assert_eq!(averaging_rounds(1.0f64, 7.0).unwrap(), 3);
    }

    #[test]
    fn boundary_budget_is_pinned() {
        // (2/2)^2 (28 sqrt(2) log2(1.25))^2 * 5 = 812.52
        assert_eq!(convex_budget(1.0, 2.0, 1.0, 1.0).unwrap(), 812);
    }

    #[test]
    fn budget_meets_bound_minimally() {
        for &(rho, eps, l, d) in &[(1.0, 2.0, 1.0, 1.0), (1.0, 0.1, 1.0, 1.0), (5.0, 1.0, 0.3, 2.0)] {
            let t = convex_budget(rho, eps, l, d).unwrap();
            assert!(convex_bound(rho, eps, l, d, t) <= eps * (1.0 + 1e-12));
            assert!(convex_bound(rho, eps, l, d, t - 1) > eps);
        }
    }

    #[test]
    fn budget_monotone_in_epsilon() {
        let mut last = 0;
        for k in (1..=40).rev() {
            let eps = 2.0 * k as f64 / 40.0;
            let t = convex_budget(1.0, eps, 1.0, 1.0).unwrap();
            assert!(t >= last);
            last = t;
        }
        // halving epsilon roughly quadruples the budget, up to the log factor
        let ratio = convex_budget(1.0, 1e-3, 1.0, 1.0).unwrap() as f64
            / convex_budget(1.0, 2e-3, 1.0, 1.0).unwrap() as f64;
        let logs = ((0.75f64 + 1e3).log2() / (0.75f64 + 500.0).log2()).powi(2);
        assert!((ratio / (4.0 * logs) - 1.0).abs() < 1e-6);
    }
}
