use crate::error::Result;
use crate::problem::{Aggregation, ProblemInstance};
use crate::scalar::Scalar;
use crate::set::{project_simplex, project_symmetric_box};
use crate::vector::{dot, Vector};

use super::prox;

/// Pieces and faces within this much of being active count as active.
pub const ACTIVATION_TOL: f64 = 1e-8;

/// The near-stationarity triple at `x` for the prox point `x_hat`.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness<S> {
    /// `|x_hat - x|`
    pub step: S,
    /// `phi(x) - phi(x_hat)`; `+inf` when `x` is infeasible.
    pub descent: S,
    /// Estimate of `dist(0; subdiff phi(x_hat))`. `None` when the normal cone
    /// of the constraint set is not handled (simplices).
    pub stationarity: Option<S>,
    /// `|grad phi_lambda(x)|`
    pub grad_norm: S,
    pub prox_point: Vector<S>,
}

/// Computes `(|x_hat - x|, phi(x) - phi(x_hat), dist(0; subdiff phi(x_hat)))`.
///
/// The subdifferential distance is the min-norm point of the active face of
/// the subdifferential plus the normal cone, found by a small projected
/// gradient QP warm-started from the prox solve's dual weights. Activity is
/// judged with [`ACTIVATION_TOL`] widened by the certified prox error, so the
/// estimate never misses a piece active at the exact prox point.
pub fn near_stationarity_witness<S: Scalar>(
    problem: &ProblemInstance<S>,
    lambda: S,
    x: &Vector<S>,
    tol: S,
) -> Result<Witness<S>> {
    let floor = S::epsilon() * S::lit(1e4);
    let prox_tol = tol.min(S::lit(1e-12)).max(floor);
    let pr = prox(problem, lambda, x, prox_tol)?;
    let step = pr.prox_point.dist(x);
    let descent = problem.phi(x, S::lit(1e-12)) - problem.value(&pr.prox_point);
    let pieces_lip = problem.objective().pieces.max_row_norm();
    let act = S::lit(ACTIVATION_TOL) + S::lit(2.0) * pieces_lip * pr.distance_bound;
    let stationarity = subdifferential_distance(problem, &pr.prox_point, pr.dual.as_deref(), act);
    Ok(Witness { step, descent, stationarity, grad_norm: pr.gradient.norm(), prox_point: pr.prox_point })
}

/// `min |s|` over `s` in the active face of `subdiff g(point)`, plus the
/// quadratic part's gradient, plus the normal cone of `X`.
pub(crate) fn subdifferential_distance<S: Scalar>(
    problem: &ProblemInstance<S>,
    point: &Vector<S>,
    warm: Option<&[S]>,
    act: S,
) -> Option<S> {
    let objective = problem.objective();
    let p = &objective.pieces;
    let set = problem.set();
    let d = p.dim();
    let y = point.as_slice();

    let mut base = vec![S::zero(); d];
    if let Some(q) = &objective.quadratic {
        q.add_gradient(y, &mut base);
    }
    let affine: Vec<S> = (0..p.pieces()).map(|j| p.affine(j, y)).collect();
    let r = p.dual_scale();
    let active: Vec<usize> = match p.aggregation() {
        Aggregation::Max => {
            let top = affine.iter().copied().fold(S::neg_infinity(), S::max);
            (0..p.pieces()).filter(|&j| top - affine[j] <= act).collect()
        }
        Aggregation::MeanAbs => {
            for (j, &v) in affine.iter().enumerate() {
                if v.abs() > act {
                    let s = if v > S::zero() { r } else { -r };
                    for (b, &a) in base.iter_mut().zip(p.row(j)) {
                        *b += s * a;
                    }
                }
            }
            (0..p.pieces()).filter(|&j| affine[j].abs() <= act).collect()
        }
    };

    let project_face = |w: &mut [S]| match p.aggregation() {
        Aggregation::Max => project_simplex(w, S::one()),
        Aggregation::MeanAbs => project_symmetric_box(w, r),
    };
    let mut w: Vec<S> = match (warm, p.aggregation()) {
        (Some(dual), _) => active.iter().map(|&j| dual[j]).collect(),
        (None, Aggregation::Max) => vec![S::one() / S::from_usize_lossy(active.len()); active.len()],
        (None, Aggregation::MeanAbs) => vec![S::zero(); active.len()],
    };
    project_face(&mut w);

    let residual = |w: &[S]| -> Option<Vec<S>> {
        let mut s = base.clone();
        for (&j, &wj) in active.iter().zip(w) {
            for (si, &a) in s.iter_mut().zip(p.row(j)) {
                *si += wj * a;
            }
        }
        set.normal_residual(y, &s, act)
    };

    let mut res = residual(&w)?;
    let mut best = dot(&res, &res).sqrt();
    if active.is_empty() {
        return Some(best);
    }
    let frob: S = active.iter().map(|&j| dot(p.row(j), p.row(j))).sum();
    if frob == S::zero() {
        return Some(best);
    }
    let step = S::one() / frob;
    let mut v = w.clone();
    let mut w_prev = w.clone();
    let mut t = S::one();
    for _ in 0..20_000 {
        res = residual(&v)?;
        w_prev.copy_from_slice(&w);
        for (k, &j) in active.iter().enumerate() {
            w[k] = v[k] - step * dot(p.row(j), &res);
        }
        project_face(&mut w);
        let rw = residual(&w)?;
        let norm = dot(&rw, &rw).sqrt();
        if norm < best {
            best = norm;
        }
        let moved = w.iter().zip(&w_prev).fold(S::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        if moved <= S::lit(1e-13) || best == S::zero() {
            break;
        }
        let t_next = (S::one() + (S::one() + S::lit(4.0) * t * t).sqrt()) / S::lit(2.0);
        let beta = (t - S::one()) / t_next;
        for ((vi, &wi), &wp) in v.iter_mut().zip(&w).zip(&w_prev) {
            *vi = wi + beta * (wi - wp);
        }
        t = t_next;
    }
    Some(best)
}
