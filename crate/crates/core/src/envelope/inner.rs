//! Solvers for the prox subproblem
//!
//! ```text
//! min_{y in X}  g(y) + sum_i (a_i/2)|y - z_i|^2 + (1/(2 lambda))|y - x|^2
//! ```
//!
//! The quadratic part collapses to `(kappa/2)|y - c|^2 + const` with
//! `kappa = 1/lambda + A`, so for fixed dual weights `w` the minimizer over
//! `X` is `proj_X(c - A^T w / kappa)`.

use crate::error::{Error, Result};
use crate::problem::{Aggregation, Objective, PiecewiseLinear};
use crate::scalar::Scalar;
use crate::set::{project_simplex, project_symmetric_box, ConstraintSet, SetKind};
use crate::vector::{dist_sq, dot, solve_dense};

pub(crate) struct InnerProblem<'a, S: Scalar> {
    pub objective: &'a Objective<S>,
    pub set: &'a ConstraintSet<S>,
    pub x: &'a [S],
    pub lambda: S,
    pub kappa: S,
    pub center: Vec<S>,
}

pub(crate) struct InnerSolution<S> {
    pub point: Vec<S>,
    pub residual: S,
    pub dual: Option<Vec<S>>,
    pub iterations: u64,
}

impl<'a, S: Scalar> InnerProblem<'a, S> {
    pub fn new(objective: &'a Objective<S>, set: &'a ConstraintSet<S>, x: &'a [S], lambda: S) -> Self {
        let inv = S::one() / lambda;
        let mut kappa = inv;
        let mut center: Vec<S> = x.iter().map(|&xi| xi * inv).collect();
        if let Some(q) = &objective.quadratic {
            kappa += q.total_weight();
            for (a, z) in q.terms() {
                for (c, &zi) in center.iter_mut().zip(z.as_slice()) {
                    *c += *a * zi;
                }
            }
        }
        center.iter_mut().for_each(|c| *c /= kappa);
        Self { objective, set, x, lambda, kappa, center }
    }

    fn pieces(&self) -> &PiecewiseLinear<S> {
        &self.objective.pieces
    }

    /// Inner objective value at `y`.
    pub fn primal(&self, y: &[S]) -> S {
        self.objective.value(y) + dist_sq(y, self.x) / (S::lit(2.0) * self.lambda)
    }

    /// `proj_X(c - s / kappa)` written into `y`.
    fn minimizer_for(&self, s: &[S], y: &mut [S]) {
        for ((yi, &ci), &si) in y.iter_mut().zip(&self.center).zip(s) {
            *yi = ci - si / self.kappa;
        }
        self.set.project_in_place(y);
    }

    /// Fenchel gap `g(y) - <w, A y + b>`, summed termwise so it stays >= 0.
    fn gap(&self, w: &[S], affine: &[S]) -> S {
        let p = self.pieces();
        match p.aggregation() {
            Aggregation::Max => {
                let top = affine.iter().copied().fold(S::neg_infinity(), S::max);
                w.iter().zip(affine).map(|(&wj, &aj)| wj * (top - aj)).sum()
            }
            Aggregation::MeanAbs => {
                let r = p.dual_scale();
                w.iter().zip(affine).map(|(&wj, &aj)| r * aj.abs() - wj * aj).sum()
            }
        }
    }

    fn project_dual(&self, w: &mut [S]) {
        let p = self.pieces();
        match p.aggregation() {
            Aggregation::Max => project_simplex(w, S::one()),
            Aggregation::MeanAbs => project_symmetric_box(w, p.dual_scale()),
        }
    }

    /// Dual point supported on the pieces active at `y`.
    fn dual_at(&self, y: &[S]) -> Vec<S> {
        let p = self.pieces();
        let mut w = vec![S::zero(); p.pieces()];
        match p.aggregation() {
            Aggregation::Max => w[p.active_piece(y)] = S::one(),
            Aggregation::MeanAbs => {
                let r = p.dual_scale();
                for (j, wj) in w.iter_mut().enumerate() {
                    let v = p.affine(j, y);
                    *wj = if v > S::zero() {
                        r
                    } else if v < S::zero() {
                        -r
                    } else {
                        S::zero()
                    };
                }
            }
        }
        w
    }

    /// Solves the optimality system exactly on the pieces and box faces that
    /// look active at `y`. Returns the dual weights of the candidate, or
    /// `None` when the active structure is degenerate or not handled.
    fn polish(&self, y: &[S], piece_tol: S, face_tol: S) -> Option<Vec<S>> {
        let p = self.pieces();
        let d = p.dim();
        let mut fixed: Vec<Option<S>> = vec![None; d];
        match self.set.kind() {
            SetKind::Box { lower, upper } => {
                for (i, f) in fixed.iter_mut().enumerate() {
                    if y[i] <= lower[i] + face_tol {
                        *f = Some(lower[i]);
                    } else if y[i] >= upper[i] - face_tol {
                        *f = Some(upper[i]);
                    }
                }
            }
            SetKind::Ball { center, radius } => {
                if dist_sq(y, center.as_slice()).sqrt() >= *radius - face_tol {
                    return None;
                }
            }
            SetKind::Simplex { .. } => return None,
        }
        let free: Vec<usize> = (0..d).filter(|&i| fixed[i].is_none()).collect();
        // base point: fixed coordinates at their bounds, free ones at the center
        let base: Vec<S> = (0..d).map(|i| fixed[i].unwrap_or(self.center[i])).collect();
        let gram = |j: usize, k: usize| -> S {
            free.iter().map(|&i| p.row(j)[i] * p.row(k)[i]).sum::<S>() / self.kappa
        };

        let mut w = vec![S::zero(); p.pieces()];
        match p.aggregation() {
            Aggregation::Max => {
                let top = (0..p.pieces()).map(|j| p.affine(j, y)).fold(S::neg_infinity(), S::max);
                let active: Vec<usize> = (0..p.pieces()).filter(|&j| top - p.affine(j, y) <= piece_tol).collect();
                if active.len() > free.len() + 1 {
                    return None;
                }
                let n = active.len();
                let mut m = vec![vec![S::zero(); n + 1]; n + 1];
                let mut rhs = vec![S::zero(); n + 1];
                for (r, &j) in active.iter().enumerate() {
                    for (c, &k) in active.iter().enumerate() {
                        m[r][c] = gram(j, k);
                    }
                    m[r][n] = S::one();
                    m[n][r] = S::one();
                    rhs[r] = p.affine(j, &base);
                }
                rhs[n] = S::one();
                let z = solve_dense(m, rhs)?;
                for (&j, &wj) in active.iter().zip(&z) {
                    w[j] = wj;
                }
            }
            Aggregation::MeanAbs => {
                let r = p.dual_scale();
                let mut active = Vec::new();
                for (j, wj) in w.iter_mut().enumerate() {
                    let v = p.affine(j, y);
                    if v.abs() <= piece_tol {
                        active.push(j);
                    } else {
                        *wj = if v > S::zero() { r } else { -r };
                    }
                }
                if active.len() > free.len() {
                    return None;
                }
                if !active.is_empty() {
                    let mut shifted = base.clone();
                    for (j, &wj) in w.iter().enumerate() {
                        if wj != S::zero() {
                            for &i in &free {
                                shifted[i] -= wj * p.row(j)[i] / self.kappa;
                            }
                        }
                    }
                    let m = active.iter().map(|&j| active.iter().map(|&k| gram(j, k)).collect()).collect();
                    let rhs = active.iter().map(|&j| p.affine(j, &shifted)).collect();
                    let z = solve_dense(m, rhs)?;
                    for (&j, &wj) in active.iter().zip(&z) {
                        w[j] = wj;
                    }
                }
            }
        }
        self.project_dual(&mut w);
        Some(w)
    }

    /// Single affine piece under a max: the prox is a projected shift.
    pub fn solve_single_piece(&self) -> Option<InnerSolution<S>> {
        let p = self.pieces();
        if p.aggregation() != Aggregation::Max || p.pieces() != 1 {
            return None;
        }
        let mut y = vec![S::zero(); p.dim()];
        self.minimizer_for(p.row(0), &mut y);
        Some(InnerSolution { point: y, residual: S::zero(), dual: Some(vec![S::one()]), iterations: 0 })
    }

    /// Exact 1-D solve by enumerating breakpoints and per-segment stationary points.
    pub fn solve_interval(&self) -> Option<InnerSolution<S>> {
        let (lo, hi) = interval_of(self.set)?;
        let y = minimize_on_interval(self.pieces(), self.kappa, self.center[0], lo, hi, |y| {
            self.primal(&[y])
        });
        let dual = self.dual_at(&[y]);
        Some(InnerSolution { point: vec![y], residual: S::zero(), dual: Some(dual), iterations: 0 })
    }

    /// Accelerated projected gradient ascent on the dual with adaptive restart.
    /// Stops once the certified gap drops to `tol`.
    pub fn solve_dual(&self, tol: S, max_iter: u64) -> Result<InnerSolution<S>> {
        let p = self.pieces();
        let m = p.pieces();
        let d = p.dim();
        let lip = spectral_norm_sq(p) / self.kappa;
        if lip <= S::zero() {
            // every slope is zero, g is constant on X
            let mut y = vec![S::zero(); d];
            self.minimizer_for(&vec![S::zero(); d], &mut y);
            return Ok(InnerSolution { point: y, residual: S::zero(), dual: None, iterations: 0 });
        }
        let step = S::one() / lip;
        let row_norm = p.max_row_norm();

        let mut y = self.center.clone();
        self.set.project_in_place(&mut y);
        let mut w = self.dual_at(&y);
        let mut w_prev = w.clone();
        let mut v = w.clone();
        let mut s = vec![S::zero(); d];
        let mut grad = vec![S::zero(); m];
        let mut t = S::one();

        let mut best_gap = S::infinity();
        let mut best_y = y.clone();
        let mut best_w = w.clone();
        let check_every = 5;

        for k in 0..=max_iter {
            if k % check_every == 0 {
                p.transpose_mul(&w, &mut s);
                self.minimizer_for(&s, &mut y);
                p.affine_all(&y, &mut grad);
                let gap = self.gap(&w, &grad).max(S::zero());
                if gap < best_gap {
                    best_gap = gap;
                    best_y.copy_from_slice(&y);
                    best_w.copy_from_slice(&w);
                }
                if best_gap > S::zero() {
                    let reach = (S::lit(2.0) * gap / self.kappa).sqrt();
                    let piece_tol = S::lit(2.0) * row_norm * reach + S::lit(1e-12);
                    if let Some(wp) = self.polish(&y, piece_tol, reach + S::lit(1e-12)) {
                        p.transpose_mul(&wp, &mut s);
                        let mut yp = vec![S::zero(); d];
                        self.minimizer_for(&s, &mut yp);
                        p.affine_all(&yp, &mut grad);
                        let gp = self.gap(&wp, &grad).max(S::zero());
                        if gp < best_gap {
                            best_gap = gp;
                            best_y = yp;
                            best_w = wp;
                        }
                    }
                }
                if best_gap <= tol {
                    return Ok(InnerSolution {
                        point: best_y,
                        residual: best_gap,
                        dual: Some(best_w),
                        iterations: k,
                    });
                }
            }
            // gradient of the dual at the extrapolated point
            p.transpose_mul(&v, &mut s);
            self.minimizer_for(&s, &mut y);
            p.affine_all(&y, &mut grad);

            w_prev.copy_from_slice(&w);
            for ((wi, &vi), &gi) in w.iter_mut().zip(&v).zip(&grad) {
                *wi = vi + step * gi;
            }
            self.project_dual(&mut w);

            let progress: S = grad
                .iter()
                .zip(w.iter().zip(&w_prev))
                .map(|(&g, (&a, &b))| g * (a - b))
                .sum();
            if progress < S::zero() {
                t = S::one();
                v.copy_from_slice(&w);
            } else {
                let t_next = (S::one() + (S::one() + S::lit(4.0) * t * t).sqrt()) / S::lit(2.0);
                let beta = (t - S::one()) / t_next;
                for ((vi, &wi), &wp) in v.iter_mut().zip(&w).zip(&w_prev) {
                    *vi = wi + beta * (wi - wp);
                }
                t = t_next;
            }
        }
        Err(Error::ProxTolerance {
            tol: tol.to_f64_lossy(),
            best: best_gap.to_f64_lossy(),
            iterations: max_iter,
        })
    }

    /// Upper bound on the inner objective's subgradient norm over `X`.
    pub fn subgradient_bound(&self) -> Result<S> {
        let c = crate::vector::Vector::from_vec_unchecked(self.center.clone());
        let reach = self.set.diameter() + self.set.project(&c)?.dist(&c);
        Ok(self.pieces().lipschitz().max(self.pieces().max_row_norm()) + self.kappa * reach)
    }

    /// Deterministic subgradient of the inner objective.
    pub fn subgradient(&self, y: &[S], out: &mut [S]) {
        self.objective.subgradient(y, out);
        for ((o, &yi), &xi) in out.iter_mut().zip(y).zip(self.x) {
            *o += (yi - xi) / self.lambda;
        }
    }
}

/// Largest eigenvalue of `A^T A` by power iteration, padded slightly upward.
fn spectral_norm_sq<S: Scalar>(p: &PiecewiseLinear<S>) -> S {
    let d = p.dim();
    let m = p.pieces();
    let frob: S = (0..m).map(|j| dot(p.row(j), p.row(j))).sum();
    if frob == S::zero() {
        return S::zero();
    }
    if d == 1 || m == 1 {
        return frob;
    }
    let mut u: Vec<S> = (0..d).map(|i| S::one() + S::lit(0.37) * S::from_usize_lossy(i) / S::from_usize_lossy(d)).collect();
    let mut au = vec![S::zero(); m];
    let mut estimate = S::zero();
    for _ in 0..60 {
        p.affine_all(&u, &mut au);
        for (j, v) in au.iter_mut().enumerate() {
            *v -= p.offset(j);
        }
        let mut next = vec![S::zero(); d];
        p.transpose_mul(&au, &mut next);
        let norm = dot(&next, &next).sqrt();
        if norm == S::zero() {
            break;
        }
        estimate = norm / dot(&u, &u).sqrt();
        u = next.into_iter().map(|v| v / norm).collect();
    }
    (estimate * S::lit(1.05)).min(frob).max(frob / S::from_usize_lossy(d.min(m)))
}

/// `[lo, hi]` when the set is one-dimensional.
pub(crate) fn interval_of<S: Scalar>(set: &ConstraintSet<S>) -> Option<(S, S)> {
    if set.dim() != 1 {
        return None;
    }
    Some(match set.kind() {
        SetKind::Box { lower, upper } => (lower[0], upper[0]),
        SetKind::Ball { center, radius } => (center[0] - *radius, center[0] + *radius),
        SetKind::Simplex { scale, .. } => (*scale, *scale),
    })
}

/// Minimizes `value(y)` for `g(y) + (kappa/2)(y - c)^2` over `[lo, hi]` when
/// `g` is a 1-D piecewise-linear function. `kappa = 0` is allowed.
pub(crate) fn minimize_on_interval<S: Scalar>(
    p: &PiecewiseLinear<S>,
    kappa: S,
    c: S,
    lo: S,
    hi: S,
    value: impl Fn(S) -> S,
) -> S {
    let m = p.pieces();
    let slope = |j: usize| p.row(j)[0];
    let mut knots = vec![lo, hi];
    match p.aggregation() {
        Aggregation::Max => {
            for j in 0..m {
                for k in j + 1..m {
                    let ds = slope(j) - slope(k);
                    if ds != S::zero() {
                        knots.push((p.offset(k) - p.offset(j)) / ds);
                    }
                }
            }
        }
        Aggregation::MeanAbs => {
            for j in 0..m {
                if slope(j) != S::zero() {
                    knots.push(-p.offset(j) / slope(j));
                }
            }
        }
    }
    knots.retain(|&t| t >= lo && t <= hi);
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    knots.dedup();

    let mut candidates = knots.clone();
    if kappa > S::zero() {
        for pair in knots.windows(2) {
            let mid = (pair[0] + pair[1]) / S::lit(2.0);
            let mut g = [S::zero()];
            p.subgradient_into(&[mid], &mut g);
            let stationary = c - g[0] / kappa;
            if stationary > pair[0] && stationary < pair[1] {
                candidates.push(stationary);
            }
        }
    }
    let mut best = candidates[0];
    let mut best_val = value(best);
    for &y in &candidates[1..] {
        let v = value(y);
        if v < best_val {
            best = y;
            best_val = v;
        }
    }
    best
}
