use proptest::prelude::*;

use super::*;
use crate::oracle::seeded_stream;
use crate::problems::{generate, l1_regression, piecewise_max, ProblemKind, ProblemSpec};
use rand::Rng;

fn v(c: &[f64]) -> Vector<f64> {
    Vector::from_f64(c).unwrap()
}

fn abs_on(half_width: f64) -> ProblemInstance<f64> {
    piecewise_max(&[v(&[1.0]), v(&[-1.0])], vec![0.0, 0.0], 0.0, ConstraintSet::cube(1, half_width).unwrap(), None)
        .unwrap()
}

/// Grid minimization of `f` over `[lo, hi]` followed by a finer local grid.
fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let mut best = lo;
    let n = 200_000;
    for k in 0..=n {
        let y = lo + (hi - lo) * k as f64 / n as f64;
        if f(y) < f(best) {
            best = y;
        }
    }
    let h = (hi - lo) / n as f64;
    let (a, b) = ((best - h).max(lo), (best + h).min(hi));
    for k in 0..=20_000 {
        let y = a + (b - a) * k as f64 / 20_000.0;
        if f(y) < f(best) {
            best = y;
        }
    }
    best
}

#[test]
fn envelope_of_zero_is_identity() {
    let inst = piecewise_max(&[v(&[0.0, 0.0])], vec![0.0], 0.0, ConstraintSet::ball(Vector::zeros(2), 1e6).unwrap(), None)
        .unwrap();
    for lambda in [0.1, 1.0, 7.0] {
        let x = v(&[3.0, -2.5]);
        let pr = prox(&inst, lambda, &x, 1e-8).unwrap();
        assert_eq!(pr.prox_point, x);
        assert_eq!(pr.gradient.norm(), 0.0);
        assert_eq!(envelope_gradient(&inst, lambda, &x, 1e-8).unwrap().norm(), 0.0);
    }
}

#[test]
fn soft_threshold_matches_grid() {
    let inst = abs_on(10.0);
    for (x, want_prox, want_grad) in [(3.0, 2.0, 1.0), (0.5, 0.0, 0.5)] {
        let grid = grid_argmin(|y| y.abs() + 0.5 * (y - x) * (y - x), -10.0, 10.0);
        assert!((grid - want_prox).abs() < 1e-6);
        let pr = prox(&inst, 1.0, &v(&[x]), 1e-8).unwrap();
        assert!((pr.prox_point[0] - want_prox).abs() < 1e-12);
        assert!((pr.gradient[0] - want_grad).abs() < 1e-12);
        assert!(pr.residual <= 1e-8);
    }
}

#[test]
fn dual_route_matches_closed_form() {
    let inst = abs_on(10.0);
    let opts = ProxOptions { method: ProxMethod::Dual, ..ProxOptions::default() };
    let params = EnvelopeParams::new(1.0).unwrap();
    for x in [3.0, 0.5, -4.0] {
        let closed = prox(&inst, 1.0, &v(&[x]), 1e-12).unwrap();
        let dual = prox_with(&inst, params, &v(&[x]), 1e-12, &opts).unwrap();
        assert!(dual.residual <= 1e-12);
        assert!(dual.prox_point.dist(&closed.prox_point) <= dual.distance_bound + 1e-12);
    }
}

#[test]
fn subgradient_route_certifies_its_gap() {
    let inst = abs_on(4.0);
    let opts = ProxOptions { method: ProxMethod::Subgradient, ..ProxOptions::default() };
    let pr = prox_with(&inst, EnvelopeParams::new(1.0).unwrap(), &v(&[3.0]), 1e-4, &opts).unwrap();
    assert!(pr.residual <= 1e-4);
    assert!((pr.prox_point[0] - 2.0).abs() <= pr.distance_bound);
    assert!(pr.iterations > 1000);
}

#[test]
fn subgradient_route_reports_unreachable_tolerance() {
    let inst = abs_on(10.0);
    let opts = ProxOptions { method: ProxMethod::Subgradient, max_subgradient_iterations: 1000, ..ProxOptions::default() };
    let err = prox_with(&inst, EnvelopeParams::new(1.0).unwrap(), &v(&[3.0]), 1e-10, &opts).unwrap_err();
    match err {
        Error::ProxTolerance { best, iterations, .. } => {
            assert_eq!(iterations, 1000);
            assert!(best > 1e-10);
        }
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let inst = abs_on(1.0);
    assert!(prox(&inst, 1.0, &v(&[0.0]), 0.0).is_err());
    assert!(prox(&inst, -1.0, &v(&[0.0]), 1e-8).is_err());
    assert!(matches!(prox(&inst, 1.0, &v(&[0.0, 1.0]), 1e-8), Err(Error::DimensionMismatch { .. })));
    assert!(EnvelopeParams::<f64>::reciprocal(0.0).is_err());
    assert_eq!(EnvelopeParams::reciprocal(4.0).unwrap().lambda(), 0.25);
}

#[test]
fn gradient_vanishes_at_the_minimizer() {
    let spec = ProblemSpec::new(ProblemKind::DesignedMax, 5, 21);
    let inst = generate::<f64>(&spec).unwrap();
    let x_star = inst.known_min().unwrap().point.clone();
    for lambda in [0.1, 1.0] {
        let tol = 1e-8;
        let g = envelope_gradient(&inst, lambda, &x_star, tol).unwrap();
        assert!(g.norm() <= tol / lambda, "lambda {lambda}: |grad| = {:e}", g.norm());
    }
}

#[test]
fn regularization_identity_examples() {
    // h = 0: both sides reduce to lambda/(lambda+A) sum a_i (x - z_i)
    let zero = piecewise_max(&[v(&[0.0, 0.0])], vec![0.0], 0.0, ConstraintSet::ball(Vector::zeros(2), 1e6).unwrap(), None)
        .unwrap();
    let pert = QuadraticPerturbation::new(vec![(1.0, v(&[1.0, 0.0])), (2.0, v(&[0.0, -1.0]))]).unwrap();
    let x = v(&[0.5, 0.5]);
    let id = envelope_of_regularization(&zero, &pert, 2.0, &x, 1e-10).unwrap();
    let mut expected = Vector::zeros(2);
    for (a, z) in pert.terms() {
        expected.axpy(*a, &x.sub(z));
    }
    let expected = expected.scaled(2.0 / 5.0);
    assert!(id.lhs.dist(&expected) < 1e-9);
    assert!(id.rhs.dist(&expected) < 1e-9);

    // h = |x|, a = 1, z = 0, lambda = 1, x = 3: prox of |y| + y^2/2 + (y-3)^2/2 is 1
    let h = abs_on(10.0);
    let grid = grid_argmin(|y| y.abs() + 0.5 * y * y + 0.5 * (y - 3.0) * (y - 3.0), -10.0, 10.0);
    let id = envelope_of_regularization(&h, &QuadraticPerturbation::single(1.0, v(&[0.0])).unwrap(), 1.0, &v(&[3.0]), 1e-8)
        .unwrap();
    assert!((id.lhs[0] - (3.0 - grid)).abs() < 1e-5);
    assert!(id.discrepancy() < 1e-8);
    assert!((id.centroid[0] - 1.5).abs() < 1e-15);

    // vanishing weight: both sides approach grad h_{1/lambda}(x)
    let tiny = QuadraticPerturbation::single(1e-12, v(&[0.0])).unwrap();
    let id = envelope_of_regularization(&h, &tiny, 1.0, &v(&[3.0]), 1e-8).unwrap();
    assert!((id.lhs[0] - 1.0).abs() < 1e-9 && (id.rhs[0] - 1.0).abs() < 1e-9);
}

#[test]
fn regularization_identity_on_a_box() {
    let spec = ProblemSpec::new(ProblemKind::PiecewiseMax, 4, 8);
    let h = generate::<f64>(&spec).unwrap();
    let mut rng = seeded_stream(5);
    for _ in 0..10 {
        let terms = (0..3)
            .map(|_| (rng.gen_range(0.1..2.0), Vector::from_f64(&[0.0; 4].map(|_: f64| rng.gen_range(-1.0..1.0))).unwrap()))
            .collect();
        let pert = QuadraticPerturbation::new(terms).unwrap();
        let x = Vector::from_f64(&[0.0; 4].map(|_: f64| rng.gen_range(-1.5..1.5))).unwrap();
        let id = envelope_of_regularization(&h, &pert, 1.7, &x, 1e-10).unwrap();
        assert!(id.discrepancy() < 1e-5, "discrepancy {:e}", id.discrepancy());
    }
}

#[test]
fn witness_on_absolute_value() {
    let inst = abs_on(10.0);
    let w = near_stationarity_witness(&inst, 1.0, &v(&[3.0]), 1e-6).unwrap();
    assert!((w.step - 1.0).abs() < 1e-12);
    assert!((w.descent - 1.0).abs() < 1e-12);
    let s = w.stationarity.unwrap();
    assert!((s - 1.0).abs() < 1e-9);
    assert!(s <= w.grad_norm + 1e-6);
}

#[test]
fn witness_at_the_minimizer_is_zero() {
    let inst = abs_on(10.0);
    let w = near_stationarity_witness(&inst, 2.0, &v(&[0.0]), 1e-6).unwrap();
    assert!(w.step < 1e-12 && w.descent.abs() < 1e-12);
    assert!(w.stationarity.unwrap() < 1e-9);
}

#[test]
fn witness_on_a_simplex_is_partial() {
    let inst = piecewise_max(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])], vec![0.0, 0.0], 0.0, ConstraintSet::simplex(2, 1.0).unwrap(), None)
        .unwrap();
    let w = near_stationarity_witness(&inst, 1.0, &v(&[0.3, 0.7]), 1e-6).unwrap();
    assert!(w.stationarity.is_none());
    assert!(w.descent >= -1e-6);
}

#[test]
fn witness_triples_on_random_points() {
    let spec = ProblemSpec::new(ProblemKind::PiecewiseMax, 3, 14);
    let inst = generate::<f64>(&spec).unwrap();
    let mut rng = seeded_stream(2);
    for _ in 0..20 {
        let x = Vector::from_f64(&[0.0; 3].map(|_: f64| rng.gen_range(-1.0..1.0))).unwrap();
        let lambda = rng.gen_range(0.2..2.0);
        let w = near_stationarity_witness(&inst, lambda, &x, 1e-6).unwrap();
        assert!((w.step - lambda * w.grad_norm).abs() <= 1e-6);
        assert!(w.descent >= -1e-6);
        assert!(w.stationarity.unwrap() <= w.grad_norm + 1e-6);
    }
}

#[test]
fn l1_prox_on_a_ball() {
    let rows = vec![(v(&[1.0, 0.0]), 0.5), (v(&[0.0, 1.0]), -0.5), (v(&[1.0, 1.0]), 0.0)];
    let inst = l1_regression(&rows, ConstraintSet::ball(Vector::zeros(2), 1.0).unwrap(), None).unwrap();
    let x = v(&[2.0, 0.3]);
    let pr = prox(&inst, 0.5, &x, 1e-12).unwrap();
    assert!(inst.set().contains(&pr.prox_point, 1e-12));
    let opts = ProxOptions { method: ProxMethod::Subgradient, ..ProxOptions::default() };
    let slow = prox_with(&inst, EnvelopeParams::new(0.5).unwrap(), &x, 1e-4, &opts).unwrap();
    assert!(slow.prox_point.dist(&pr.prox_point) <= slow.distance_bound + pr.distance_bound);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_is_exactly_the_prox_step(x in prop::array::uniform3(-2.0f64..2.0), lambda in 0.05f64..5.0, seed in 0u64..50) {
        let inst = generate::<f64>(&ProblemSpec::new(ProblemKind::PiecewiseMax, 3, seed)).unwrap();
        let x = Vector::from_f64(&x).unwrap();
        let pr = prox(&inst, lambda, &x, 1e-8).unwrap();
        prop_assert!(pr.residual <= 1e-8);
        prop_assert!(inst.set().contains(&pr.prox_point, 1e-12));
        let back = pr.gradient.scaled(lambda).add(&pr.prox_point);
        prop_assert!(back.max_abs_diff(&x) <= 1e-14 * (1.0 + x.norm()));
    }

    #[test]
    fn gradient_is_lipschitz(
        x in prop::array::uniform4(-1.5f64..1.5),
        y in prop::array::uniform4(-1.5f64..1.5),
        lambda in 0.1f64..3.0,
        seed in 0u64..50,
    ) {
        let tol = 1e-10;
        let inst = generate::<f64>(&ProblemSpec::new(ProblemKind::L1Regression, 4, seed)).unwrap();
        let (x, y) = (Vector::from_f64(&x).unwrap(), Vector::from_f64(&y).unwrap());
        let gx = prox(&inst, lambda, &x, tol).unwrap();
        let gy = prox(&inst, lambda, &y, tol).unwrap();
        // the distance bounds turn the gap tolerance into a gradient tolerance
        let slack = (gx.distance_bound + gy.distance_bound) / lambda;
        prop_assert!(gx.gradient.dist(&gy.gradient) <= x.dist(&y) / lambda + 2.0 * tol / lambda + slack);
    }
}
