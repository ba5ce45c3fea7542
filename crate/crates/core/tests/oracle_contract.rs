use std::sync::Arc;

use gradreg::oracle::{seeded_stream, shift_oracle, StochasticOracle};
use gradreg::problems::{generate, ProblemKind, ProblemParams, ProblemSpec};
use gradreg::{ProblemInstance, Vector};
use rand::Rng;

fn random_point(rng: &mut impl Rng, d: usize, half: f64) -> Vector<f64> {
    Vector::new((0..d).map(|_| rng.gen_range(-half..half)).collect()).unwrap()
}

/// Sample mean of `n` draws and the standard error of that mean, in norm.
fn mean_and_se(oracle: &dyn StochasticOracle<f64>, x: &Vector<f64>, n: usize, seed: u64) -> (Vec<f64>, f64) {
    let d = x.dim();
    let mut stream = seeded_stream(seed);
    let mut g = vec![0.0; d];
    let mut sum = vec![0.0; d];
    let mut sum_sq = 0.0;
    for _ in 0..n {
        oracle.sample_into(x.as_slice(), &mut stream, &mut g);
        for (s, v) in sum.iter_mut().zip(&g) {
            *s += v;
        }
        sum_sq += g.iter().map(|v| v * v).sum::<f64>();
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
    let mean_sq: f64 = mean.iter().map(|v| v * v).sum();
    let var_trace = (sum_sq / n as f64 - mean_sq).max(0.0);
    (mean, (var_trace / n as f64).sqrt())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `(1/n) sum sign(<a_k, x> + b_k) a_k` straight from the row data.
fn l1_subgradient(inst: &ProblemInstance<f64>, x: &[f64]) -> Vec<f64> {
    let p = &inst.objective().pieces;
    let mut out = vec![0.0; p.dim()];
    for k in 0..p.pieces() {
        let r: f64 = p.row(k).iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + p.offset(k);
        let s = if r > 0.0 { 1.0 } else if r < 0.0 { -1.0 } else { 0.0 };
        for (o, a) in out.iter_mut().zip(p.row(k)) {
            *o += s * a / p.pieces() as f64;
        }
    }
    out
}

fn noisy_l1(d: usize, seed: u64) -> ProblemInstance<f64> {
    let params = ProblemParams { rows: Some(40), noise: 0.3, ..ProblemParams::default() };
    generate(&ProblemSpec::new(ProblemKind::L1Regression, d, seed).with_params(params)).unwrap()
}

#[test]
fn l1_oracle_is_unbiased() {
    let inst = noisy_l1(10, 42);
    let oracle = inst.oracle();
    let mut rng = seeded_stream(1);
    for i in 0..20 {
        let x = random_point(&mut rng, 10, 1.0);
        let truth = l1_subgradient(&inst, x.as_slice());
        let (mean, se) = mean_and_se(oracle.as_ref(), &x, 100_000, 100 + i);
        assert!(dist(&mean, &truth) <= 3.0 * se, "point {i}: {} > 3 * {se}", dist(&mean, &truth));
    }
}

#[test]
fn finite_sum_average_is_the_subgradient() {
    let inst = noisy_l1(6, 3);
    let mut rng = seeded_stream(2);
    for _ in 0..20 {
        let x = random_point(&mut rng, 6, 1.0);
        let mut g = vec![0.0; 6];
        inst.objective().subgradient(x.as_slice(), &mut g);
        assert!(dist(&g, &l1_subgradient(&inst, x.as_slice())) < 1e-14);
    }
}

#[test]
fn noisy_max_oracle_is_unbiased() {
    let params = ProblemParams { noise: 0.5, ..ProblemParams::default() };
    let inst = generate::<f64>(&ProblemSpec::new(ProblemKind::PiecewiseMax, 5, 8).with_params(params)).unwrap();
    let p = &inst.objective().pieces;
    let mut rng = seeded_stream(4);
    for i in 0..10 {
        let x = random_point(&mut rng, 5, 1.0);
        let truth = p.row(p.active_piece(x.as_slice())).to_vec();
        let (mean, se) = mean_and_se(inst.oracle().as_ref(), &x, 50_000, i);
        assert!(dist(&mean, &truth) <= 3.0 * se);
    }
}

#[test]
fn second_moment_bound_holds_on_every_generator() {
    let mut specs = Vec::new();
    for kind in [ProblemKind::L1Regression, ProblemKind::PiecewiseMax, ProblemKind::DesignedMax] {
        for (noise, sc) in [(0.0, None), (0.4, None), (0.0, Some(0.7))] {
            let params = ProblemParams { noise, strong_convexity: sc, ..ProblemParams::default() };
            specs.push(ProblemSpec::new(kind, 7, 17).with_params(params));
        }
    }
    let mut rng = seeded_stream(9);
    for spec in specs {
        let inst = generate::<f64>(&spec).unwrap();
        let oracle = inst.oracle();
        let l2 = inst.lipschitz() * inst.lipschitz();
        assert!(oracle.base_bound() <= inst.lipschitz() + 1e-12);
        for i in 0..20 {
            let mut x = random_point(&mut rng, 7, 2.0);
            x = inst.set().project(&x).unwrap();
            let mut stream = seeded_stream(i);
            let mut g = vec![0.0; 7];
            let n = 20_000;
            let mut vals = Vec::with_capacity(n);
            for _ in 0..n {
                oracle.sample_into(x.as_slice(), &mut stream, &mut g);
                vals.push(g.iter().map(|v| v * v).sum::<f64>());
            }
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            assert!(mean <= l2 * (1.0 + 1e-12) + 3.0 * (var / n as f64).sqrt(), "{spec:?}: {mean} > {l2}");
        }
    }
}

#[test]
fn shifts_compose() {
    let inst = noisy_l1(4, 5);
    let base = inst.oracle();
    let c1 = Vector::new(vec![0.1, -0.2, 0.3, 0.0]).unwrap();
    let c2 = Vector::new(vec![-0.5, 0.5, 0.2, 0.1]).unwrap();
    let twice = shift_oracle(Arc::clone(&base), 2.0, &c1, inst.diameter()).unwrap().shift(4.0, &c2).unwrap();
    let x = Vector::new(vec![0.3, 0.3, -0.7, 0.9]).unwrap();
    let (mut s1, mut s2) = (seeded_stream(11), seeded_stream(11));
    for _ in 0..100 {
        let got = twice.sample(&x, &mut s1).unwrap();
        let mut want = base.sample(&x, &mut s2).unwrap();
        want.axpy(2.0, &x.sub(&c1));
        want.axpy(4.0, &x.sub(&c2));
        assert!(got.max_abs_diff(&want) < 1e-14);
    }
}

#[test]
fn shifted_mean_matches_regularized_subgradient() {
    let inst = noisy_l1(5, 6);
    let c = Vector::new(vec![0.2; 5]).unwrap();
    let shifted = shift_oracle(inst.oracle(), 1.5, &c, inst.diameter()).unwrap();
    let mut rng = seeded_stream(12);
    for i in 0..5 {
        let x = random_point(&mut rng, 5, 1.0);
        let mut truth = l1_subgradient(&inst, x.as_slice());
        for ((t, xi), ci) in truth.iter_mut().zip(x.iter()).zip(c.iter()) {
            *t += 1.5 * (xi - ci);
        }
        let (mean, se) = mean_and_se(&shifted, &x, 50_000, 40 + i);
        assert!(dist(&mean, &truth) <= 3.0 * se);
    }
}

#[test]
fn streams_are_deterministic() {
    let inst = noisy_l1(3, 1);
    let x = Vector::new(vec![0.1, 0.2, 0.3]).unwrap();
    let draw = |seed| {
        let mut s = seeded_stream(seed);
        (0..50).map(|_| inst.oracle().sample(&x, &mut s).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(draw(7), draw(7));
    assert_ne!(draw(7), draw(8));
}
