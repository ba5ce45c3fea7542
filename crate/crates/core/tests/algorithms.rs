use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use gradreg::algorithms::{
    baseline_psgd_traced, gr_convex, gr_convex_traced, gr_sc, gr_sc_traced, pssm_sc, pssm_sc_traced,
    averaging_rounds, BaselineConfig, CheckpointPolicy, ConvergenceRecord, ConvexParams, GrConvexConfig,
    GrScConfig, PssmConfig, Trace,
};
use gradreg::envelope::EnvelopeParams;
use gradreg::oracle::{seeded_stream, StochasticOracle, Stream};
use gradreg::problems::{generate, ProblemKind, ProblemParams, ProblemSpec};
use gradreg::{ProblemInstance, Vector};

struct Counting {
    inner: Arc<dyn StochasticOracle<f64>>,
    calls: AtomicU64,
}

impl StochasticOracle<f64> for Counting {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn sample_into(&self, x: &[f64], stream: &mut Stream, out: &mut [f64]) {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.sample_into(x, stream, out);
    }
    fn second_moment_bound(&self) -> f64 {
        self.inner.second_moment_bound()
    }
}

fn l1(d: usize, seed: u64) -> ProblemInstance<f64> {
    let params = ProblemParams { rows: Some(60), noise: 0.2, ..ProblemParams::default() };
    generate(&ProblemSpec::new(ProblemKind::L1Regression, d, seed).with_params(params)).unwrap()
}

fn strongly_convex(d: usize, seed: u64, mu: f64) -> ProblemInstance<f64> {
    let params = ProblemParams { noise: 0.3, strong_convexity: Some(mu), ..ProblemParams::default() };
    generate(&ProblemSpec::new(ProblemKind::DesignedMax, d, seed).with_params(params)).unwrap()
}

#[test]
fn gr_sc_call_accounting() {
    let inst = strongly_convex(3, 1, 1.0);
    for (t, rounds) in [(1u64, 0u32), (5, 0), (7, 3), (20, 2)] {
        let counting = Arc::new(Counting { inner: inst.oracle(), calls: AtomicU64::new(0) });
        let cfg = GrScConfig::new(inst.set().center(), 1.0, 6.0, t, rounds).unwrap();
        let out = gr_sc(&cfg, counting.clone(), inst.set(), &mut seeded_stream(0)).unwrap();
        let expected = (rounds as u64 + 1) * (t - 1);
        assert_eq!(counting.calls.load(Ordering::Relaxed), expected);
        assert_eq!(out.oracle_calls, expected);
    }
}

#[test]
fn gr_convex_call_accounting() {
    let inst = l1(4, 2);
    let cfg = GrConvexConfig { center: inst.set().center(), rho: 1.0, epsilon: 0.1, iterations: 33 };
    let out = gr_convex(&cfg, &inst, &mut seeded_stream(4)).unwrap();
    let params = ConvexParams::from_target(1.0, 0.1, inst.diameter()).unwrap();
    assert_eq!(out.oracle_calls, (params.rounds as u64 + 1) * 32);
    assert_eq!(out.params, params);
    assert_eq!(out.inner.schedule.centers().len(), params.rounds as usize + 1);
}

#[test]
fn default_rounds_force_m_equal_lambda() {
    let inst = strongly_convex(2, 3, 1.0);
    let rounds = averaging_rounds(1.0, 6.0).unwrap();
    assert_eq!(rounds, 2);
    let cfg = GrScConfig::new(inst.set().center(), 1.0, 6.0, 10, rounds).unwrap();
    let out = gr_sc(&cfg, inst.oracle(), inst.set(), &mut seeded_stream(1)).unwrap();
    assert_eq!(out.schedule.weights(), &[2.0, 4.0]);
    assert_eq!(out.schedule.total_weight(), 6.0);
}

#[test]
fn zero_rounds_reduce_to_the_inner_method() {
    let inst = strongly_convex(3, 4, 0.5);
    let x0 = inst.set().center();
    let cfg = GrScConfig::new(x0.clone(), 0.5, 2.0, 50, 0).unwrap();
    let a = gr_sc(&cfg, inst.oracle(), inst.set(), &mut seeded_stream(9)).unwrap();
    let b = pssm_sc(&PssmConfig::new(x0, 0.5, 50).unwrap(), inst.oracle().as_ref(), inst.set(), &mut seeded_stream(9))
        .unwrap();
    assert_eq!(a.point, b);
}

#[test]
fn every_checkpoint_is_feasible() {
    let inst = l1(5, 7);
    let set = inst.set();
    let check = |trace: &Trace<f64>| {
        assert!(!trace.points().is_empty());
        for (_, p) in trace.points() {
            assert!(set.contains(p, 1e-12));
        }
        let calls: Vec<u64> = trace.points().iter().map(|(c, _)| *c).collect();
        assert!(calls.windows(2).all(|w| w[0] < w[1]), "{calls:?}");
    };
    // far-off start: the first step of the strongly convex method is huge
    let corner = set.project(&Vector::new(vec![5.0; 5]).unwrap()).unwrap();

    let mut trace = Trace::new(CheckpointPolicy::Geometric);
    let sc = strongly_convex(5, 7, 1e-3);
    pssm_sc_traced(&PssmConfig::new(corner.clone(), 1e-3, 300).unwrap(), sc.oracle().as_ref(), sc.set(), &mut seeded_stream(1), &mut trace)
        .unwrap();
    check(&trace);

    let mut trace = Trace::new(CheckpointPolicy::Geometric);
    let cfg = GrScConfig::new(corner.clone(), 0.01, 3.0, 100, 4).unwrap();
    gr_sc_traced(&cfg, sc.oracle(), sc.set(), &mut seeded_stream(2), &mut trace).unwrap();
    check(&trace);

    let mut trace = Trace::new(CheckpointPolicy::Geometric);
    let cfg = GrConvexConfig { center: corner.clone(), rho: 2.0, epsilon: 0.05, iterations: 200 };
    gr_convex_traced(&cfg, &inst, &mut seeded_stream(3), &mut trace).unwrap();
    check(&trace);

    let mut trace = Trace::new(CheckpointPolicy::Geometric);
    let cfg = BaselineConfig::new(corner, 0.5, 300).unwrap();
    baseline_psgd_traced(&cfg, inst.oracle().as_ref(), set, &mut seeded_stream(4), &mut trace).unwrap();
    check(&trace);
}

#[test]
fn identical_seeds_give_identical_records() {
    let inst = l1(4, 8);
    let run = |seed: u64| {
        let mut trace = Trace::new(CheckpointPolicy::Geometric);
        let cfg = GrConvexConfig { center: inst.set().center(), rho: 1.0, epsilon: 0.2, iterations: 64 };
        let out = gr_convex_traced(&cfg, &inst, &mut seeded_stream(seed), &mut trace).unwrap();
        let params = EnvelopeParams::new(out.params.envelope_lambda()).unwrap();
        ConvergenceRecord::from_trace(trace.points(), &inst, params, 1e-10, "gr_convex", seed).unwrap()
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5).rows, run(6).rows);
}

#[test]
fn strongly_convex_gap_small_scale() {
    let mu = 1.0;
    let inst = strongly_convex(2, 11, mu);
    let km = inst.known_min().unwrap().clone();
    let l = inst.lipschitz();
    for t in [10u64, 100] {
        let reps = 200;
        let gaps: Vec<f64> = (0..reps)
            .map(|r| {
                let cfg = PssmConfig::new(inst.set().center(), mu, t).unwrap();
                let x = pssm_sc(&cfg, inst.oracle().as_ref(), inst.set(), &mut seeded_stream(r)).unwrap();
                inst.value(&x) - km.value
            })
            .collect();
        let mean = gaps.iter().sum::<f64>() / reps as f64;
        assert!(mean <= 2.0 * l * l / (mu * (t + 1) as f64));
        assert!(gaps.iter().all(|&g| g >= -1e-12));
    }
}

#[test]
fn rejects_epsilon_above_two_rho_d() {
    let inst = l1(2, 1);
    let too_big = 2.0 * 1.0 * inst.diameter() * 1.01;
    let cfg = GrConvexConfig { center: inst.set().center(), rho: 1.0, epsilon: too_big, iterations: 10 };
    assert!(matches!(gr_convex(&cfg, &inst, &mut seeded_stream(0)), Err(gradreg::Error::Precondition(_))));
}

#[test]
fn works_in_single_precision() {
    let inst = l1(3, 2).cast::<f32>().unwrap();
    let cfg = GrConvexConfig { center: inst.set().center(), rho: 1.0f32, epsilon: 0.2, iterations: 100 };
    let out = gr_convex(&cfg, &inst, &mut seeded_stream(0)).unwrap();
    assert!(inst.set().contains(&out.point, 1e-6));
}
