//! Property suites with per-check outcomes and measured values.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use gradreg::problems::{l1_regression, piecewise_max, ProblemKind, ProblemParams};
use gradreg::set::SetKind;
use gradreg::{
    complete_square, envelope_of_regularization, generate, near_stationarity_witness, prox, pssm_sc,
    replicate_seed, seeded_stream, ConstraintSet, PssmConfig, ProblemInstance, ProblemSpec, QuadraticPerturbation,
    Stream, Vector,
};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Square,
    RegularizedEnvelope,
    EnvelopeFd,
    Stationarity,
    ScRate,
    Projections,
    Oracle,
}

pub const SUITES: [Suite; 7] =
    [Suite::Square, Suite::RegularizedEnvelope, Suite::EnvelopeFd, Suite::Stationarity, Suite::ScRate, Suite::Projections, Suite::Oracle];

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Square => "square",
            Suite::RegularizedEnvelope => "regularized_envelope",
            Suite::EnvelopeFd => "envelope_fd",
            Suite::Stationarity => "stationarity",
            Suite::ScRate => "sc_rate",
            Suite::Projections => "projections",
            Suite::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        SUITES.into_iter().find(|suite| suite.name() == s).ok_or_else(|| {
            HarnessError::UnknownSuite(s.to_string(), SUITES.map(Suite::name).join(", "))
        })
    }
}

/// One assertion: passes when `value <= bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub bound: f64,
}

impl Check {
    pub fn new(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { label: label.into(), value, bound }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.bound
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed()).count()
    }

    pub fn all_passed(&self) -> bool {
        !self.checks.is_empty() && self.passed() == self.checks.len()
    }

    /// Largest `value / bound` over checks whose label starts with `prefix`.
    pub fn worst(&self, prefix: &str) -> Option<&Check> {
        self.checks
            .iter()
            .filter(|c| c.label.starts_with(prefix))
            .max_by(|a, b| ratio(a).total_cmp(&ratio(b)))
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

fn ratio(c: &Check) -> f64 {
    if c.bound > 0.0 {
        c.value / c.bound
    } else {
        c.value
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {}/{} checks pass ({:.2}s)", self.suite, self.passed(), self.checks.len(), self.seconds)?;
        for c in &self.checks {
            let mark = if c.passed() { "ok  " } else { "FAIL" };
            writeln!(f, "  {mark} {}: {:.6e} <= {:.6e}", c.label, c.value, c.bound)?;
        }
        Ok(())
    }
}

fn timed(suite: Suite, f: impl FnOnce() -> Result<Vec<Check>>) -> Result<SuiteReport> {
    let start = Instant::now();
    let checks = f()?;
    Ok(SuiteReport { suite, checks, seconds: start.elapsed().as_secs_f64() })
}

/// Runs a suite at its default size.
pub fn verify(suite: Suite, seed: u64) -> Result<SuiteReport> {
    match suite {
        Suite::Square => square(1000, seed),
        Suite::RegularizedEnvelope => regularized_envelope(100, seed),
        Suite::EnvelopeFd => envelope_fd(50, seed),
        Suite::Stationarity => stationarity(100, seed),
        Suite::ScRate => sc_rate(&ScRateOptions { seed, ..ScRateOptions::default() }),
        Suite::Projections => projections(10_000, seed),
        Suite::Oracle => oracle(20_000, seed),
    }
}

fn uniform_vec(rng: &mut Stream, d: usize, half: f64) -> Vector<f64> {
    Vector::new((0..d).map(|_| rng.gen_range(-half..half)).collect()).expect("finite")
}

/// Completing the square: `sum (a_i/2)|y - z_i|^2` against `Q(z_bar) + (A/2)|y - z_bar|^2`.
pub fn square(instances: usize, seed: u64) -> Result<SuiteReport> {
    timed(Suite::Square, || {
        let mut rng = seeded_stream(seed);
        let mut checks = Vec::with_capacity(instances);
        for k in 0..instances {
            let d = rng.gen_range(1..=10);
            let terms: Vec<(f64, Vector<f64>)> =
                (0..rng.gen_range(1..=5)).map(|_| (rng.gen_range(0.01..10.0), uniform_vec(&mut rng, d, 5.0))).collect();
            let y = uniform_vec(&mut rng, d, 5.0);
            let direct: f64 = terms.iter().map(|(a, z)| 0.5 * a * y.sub(z).norm_sq()).sum();
            let cs = complete_square(&QuadraticPerturbation::new(terms)?, &y)?;
            checks.push(Check::new(format!("identity {k}"), (direct - cs.reconstructed).abs(), 1e-10 * (1.0 + direct.abs())));
        }
        Ok(checks)
    })
}

/// Minimizes a convex function on `[lo, hi]`: grid bracket, then ternary refinement.
pub fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const N: usize = 2000;
    let step = (hi - lo) / N as f64;
    let best = (0..=N).min_by(|&i, &j| f(lo + i as f64 * step).total_cmp(&f(lo + j as f64 * step))).unwrap();
    let (mut a, mut b) = ((lo + (best as f64 - 1.0) * step).max(lo), (lo + (best as f64 + 1.0) * step).min(hi));
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) <= f(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    0.5 * (a + b)
}

/// Envelope of a regularized function: direct prox solve against the
/// centroid formula, with the direct side also checked on a grid. Instances
/// are one-dimensional max functions or separable `(1/d) sum |x_i - b_i|`.
pub fn regularized_envelope(instances: usize, seed: u64) -> Result<SuiteReport> {
    timed(Suite::RegularizedEnvelope, || {
        let mut rng = seeded_stream(seed);
        let mut checks = Vec::with_capacity(2 * instances);
        for k in 0..instances {
            let radius = rng.gen_range(0.5..3.0);
            let (h, d, coord): (ProblemInstance<f64>, usize, Box<dyn Fn(usize, f64) -> f64>) = if k % 2 == 0 {
                let m = rng.gen_range(1..=6);
                let slopes: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let offsets: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let rows: Vec<Vector<f64>> = slopes.iter().map(|&s| Vector::new(vec![s]).unwrap()).collect();
                let set = ConstraintSet::cube(1, radius)?;
                let h = piecewise_max(&rows, offsets.clone(), 0.0, set, None)?;
                let f = move |_: usize, y: f64| slopes.iter().zip(&offsets).map(|(s, o)| s * y + o).fold(f64::MIN, f64::max);
                (h, 1, Box::new(f))
            } else {
                let d = rng.gen_range(2..=6);
                let b: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let rows: Vec<(Vector<f64>, f64)> = (0..d).map(|i| (Vector::basis(d, i), b[i])).collect();
                let h = l1_regression(&rows, ConstraintSet::cube(d, radius)?, None)?;
                let f = move |i: usize, y: f64| (y - b[i]).abs() / d as f64;
                (h, d, Box::new(f))
            };
            let terms: Vec<(f64, Vector<f64>)> =
                (0..rng.gen_range(1..=3)).map(|_| (rng.gen_range(0.1..3.0), uniform_vec(&mut rng, d, 2.0))).collect();
            let pert = QuadraticPerturbation::new(terms.clone())?;
            let lambda = rng.gen_range(0.2..5.0);
            let x = uniform_vec(&mut rng, d, 2.0);
            let id = envelope_of_regularization(&h, &pert, lambda, &x, 1e-8)?;
            checks.push(Check::new(format!("identity {k}"), id.discrepancy(), 1e-5));

            let grid: Vec<f64> = (0..d)
                .map(|i| {
                    let obj = |y: f64| {
                        coord(i, y)
                            + terms.iter().map(|(a, z)| 0.5 * a * (y - z[i]).powi(2)).sum::<f64>()
                            + 0.5 * lambda * (y - x[i]).powi(2)
                    };
                    lambda * (x[i] - grid_argmin(obj, -radius, radius))
                })
                .collect();
            checks.push(Check::new(format!("grid {k}"), id.lhs.dist(&Vector::new(grid)?), 1e-5));
        }
        Ok(checks)
    })
}

/// Active pieces and active box faces at `p`.
fn active_signature(inst: &ProblemInstance<f64>, p: &Vector<f64>) -> (Vec<usize>, Vec<i8>) {
    let pieces = &inst.objective().pieces;
    let vals: Vec<f64> = (0..pieces.pieces()).map(|j| pieces.affine(j, p.as_slice())).collect();
    let top = vals.iter().copied().fold(f64::MIN, f64::max);
    let active = (0..vals.len()).filter(|&j| top - vals[j] <= 1e-9).collect();
    let faces = match inst.set().kind() {
        SetKind::Box { lower, upper } => p
            .iter()
            .zip(lower.iter().zip(upper.iter()))
            .map(|(&v, (&lo, &hi))| if v <= lo + 1e-12 { -1 } else if v >= hi - 1e-12 { 1 } else { 0 })
            .collect(),
        _ => Vec::new(),
    };
    (active, faces)
}

/// `grad phi_lambda(x) = (x - prox)/lambda` against central differences of
/// `phi_lambda` with `h = 1e-5`, at points where no probe changes the active set.
pub fn envelope_fd(points: usize, seed: u64) -> Result<SuiteReport> {
    const H: f64 = 1e-5;
    const TOL: f64 = 1e-13;
    timed(Suite::EnvelopeFd, || {
        let mut rng = seeded_stream(seed);
        let mut checks = Vec::with_capacity(points);
        let mut attempts = 0;
        while checks.len() < points {
            attempts += 1;
            if attempts > 100 * points {
                return Err(HarnessError::Config(format!("only {} stable points in {attempts} draws", checks.len())));
            }
            let d = rng.gen_range(2..=5);
            let spec = ProblemSpec::new(ProblemKind::PiecewiseMax, d, rng.gen())
                .with_params(ProblemParams { pieces: Some(rng.gen_range(2..=3 * d)), ..ProblemParams::default() });
            let inst = generate::<f64>(&spec)?;
            let lambda = rng.gen_range(0.1..2.0);
            let x = uniform_vec(&mut rng, d, 1.5);
            let centre = prox(&inst, lambda, &x, TOL)?;
            let sig = active_signature(&inst, &centre.prox_point);
            let mut fd = Vec::with_capacity(d);
            let mut stable = true;
            for i in 0..d {
                let e = Vector::basis(d, i).scaled(H);
                let plus = prox(&inst, lambda, &x.add(&e), TOL)?;
                let minus = prox(&inst, lambda, &x.sub(&e), TOL)?;
                if active_signature(&inst, &plus.prox_point) != sig || active_signature(&inst, &minus.prox_point) != sig {
                    stable = false;
                    break;
                }
                fd.push((plus.envelope_value - minus.envelope_value) / (2.0 * H));
            }
            if stable {
                let err = centre.gradient.dist(&Vector::new(fd)?);
                checks.push(Check::new(format!("point {} (d={d})", checks.len()), err, 1e-4));
            }
        }
        Ok(checks)
    })
}

fn random_instance(rng: &mut Stream) -> Result<ProblemInstance<f64>> {
    let d = rng.gen_range(2..=6);
    let set = if rng.gen_bool(0.5) { gradreg::problems::SetShape::Box } else { gradreg::problems::SetShape::Ball };
    let (kind, params) = match rng.gen_range(0..3) {
        0 => (ProblemKind::PiecewiseMax, ProblemParams { set, ..ProblemParams::default() }),
        1 => (ProblemKind::L1Regression, ProblemParams { set, rows: Some(10 * d), noise: 0.3, ..ProblemParams::default() }),
        _ => (ProblemKind::DesignedMax, ProblemParams { set, ..ProblemParams::default() }),
    };
    Ok(generate(&ProblemSpec::new(kind, d, rng.gen()).with_params(params))?)
}

/// The near-stationarity triple at feasible random points.
pub fn stationarity(points: usize, seed: u64) -> Result<SuiteReport> {
    const TOL: f64 = 1e-6;
    timed(Suite::Stationarity, || {
        let mut rng = seeded_stream(seed);
        let mut checks = Vec::with_capacity(3 * points);
        for k in 0..points {
            let inst = random_instance(&mut rng)?;
            let lambda = rng.gen_range(0.1..2.0);
            let x = inst.set().project(&uniform_vec(&mut rng, inst.dim(), 1.2))?;
            let w = near_stationarity_witness(&inst, lambda, &x, TOL)?;
            checks.push(Check::new(format!("step {k}"), (w.step - lambda * w.grad_norm).abs(), TOL));
            checks.push(Check::new(format!("descent {k}"), -w.descent, TOL));
            let s = w.stationarity.unwrap_or(f64::INFINITY);
            checks.push(Check::new(format!("stationarity {k}"), s, w.grad_norm + TOL));
        }
        Ok(checks)
    })
}

#[derive(Clone, Debug)]
pub struct ScRateOptions {
    pub dims: Vec<usize>,
    pub budgets: Vec<u64>,
    pub replicates: u32,
    pub mu: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for ScRateOptions {
    fn default() -> Self {
        Self { dims: vec![2, 10], budgets: vec![10, 100, 1000], replicates: 500, mu: 1.0, noise: 0.3, seed: 0 }
    }
}

/// Mean optimality gap of the weighted-average method on designed strongly
/// convex instances against `2 L^2 / (mu (T+1))`, allowing three standard errors.
pub fn sc_rate(opts: &ScRateOptions) -> Result<SuiteReport> {
    timed(Suite::ScRate, || {
        let mut checks = Vec::new();
        for &d in &opts.dims {
            let params = ProblemParams { noise: opts.noise, strong_convexity: Some(opts.mu), ..ProblemParams::default() };
            let inst = generate::<f64>(&ProblemSpec::new(ProblemKind::DesignedMax, d, opts.seed ^ d as u64).with_params(params))?;
            let km = inst.known_min().expect("designed instances know their minimum").clone();
            let l = inst.lipschitz();
            for &t in &opts.budgets {
                let base = replicate_seed(opts.seed, t ^ ((d as u64) << 32));
                let gaps = (0..opts.replicates)
                    .into_par_iter()
                    .map(|r| {
                        let cfg = PssmConfig::new(inst.set().center(), opts.mu, t)?;
                        let mut stream = seeded_stream(replicate_seed(base, r as u64));
                        let x = pssm_sc(&cfg, inst.oracle().as_ref(), inst.set(), &mut stream)?;
                        Ok(inst.value(&x) - km.value)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let n = gaps.len() as f64;
                let mean = gaps.iter().sum::<f64>() / n;
                let se = (gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0) / n).sqrt();
                let bound = 2.0 * l * l / (opts.mu * (t + 1) as f64);
                checks.push(Check::new(format!("d={d} T={t} mean gap (se {se:.3e})"), mean, bound + 3.0 * se));
            }
        }
        Ok(checks)
    })
}

/// Idempotence, nonexpansiveness, membership and diameter on random sets and pairs.
pub fn projections(pairs: usize, seed: u64) -> Result<SuiteReport> {
    timed(Suite::Projections, || {
        let mut rng = seeded_stream(seed);
        let mut worst = [[0.0f64; 4]; 3];
        for k in 0..pairs {
            let d = rng.gen_range(1..=8);
            let kind = k % 3;
            let set = match kind {
                0 => ConstraintSet::ball(uniform_vec(&mut rng, d, 1.0), rng.gen_range(0.1..3.0))?,
                1 => {
                    let lo = uniform_vec(&mut rng, d, 2.0);
                    let hi = Vector::new(lo.iter().map(|v| v + rng.gen_range(0.0..3.0)).collect())?;
                    ConstraintSet::boxed(lo, hi)?
                }
                _ => ConstraintSet::simplex(d, rng.gen_range(0.1..3.0))?,
            };
            let x = uniform_vec(&mut rng, d, 6.0);
            let y = uniform_vec(&mut rng, d, 6.0);
            let (px, py) = (set.project(&x)?, set.project(&y)?);
            let scale = 1.0 + x.norm();
            let w = &mut worst[kind];
            w[0] = w[0].max(set.project(&px)?.dist(&px) / scale);
            w[1] = w[1].max(px.dist(&py) - x.dist(&y));
            w[2] = w[2].max(if set.contains(&px, 1e-12 * scale) { 0.0 } else { 1.0 });
            w[3] = w[3].max(px.dist(&py) - set.diameter());
        }
        let mut checks = Vec::new();
        for (name, w) in ["ball", "box", "simplex"].iter().zip(worst) {
            checks.push(Check::new(format!("{name} idempotence"), w[0], 1e-12));
            checks.push(Check::new(format!("{name} nonexpansive"), w[1], 1e-12));
            checks.push(Check::new(format!("{name} membership"), w[2], 0.0));
            checks.push(Check::new(format!("{name} diameter"), w[3], 1e-12));
        }
        Ok(checks)
    })
}

/// Sample mean against the exact subgradient (four standard errors per
/// coordinate) and the empirical second moment against `L^2`.
pub fn oracle(draws: usize, seed: u64) -> Result<SuiteReport> {
    timed(Suite::Oracle, || {
        let mut rng = seeded_stream(seed);
        let mut checks = Vec::new();
        for k in 0..9 {
            let inst = random_instance(&mut rng)?;
            let d = inst.dim();
            let x = inst.set().project(&uniform_vec(&mut rng, d, 1.0))?;
            let mut exact = vec![0.0; d];
            inst.objective().subgradient(x.as_slice(), &mut exact);
            let oracle = inst.oracle();
            let mut stream = seeded_stream(replicate_seed(seed, k));
            let (mut sum, mut sum_sq, mut second) = (vec![0.0; d], vec![0.0; d], Vec::with_capacity(draws));
            let mut g = vec![0.0; d];
            for _ in 0..draws {
                oracle.sample_into(x.as_slice(), &mut stream, &mut g);
                for i in 0..d {
                    sum[i] += g[i];
                    sum_sq[i] += g[i] * g[i];
                }
                second.push(g.iter().map(|v| v * v).sum::<f64>());
            }
            let n = draws as f64;
            let worst_z = (0..d)
                .map(|i| {
                    let mean = sum[i] / n;
                    let var = (sum_sq[i] / n - mean * mean).max(0.0);
                    let se = (var / n).sqrt();
                    if se > 0.0 {
                        (mean - exact[i]).abs() / se
                    } else if (mean - exact[i]).abs() <= 1e-12 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(0.0, f64::max);
            checks.push(Check::new(format!("instance {k} unbiased (max z)"), worst_z, 4.0));
            let m = second.iter().sum::<f64>() / n;
            let se = (second.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
            let l = inst.lipschitz();
            checks.push(Check::new(format!("instance {k} second moment"), m, l * l * (1.0 + 1e-12) + 3.0 * se));
        }
        Ok(checks)
    })
}
