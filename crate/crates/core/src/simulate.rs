//! Monte-Carlo randomized smoothing against analytic classifiers.
//!
//! The certification procedures only ever see class counts or summed
//! scores, so a classifier with a known smoothed output is enough to run
//! them end to end and to compare their output with ground truth.
//!
//! # Random streams
//!
//! Every run draws from `ChaCha8Rng::seed_from_u64(seed)` with the ChaCha
//! stream (nonce) set to the run's stream index. Batch helpers use the
//! sample or replicate index as the stream, so results do not depend on
//! evaluation order or thread count. Within one stream, draws are consumed
//! in order: for the two-stage binomial procedure the `n0` selection draws
//! come first, then the `n` estimation draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::confidence::{beta_interval, bound_multinomial, bound_softmax, RawCounts, Side, SoftmaxSums};
use crate::domain::{CertificationOutcome, ExpectationBounds, ExpectationMode, NoiseConfig};
use crate::ensemble::{certify_ensemble, EnsembleConfig};
use crate::error::{Error, Result};
use crate::mechanisms::{certify_cohen, std_normal_cdf, OptimizerSettings};

/// Tolerance on `Σ p = 1` for fixed distributions.
const DISTRIBUTION_SUM_TOL: f64 = 1e-9;
/// Seed salt separating population draws from smoothing draws.
const POPULATION_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// A stand-in for a trained network whose smoothed output is known in
/// closed form.
#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticClassifier {
    /// Every noisy evaluation predicts class `k` with probability `p[k]`,
    /// whatever the input.
    FixedDistribution { p: Vec<f64> },
    /// Class 0 on the positive side of the hyperplane `w·x + b = 0`,
    /// class 1 otherwise.
    LinearTwoClass { w: Vec<f64>, b: f64 },
}

impl SyntheticClassifier {
    pub fn fixed(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::invalid("distribution", "no classes"));
        }
        if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid("distribution", "entries must be finite and nonnegative"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_SUM_TOL {
            return Err(Error::invalid("distribution", format!("entries sum to {total}")));
        }
        Ok(SyntheticClassifier::FixedDistribution { p })
    }

    pub fn linear(w: Vec<f64>, b: f64) -> Result<Self> {
        if w.is_empty() || w.iter().all(|&v| v == 0.0) || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("hyperplane", "w must be finite and nonzero"));
        }
        if !b.is_finite() {
            return Err(Error::invalid("hyperplane", "offset must be finite"));
        }
        Ok(SyntheticClassifier::LinearTwoClass { w, b })
    }

    pub fn classes(&self) -> usize {
        match self {
            SyntheticClassifier::FixedDistribution { p } => p.len(),
            SyntheticClassifier::LinearTwoClass { .. } => 2,
        }
    }

    /// Input dimension expected by [`SyntheticClassifier::LinearTwoClass`];
    /// `None` for classifiers that ignore their input.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            SyntheticClassifier::FixedDistribution { .. } => None,
            SyntheticClassifier::LinearTwoClass { w, .. } => Some(w.len()),
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        match self.dimension() {
            Some(d) if d != x.len() => Err(Error::invalid(
                "input",
                format!("expected {d} coordinates, got {}", x.len()),
            )),
            _ => Ok(()),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Parameters of one smoothing run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationRun {
    seed: u64,
    stream: u64,
    n: u64,
    n0: u64,
    noise: NoiseConfig,
    alpha: f64,
}

impl SimulationRun {
    pub fn new(seed: u64, n: u64, n0: u64, sigma: f64, alpha: f64) -> Result<Self> {
        if n == 0 || n0 == 0 {
            return Err(Error::invalid("simulation", "n and n0 must be at least 1"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("{alpha} is outside (0, 1)")));
        }
        Ok(SimulationRun {
            seed,
            stream: 0,
            n,
            n0,
            noise: NoiseConfig::new(sigma)?,
            alpha,
        })
    }

    /// The same run on the stream reserved for sample `index`.
    pub fn for_stream(mut self, index: u64) -> Self {
        self.stream = index;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn n0(&self) -> u64 {
        self.n0
    }

    pub fn sigma(&self) -> f64 {
        self.noise.sigma()
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rng(&self) -> ChaCha8Rng {
        stream_rng(self.seed, self.stream)
    }
}

/// Deterministic generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Exact smoothed class probabilities at `x` under noise `sigma`.
pub fn smoothed_truth(c: &SyntheticClassifier, x: &[f64], sigma: f64) -> Result<Vec<f64>> {
    c.check_input(x)?;
    match c {
        SyntheticClassifier::FixedDistribution { p } => Ok(p.clone()),
        SyntheticClassifier::LinearTwoClass { w, b } => {
            let m = (dot(w, x) + b) / (sigma * norm(w));
            let p0 = std_normal_cdf(m);
            Ok(vec![p0, std_normal_cdf(-m)])
        }
    }
}

fn draw_class(c: &SyntheticClassifier, x: &[f64], sigma: f64, rng: &mut ChaCha8Rng, noisy: &mut [f64]) -> usize {
    match c {
        SyntheticClassifier::FixedDistribution { p } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (k, pk) in p.iter().enumerate() {
                acc += pk;
                if u < acc {
                    return k;
                }
            }
            // u landed in the rounding gap above Σp; take the last class with mass.
            p.iter().rposition(|&v| v > 0.0).unwrap_or(0)
        }
        SyntheticClassifier::LinearTwoClass { w, b } => {
            for (dst, xi) in noisy.iter_mut().zip(x) {
                let z: f64 = StandardNormal.sample(rng);
                *dst = xi + sigma * z;
            }
            if dot(w, noisy) + b > 0.0 {
                0
            } else {
                1
            }
        }
    }
}

fn count_from(c: &SyntheticClassifier, x: &[f64], sigma: f64, draws: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut counts = vec![0u64; c.classes()];
    let mut noisy = vec![0.0; x.len()];
    for _ in 0..draws {
        counts[draw_class(c, x, sigma, rng, &mut noisy)] += 1;
    }
    counts
}

/// Argmax counts over `run.n()` noisy evaluations.
pub fn count_draws(c: &SyntheticClassifier, x: &[f64], run: &SimulationRun) -> Result<RawCounts> {
    c.check_input(x)?;
    let mut rng = run.rng();
    RawCounts::with_total(count_from(c, x, run.sigma(), run.n(), &mut rng), run.n())
}

/// Summed softmax scores over `run.n()` noisy evaluations.
///
/// Fixed distributions return `p` as a constant score vector. The linear
/// classifier scores class 0 with a logistic link on the signed distance
/// to its hyperplane, `1 / (1 + exp(-(w·x̃ + b)/‖w‖))`.
pub fn softmax_draws(c: &SyntheticClassifier, x: &[f64], run: &SimulationRun) -> Result<SoftmaxSums> {
    c.check_input(x)?;
    let n = run.n();
    let sums = match c {
        SyntheticClassifier::FixedDistribution { p } => p.iter().map(|pk| pk * n as f64).collect(),
        SyntheticClassifier::LinearTwoClass { w, b } => {
            let mut rng = run.rng();
            let wn = norm(w);
            let mut noisy = vec![0.0; x.len()];
            let mut s0 = 0.0;
            for _ in 0..n {
                for (dst, xi) in noisy.iter_mut().zip(x) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *dst = xi + run.sigma() * z;
                }
                let dist = (dot(w, &noisy) + b) / wn;
                s0 += 1.0 / (1.0 + (-dist).exp());
            }
            vec![s0, n as f64 - s0]
        }
    };
    SoftmaxSums::new(sums, n)
}

fn require_mode(cfg: &EnsembleConfig, mode: ExpectationMode) -> Result<()> {
    if cfg.mode() != mode {
        return Err(Error::ModeMismatch { expected: mode, found: cfg.mode() });
    }
    Ok(())
}

/// Single-stage multinomial certification: one batch of `n` draws both
/// selects the class and bounds the top two expectations.
pub fn multinomial_certify(
    c: &SyntheticClassifier,
    x: &[f64],
    run: &SimulationRun,
    cfg: &EnsembleConfig,
    opt: &OptimizerSettings,
) -> Result<CertificationOutcome> {
    require_mode(cfg, ExpectationMode::Multinomial)?;
    let counts = count_draws(c, x, run)?;
    let bounds = bound_multinomial(&counts, run.alpha())?;
    certify_ensemble(&bounds, run.noise(), cfg, opt)
}

/// Softmax certification with Hoeffding bounds on the mean scores.
pub fn softmax_certify(
    c: &SyntheticClassifier,
    x: &[f64],
    run: &SimulationRun,
    cfg: &EnsembleConfig,
    opt: &OptimizerSettings,
) -> Result<CertificationOutcome> {
    require_mode(cfg, ExpectationMode::Softmax)?;
    let sums = softmax_draws(c, x, run)?;
    let bounds = bound_softmax(&sums, run.alpha())?;
    certify_ensemble(&bounds, run.noise(), cfg, opt)
}

/// Two-stage binomial certification: `n0` draws select the class, a fresh
/// batch of `n` draws counts only that class, and a one-sided lower bound at
/// level `alpha` feeds the Gaussian-quantile radius.
///
/// A wrong selection in the first stage cannot be undone by the second.
pub fn binomial_certify_original(
    c: &SyntheticClassifier,
    x: &[f64],
    run: &SimulationRun,
) -> Result<CertificationOutcome> {
    c.check_input(x)?;
    let mut rng = run.rng();
    let selection = count_from(c, x, run.sigma(), run.n0(), &mut rng);
    let (class, _, _) = RawCounts::with_total(selection, run.n0())?.top_two();
    let mut noisy = vec![0.0; x.len()];
    let hits = (0..run.n())
        .filter(|_| draw_class(c, x, run.sigma(), &mut rng, &mut noisy) == class)
        .count() as u64;
    let lower = beta_interval(hits, run.n(), run.alpha(), Side::Lower)?;
    let bounds = ExpectationBounds::estimated(lower, 0.0, ExpectationMode::Multinomial, run.n(), run.alpha(), class)?;
    let radius = certify_cohen(&bounds, run.noise())?;
    CertificationOutcome::new(class, [Some(radius), None, None, None])
}

/// Run `certify` for replicates `0..count`, each on its own stream.
pub fn replicate<F>(run: &SimulationRun, count: u64, certify: F) -> Result<Vec<CertificationOutcome>>
where
    F: Fn(&SimulationRun) -> Result<CertificationOutcome> + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| certify(&run.for_stream(i)))
        .collect()
}

/// A synthetic labelled population: each sample's smoothed distribution is
/// drawn from a symmetric Dirichlet, and its label is drawn from that same
/// distribution (a calibrated classifier).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletPopulation {
    pub classes: usize,
    pub concentration: f64,
}

/// One generated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSample {
    pub label: usize,
    pub classifier: SyntheticClassifier,
}

impl DirichletPopulation {
    pub fn new(classes: usize, concentration: f64) -> Result<Self> {
        if classes < 2 {
            return Err(Error::invalid("population", "need at least two classes"));
        }
        if !(concentration > 0.0 && concentration.is_finite()) {
            return Err(Error::invalid("population", "concentration must be positive"));
        }
        Ok(DirichletPopulation { classes, concentration })
    }

    /// Sample `index` of the population generated from `seed`.
    pub fn sample(&self, seed: u64, index: u64) -> Result<PopulationSample> {
        let mut rng = stream_rng(seed ^ POPULATION_SALT, index);
        let gamma = Gamma::new(self.concentration, 1.0)
            .map_err(|e| Error::invalid("population", e.to_string()))?;
        let mut p: Vec<f64> = (0..self.classes).map(|_| gamma.sample(&mut rng)).collect();
        let total: f64 = p.iter().sum();
        if !(total > 0.0) {
            // Every gamma draw underflowed; fall back to a point mass.
            p.iter_mut().for_each(|v| *v = 0.0);
            p[0] = 1.0;
        } else {
            p.iter_mut().for_each(|v| *v /= total);
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut label = self.classes - 1;
        for (k, pk) in p.iter().enumerate() {
            acc += pk;
            if u < acc {
                label = k;
                break;
            }
        }
        Ok(PopulationSample {
            label,
            classifier: SyntheticClassifier::fixed(p)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(n: u64) -> SimulationRun {
        SimulationRun::new(42, n, 100, 1.0, 0.001).unwrap()
    }

    #[test]
    fn classifier_validation() {
        assert!(SyntheticClassifier::fixed(vec![0.5, 0.4]).is_err());
        assert!(SyntheticClassifier::fixed(vec![1.2, -0.2]).is_err());
        assert!(SyntheticClassifier::linear(vec![0.0, 0.0], 1.0).is_err());
        assert!(SyntheticClassifier::linear(vec![1.0], f64::NAN).is_err());
    }

    #[test]
    fn run_validation() {
        assert!(SimulationRun::new(0, 0, 1, 1.0, 0.01).is_err());
        assert!(SimulationRun::new(0, 1, 0, 1.0, 0.01).is_err());
        assert!(SimulationRun::new(0, 1, 1, 1.0, 1.0).is_err());
        assert!(SimulationRun::new(0, 1, 1, 0.0, 0.5).is_err());
    }

    #[test]
    fn truth_on_boundary_is_even() {
        let c = SyntheticClassifier::linear(vec![1.0, 1.0], -1.0).unwrap();
        let p = smoothed_truth(&c, &[0.5, 0.5], 0.7).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn truth_margin_maps_through_cdf() {
        // ‖w‖ = 5, σ = 2: margin (w·x + b)/(σ‖w‖) = 1.959964.
        let c = SyntheticClassifier::linear(vec![3.0, 4.0], 0.0).unwrap();
        let x = [1.959964 * 10.0 / 5.0 * 0.6, 1.959964 * 10.0 / 5.0 * 0.8];
        let p = smoothed_truth(&c, &x, 2.0).unwrap();
        assert!((p[0] - 0.975).abs() < 1e-6);
    }

    #[test]
    fn fixed_truth_is_identity() {
        let c = SyntheticClassifier::fixed(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(smoothed_truth(&c, &[], 1.0).unwrap(), vec![0.2, 0.3, 0.5]);
    }

    #[test]
    fn wrong_input_dimension() {
        let c = SyntheticClassifier::linear(vec![1.0, 0.0], 0.0).unwrap();
        assert!(count_draws(&c, &[1.0], &run(10)).is_err());
    }

    #[test]
    fn degenerate_distribution_counts() {
        let c = SyntheticClassifier::fixed(vec![1.0, 0.0, 0.0]).unwrap();
        let counts = count_draws(&c, &[], &run(5000)).unwrap();
        assert_eq!(counts.counts(), &[5000, 0, 0]);
    }

    #[test]
    fn counts_concentrate() {
        let c = SyntheticClassifier::fixed(vec![0.7, 0.3]).unwrap();
        let counts = count_draws(&c, &[], &run(100_000)).unwrap();
        let frac = counts.counts()[0] as f64 / 100_000.0;
        assert!((frac - 0.7).abs() < 0.01, "{frac}");
    }

    #[test]
    fn seeded_draws_repeat() {
        let c = SyntheticClassifier::linear(vec![1.0, -2.0], 0.3).unwrap();
        let a = count_draws(&c, &[0.1, 0.2], &run(2000).for_stream(9)).unwrap();
        let b = count_draws(&c, &[0.1, 0.2], &run(2000).for_stream(9)).unwrap();
        let other = count_draws(&c, &[0.1, 0.2], &run(2000).for_stream(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, other);
    }

    #[test]
    fn certain_classifier_certifies_everywhere() {
        let c = SyntheticClassifier::fixed(vec![1.0, 0.0]).unwrap();
        let cfg = EnsembleConfig::all(ExpectationMode::Multinomial);
        let o = multinomial_certify(&c, &[], &run(10_000), &cfg, &OptimizerSettings::default()).unwrap();
        assert_eq!(o.predicted_class(), 0);
        for id in crate::MechanismId::ALL {
            assert!(o.radius(id) > 0.0, "{id}");
        }
    }

    #[test]
    fn bounded_radius_is_conservative() {
        let c = SyntheticClassifier::fixed(vec![0.97, 0.02, 0.01]).unwrap();
        let cfg = EnsembleConfig::all(ExpectationMode::Multinomial);
        let opt = OptimizerSettings::default();
        let r = run(100_000);
        let o = multinomial_certify(&c, &[], &r, &cfg, &opt).unwrap();
        let truth = crate::make_bounds(0.97, 0.02, ExpectationMode::Multinomial).unwrap();
        let exact = certify_ensemble(&truth, r.noise(), &cfg, &opt).unwrap();
        for id in crate::MechanismId::ALL {
            assert!(o.radius(id) <= exact.radius(id), "{id}");
        }
    }

    #[test]
    fn constant_softmax_bounds_are_exact_shift() {
        let c = SyntheticClassifier::fixed(vec![0.9, 0.1]).unwrap();
        let sums = softmax_draws(&c, &[], &run(100_000)).unwrap();
        let b = bound_softmax(&sums, 0.001).unwrap();
        let h = crate::confidence::hoeffding_halfwidth(100_000, 0.001).unwrap();
        assert!((b.e0() - (0.9 - h)).abs() < 1e-12);
    }

    #[test]
    fn softmax_crossing_abstains() {
        let c = SyntheticClassifier::fixed(vec![0.5, 0.5]).unwrap();
        let cfg = EnsembleConfig::all(ExpectationMode::Softmax);
        let o = softmax_certify(&c, &[], &run(1000), &cfg, &OptimizerSettings::default()).unwrap();
        assert!(o.abstained());
        assert_eq!(o.radius_lecuyer(), 0.0);
        assert_eq!(o.radius_improved_dp(), 0.0);
    }

    #[test]
    fn linear_softmax_improved_dominates_lecuyer() {
        let c = SyntheticClassifier::linear(vec![1.0, 0.0], 0.0).unwrap();
        let cfg = EnsembleConfig::all(ExpectationMode::Softmax);
        let opt = OptimizerSettings::default();
        for (i, x0) in [0.5, 1.0, 2.0, 4.0].into_iter().enumerate() {
            let o = softmax_certify(&c, &[x0, 0.0], &run(20_000).for_stream(i as u64), &cfg, &opt).unwrap();
            assert!(o.radius_improved_dp() >= o.radius_lecuyer());
        }
    }

    #[test]
    fn even_split_usually_abstains() {
        let c = SyntheticClassifier::fixed(vec![0.5, 0.5]).unwrap();
        let cfg = EnsembleConfig::all(ExpectationMode::Multinomial);
        let opt = OptimizerSettings::default();
        let r = SimulationRun::new(3, 2000, 100, 1.0, 0.01).unwrap();
        let outcomes = replicate(&r, 200, |run| multinomial_certify(&c, &[], run, &cfg, &opt)).unwrap();
        let certified = outcomes.iter().filter(|o| !o.abstained()).count();
        assert!(certified as f64 / 200.0 <= 0.01 + 0.02, "{certified}");
    }

    #[test]
    fn binomial_procedure_is_deterministic_and_certifies_sure_class() {
        let c = SyntheticClassifier::fixed(vec![1.0, 0.0, 0.0]).unwrap();
        let a = binomial_certify_original(&c, &[], &run(1000)).unwrap();
        let b = binomial_certify_original(&c, &[], &run(1000)).unwrap();
        assert_eq!(a, b);
        assert!(!a.abstained());
        assert_eq!(a.predicted_class(), 0);
    }

    #[test]
    fn population_is_deterministic() {
        let pop = DirichletPopulation::new(5, 0.3).unwrap();
        assert_eq!(pop.sample(1, 4).unwrap(), pop.sample(1, 4).unwrap());
        assert_ne!(pop.sample(1, 4).unwrap(), pop.sample(1, 5).unwrap());
        assert!(DirichletPopulation::new(1, 1.0).is_err());
    }
}
