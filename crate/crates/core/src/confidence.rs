//! Worst-case expectation bounds from Monte-Carlo evidence.
//!
//! Multinomial (argmax-count) evidence is bounded with one-sided
//! Clopper–Pearson intervals on the top two classes, splitting `alpha`
//! evenly between them (Bonferroni). Softmax evidence is bounded with the
//! two-sided Hoeffding half-width.

use statrs::function::beta::checked_beta_reg;

use crate::domain::{ExpectationBounds, ExpectationMode};
use crate::error::{Error, Result};

/// Relative tolerance of the Beta quantile bisection.
const BETA_QUANTILE_TOL: f64 = 1e-10;
const BETA_QUANTILE_MAX_ITERS: usize = 2000;
/// Slack on `Σ sums / n = 1` for softmax evidence.
const SOFTMAX_MASS_TOL: f64 = 1e-9;

/// Per-class argmax counts from `n` noisy draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCounts {
    counts: Vec<u64>,
    n: u64,
}

impl RawCounts {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        let n = counts.iter().sum();
        Self::with_total(counts, n)
    }

    /// Counts with a declared total, which must match their sum.
    pub fn with_total(counts: Vec<u64>, n: u64) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::invalid("counts", "no classes"));
        }
        let sum: u64 = counts.iter().sum();
        if sum != n {
            return Err(Error::invalid("counts", format!("counts sum to {sum}, expected n = {n}")));
        }
        if n == 0 {
            return Err(Error::invalid("counts", "n must be at least 1"));
        }
        Ok(RawCounts { counts, n })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    /// Index of the largest count and the second-largest count (0 when
    /// there is a single class). Ties go to the lowest index.
    pub fn top_two(&self) -> (usize, u64, u64) {
        let (top, runner) = top_two_indices(self.counts.iter().map(|&c| c as f64));
        let runner_count = runner.map_or(0, |r| self.counts[r]);
        (top, self.counts[top], runner_count)
    }
}

/// Per-class summed softmax mass from `n` noisy draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxSums {
    sums: Vec<f64>,
    n: u64,
}

impl SoftmaxSums {
    pub fn new(sums: Vec<f64>, n: u64) -> Result<Self> {
        if sums.is_empty() {
            return Err(Error::invalid("softmax sums", "no classes"));
        }
        if n == 0 {
            return Err(Error::invalid("softmax sums", "n must be at least 1"));
        }
        let nf = n as f64;
        for (k, s) in sums.iter().enumerate() {
            let mean = s / nf;
            if !(-SOFTMAX_MASS_TOL..=1.0 + SOFTMAX_MASS_TOL).contains(&mean) {
                return Err(Error::invalid(
                    "softmax sums",
                    format!("class {k} mean {mean} is outside [0, 1]"),
                ));
            }
        }
        let total = sums.iter().sum::<f64>() / nf;
        if (total - 1.0).abs() > SOFTMAX_MASS_TOL {
            return Err(Error::invalid(
                "softmax sums",
                format!("mean mass sums to {total}, expected 1"),
            ));
        }
        Ok(SoftmaxSums { sums, n })
    }

    /// Build from already-averaged score vectors.
    pub fn from_means(means: &[f64], n: u64) -> Result<Self> {
        Self::new(means.iter().map(|m| m * n as f64).collect(), n)
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn classes(&self) -> usize {
        self.sums.len()
    }

    pub fn means(&self) -> Vec<f64> {
        self.sums.iter().map(|s| s / self.n as f64).collect()
    }
}

fn top_two_indices(values: impl Iterator<Item = f64>) -> (usize, Option<usize>) {
    let mut top: Option<(usize, f64)> = None;
    let mut runner: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        match top {
            None => top = Some((i, v)),
            Some((_, t)) if v > t => {
                runner = top;
                top = Some((i, v));
            }
            _ => match runner {
                Some((_, r)) if v <= r => {}
                _ => runner = Some((i, v)),
            },
        }
    }
    (top.map_or(0, |t| t.0), runner.map(|r| r.0))
}

/// Hoeffding half-width `sqrt(ln(2/α) / 2n)`.
pub fn hoeffding_halfwidth(n: u64, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one draw"));
    }
    check_alpha(alpha)?;
    Ok(((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} is outside (0, 1)")));
    }
    Ok(())
}

/// Which side of a one-sided interval to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// `x` with `I_x(a, b) = q`, by bisection on the regularised incomplete Beta
/// function. Returns the bracket end on the conservative `side`.
fn beta_quantile(a: f64, b: f64, q: f64, side: Side) -> Result<f64> {
    let cdf = |x: f64| {
        checked_beta_reg(a, b, x).map_err(|e| Error::Numeric {
            routine: "beta_quantile",
            detail: format!("I_{x}({a}, {b}): {e}"),
        })
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..BETA_QUANTILE_MAX_ITERS {
        if hi - lo <= BETA_QUANTILE_TOL * hi {
            return Ok(match side {
                Side::Lower => lo,
                Side::Upper => hi,
            });
        }
        let mid = 0.5 * (lo + hi);
        let v = cdf(mid)?;
        if !v.is_finite() {
            return Err(Error::Numeric {
                routine: "beta_quantile",
                detail: format!("non-finite I_{mid}({a}, {b}) while solving for q = {q}"),
            });
        }
        if v < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numeric {
        routine: "beta_quantile",
        detail: format!(
            "no convergence for q = {q}, a = {a}, b = {b}; bracket [{lo}, {hi}]"
        ),
    })
}

/// One-sided Clopper–Pearson bound on a binomial proportion with coverage at
/// least `1 - alpha_side`.
pub fn beta_interval(successes: u64, n: u64, alpha_side: f64, side: Side) -> Result<f64> {
    if successes > n {
        return Err(Error::invalid("successes", format!("{successes} exceeds n = {n}")));
    }
    check_alpha(alpha_side)?;
    let (s, n_f) = (successes as f64, n as f64);
    match side {
        Side::Lower if successes == 0 => Ok(0.0),
        Side::Lower => beta_quantile(s, n_f - s + 1.0, alpha_side, Side::Lower),
        Side::Upper if successes == n => Ok(1.0),
        Side::Upper => beta_quantile(s + 1.0, n_f - s, 1.0 - alpha_side, Side::Upper),
    }
}

/// Lower bound on the top class and upper bound on the runner-up, each at
/// level `alpha/2`, so that both hold jointly with probability `1 - alpha`.
pub fn bound_multinomial(raw: &RawCounts, alpha: f64) -> Result<ExpectationBounds> {
    check_alpha(alpha)?;
    let (top, top_count, runner_count) = raw.top_two();
    let half = alpha / 2.0;
    let e0 = beta_interval(top_count, raw.n(), half, Side::Lower)?;
    let e1 = beta_interval(runner_count, raw.n(), half, Side::Upper)?;
    ExpectationBounds::estimated(e0, e1, ExpectationMode::Multinomial, raw.n(), alpha, top)
}

/// Hoeffding bounds on the top two mean softmax scores, clamped to the unit
/// interval. Ties for the top class go to the lowest index.
pub fn bound_softmax(sums: &SoftmaxSums, alpha: f64) -> Result<ExpectationBounds> {
    let h = hoeffding_halfwidth(sums.n(), alpha)?;
    let means = sums.means();
    let (top, runner) = top_two_indices(means.iter().copied());
    let m0 = means[top];
    let m1 = runner.map_or(0.0, |r| means[r]);
    let e0 = (m0 - h).clamp(0.0, 1.0);
    let e1 = (m1 + h).clamp(0.0, 1.0);
    ExpectationBounds::estimated(e0, e1, ExpectationMode::Softmax, sums.n(), alpha, top)
}
