//! Value types shared across the crate.
//!
//! Every type here validates its fields on construction and is immutable
//! afterwards, so a value that exists is a value that satisfies its
//! invariants.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mechanisms::MechanismId;

/// Floor and ceiling applied to expectation bounds before they reach a
/// mechanism. Keeps `Φ⁻¹` and the negative-power terms finite.
pub const PROBABILITY_CLAMP: f64 = 1e-12;

/// Which smoothed expectation the bounds describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExpectationMode {
    /// Expected softmax score vector under noise.
    Softmax,
    /// Expected one-hot argmax vector under noise.
    Multinomial,
}

impl ExpectationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ExpectationMode::Softmax => "softmax",
            ExpectationMode::Multinomial => "multinomial",
        }
    }
}

impl fmt::Display for ExpectationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExpectationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "softmax" => Ok(ExpectationMode::Softmax),
            "multinomial" => Ok(ExpectationMode::Multinomial),
            other => Err(Error::invalid("mode", format!("unknown mode `{other}`"))),
        }
    }
}

fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
}

fn check_unit(what: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(what, format!("{p} is outside [0, 1]")));
    }
    Ok(())
}

/// Worst-case top-2 expectations: a lower bound on the largest sorted class
/// expectation and an upper bound on the runner-up.
///
/// The two bounds are computed independently, so `e0 + e1 > 1` and
/// `e0 <= e1` are both representable. Mechanisms return a zero radius for
/// the latter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationBounds {
    e0: f64,
    e1: f64,
    mode: ExpectationMode,
    n: u64,
    alpha: f64,
    predicted_class: usize,
}

impl ExpectationBounds {
    /// Bounds for exact (analytic) expectations: `n = 0`, `alpha = 0`.
    pub fn analytic(e0: f64, e1: f64, mode: ExpectationMode) -> Result<Self> {
        check_unit("e0", e0)?;
        check_unit("e1", e1)?;
        Ok(ExpectationBounds {
            e0: clamp_probability(e0),
            e1: clamp_probability(e1),
            mode,
            n: 0,
            alpha: 0.0,
            predicted_class: 0,
        })
    }

    /// Bounds produced from `n` Monte-Carlo draws at confidence `alpha`.
    pub fn estimated(
        e0: f64,
        e1: f64,
        mode: ExpectationMode,
        n: u64,
        alpha: f64,
        predicted_class: usize,
    ) -> Result<Self> {
        check_unit("e0", e0)?;
        check_unit("e1", e1)?;
        if n == 0 {
            return Err(Error::invalid("n", "estimated bounds need at least one draw"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("{alpha} is outside (0, 1)")));
        }
        Ok(ExpectationBounds {
            e0: clamp_probability(e0),
            e1: clamp_probability(e1),
            mode,
            n,
            alpha,
            predicted_class,
        })
    }

    pub fn with_predicted_class(mut self, class: usize) -> Self {
        self.predicted_class = class;
        self
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn e1(&self) -> f64 {
        self.e1
    }

    pub fn mode(&self) -> ExpectationMode {
        self.mode
    }

    /// Number of draws behind the bounds; 0 for analytic input.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Confidence level; 0 for analytic input.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn predicted_class(&self) -> usize {
        self.predicted_class
    }

    /// True when the top class is separated from the runner-up.
    pub fn is_separated(&self) -> bool {
        self.e0 > self.e1
    }

    pub fn point(&self) -> (f64, f64) {
        (self.e0, self.e1)
    }
}

/// Analytic-input bounds, clamped into `[1e-12, 1 - 1e-12]`.
pub fn make_bounds(e0: f64, e1: f64, mode: ExpectationMode) -> Result<ExpectationBounds> {
    ExpectationBounds::analytic(e0, e1, mode)
}

/// Isotropic Gaussian smoothing noise and the sensitivity of the
/// pre-processing map (1 for the identity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    sigma: f64,
    delta_sens: f64,
}

impl NoiseConfig {
    pub fn new(sigma: f64) -> Result<Self> {
        Self::with_sensitivity(sigma, 1.0)
    }

    pub fn with_sensitivity(sigma: f64, delta_sens: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("{sigma} must be positive and finite")));
        }
        if !(delta_sens > 0.0 && delta_sens.is_finite()) {
            return Err(Error::invalid(
                "sensitivity",
                format!("{delta_sens} must be positive and finite"),
            ));
        }
        Ok(NoiseConfig { sigma, delta_sens })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn delta_sens(&self) -> f64 {
        self.delta_sens
    }

    /// Factor converting a unit-noise, unit-sensitivity radius into input
    /// space.
    pub(crate) fn scale(&self) -> f64 {
        self.sigma / self.delta_sens
    }
}

/// A point of the sorted top-2 projection of the output simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexPoint {
    e0: f64,
    e1: f64,
}

impl SimplexPoint {
    /// Slack on `e0 + e1 <= 1` for lattice coordinates built from divisions.
    const SUM_SLACK: f64 = 1e-12;

    pub fn new(e0: f64, e1: f64) -> Result<Self> {
        if Self::is_feasible(e0, e1) {
            Ok(SimplexPoint { e0, e1 })
        } else {
            Err(Error::invalid(
                "simplex point",
                format!("({e0}, {e1}) violates e0 >= e1 >= 0, e0 + e1 <= 1"),
            ))
        }
    }

    pub fn is_feasible(e0: f64, e1: f64) -> bool {
        e1 >= 0.0 && e0 >= e1 && e0 + e1 <= 1.0 + Self::SUM_SLACK
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn e1(&self) -> f64 {
        self.e1
    }

    pub fn bounds(&self, mode: ExpectationMode) -> ExpectationBounds {
        // Feasible points lie in [0, 1] by construction.
        ExpectationBounds::analytic(self.e0, self.e1.min(1.0), mode)
            .expect("feasible simplex point is a valid probability pair")
    }
}

/// Result of certifying one sample.
///
/// Per-mechanism radii are kept so that "which mechanism won" statistics can
/// be computed later; a mechanism that was not enabled has no radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificationOutcome {
    predicted_class: usize,
    radii: [Option<f64>; 4],
    ensemble: f64,
}

impl CertificationOutcome {
    pub fn new(predicted_class: usize, radii: [Option<f64>; 4]) -> Result<Self> {
        let mut ensemble = 0.0_f64;
        for (id, r) in MechanismId::ALL.iter().zip(radii.iter()) {
            if let Some(r) = r {
                if !(*r >= 0.0 && r.is_finite()) {
                    return Err(Error::invalid(
                        "radius",
                        format!("{id} radius {r} must be finite and nonnegative"),
                    ));
                }
                ensemble = ensemble.max(*r);
            }
        }
        Ok(CertificationOutcome {
            predicted_class,
            radii,
            ensemble,
        })
    }

    pub fn predicted_class(&self) -> usize {
        self.predicted_class
    }

    /// Radius for `id`, or 0 when the mechanism was not enabled.
    pub fn radius(&self, id: MechanismId) -> f64 {
        self.radii[id.index()].unwrap_or(0.0)
    }

    pub fn radius_opt(&self, id: MechanismId) -> Option<f64> {
        self.radii[id.index()]
    }

    pub fn is_enabled(&self, id: MechanismId) -> bool {
        self.radii[id.index()].is_some()
    }

    pub fn enabled(&self) -> impl Iterator<Item = MechanismId> + '_ {
        MechanismId::ALL.into_iter().filter(|id| self.is_enabled(*id))
    }

    pub fn radius_cohen(&self) -> f64 {
        self.radius(MechanismId::Cohen)
    }

    pub fn radius_li(&self) -> f64 {
        self.radius(MechanismId::Li)
    }

    pub fn radius_lecuyer(&self) -> f64 {
        self.radius(MechanismId::Lecuyer)
    }

    pub fn radius_improved_dp(&self) -> f64 {
        self.radius(MechanismId::ImprovedDp)
    }

    pub fn radius_ensemble(&self) -> f64 {
        self.ensemble
    }

    pub fn abstained(&self) -> bool {
        self.ensemble == 0.0
    }

    /// Enabled mechanism with the largest radius. Ties go to the earliest
    /// mechanism in [`MechanismId::ALL`]. `None` when abstaining.
    pub fn winner(&self) -> Option<MechanismId> {
        if self.abstained() {
            return None;
        }
        argmax_mechanism(self.enabled().map(|id| (id, self.radius(id))))
    }
}

/// Deterministic argmax over `(mechanism, radius)` pairs: strict `>` keeps the
/// first mechanism in enum order on ties.
pub(crate) fn argmax_mechanism(
    radii: impl IntoIterator<Item = (MechanismId, f64)>,
) -> Option<MechanismId> {
    let mut sorted: Vec<(MechanismId, f64)> = radii.into_iter().collect();
    sorted.sort_by_key(|(id, _)| *id);
    let mut best: Option<(MechanismId, f64)> = None;
    for (id, r) in sorted {
        match best {
            Some((_, b)) if r <= b => {}
            _ => best = Some((id, r)),
        }
    }
    best.map(|(id, _)| id)
}
