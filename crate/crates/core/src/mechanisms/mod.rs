//! Certification mechanisms: maps from worst-case top-2 expectations and a
//! noise level to a certified ℓ2 radius.
//!
//! Every mechanism is homogeneous of degree one in `σ`: each computes a
//! radius for unit noise and multiplies by `σ` (divided by the sensitivity
//! where it applies) at the very end, so rescaling the noise rescales the
//! radius exactly.

mod cohen;
mod improved_dp;
mod lecuyer;
mod li;
pub mod normal;
pub mod search;

use std::fmt;
use std::str::FromStr;

pub use cohen::certify_cohen;
pub use improved_dp::{certify_improved_dp, dp_delta_budget, dp_delta_required, max_radius_for_delta};
pub use lecuyer::certify_lecuyer;
pub use li::certify_li;
pub use normal::{std_normal_cdf, std_normal_quantile};

use crate::domain::{ExpectationBounds, ExpectationMode, NoiseConfig};
use crate::error::{Error, Result};

/// The four certification mechanisms, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MechanismId {
    /// Gaussian quantile of the top-class lower bound.
    Cohen,
    /// Rényi-divergence bound, optimised over the order `ω`.
    Li,
    /// Classical Gaussian-mechanism differential-privacy bound.
    Lecuyer,
    /// Tight Gaussian-mechanism bound, optimised jointly over `(ε, δ)`.
    ImprovedDp,
}

impl MechanismId {
    pub const ALL: [MechanismId; 4] = [
        MechanismId::Cohen,
        MechanismId::Li,
        MechanismId::Lecuyer,
        MechanismId::ImprovedDp,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismId::Cohen => "cohen",
            MechanismId::Li => "li",
            MechanismId::Lecuyer => "lecuyer",
            MechanismId::ImprovedDp => "improved_dp",
        }
    }

    /// Whether the mechanism is defined for expectations of this kind.
    /// Only the two privacy-based bounds accept softmax expectations.
    pub fn supports(self, mode: ExpectationMode) -> bool {
        match mode {
            ExpectationMode::Multinomial => true,
            ExpectationMode::Softmax => {
                matches!(self, MechanismId::Lecuyer | MechanismId::ImprovedDp)
            }
        }
    }

    /// Mechanisms applicable to `mode`, in tie-break order.
    pub fn all_for(mode: ExpectationMode) -> Vec<MechanismId> {
        Self::ALL.into_iter().filter(|m| m.supports(mode)).collect()
    }
}

impl fmt::Display for MechanismId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "cohen" => Ok(MechanismId::Cohen),
            "li" => Ok(MechanismId::Li),
            "lecuyer" => Ok(MechanismId::Lecuyer),
            "improved_dp" | "improveddp" | "dp" | "ours" => Ok(MechanismId::ImprovedDp),
            other => Err(Error::invalid("mechanism", format!("unknown mechanism `{other}`"))),
        }
    }
}

/// Search settings for the optimising mechanisms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    /// Log-spaced grid size for the outer scan.
    pub grid_points: usize,
    /// Golden-section iterations around the best grid cell.
    pub refine_iters: usize,
    /// Upper end of the Rényi order search.
    pub omega_max: f64,
    /// Lower end of the privacy-parameter search.
    pub eps_min: f64,
    /// Upper cap on the privacy parameter for the improved bound.
    pub eps_cap: f64,
    /// Relative tolerance of the inner radius bisection.
    pub bisect_tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            grid_points: 200,
            refine_iters: 60,
            omega_max: 500.0,
            eps_min: 1e-4,
            eps_cap: 50.0,
            bisect_tol: 1e-9,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid("optimizer settings", what.to_string()));
        if self.grid_points < 2 {
            return bad("grid_points must be at least 2");
        }
        if self.refine_iters == 0 {
            return bad("refine_iters must be positive");
        }
        if !(self.omega_max > 1.0 && self.omega_max.is_finite()) {
            return bad("omega_max must exceed 1");
        }
        if !(self.eps_min > 0.0 && self.eps_cap > self.eps_min && self.eps_cap.is_finite()) {
            return bad("need 0 < eps_min < eps_cap");
        }
        if !(self.bisect_tol > 0.0 && self.bisect_tol < 1e-3) {
            return bad("bisect_tol must lie in (0, 1e-3)");
        }
        Ok(())
    }

    /// Lower end of an `ε` search whose upper end is `eps_hi`.
    ///
    /// Close to the diagonal `e0 = e1` the feasible range of `ε` shrinks
    /// below `eps_min`; the search then starts three decades under its
    /// upper end instead.
    pub(crate) fn eps_floor(&self, eps_hi: f64) -> f64 {
        self.eps_min.min(eps_hi * 1e-3)
    }
}

/// Dispatch to the named mechanism.
pub fn certify(
    id: MechanismId,
    bounds: &ExpectationBounds,
    noise: &NoiseConfig,
    opt: &OptimizerSettings,
) -> Result<f64> {
    match id {
        MechanismId::Cohen => certify_cohen(bounds, noise),
        MechanismId::Li => certify_li(bounds, noise, opt),
        MechanismId::Lecuyer => Ok(certify_lecuyer(bounds, noise, opt)),
        MechanismId::ImprovedDp => Ok(certify_improved_dp(bounds, noise, opt)),
    }
}

pub(crate) fn require_multinomial(bounds: &ExpectationBounds) -> Result<()> {
    if bounds.mode() != ExpectationMode::Multinomial {
        return Err(Error::ModeMismatch {
            expected: ExpectationMode::Multinomial,
            found: bounds.mode(),
        });
    }
    Ok(())
}
