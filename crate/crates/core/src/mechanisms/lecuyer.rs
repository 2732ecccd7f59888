//! Classical Gaussian-mechanism bound:
//! `max over ε ∈ (0, 1]` of `σε / (Δ·sqrt(2·ln(1.25(1+e^ε) / (e0 − e^{2ε}·e1))))`.

use crate::domain::{ExpectationBounds, NoiseConfig};

use super::search::maximize_log_grid;
use super::OptimizerSettings;

const EPS_MAX: f64 = 1.0;

pub(crate) fn lecuyer_objective(e0: f64, e1: f64, eps: f64) -> f64 {
    let separation = e0 - (2.0 * eps).exp() * e1;
    if separation <= 0.0 {
        return 0.0;
    }
    let log_term = (1.25 * (1.0 + eps.exp()) / separation).ln();
    if log_term <= 0.0 {
        return 0.0;
    }
    eps / (2.0 * log_term).sqrt()
}

pub(crate) fn lecuyer_unit_radius(e0: f64, e1: f64, opt: &OptimizerSettings) -> f64 {
    if e0 <= e1 {
        return 0.0;
    }
    // Beyond ln(e0/e1)/2 the separation term is negative.
    let hi = EPS_MAX.min(0.5 * (e0 / e1).ln());
    let lo = opt.eps_floor(hi);
    maximize_log_grid(|eps| lecuyer_objective(e0, e1, eps), lo, hi, opt.grid_points, opt.refine_iters)
        .value
        .max(0.0)
}

/// Classical differential-privacy radius. Accepts either expectation mode.
pub fn certify_lecuyer(bounds: &ExpectationBounds, noise: &NoiseConfig, opt: &OptimizerSettings) -> f64 {
    noise.scale() * lecuyer_unit_radius(bounds.e0(), bounds.e1(), opt)
}
