//! Rényi-divergence bound.
//!
//! For an order `ω > 1` the certified squared radius (unit noise) is
//! `-(2/ω)·ln M(ω)` with
//! `M(ω) = 1 - e0 - e1 + 2·((e0^(1-ω) + e1^(1-ω))/2)^(1/(1-ω))`,
//! and the bound is the supremum over `ω`.

use crate::domain::{ExpectationBounds, NoiseConfig};
use crate::error::Result;

use super::search::maximize_log_grid;
use super::{require_multinomial, OptimizerSettings};

/// Smallest `ω - 1` on the search grid. `ω = 1` itself is a 0/0 limit.
const MIN_ORDER_OFFSET: f64 = 1e-6;

/// `ln` of the power mean `((a^t + b^t)/2)^(1/t)` for `t != 0`, computed in
/// log space so that `t ≪ 0` with tiny `b` does not overflow.
fn ln_power_mean(ln_a: f64, ln_b: f64, t: f64) -> f64 {
    let (x, y) = (t * ln_a, t * ln_b);
    let hi = x.max(y);
    let half_sum_minus_one = 0.5 * ((x - hi).exp_m1() + (y - hi).exp_m1());
    (hi + half_sum_minus_one.ln_1p()) / t
}

/// Unit-noise radius for a fixed order, 0 where `M(ω)` leaves `(0, 1)`.
pub(crate) fn li_objective(e0: f64, e1: f64, omega: f64) -> f64 {
    let t = 1.0 - omega;
    let pm = ln_power_mean(e0.ln(), e1.ln(), t).exp();
    // M - 1, kept separate so ln(M) does not lose digits when M ≈ 1.
    let m_minus_one = 2.0 * pm - e0 - e1;
    if !(m_minus_one > -1.0 && m_minus_one < 0.0) {
        return 0.0;
    }
    let sq = -2.0 / omega * m_minus_one.ln_1p();
    if sq > 0.0 {
        sq.sqrt()
    } else {
        0.0
    }
}

/// Unit-noise supremum over `ω ∈ (1, omega_max]`.
pub(crate) fn li_unit_radius(e0: f64, e1: f64, opt: &OptimizerSettings) -> f64 {
    if e0 <= e1 {
        return 0.0;
    }
    let best = maximize_log_grid(
        |offset| li_objective(e0, e1, 1.0 + offset),
        MIN_ORDER_OFFSET,
        opt.omega_max - 1.0,
        opt.grid_points,
        opt.refine_iters,
    );
    best.value.max(0.0)
}

/// Rényi-divergence certified radius. Multinomial expectations only.
pub fn certify_li(
    bounds: &ExpectationBounds,
    noise: &NoiseConfig,
    opt: &OptimizerSettings,
) -> Result<f64> {
    require_multinomial(bounds)?;
    Ok(noise.sigma() * li_unit_radius(bounds.e0(), bounds.e1(), opt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_mean_matches_direct_formula() {
        let (a, b, t) = (0.9_f64, 0.05_f64, -1.5_f64);
        let direct = ((a.powf(t) + b.powf(t)) / 2.0).powf(1.0 / t);
        assert!((ln_power_mean(a.ln(), b.ln(), t).exp() - direct).abs() < 1e-14);
    }

    #[test]
    fn power_mean_survives_extreme_exponents() {
        let v = ln_power_mean(0.9_f64.ln(), 1e-12_f64.ln(), -499.0);
        assert!(v.is_finite());
    }

    #[test]
    fn no_separation_gives_zero() {
        let opt = OptimizerSettings::default();
        assert_eq!(li_unit_radius(0.4, 0.4, &opt), 0.0);
        assert_eq!(li_unit_radius(0.3, 0.4, &opt), 0.0);
    }

    #[test]
    fn objective_is_zero_outside_valid_m() {
        // e0 + e1 = 1 and equal bounds: M = 1 for every order.
        assert_eq!(li_objective(0.5, 0.5, 2.0), 0.0);
    }
}
