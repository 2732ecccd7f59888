//! Tight Gaussian-mechanism bound, posed as a constrained maximisation.
//!
//! For a privacy level `ε` the mechanism at distance `L` needs
//!
//! ```text
//! δ_req(L, ε) = Φ(ΔL/2σ − εσ/ΔL) − e^ε·Φ(−ΔL/2σ − εσ/ΔL)
//! ```
//!
//! and the class-separation constraint allows at most
//!
//! ```text
//! δ_budget(ε) = (e0 − e1·e^{2ε}) / (1 + e^ε).
//! ```
//!
//! The certified radius is the largest `L` with `δ_req(L, ε) <= δ_budget(ε)`,
//! maximised over `ε`. With `u = ΔL/σ` the requirement depends on `u` alone,
//! so the search runs at unit scale and the result is multiplied by `σ/Δ`.

use crate::domain::{ExpectationBounds, NoiseConfig};

use super::normal::std_normal_cdf;
use super::search::maximize_log_grid;
use super::OptimizerSettings;

/// Largest scaled distance tried by the bracket expansion.
const MAX_SCALED_RADIUS: f64 = 1e12;

/// Required `δ` at scaled distance `u = ΔL/σ`.
fn delta_required_scaled(u: f64, eps: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let shift = eps / u;
    let half = 0.5 * u;
    std_normal_cdf(half - shift) - eps.exp() * std_normal_cdf(-half - shift)
}

/// Smallest `δ` for which the Gaussian mechanism with noise `σ` is
/// `(ε, δ)`-private between inputs at distance `radius`.
pub fn dp_delta_required(radius: f64, eps: f64, noise: &NoiseConfig) -> f64 {
    delta_required_scaled(radius / noise.scale(), eps)
}

/// Largest `δ` compatible with the class-separation constraint at `ε`.
/// Non-positive values mean `ε` is infeasible.
pub fn dp_delta_budget(bounds: &ExpectationBounds, eps: f64) -> f64 {
    delta_budget(bounds.e0(), bounds.e1(), eps)
}

fn delta_budget(e0: f64, e1: f64, eps: f64) -> f64 {
    (e0 - e1 * (2.0 * eps).exp()) / (1.0 + eps.exp())
}

/// Largest scaled distance whose required `δ` stays within `delta`.
///
/// Brackets by doubling, then bisects to relative width `tol`. The lower end
/// of the bracket is only ever moved to points where the constraint was
/// checked, so the returned value always satisfies it.
fn max_scaled_radius(eps: f64, delta: f64, tol: f64) -> f64 {
    if delta <= 0.0 {
        return 0.0;
    }
    let feasible = |u: f64| delta_required_scaled(u, eps) <= delta;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while feasible(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > MAX_SCALED_RADIUS {
            return lo;
        }
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest radius with `dp_delta_required(radius, eps) <= delta`.
pub fn max_radius_for_delta(eps: f64, delta: f64, noise: &NoiseConfig, tol: f64) -> f64 {
    noise.scale() * max_scaled_radius(eps, delta, tol)
}

pub(crate) fn improved_dp_objective(e0: f64, e1: f64, eps: f64, tol: f64) -> f64 {
    max_scaled_radius(eps, delta_budget(e0, e1, eps), tol)
}

pub(crate) fn improved_dp_unit_radius(e0: f64, e1: f64, opt: &OptimizerSettings) -> f64 {
    if e0 <= e1 {
        return 0.0;
    }
    let eps_hi = if e1 > 0.0 {
        opt.eps_cap.min(0.5 * (e0 / e1).ln())
    } else {
        opt.eps_cap
    };
    let eps_lo = opt.eps_floor(eps_hi);
    maximize_log_grid(
        |eps| improved_dp_objective(e0, e1, eps, opt.bisect_tol),
        eps_lo,
        eps_hi,
        opt.grid_points,
        opt.refine_iters,
    )
    .value
    .max(0.0)
}

/// Improved differential-privacy radius. Accepts either expectation mode.
pub fn certify_improved_dp(
    bounds: &ExpectationBounds,
    noise: &NoiseConfig,
    opt: &OptimizerSettings,
) -> f64 {
    noise.scale() * improved_dp_unit_radius(bounds.e0(), bounds.e1(), opt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_bounds, ExpectationMode};

    fn unit() -> NoiseConfig {
        NoiseConfig::new(1.0).unwrap()
    }

    #[test]
    fn required_delta_vanishes_at_zero_distance() {
        assert_eq!(dp_delta_required(0.0, 0.5, &unit()), 0.0);
        assert!(dp_delta_required(1e-6, 0.5, &unit()) < 1e-12);
    }

    #[test]
    fn required_delta_without_privacy_loss() {
        // ε = 0, L = 2σ: Φ(1) − Φ(−1).
        let d = dp_delta_required(2.0, 0.0, &unit());
        assert!((d - 0.682_689_492_137_085_9).abs() < 1e-6);
    }

    #[test]
    fn required_delta_monotone_in_distance() {
        for eps in [0.0, 0.01, 0.1, 1.0, 5.0, 20.0] {
            let mut prev = 0.0;
            for i in 1..2000 {
                let l = i as f64 * 0.01;
                let d = dp_delta_required(l, eps, &unit());
                assert!(d >= prev - 1e-15, "eps = {eps}, L = {l}");
                prev = d;
            }
        }
    }

    #[test]
    fn budget_values() {
        let b = make_bounds(0.9, 0.05, ExpectationMode::Multinomial).unwrap();
        assert!((dp_delta_budget(&b, 0.0) - 0.425).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let v = dp_delta_budget(&b, i as f64 * 0.02);
            assert!(v < prev);
            prev = v;
        }
        let tied = make_bounds(0.3, 0.3, ExpectationMode::Multinomial).unwrap();
        for i in 0..50 {
            assert!(dp_delta_budget(&tied, i as f64 * 0.1) <= 0.0);
        }
    }

    #[test]
    fn radius_for_delta_satisfies_constraint_tightly() {
        let noise = unit();
        for (eps, delta) in [(0.1, 0.2), (1.0, 0.05), (3.0, 1e-4)] {
            let r = max_radius_for_delta(eps, delta, &noise, 1e-9);
            assert!(dp_delta_required(r, eps, &noise) <= delta);
            assert!(dp_delta_required(r * (1.0 + 1e-8), eps, &noise) > delta);
        }
    }

    #[test]
    fn no_separation_gives_zero() {
        let opt = OptimizerSettings::default();
        assert_eq!(improved_dp_unit_radius(0.4, 0.4, &opt), 0.0);
        assert_eq!(improved_dp_unit_radius(0.1, 0.4, &opt), 0.0);
    }
}
