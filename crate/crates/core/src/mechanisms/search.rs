//! One-dimensional maximisation used by the mechanisms that optimise over a
//! free parameter (`ω` for the Rényi bound, `ε` for the privacy bounds).
//!
//! The objective is sampled on a log-spaced grid; the best grid cell is then
//! refined by golden-section search in log coordinates. Any value returned is
//! an actual evaluation of the objective, so a missed global maximum only
//! makes the certificate smaller, never unsound.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// `points` values from `lo` to `hi` inclusive, evenly spaced in `ln x`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    debug_assert!(lo > 0.0 && hi >= lo && points >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                (a + step * i as f64).exp()
            }
        })
        .collect()
}

/// Location and value of the best point found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

/// Maximise `f` over `[lo, hi]` by log-grid scan plus golden-section
/// refinement around the best grid cell.
pub fn maximize_log_grid<F>(f: F, lo: f64, hi: f64, points: usize, refine_iters: usize) -> Maximum
where
    F: Fn(f64) -> f64,
{
    if !(hi > lo) {
        return Maximum { x: lo, value: f(lo).max(0.0) };
    }
    let grid = log_grid(lo, hi, points);
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let (best_idx, &best_val) = values
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });

    let mut best = Maximum { x: grid[best_idx], value: best_val };
    if refine_iters == 0 {
        return best;
    }

    let left = grid[best_idx.saturating_sub(1)];
    let right = grid[(best_idx + 1).min(grid.len() - 1)];
    let refined = golden_section_max(|t| f(t.exp()), left.ln(), right.ln(), refine_iters);
    if refined.value > best.value {
        best = Maximum { x: refined.x.exp(), value: refined.value };
    }
    best
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section_max<F>(f: F, mut a: f64, mut b: f64, iters: usize) -> Maximum
where
    F: Fn(f64) -> f64,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc >= fd { Maximum { x: c, value: fc } } else { Maximum { x: d, value: fd } };

    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc > best.value {
                best = Maximum { x: c, value: fc };
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd > best.value {
                best = Maximum { x: d, value: fd };
            }
        }
        if b - a <= f64::EPSILON * (a.abs() + b.abs()) {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints_and_spacing() {
        let g = log_grid(1e-4, 1.0, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 1e-4).abs() < 1e-18);
        assert_eq!(g[4], 1.0);
        assert!((g[2] - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let m = golden_section_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, 0.0, 1.0, 80);
        assert!((m.x - 0.3).abs() < 1e-7);
        assert!((m.value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn log_grid_search_refines_between_cells() {
        // Peak at x = e, between grid points of a coarse grid.
        let f = |x: f64| x.ln() / x;
        let m = maximize_log_grid(f, 0.1, 100.0, 7, 60);
        assert!((m.x - std::f64::consts::E).abs() < 1e-6);
        assert!((m.value - 1.0 / std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn degenerate_interval_evaluates_once() {
        let m = maximize_log_grid(|x| x, 2.0, 2.0, 10, 10);
        assert_eq!(m.value, 2.0);
    }

    #[test]
    fn refinement_never_lowers_grid_best() {
        // Bimodal: refinement around the wrong lobe must not lose the grid best.
        let f = |x: f64| if x < 1.0 { 1.0 - (x - 0.5).abs() } else { 0.2 };
        let m = maximize_log_grid(f, 0.01, 10.0, 50, 60);
        assert!(m.value >= 0.95);
    }
}
