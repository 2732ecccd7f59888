//! Independent reference evaluations used by the oracle and acceptance
//! tests. Nothing here calls into the library's numerical code: normal
//! probabilities come from `statrs::distribution::Normal`, and every
//! optimisation is a plain dense scan.
#![allow(dead_code)]

use std::io::Write;

use statrs::distribution::{ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

pub fn phi(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn phi_inv(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Unit-noise Gaussian-quantile radius.
pub fn cohen_oracle(e0: f64) -> f64 {
    if e0 > 0.5 {
        phi_inv(e0)
    } else {
        0.0
    }
}

/// Rényi bound from the direct formula, scanned over a dense
/// logarithmic grid of orders.
pub fn li_oracle(e0: f64, e1: f64, points: usize) -> f64 {
    let (lo, hi) = (1e-6_f64.ln(), 499.0_f64.ln());
    let mut best = 0.0_f64;
    for k in 0..points {
        let omega = 1.0 + (lo + (hi - lo) * k as f64 / (points - 1) as f64).exp();
        let t = 1.0 - omega;
        // (a^t + b^t)/2 - 1 through expm1, so orders close to 1 keep their digits.
        let shifted = 0.5 * ((t * e0.ln()).exp_m1() + (t * e1.ln()).exp_m1());
        let mean = (shifted.ln_1p() / t).exp();
        let m = 1.0 - e0 - e1 + 2.0 * mean;
        if m > 0.0 && m < 1.0 {
            let v = -2.0 / omega * m.ln();
            if v.is_finite() && v > 0.0 {
                best = best.max(v.sqrt());
            }
        }
    }
    best
}

/// Classical Gaussian-mechanism bound scanned over a dense linear grid of
/// privacy levels in `(0, 1]`.
pub fn lecuyer_oracle(e0: f64, e1: f64, points: usize) -> f64 {
    let mut best = 0.0_f64;
    for k in 1..=points {
        let eps = k as f64 / points as f64;
        let sep = e0 - (2.0 * eps).exp() * e1;
        if sep <= 0.0 {
            break;
        }
        let log_term = (1.25 * (1.0 + eps.exp()) / sep).ln();
        if log_term > 0.0 {
            best = best.max(eps / (2.0 * log_term).sqrt());
        }
    }
    best
}

/// Required `δ` of the Gaussian mechanism at unit noise and distance `l`.
pub fn dp_delta_required_oracle(l: f64, eps: f64) -> f64 {
    phi(l / 2.0 - eps / l) - eps.exp() * phi(-l / 2.0 - eps / l)
}

/// Tight-bound radius on an `(ε, L)` lattice: for each `ε` on a
/// logarithmic grid, the largest lattice `L = k·step` whose requirement
/// fits the separation budget.
pub fn improved_dp_oracle(e0: f64, e1: f64, eps_points: usize, step: f64) -> f64 {
    let eps_hi = if e1 > 0.0 { (0.5 * (e0 / e1).ln()).min(50.0) } else { 50.0 };
    if eps_hi <= 0.0 {
        return 0.0;
    }
    let (lo, hi) = ((eps_hi * 1e-4).ln(), eps_hi.ln());
    let mut best = 0.0_f64;
    for k in 0..eps_points {
        let eps = (lo + (hi - lo) * k as f64 / (eps_points - 1) as f64).exp();
        let budget = (e0 - e1 * (2.0 * eps).exp()) / (1.0 + eps.exp());
        if budget <= 0.0 {
            continue;
        }
        // Skip lattice points that cannot beat the incumbent.
        let mut j = ((best / step).floor() as usize).max(1);
        if dp_delta_required_oracle(j as f64 * step, eps) > budget {
            continue;
        }
        while dp_delta_required_oracle((j + 1) as f64 * step, eps) <= budget {
            j += 1;
        }
        best = best.max(j as f64 * step);
    }
    best
}

/// `P(X ≥ k)` for `X ~ Binomial(n, p)`, by direct summation of the pmf in
/// log space.
pub fn binomial_upper_tail(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let ln_choose = |i: u64| -> f64 {
        statrs::function::gamma::ln_gamma(n as f64 + 1.0)
            - statrs::function::gamma::ln_gamma(i as f64 + 1.0)
            - statrs::function::gamma::ln_gamma((n - i) as f64 + 1.0)
    };
    (k..=n)
        .map(|i| (ln_choose(i) + i as f64 * p.ln() + (n - i) as f64 * (1.0 - p).ln()).exp())
        .sum()
}

/// Clopper–Pearson one-sided lower limit from the binomial tail:
/// the `p` with `P(X ≥ k; p) = alpha`, by bisection.
pub fn clopper_pearson_lower_oracle(k: u64, n: u64, alpha: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binomial_upper_tail(k, n, mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Upper limit via symmetry with the lower limit of the complement.
pub fn clopper_pearson_upper_oracle(k: u64, n: u64, alpha: f64) -> f64 {
    1.0 - clopper_pearson_lower_oracle(n - k, n, alpha)
}

/// Exact two-sided signed-rank p-value and `W+` by enumerating every sign
/// assignment of the nonzero differences, with Pratt ranks computed by
/// sorting and averaging ties.
pub fn wilcoxon_brute_force(d: &[f64]) -> (f64, f64) {
    let mut abs: Vec<(f64, usize)> = d.iter().enumerate().map(|(i, v)| (v.abs(), i)).collect();
    abs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut rank = vec![0.0; d.len()];
    let mut i = 0;
    while i < abs.len() {
        let mut j = i;
        while j + 1 < abs.len() && abs[j + 1].0 == abs[i].0 {
            j += 1;
        }
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for item in &abs[i..=j] {
            rank[item.1] = avg;
        }
        i = j + 1;
    }
    let nz: Vec<(f64, bool)> = d
        .iter()
        .zip(&rank)
        .filter(|(v, _)| **v != 0.0)
        .map(|(v, r)| (*r, *v > 0.0))
        .collect();
    if nz.is_empty() {
        return (0.0, 1.0);
    }
    let w_obs: f64 = nz.iter().filter(|x| x.1).map(|x| x.0).sum();
    let total: f64 = nz.iter().map(|x| x.0).sum();
    let centre = total / 2.0;
    let m = nz.len();
    let mut extreme = 0u64;
    for mask in 0u64..(1 << m) {
        let w: f64 = (0..m).filter(|b| mask >> b & 1 == 1).map(|b| nz[b].0).sum();
        if (w - centre).abs() >= (w_obs - centre).abs() - 1e-9 {
            extreme += 1;
        }
    }
    (w_obs, extreme as f64 / (1u64 << m) as f64)
}

/// Print one result line that shows up even when test output is
/// captured.
pub fn verdict(name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[acceptance] {tag} {name}: {detail}");
}
