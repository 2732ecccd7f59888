//! Wilcoxon signed-rank test with Pratt's treatment of zero differences.
//!
//! Zero differences take part in ranking (so they push the nonzero ranks
//! up) and are then discarded. The reported statistic is `W+`, the sum of
//! ranks of positive differences. Up to [`EXACT_LIMIT`] nonzero pairs the
//! two-sided p-value is exact, from the permutation distribution of the
//! actual ranks (ties included); above it, a normal approximation with the
//! variance computed from those same ranks is used.

use crate::error::{Error, Result};
use crate::mechanisms::std_normal_cdf;

/// Largest number of nonzero differences handled by exact enumeration.
pub const EXACT_LIMIT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PValueMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences.
    pub w_plus: f64,
    /// Sum of ranks of negative differences.
    pub w_minus: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub nonzero: usize,
    pub zeros: usize,
    pub method: PValueMethod,
}

impl WilcoxonResult {
    /// The reported statistic, `W+`.
    pub fn statistic(&self) -> f64 {
        self.w_plus
    }
}

/// Average ranks of `|d|` over all differences, zeros included.
pub fn pratt_ranks(d: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()));
    let mut ranks = vec![0.0; d.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && d[order[end]].abs() == d[order[start]].abs() {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

/// Test on paired samples, using differences `x − y`.
pub fn wilcoxon_pratt(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(Error::invalid(
            "wilcoxon",
            format!("paired samples differ in length ({} vs {})", x.len(), y.len()),
        ));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    wilcoxon_pratt_differences(&d)
}

/// Test on precomputed differences.
pub fn wilcoxon_pratt_differences(d: &[f64]) -> Result<WilcoxonResult> {
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("wilcoxon", "differences must be finite"));
    }
    let ranks = pratt_ranks(d);
    let mut w_plus = 0.0;
    let mut w_minus = 0.0;
    let mut kept = Vec::new();
    for (&di, &r) in d.iter().zip(&ranks) {
        if di > 0.0 {
            w_plus += r;
            kept.push(r);
        } else if di < 0.0 {
            w_minus += r;
            kept.push(r);
        }
    }
    let nonzero = kept.len();
    let zeros = d.len() - nonzero;
    if nonzero == 0 {
        return Ok(WilcoxonResult {
            w_plus: 0.0,
            w_minus: 0.0,
            p_value: 1.0,
            nonzero,
            zeros,
            method: PValueMethod::Exact,
        });
    }
    let (p_value, method) = if nonzero <= EXACT_LIMIT {
        (exact_p(&kept, w_plus), PValueMethod::Exact)
    } else {
        (normal_p(&kept, w_plus), PValueMethod::Normal)
    };
    Ok(WilcoxonResult {
        w_plus,
        w_minus,
        p_value,
        nonzero,
        zeros,
        method,
    })
}

/// Exact two-sided p-value. Average ranks are half-integers, so doubling
/// them gives integer weights and the null distribution of `2·W+` can be
/// built by a subset-sum recursion.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut prob = vec![0.0_f64; total + 1];
    prob[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        reach += r;
        for s in (0..=reach).rev() {
            let with = if s >= r { prob[s - r] } else { 0.0 };
            prob[s] = 0.5 * (prob[s] + with);
        }
    }
    let observed = (2.0 * w_plus).round() as i64;
    let centre = total as i64;
    let extreme = (2 * observed - centre).abs();
    let p: f64 = prob
        .iter()
        .enumerate()
        .filter(|&(s, _)| (2 * s as i64 - centre).abs() >= extreme)
        .map(|(_, p)| p)
        .sum();
    p.min(1.0)
}

fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let mean: f64 = ranks.iter().sum::<f64>() / 2.0;
    let var: f64 = ranks.iter().map(|r| r * r).sum::<f64>() / 4.0;
    let z = (w_plus - mean) / var.sqrt();
    (2.0 * std_normal_cdf(-z.abs())).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_ties_and_include_zeros() {
        let r = pratt_ranks(&[0.0, 2.0, -2.0, 1.0, 0.0]);
        assert_eq!(r, vec![1.5, 4.5, 4.5, 3.0, 1.5]);
    }

    #[test]
    fn hand_worked_example_with_one_zero() {
        // Differences 1, 2, 0: ranks 2, 3 after the zero takes rank 1.
        let w = wilcoxon_pratt(&[2.0, 3.0, 1.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(w.w_plus, 5.0);
        assert_eq!(w.w_minus, 0.0);
        assert_eq!(w.zeros, 1);
        // Sign patterns of {2, 3}: sums 0, 2, 3, 5; |2s − 5| ≥ 5 for 0 and 5.
        assert!((w.p_value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn all_zero_differences() {
        let w = wilcoxon_pratt(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(w.statistic(), 0.0);
        assert_eq!(w.p_value, 1.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(wilcoxon_pratt(&[1.0], &[1.0, 2.0]).is_err());
        assert!(wilcoxon_pratt_differences(&[f64::NAN]).is_err());
    }

    #[test]
    fn large_samples_use_normal_and_are_significant() {
        let d: Vec<f64> = (1..=200).map(|k| k as f64).collect();
        let w = wilcoxon_pratt_differences(&d).unwrap();
        assert_eq!(w.method, PValueMethod::Normal);
        assert!(w.p_value < 1e-10);
        assert_eq!(w.w_plus, 200.0 * 201.0 / 2.0);
    }

    #[test]
    fn exact_and_normal_agree_roughly_at_the_limit() {
        let d: Vec<f64> = (1..=25).map(|k| if k % 3 == 0 { -(k as f64) } else { k as f64 }).collect();
        let exact = wilcoxon_pratt_differences(&d).unwrap();
        let approx = normal_p(
            &pratt_ranks(&d),
            exact.w_plus,
        );
        assert_eq!(exact.method, PValueMethod::Exact);
        assert!((exact.p_value - approx).abs() < 0.01, "{} {}", exact.p_value, approx);
    }
}
