mod common;

use common::*;
use smoothcert::analysis::wilcoxon_pratt_differences;
use smoothcert::confidence::{beta_interval, hoeffding_halfwidth, Side};
use smoothcert::mechanisms::{certify, std_normal_cdf, std_normal_quantile};
use smoothcert::{make_bounds, ExpectationMode, MechanismId, NoiseConfig, OptimizerSettings};

const POINTS: [(f64, f64); 8] = [
    (0.9, 0.05),
    (0.7, 0.3),
    (0.98, 0.005),
    (0.3, 0.1),
    (0.55, 0.2),
    (0.999, 1e-4),
    (0.12, 0.1),
    (0.6, 0.01),
];

fn radius(id: MechanismId, e0: f64, e1: f64) -> f64 {
    let b = make_bounds(e0, e1, ExpectationMode::Multinomial).unwrap();
    certify(id, &b, &NoiseConfig::new(1.0).unwrap(), &OptimizerSettings::default()).unwrap()
}

#[test]
fn normal_quantile_against_high_precision_values() {
    // 30-digit evaluations, truncated.
    let table = [
        (0.9, 1.281_551_565_544_600_5),
        (0.975, 1.959_963_984_540_054),
        (0.999, 3.090_232_306_167_813_5),
        (1e-10, -6.361_340_902_404_056),
    ];
    for (p, x) in table {
        let got = std_normal_quantile(p).unwrap();
        assert!((got - x).abs() <= 1e-13 * x.abs(), "p = {p}: {got} vs {x}");
    }
    assert!((std_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
    assert!((std_normal_cdf(-8.0) / 6.220_960_574_271_785e-16 - 1.0).abs() < 1e-12);
}

#[test]
fn cohen_matches_reference_quantile() {
    for (e0, e1) in POINTS {
        let ours = radius(MechanismId::Cohen, e0, e1);
        let oracle = cohen_oracle(e0);
        assert!((ours - oracle).abs() <= 1e-9 * oracle.max(1.0), "({e0}, {e1}): {ours} vs {oracle}");
    }
}

#[test]
fn li_matches_dense_order_scan() {
    for (e0, e1) in POINTS {
        let ours = radius(MechanismId::Li, e0, e1);
        let oracle = li_oracle(e0, e1, 200_000);
        assert!(ours >= oracle * (1.0 - 1e-9), "({e0}, {e1}): {ours} below scan {oracle}");
        assert!(ours <= oracle * (1.0 + 1e-6) + 1e-12, "({e0}, {e1}): {ours} above scan {oracle}");
    }
}

#[test]
fn lecuyer_matches_dense_privacy_scan() {
    for (e0, e1) in POINTS {
        let ours = radius(MechanismId::Lecuyer, e0, e1);
        let oracle = lecuyer_oracle(e0, e1, 1_000_000);
        assert!(ours >= oracle * (1.0 - 1e-9), "({e0}, {e1}): {ours} below scan {oracle}");
        assert!(ours <= oracle * (1.0 + 1e-6) + 1e-12, "({e0}, {e1}): {ours} above scan {oracle}");
    }
}

#[test]
fn improved_dp_matches_lattice_scan() {
    let step = 1e-5;
    for (e0, e1) in POINTS {
        let ours = radius(MechanismId::ImprovedDp, e0, e1);
        let oracle = improved_dp_oracle(e0, e1, 20_000, step);
        assert!(ours >= oracle - 1e-9, "({e0}, {e1}): {ours} below lattice {oracle}");
        assert!(ours <= oracle + 2.0 * step + 1e-4 * oracle, "({e0}, {e1}): {ours} above lattice {oracle}");
    }
}

#[test]
fn hoeffding_against_high_precision_value() {
    // sqrt(ln(2000) / 200000) evaluated with 30-digit arithmetic.
    let h = hoeffding_halfwidth(100_000, 0.001).unwrap();
    assert!((h - 0.006_164_779_987_778_186).abs() < 1e-15);
}

#[test]
fn clopper_pearson_matches_binomial_tail() {
    let cases = [(0u64, 50u64), (1, 50), (25, 50), (49, 50), (50, 50), (300, 1000), (990, 1000)];
    for (k, n) in cases {
        for alpha in [0.05, 0.001] {
            let lower = beta_interval(k, n, alpha, Side::Lower).unwrap();
            let upper = beta_interval(k, n, alpha, Side::Upper).unwrap();
            let lo_ref = clopper_pearson_lower_oracle(k, n, alpha);
            let hi_ref = if k == n { 1.0 } else { clopper_pearson_upper_oracle(k, n, alpha) };
            assert!((lower - lo_ref).abs() < 1e-8, "lower({k},{n},{alpha}): {lower} vs {lo_ref}");
            assert!((upper - hi_ref).abs() < 1e-8, "upper({k},{n},{alpha}): {upper} vs {hi_ref}");
            assert!(lower <= lo_ref + 1e-12 || lo_ref == 0.0);
        }
    }
}

#[test]
fn large_count_clopper_pearson_window() {
    let v = beta_interval(99_000, 100_000, 0.00025, Side::Lower).unwrap();
    assert!(v > 0.988 && v < 0.990, "{v}");
    let oracle = clopper_pearson_lower_oracle(99_000, 100_000, 0.00025);
    assert!((v - oracle).abs() < 1e-7, "{v} vs {oracle}");
}

#[test]
fn wilcoxon_matches_enumeration_on_fixed_cases() {
    let cases: [&[f64]; 5] = [
        &[1.0, 2.0, 0.0],
        &[-1.0, 2.0, -3.0, 4.0, 0.0, 0.0],
        &[1.0, 1.0, -1.0, 2.0, -2.0, 2.0],
        &[0.5, -0.25, 3.0, 3.0, -3.0, 0.0, 7.0, -0.5, 0.25, 1.0, 2.0, 0.0],
        &[0.0, 0.0],
    ];
    for d in cases {
        let got = wilcoxon_pratt_differences(d).unwrap();
        let (w, p) = wilcoxon_brute_force(d);
        assert_eq!(got.statistic(), w, "{d:?}");
        assert!((got.p_value - p).abs() < 1e-12, "{d:?}: {} vs {p}", got.p_value);
    }
}
