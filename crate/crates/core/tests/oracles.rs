//! Self-checks of the statistical oracles in `common` against textbook
//! values, so the acceptance verdicts rest on verified tools.

mod common;

use common::{ks_p_value, ks_statistic, linear_regression};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn ks_statistic_hand_values() {
    assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
    assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
    // ECDFs of {1,2,3,4} and {2.5}: largest gap 0.5 at x = 2.
    assert_eq!(ks_statistic(&[1.0, 2.0, 3.0, 4.0], &[2.5]), 0.5);
}

#[test]
fn ks_p_value_critical_point() {
    // Large-sample 5% critical value: D * sqrt(ne) = 1.358.
    let n = 10_000;
    let a: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let shift = (1.358 * (2.0 / n as f64).sqrt() * n as f64).round();
    let b: Vec<f64> = (0..n).map(|i| i as f64 + shift).collect();
    let p = ks_p_value(&a, &b);
    assert!((p - 0.05).abs() < 0.005, "{p}");
}

#[test]
fn ks_p_value_detects_shift_and_accepts_same_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut draw = |off: f64| -> Vec<f64> { (0..1000).map(|_| rng.random::<f64>() + off).collect() };
    let (a, b, c) = (draw(0.0), draw(0.0), draw(0.1));
    assert!(ks_p_value(&a, &b) > 0.01);
    assert!(ks_p_value(&a, &c) < 1e-6);
}

#[test]
fn ks_p_values_are_roughly_uniform_under_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut below = 0;
    let trials = 400;
    for _ in 0..trials {
        let a: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        if ks_p_value(&a, &b) < 0.1 {
            below += 1;
        }
    }
    // Expect 40 of 400; the asymptotic formula is mildly conservative.
    assert!((15..=60).contains(&below), "{below}");
}

#[test]
fn regression_exact_line_and_noise() {
    let x: Vec<f64> = (0..50).map(f64::from).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let fit = linear_regression(&x, &y);
    assert!((fit.slope - 2.0).abs() < 1e-12 && (fit.intercept - 1.0).abs() < 1e-9);
    assert_eq!(fit.p_positive, 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let flat: Vec<f64> = x.iter().map(|_| rng.random::<f64>()).collect();
    let fit = linear_regression(&x, &flat);
    assert!(fit.p_positive > 0.01 && fit.p_positive < 0.99, "{}", fit.p_positive);
}
