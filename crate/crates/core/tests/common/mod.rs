//! Independent statistical oracles and fixtures shared by the integration
//! tests. Nothing here calls into the simulator's own statistics.
#![allow(dead_code)]

use memdie::array::ArrayGeometry;
use memdie::SimConfig;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Kolmogorov survival function `Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic two-sided p-value of the two-sample KS test, with the usual
/// small-sample correction on the effective size.
pub fn ks_p_value(a: &[f64], b: &[f64]) -> f64 {
    let d = ks_statistic(a, b);
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let s = ne.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    /// One-sided p-value for `slope > 0`.
    pub p_positive: f64,
}

/// Ordinary least squares of `y` on `x` with a Student-t slope test.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Regression {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    let p_positive = if se == 0.0 {
        if slope > 0.0 { 0.0 } else { 1.0 }
    } else {
        let t = StudentsT::new(0.0, 1.0, n - 2.0).unwrap();
        1.0 - t.cdf(slope / se)
    };
    Regression { slope, intercept, p_positive }
}

pub fn small(mut cfg: SimConfig, rows: usize, cell_cols: usize) -> SimConfig {
    cfg.geometry = ArrayGeometry { rows, cell_cols };
    cfg
}

/// Parses an experiment CSV into its header and numeric rows.
pub fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|f| f.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}
