//! Shapiro–Wilk W test with Royston's approximation for the coefficients
//! and the null distribution of W (algorithm AS R94, complete samples).

use statrs::distribution::{ContinuousCDF, Normal};

use super::{check_finite, normal_sf, sorted_copy, Sidedness, TestResult};
use crate::error::{Error, Result};

pub const SHAPIRO_MIN_N: usize = 3;
pub const SHAPIRO_MAX_N: usize = 5000;

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

/// `c[0] + c[1] x + c[2] x^2 + ...`
fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Antisymmetric weights for the lower half of the ordered sample;
/// `a[i]` multiplies `x[n-1-i] - x[i]`.
fn coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let normal = Normal::standard();
    let an25 = n as f64 + 0.25;
    // m[i]: approximate expected normal order statistics, upper half
    let m: Vec<f64> = (0..half)
        .map(|i| -normal.inverse_cdf((i as f64 + 1.0 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();

    let mut a = vec![0.0; half];
    let a1 = poly(&C1, rsn) + m[0] / ssumm2;
    let (start, fac) = if n > 5 {
        let a2 = poly(&C2, rsn) + m[1] / ssumm2;
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
            / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
            .sqrt();
        a[1] = a2;
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    a[0] = a1;
    for i in start..half {
        a[i] = m[i] / fac;
    }
    a
}

/// Shapiro–Wilk test of normality for `3 <= n <= 5000`.
///
/// Returns W as the statistic and its upper-tail p-value (small W rejects).
pub fn shapiro_wilk(sample: &[f64]) -> Result<TestResult> {
    let n = sample.len();
    if !(SHAPIRO_MIN_N..=SHAPIRO_MAX_N).contains(&n) {
        return Err(Error::SampleSize {
            n,
            min: SHAPIRO_MIN_N,
            max: SHAPIRO_MAX_N,
        });
    }
    check_finite(sample)?;
    let x = sorted_copy(sample);
    let range = x[n - 1] - x[0];
    if !(range > 0.0) {
        return Err(Error::DegenerateSample("sample has zero variance".into()));
    }

    let a = coefficients(n);
    // work on x / range to keep magnitudes near one
    let xs: Vec<f64> = x.iter().map(|v| v / range).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ssq: f64 = xs.iter().map(|v| (v - mean) * (v - mean)).sum();
    let numerator: f64 = a
        .iter()
        .enumerate()
        .map(|(i, ai)| ai * (xs[n - 1 - i] - xs[i]))
        .sum();
    let w = (numerator * numerator / ssq).min(1.0);

    let p_value = w_p_value(w, n);
    Ok(TestResult {
        statistic: w,
        p_value: p_value.clamp(0.0, 1.0),
        sidedness: Sidedness::OneSided,
        direction: None,
    })
}

fn w_p_value(w: f64, n: usize) -> f64 {
    if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        return (pi6 * (w.sqrt().asin() - 0.75f64.sqrt().asin())).max(0.0);
    }
    let w1 = 1.0 - w;
    if w1 <= 0.0 {
        return 1.0;
    }
    let y = w1.ln();
    let an = n as f64;
    if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 1e-19;
        }
        let y = -(gamma - y).ln();
        let m = poly(&C3, an);
        let s = poly(&C4, an).exp();
        normal_sf((y - m) / s)
    } else {
        let xx = an.ln();
        let m = poly(&C5, xx);
        let s = poly(&C6, xx).exp();
        normal_sf((y - m) / s)
    }
}
