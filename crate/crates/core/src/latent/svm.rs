//! Soft-margin SVM with a Gaussian RBF kernel, trained by sequential
//! minimal optimisation.
//!
//! The dual is solved in its minimisation form
//!
//! ```text
//! min  1/2 a'Qa - sum(a)   s.t.  0 <= a_i <= C,  y'a = 0,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! Each step updates the maximal violating pair (the two indices whose
//! gradients most violate the KKT conditions) analytically and clips it to
//! the box. Training stops once the violation gap is at most `tol`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

/// Serialised as the string `"auto"` or a number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "GammaRepr", try_from = "GammaRepr")]
pub enum Gamma {
    /// `1 / (d * v)` with `v` the mean per-coordinate variance of the
    /// training features
    Auto,
    Value(f64),
}

impl Default for Gamma {
    fn default() -> Self {
        Gamma::Auto
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GammaRepr {
    Value(f64),
    Name(String),
}

impl From<Gamma> for GammaRepr {
    fn from(g: Gamma) -> Self {
        match g {
            Gamma::Auto => GammaRepr::Name("auto".into()),
            Gamma::Value(v) => GammaRepr::Value(v),
        }
    }
}

impl TryFrom<GammaRepr> for Gamma {
    type Error = String;

    fn try_from(r: GammaRepr) -> std::result::Result<Self, String> {
        match r {
            GammaRepr::Value(v) => Ok(Gamma::Value(v)),
            GammaRepr::Name(s) => s.parse().map_err(|e: Error| e.to_string()),
        }
    }
}

impl std::str::FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("auto") {
            return Ok(Gamma::Auto);
        }
        s.trim()
            .parse::<f64>()
            .map(Gamma::Value)
            .map_err(|_| Error::Parameter(format!("gamma must be `auto` or a number, got `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    pub c: f64,
    pub gamma: Gamma,
    pub tol: f64,
    /// iteration budget, in multiples of the training set size
    pub max_passes: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        SmoParams {
            c: 1.0,
            gamma: Gamma::Auto,
            tol: 1e-3,
            max_passes: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub regularization_c: f64,
    pub converged: bool,
    pub iterations: usize,
    /// final KKT violation gap
    pub violation: f64,
}

pub fn rbf(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

pub fn auto_gamma(features: &[Vec<f64>]) -> f64 {
    let n = features.len() as f64;
    let d = features[0].len();
    let mut total_var = 0.0;
    for j in 0..d {
        let mean = features.iter().map(|f| f[j]).sum::<f64>() / n;
        total_var += features.iter().map(|f| (f[j] - mean).powi(2)).sum::<f64>() / n;
    }
    let mean_var = total_var / d as f64;
    if mean_var > 0.0 {
        1.0 / (d as f64 * mean_var)
    } else {
        1.0 / d as f64
    }
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    /// `sum_i alpha_i y_i k(sv_i, x) + bias`; positive predicts label +1.
    pub fn decision_score(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        if !self.support_vectors.is_empty() && x.len() != d {
            return Err(Error::Shape {
                expected: d,
                got: x.len(),
            });
        }
        let s: f64 = self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .map(|(sv, a)| a * rbf(sv, x, self.gamma))
            .sum();
        Ok(s + self.bias)
    }

    /// Value of the (maximisation form) dual objective at the solution.
    pub fn dual_objective(&self) -> f64 {
        let linear: f64 = self.alphas.iter().map(|a| a.abs()).sum();
        let mut quad = 0.0;
        for (i, si) in self.support_vectors.iter().enumerate() {
            for (j, sj) in self.support_vectors.iter().enumerate() {
                quad += self.alphas[i] * self.alphas[j] * rbf(si, sj, self.gamma);
            }
        }
        linear - 0.5 * quad
    }
}

pub fn train_svm_smo(features: &[Vec<f64>], labels: &[i8], params: &SmoParams) -> Result<SvmModel> {
    let n = features.len();
    if n != labels.len() {
        return Err(Error::Shape {
            expected: n,
            got: labels.len(),
        });
    }
    if n == 0 {
        return Err(Error::Training("no training samples".into()));
    }
    let d = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != d) {
        return Err(Error::Shape {
            expected: d,
            got: bad.len(),
        });
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::Training("labels must be +1 or -1".into()));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::Training("both classes must be present".into()));
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::Parameter(format!("C must be positive, got {}", params.c)));
    }
    if !(params.tol > 0.0) {
        return Err(Error::Parameter(format!("tol must be positive, got {}", params.tol)));
    }
    let gamma = match params.gamma {
        Gamma::Auto => auto_gamma(features),
        Gamma::Value(g) if g > 0.0 && g.is_finite() => g,
        Gamma::Value(g) => {
            return Err(Error::Parameter(format!("gamma must be positive, got {g}")))
        }
    };
    let c = params.c;
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();

    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        kernel[i * n + i] = 1.0;
        for j in 0..i {
            let k = rbf(&features[i], &features[j], gamma);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i * n + j];

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let max_iter = params.max_passes.saturating_mul(n).max(1);
    let mut iterations = 0;
    let mut converged = false;
    let mut violation = f64::INFINITY;

    while iterations < max_iter {
        let mut i_sel = None;
        let mut g_max = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut g_min = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i_sel = Some(t);
            }
            if in_low(alpha[t], y[t]) && v < g_min {
                g_min = v;
                j_sel = Some(t);
            }
        }
        violation = g_max - g_min;
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            violation = 0.0;
            converged = true;
            break;
        };
        if violation <= params.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = {
            let v = kernel[i * n + i] + kernel[j * n + j] - 2.0 * kernel[i * n + j];
            if v > 0.0 { v } else { TAU }
        };
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else {
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // offset from free multipliers, or the midpoint of the feasible range
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(features[t].clone());
            alphas.push(alpha[t] * y[t]);
        }
    }

    Ok(SvmModel {
        support_vectors,
        alphas,
        bias: -rho,
        gamma,
        regularization_c: c,
        converged,
        iterations,
        violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_checks() {
        let x = vec![vec![0.0], vec![1.0]];
        let p = SmoParams::default();
        assert!(matches!(train_svm_smo(&x, &[1, 1], &p), Err(Error::Training(_))));
        let bad_c = SmoParams { c: 0.0, ..p };
        assert!(matches!(train_svm_smo(&x, &[1, -1], &bad_c), Err(Error::Parameter(_))));
        let bad_g = SmoParams { gamma: Gamma::Value(-1.0), ..p };
        assert!(matches!(train_svm_smo(&x, &[1, -1], &bad_g), Err(Error::Parameter(_))));
    }

    #[test]
    fn two_points_are_margin_vectors() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let params = SmoParams { c: 10.0, gamma: Gamma::Value(1.0), tol: 1e-10, max_passes: 100 };
        let m = train_svm_smo(&x, &[1, -1], &params).unwrap();
        assert!(m.converged);
        assert!((m.decision_score(&x[0]).unwrap() - 1.0).abs() < 1e-8);
        assert!((m.decision_score(&x[1]).unwrap() + 1.0).abs() < 1e-8);
        assert!(matches!(m.decision_score(&[1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn far_point_scores_bias() {
        let x = vec![vec![0.0], vec![0.5], vec![2.0], vec![2.5]];
        let params = SmoParams { gamma: Gamma::Value(2.0), ..SmoParams::default() };
        let m = train_svm_smo(&x, &[1, 1, -1, -1], &params).unwrap();
        assert!((m.decision_score(&[1e3]).unwrap() - m.bias).abs() < 1e-12);
    }

    #[test]
    fn auto_gamma_definition() {
        // coordinate variances 1 and 4 (population), mean 2.5, d = 2
        let x = vec![vec![-1.0, -2.0], vec![1.0, 2.0]];
        assert!((auto_gamma(&x) - 1.0 / 5.0).abs() < 1e-15);
    }
}
