use serde::{Deserialize, Serialize};

use super::{check_finite, normal_sf, Sidedness, TestResult};
use crate::error::{Error, Result};

/// Largest combined sample size for which the exact null distribution is
/// enumerated.
pub const EXACT_MAX_TOTAL: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MwuMode {
    Exact,
    NormalApprox,
    #[default]
    Auto,
}

struct Ranked {
    /// midranks of `a` followed by midranks of `b`, doubled so they are integers
    doubled_ranks: Vec<u64>,
    /// sum over tie groups of t^3 - t
    tie_term: f64,
}

fn rank_pooled(a: &[f64], b: &[f64]) -> Ranked {
    let n = a.len() + b.len();
    let mut order: Vec<(f64, usize)> = a.iter().chain(b).copied().zip(0..n).collect();
    order.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut doubled_ranks = vec![0u64; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && order[j].0 == order[i].0 {
            j += 1;
        }
        // ranks i+1..=j share (i+1+j)/2
        let doubled = (i + 1 + j) as u64;
        for item in &order[i..j] {
            doubled_ranks[item.1] = doubled;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    Ranked {
        doubled_ranks,
        tie_term,
    }
}

/// Two-sided Mann–Whitney U test. The reported statistic is U for `a`,
/// `R_a - n_a (n_a + 1) / 2`, with midranks for ties.
///
/// `Exact` enumerates the permutation distribution of the rank sum (valid
/// with ties, since it uses the observed midranks). `NormalApprox` uses the
/// tie-corrected variance with a continuity correction. `Auto` is exact for
/// tie-free samples of combined size at most [`EXACT_MAX_TOTAL`].
pub fn mann_whitney_u(a: &[f64], b: &[f64], mode: MwuMode) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData(
            "Mann–Whitney U needs at least one value in each sample".into(),
        ));
    }
    check_finite(a)?;
    check_finite(b)?;

    let (na, nb) = (a.len(), b.len());
    let total = na + nb;
    let ranked = rank_pooled(a, b);
    let doubled_sum_a: u64 = ranked.doubled_ranks[..na].iter().sum();
    let u = doubled_sum_a as f64 / 2.0 - (na * (na + 1)) as f64 / 2.0;

    let exact = match mode {
        MwuMode::Exact if total > EXACT_MAX_TOTAL => {
            return Err(Error::Mode(format!(
                "exact Mann–Whitney is limited to {EXACT_MAX_TOTAL} combined samples, got {total}"
            )))
        }
        MwuMode::Exact => true,
        MwuMode::NormalApprox => false,
        MwuMode::Auto => total <= EXACT_MAX_TOTAL && ranked.tie_term == 0.0,
    };

    let p_value = if exact {
        exact_two_sided(&ranked.doubled_ranks, na, doubled_sum_a)
    } else {
        approx_two_sided(u, na, nb, ranked.tie_term)
    };

    Ok(TestResult {
        statistic: u,
        p_value: p_value.clamp(0.0, 1.0),
        sidedness: Sidedness::TwoSided,
        direction: None,
    })
}

/// Counts size-`k` subsets of the pooled ranks by rank sum.
fn exact_two_sided(doubled_ranks: &[u64], k: usize, observed: u64) -> f64 {
    let max_sum: usize = doubled_ranks.iter().sum::<u64>() as usize;
    // counts[j][s]: subsets of size j with doubled rank sum s
    let mut counts = vec![vec![0f64; max_sum + 1]; k + 1];
    counts[0][0] = 1.0;
    for &w in doubled_ranks {
        let w = w as usize;
        for j in (1..=k).rev() {
            let (lower, upper) = counts.split_at_mut(j);
            let src = &lower[j - 1];
            let dst = &mut upper[0];
            for s in (w..=max_sum).rev() {
                let c = src[s - w];
                if c != 0.0 {
                    dst[s] += c;
                }
            }
        }
    }
    let dist = &counts[k];
    let total: f64 = dist.iter().sum();
    let observed = observed as usize;
    let lower: f64 = dist[..=observed].iter().sum();
    let upper: f64 = dist[observed..].iter().sum();
    (2.0 * lower.min(upper) / total).min(1.0)
}

fn approx_two_sided(u: f64, na: usize, nb: usize, tie_term: f64) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    let n = na + nb;
    let mean = na * nb / 2.0;
    let tie_adjust = if n > 1.0 { tie_term / (n * (n - 1.0)) } else { 0.0 };
    let var = na * nb / 12.0 * ((n + 1.0) - tie_adjust);
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    (2.0 * normal_sf(z)).min(1.0)
}
