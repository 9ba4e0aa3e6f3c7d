//! Hartigan's dip statistic for unimodality.
//!
//! The dip is the largest distance between the empirical CDF and the
//! closest unimodal CDF. It is computed with the Hartigan & Hartigan
//! alternation between the greatest convex minorant (left of the modal
//! interval) and the least concave majorant (right of it), shrinking the
//! candidate modal interval until it stabilises.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_finite, sorted_copy};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

const MIN_N: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipResult {
    pub dip: f64,
    pub n: usize,
    /// `None` for the exact, unbinned statistic
    pub bins: Option<usize>,
    pub critical_value: f64,
    pub alpha: f64,
    pub unimodal: bool,
}

/// Dip statistic of `sample`, in `[1/(2n), 1/4]`.
///
/// With `bins = Some(k)` each value is first replaced by the right edge of
/// its bin among `k` equal-width bins spanning `[min, max]`.
pub fn dip_statistic(sample: &[f64], bins: Option<usize>) -> Result<f64> {
    if sample.len() < MIN_N {
        return Err(Error::InsufficientData(format!(
            "dip statistic needs at least {MIN_N} values, got {}",
            sample.len()
        )));
    }
    check_finite(sample)?;
    if let Some(k) = bins {
        if k < 2 {
            return Err(Error::Parameter(format!("dip bins must be at least 2, got {k}")));
        }
    }
    let x = match bins {
        Some(k) => bin_right_edges(&sorted_copy(sample), k),
        None => sorted_copy(sample),
    };
    Ok(dip_sorted(&x))
}

/// Maps a sorted sample onto bin right edges. The dip is affine invariant,
/// so the edges are expressed as bin numbers `1..=k` rather than in data
/// units; this keeps binning exact under rescaling.
fn bin_right_edges(sorted: &[f64], k: usize) -> Vec<f64> {
    let lo = sorted[0];
    let hi = sorted[sorted.len() - 1];
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![1.0; sorted.len()];
    }
    sorted
        .iter()
        .map(|&v| {
            let idx = ((v - lo) / span * k as f64).floor() as usize;
            (idx.min(k - 1) + 1) as f64
        })
        .collect()
}

/// Exact dip of an ascending sample (any length >= 1).
pub(crate) fn dip_sorted(x: &[f64]) -> f64 {
    let n = x.len();
    // work in units of 1/(2n) until the end
    let mut dip = 1.0;
    if n < 2 || x[n - 1] == x[0] {
        return dip / (2 * n) as f64;
    }

    // mn[j]: predecessor of j on the convex minorant of points (x_i, i)
    let mut mn = vec![0usize; n];
    for j in 1..n {
        mn[j] = j - 1;
        loop {
            let mnj = mn[j];
            let mnmnj = mn[mnj];
            if mnj == 0
                || (x[j] - x[mnj]) * ((mnj - mnmnj) as f64)
                    < (x[mnj] - x[mnmnj]) * ((j - mnj) as f64)
            {
                break;
            }
            mn[j] = mnmnj;
        }
    }
    // mj[k]: successor of k on the concave majorant
    let mut mj = vec![0usize; n];
    mj[n - 1] = n - 1;
    for k in (0..n - 1).rev() {
        mj[k] = k + 1;
        loop {
            let mjk = mj[k];
            let mjmjk = mj[mjk];
            if mjk == n - 1
                || (x[k] - x[mjk]) * (mjk as f64 - mjmjk as f64)
                    < (x[mjk] - x[mjmjk]) * (k as f64 - mjk as f64)
            {
                break;
            }
            mj[k] = mjmjk;
        }
    }

    let mut low = 0usize;
    let mut high = n - 1;
    let mut gcm: Vec<usize> = Vec::with_capacity(n);
    let mut lcm: Vec<usize> = Vec::with_capacity(n);

    loop {
        // convex minorant change points from high down to low
        gcm.clear();
        gcm.push(high);
        while *gcm.last().unwrap() > low {
            let last = *gcm.last().unwrap();
            gcm.push(mn[last]);
        }
        // concave majorant change points from low up to high
        lcm.clear();
        lcm.push(low);
        while *lcm.last().unwrap() < high {
            let last = *lcm.last().unwrap();
            lcm.push(mj[last]);
        }
        let l_gcm = gcm.len();
        let l_lcm = lcm.len();

        // largest distance between the two hulls inside [low, high];
        // ig/ih record where it was attained (0-based into gcm/lcm)
        let mut ig = l_gcm - 1;
        let mut ih = l_lcm - 1;
        let d = if l_gcm != 2 || l_lcm != 2 {
            let mut d = 0.0f64;
            let mut ix = l_gcm - 2;
            let mut iv = 1usize;
            loop {
                let gcmix = gcm[ix];
                let lcmiv = lcm[iv];
                if gcmix > lcmiv {
                    let gcmi1 = gcm[ix + 1];
                    let dx = (lcmiv as f64 - gcmi1 as f64 + 1.0)
                        - (x[lcmiv] - x[gcmi1]) * (gcmix - gcmi1) as f64
                            / (x[gcmix] - x[gcmi1]);
                    iv += 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv - 1;
                    }
                } else {
                    let lcmiv1 = lcm[iv - 1];
                    let dx = (x[gcmix] - x[lcmiv1]) * (lcmiv - lcmiv1) as f64
                        / (x[lcmiv] - x[lcmiv1])
                        - (gcmix as f64 - lcmiv1 as f64 - 1.0);
                    // ig refers to the position before clamping ix at 0
                    if dx >= d {
                        d = dx;
                        ig = ix;
                        ih = iv;
                    }
                    ix = ix.saturating_sub(1);
                }
                if iv > l_lcm - 1 {
                    iv = l_lcm - 1;
                }
                if gcm[ix] == lcm[iv] {
                    break;
                }
            }
            d
        } else {
            1.0
        };

        if d < dip {
            break;
        }

        // dip of the convex minorant on the left of the modal interval
        let mut dip_l = 0.0f64;
        for j in ig..l_gcm - 1 {
            let (jb, je) = (gcm[j + 1], gcm[j]);
            let mut max_t = 1.0f64;
            if je - jb > 1 && x[je] != x[jb] {
                let c = (je - jb) as f64 / (x[je] - x[jb]);
                for jj in jb..=je {
                    let t = (jj - jb + 1) as f64 - (x[jj] - x[jb]) * c;
                    max_t = max_t.max(t);
                }
            }
            dip_l = dip_l.max(max_t);
        }
        // and of the concave majorant on the right
        let mut dip_u = 0.0f64;
        for j in ih..l_lcm - 1 {
            let (jb, je) = (lcm[j], lcm[j + 1]);
            let mut max_t = 1.0f64;
            if je - jb > 1 && x[je] != x[jb] {
                let c = (je - jb) as f64 / (x[je] - x[jb]);
                for jj in jb..=je {
                    let t = (x[jj] - x[jb]) * c - (jj as f64 - jb as f64 - 1.0);
                    max_t = max_t.max(t);
                }
            }
            dip_u = dip_u.max(max_t);
        }
        dip = dip.max(dip_l.max(dip_u));

        if low == gcm[ig] && high == lcm[ih] {
            break;
        }
        low = gcm[ig];
        high = lcm[ih];
    }

    dip / (2 * n) as f64
}

fn uniform_replica(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// Monte Carlo `(1 - alpha)` quantile of the dip under a Uniform(0,1) null.
///
/// Replica `i` draws from its own ChaCha stream `i` under `seed`, so the
/// result is independent of how replicas are scheduled across threads. The
/// quantile is the order statistic at rank `ceil((1 - alpha) R)`.
pub fn dip_critical_value(
    n: usize,
    alpha: f64,
    replicas: usize,
    seed: u64,
    bins: Option<usize>,
) -> Result<f64> {
    if replicas == 0 {
        return Err(Error::Parameter("replicas must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if n < MIN_N {
        return Err(Error::InsufficientData(format!(
            "dip critical value needs n >= {MIN_N}, got {n}"
        )));
    }
    if let Some(k) = bins {
        if k < 2 {
            return Err(Error::Parameter(format!("dip bins must be at least 2, got {k}")));
        }
    }

    let mut dips: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut sample = uniform_replica(n, &mut rng);
            sample.sort_by(f64::total_cmp);
            if let Some(k) = bins {
                sample = bin_right_edges(&sample, k);
            }
            dip_sorted(&sample)
        })
        .collect();
    dips.sort_by(f64::total_cmp);

    let rank = ((1.0 - alpha) * replicas as f64).ceil() as usize;
    Ok(dips[rank.clamp(1, replicas) - 1])
}

/// Dip statistic with a Monte Carlo critical value for the same `n` and
/// binning; the sample is declared unimodal when `dip < critical_value`.
pub fn dip_test(
    sample: &[f64],
    bins: Option<usize>,
    alpha: f64,
    replicas: usize,
    seed: u64,
) -> Result<DipResult> {
    let dip = dip_statistic(sample, bins)?;
    let critical_value = dip_critical_value(sample.len(), alpha, replicas, seed, bins)?;
    Ok(DipResult::new(dip, sample.len(), bins, critical_value, alpha))
}

impl DipResult {
    pub fn new(dip: f64, n: usize, bins: Option<usize>, critical_value: f64, alpha: f64) -> Self {
        DipResult {
            dip,
            n,
            bins,
            critical_value,
            alpha,
            unimodal: dip < critical_value,
        }
    }
}
