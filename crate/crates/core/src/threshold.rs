//! Operating points and threshold sweeps.
//!
//! A sample is accepted as bona fide iff its response is `<= threshold`.
//! FAR is the fraction of attack responses accepted, FRR the fraction of
//! bona fide responses rejected.

use serde::{Deserialize, Serialize};

use crate::data::{GroupPair, Side};
use crate::error::{Error, Result};
use crate::stats::{chi_squared_one_sided, sorted_copy, ContingencyTable2x2};

/// Threshold strictly below `min` that rejects everything.
pub fn sentinel_below(min: f64) -> f64 {
    min.next_down()
}

/// Threshold strictly above `max` that accepts everything.
pub fn sentinel_above(max: f64) -> f64 {
    max.next_up()
}

/// `(accepted, rejected)` counts of a sorted bona fide sample at `thr`.
pub fn outcomes_at(sorted_bona: &[f64], thr: f64) -> Result<(usize, usize)> {
    if sorted_bona.is_empty() {
        return Err(Error::InsufficientData("no bona fide responses".into()));
    }
    debug_assert!(sorted_bona.windows(2).all(|w| w[0] <= w[1]));
    let accepted = sorted_bona.partition_point(|&r| r <= thr);
    Ok((accepted, sorted_bona.len() - accepted))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
    attack_accepted: usize,
    bona_rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    n_bona: usize,
    n_attack: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
    pub hter: f64,
}

impl OperatingPoint {
    fn new(threshold: f64, far: f64, frr: f64) -> Self {
        OperatingPoint {
            threshold,
            far,
            frr,
            hter: (far + frr) / 2.0,
        }
    }
}

fn check_class(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InsufficientData(format!("no {what} responses")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("{what} responses must be finite")));
    }
    Ok(())
}

/// ROC curve with one point per distinct pooled response plus a sentinel
/// on either side.
pub fn roc_curve(bona: &[f64], attack: &[f64]) -> Result<RocCurve> {
    check_class(bona, "bona fide")?;
    check_class(attack, "attack")?;
    let bona = sorted_copy(bona);
    let attack = sorted_copy(attack);

    let mut pooled: Vec<f64> = bona.iter().chain(&attack).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();

    let mut thresholds = Vec::with_capacity(pooled.len() + 2);
    thresholds.push(sentinel_below(pooled[0]));
    thresholds.extend_from_slice(&pooled);
    thresholds.push(sentinel_above(pooled[pooled.len() - 1]));

    let (nb, na) = (bona.len(), attack.len());
    let points = thresholds
        .into_iter()
        .map(|t| {
            let attack_accepted = attack.partition_point(|&r| r <= t);
            let bona_rejected = nb - bona.partition_point(|&r| r <= t);
            RocPoint {
                threshold: t,
                far: attack_accepted as f64 / na as f64,
                frr: bona_rejected as f64 / nb as f64,
                attack_accepted,
                bona_rejected,
            }
        })
        .collect();
    Ok(RocCurve {
        points,
        n_bona: nb,
        n_attack: na,
    })
}

/// Point of the curve where FAR and FRR are closest.
///
/// Ties go to the smaller `max(far, frr)`, then to the smaller threshold.
/// Rates are compared as exact fractions.
pub fn eer_operating_point(roc: &RocCurve) -> OperatingPoint {
    let (nb, na) = (roc.n_bona as u128, roc.n_attack as u128);
    // both rates scaled to the common denominator na * nb
    let key = |p: &RocPoint| {
        let far = p.attack_accepted as u128 * nb;
        let frr = p.bona_rejected as u128 * na;
        (far.abs_diff(frr), far.max(frr))
    };
    let best = roc
        .points
        .iter()
        .min_by(|x, y| {
            key(x)
                .cmp(&key(y))
                .then(x.threshold.total_cmp(&y.threshold))
        })
        .expect("a ROC curve always has sentinel points");
    OperatingPoint::new(best.threshold, best.far, best.frr)
}

pub fn hter_at(bona: &[f64], attack: &[f64], thr: f64) -> Result<OperatingPoint> {
    check_class(bona, "bona fide")?;
    check_class(attack, "attack")?;
    let far = attack.iter().filter(|&&r| r <= thr).count() as f64 / attack.len() as f64;
    let frr = bona.iter().filter(|&&r| r > thr).count() as f64 / bona.len() as f64;
    Ok(OperatingPoint::new(thr, far, frr))
}

/// Smallest threshold whose bona fide rejection fraction is at most `q`.
///
/// Candidates are the observed responses plus a sentinel below the
/// minimum, which is returned when `q` allows rejecting everything.
pub fn threshold_for_bonafide_error(bona: &[f64], q: f64) -> Result<f64> {
    check_class(bona, "bona fide")?;
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Parameter(format!("quantile must lie in [0, 1], got {q}")));
    }
    let sorted = sorted_copy(bona);
    let n = sorted.len();
    // number of rejections allowed; the epsilon absorbs representation
    // error in q * n for decimal q
    let allowed = ((q * n as f64) + 1e-9).floor().min(n as f64) as usize;
    let must_accept = n - allowed;
    if must_accept == 0 {
        Ok(sentinel_below(sorted[0]))
    } else {
        Ok(sorted[must_accept - 1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub enum Grid {
    /// sorted distinct pooled responses of both groups
    #[default]
    Auto,
    Explicit(Vec<f64>),
}

/// One-sided chi-squared p-value as a function of the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasCurve {
    pub pair: GroupPair,
    pub grid: Vec<f64>,
    pub p_values: Vec<f64>,
    /// worse group at each grid point, `None` where the rates are equal
    pub worse: Vec<Option<Side>>,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRegion {
    pub lo: f64,
    pub hi: f64,
    pub min_p: f64,
    pub worse_group: String,
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// 2x2 bona fide table of two sorted samples at one threshold.
pub fn table_at(sorted_a: &[f64], sorted_b: &[f64], thr: f64) -> Result<ContingencyTable2x2> {
    let (acc_a, rej_a) = outcomes_at(sorted_a, thr)?;
    let (acc_b, rej_b) = outcomes_at(sorted_b, thr)?;
    Ok(ContingencyTable2x2::new(
        acc_a as u64,
        rej_a as u64,
        acc_b as u64,
        rej_b as u64,
    ))
}

pub fn bias_sweep(
    pair: &GroupPair,
    bona_a: &[f64],
    bona_b: &[f64],
    grid: &Grid,
    alpha: f64,
) -> Result<BiasCurve> {
    check_class(bona_a, "bona fide")?;
    check_class(bona_b, "bona fide")?;
    check_alpha(alpha)?;
    let a = sorted_copy(bona_a);
    let b = sorted_copy(bona_b);

    let grid: Vec<f64> = match grid {
        Grid::Auto => {
            let mut g: Vec<f64> = a.iter().chain(&b).copied().collect();
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        }
        Grid::Explicit(g) => {
            if g.iter().any(|t| !t.is_finite()) || g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Parameter(
                    "threshold grid must be finite and strictly increasing".into(),
                ));
            }
            g.clone()
        }
    };
    if grid.len() < 2 {
        return Err(Error::Parameter(format!(
            "threshold grid needs at least 2 points, got {}",
            grid.len()
        )));
    }

    let mut p_values = Vec::with_capacity(grid.len());
    let mut worse = Vec::with_capacity(grid.len());
    for &t in &grid {
        let r = chi_squared_one_sided(&table_at(&a, &b, t)?)?;
        p_values.push(r.p_value);
        worse.push(r.direction);
    }
    Ok(BiasCurve {
        pair: pair.clone(),
        grid,
        p_values,
        worse,
        alpha,
    })
}

/// Maximal runs of grid points with `p < alpha`, ordered by threshold.
pub fn significant_regions(curve: &BiasCurve) -> Vec<BiasRegion> {
    let mut regions = Vec::new();
    let n = curve.grid.len();
    let mut i = 0;
    while i < n {
        if curve.p_values[i] >= curve.alpha {
            i += 1;
            continue;
        }
        let start = i;
        let mut arg_min = i;
        while i < n && curve.p_values[i] < curve.alpha {
            if curve.p_values[i] < curve.p_values[arg_min] {
                arg_min = i;
            }
            i += 1;
        }
        let worse_group = curve.worse[arg_min]
            .map(|s| curve.pair.label(s).to_string())
            .unwrap_or_default();
        regions.push(BiasRegion {
            lo: curve.grid[start],
            hi: curve.grid[i - 1],
            min_p: curve.p_values[arg_min],
            worse_group,
        });
    }
    regions
}
