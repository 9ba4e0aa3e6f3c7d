//! Hypothesis tests and summaries applied to binary outcomes and scalar
//! responses.

mod chi2;
mod dip;
mod mann_whitney;
mod shapiro;
mod summary;

pub use chi2::{chi2_survival, chi_squared_one_sided, ContingencyTable2x2};
pub use dip::{dip_critical_value, dip_statistic, dip_test, DipResult};
pub use mann_whitney::{mann_whitney_u, MwuMode, EXACT_MAX_TOTAL};
pub use shapiro::{shapiro_wilk, SHAPIRO_MAX_N, SHAPIRO_MIN_N};
pub use summary::{summary_stats, SummaryStats};

use serde::{Deserialize, Serialize};

use crate::data::Side;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

/// Outcome of a hypothesis test.
///
/// `direction` names the side hypothesised to be worse for one-sided
/// two-group tests and is `None` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub sidedness: Sidedness,
    pub direction: Option<Side>,
}

/// Standard normal upper tail, `P(Z >= z)`.
pub(crate) fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

pub(crate) fn sorted_copy(a: &[f64]) -> Vec<f64> {
    let mut v = a.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub(crate) fn check_finite(a: &[f64]) -> crate::Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::Domain("sample contains non-finite values".into()))
    }
}
