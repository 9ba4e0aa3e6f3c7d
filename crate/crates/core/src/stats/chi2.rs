use serde::{Deserialize, Serialize};

use super::{Sidedness, TestResult};
use crate::data::Side;
use crate::error::{Error, Result};

/// Bona fide outcomes of two groups at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable2x2 {
    pub accepted_a: u64,
    pub rejected_a: u64,
    pub accepted_b: u64,
    pub rejected_b: u64,
}

impl ContingencyTable2x2 {
    pub fn new(accepted_a: u64, rejected_a: u64, accepted_b: u64, rejected_b: u64) -> Self {
        ContingencyTable2x2 {
            accepted_a,
            rejected_a,
            accepted_b,
            rejected_b,
        }
    }

    pub fn total_a(&self) -> u64 {
        self.accepted_a + self.rejected_a
    }

    pub fn total_b(&self) -> u64 {
        self.accepted_b + self.rejected_b
    }

    pub fn swapped(&self) -> Self {
        ContingencyTable2x2::new(self.accepted_b, self.rejected_b, self.accepted_a, self.rejected_a)
    }
}

/// Upper tail of the chi-squared distribution with one degree of freedom.
pub fn chi2_survival(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!(
            "chi-squared statistic must be non-negative, got {x}"
        )));
    }
    Ok(libm::erfc((0.5 * x).sqrt()))
}

/// Pearson chi-squared test (1 df, no continuity correction) with a
/// one-sided p-value attributed to the group with the higher rejection rate.
///
/// The one-sided p-value is half the two-sided one. Tables whose rejection
/// rates are exactly equal return a zero statistic, `p = 1` and no
/// direction.
pub fn chi_squared_one_sided(t: &ContingencyTable2x2) -> Result<TestResult> {
    let (na, nb) = (t.total_a(), t.total_b());
    if na == 0 || nb == 0 {
        return Err(Error::DegenerateTable);
    }

    // rejected_a / na vs rejected_b / nb, compared exactly
    let lhs = t.rejected_a as u128 * nb as u128;
    let rhs = t.rejected_b as u128 * na as u128;
    if lhs == rhs {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            sidedness: Sidedness::OneSided,
            direction: None,
        });
    }
    let worse = if lhs > rhs { Side::A } else { Side::B };

    let (a, b, c, d) = (
        t.accepted_a as f64,
        t.rejected_a as f64,
        t.accepted_b as f64,
        t.rejected_b as f64,
    );
    let n = a + b + c + d;
    let det = a * d - b * c;
    let statistic = n * det * det / ((a + b) * (c + d) * (a + c) * (b + d));
    let p_value = (0.5 * chi2_survival(statistic)?).clamp(0.0, 1.0);

    Ok(TestResult {
        statistic,
        p_value,
        sidedness: Sidedness::OneSided,
        direction: Some(worse),
    })
}
