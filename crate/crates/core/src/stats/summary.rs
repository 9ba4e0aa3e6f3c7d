use serde::{Deserialize, Serialize};

use super::{check_finite, dip::dip_sorted, sorted_copy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// sample standard deviation, n - 1 denominator
    pub std_dev: f64,
    /// unbinned dip; absent below four values
    pub dip: Option<f64>,
}

pub fn summary_stats(sample: &[f64]) -> Result<SummaryStats> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "summary statistics need at least 2 values, got {n}"
        )));
    }
    check_finite(sample)?;
    let mean = sample.iter().sum::<f64>() / n as f64;
    let ss: f64 = sample.iter().map(|x| (x - mean) * (x - mean)).sum();
    let std_dev = (ss / (n - 1) as f64).sqrt();
    let dip = (n >= 4).then(|| dip_sorted(&sorted_copy(sample)));
    Ok(SummaryStats {
        n,
        mean,
        std_dev,
        dip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample() {
        let s = summary_stats(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.std_dev, 0.0);
        assert_eq!(s.dip, Some(0.125));
    }

    #[test]
    fn two_points() {
        let s = summary_stats(&[0.0, 2.0]).unwrap();
        assert_eq!(s.mean, 1.0);
        assert!((s.std_dev - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(s.dip, None);
    }

    #[test]
    fn too_small() {
        assert!(matches!(summary_stats(&[1.0]), Err(Error::InsufficientData(_))));
    }
}
