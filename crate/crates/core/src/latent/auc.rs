use crate::error::{Error, Result};

/// Rank-based AUC: the probability that a positive outscores a negative,
/// ties counting one half.
pub fn auc_from_scores(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InsufficientData(format!(
            "AUC needs both sides non-empty (got {} positive, {} negative)",
            pos.len(),
            neg.len()
        )));
    }
    if pos.iter().chain(neg).any(|v| v.is_nan()) {
        return Err(Error::Domain("NaN score".into()));
    }
    let mut sorted = neg.to_vec();
    sorted.sort_by(f64::total_cmp);
    // twice the Mann-Whitney count: 2 * wins + ties
    let mut doubled: u128 = 0;
    for &p in pos {
        let below = sorted.partition_point(|&v| v < p);
        let not_above = sorted.partition_point(|&v| v <= p);
        doubled += 2 * below as u128 + (not_above - below) as u128;
    }
    let denom = 2 * pos.len() as u128 * neg.len() as u128;
    Ok(doubled as f64 / denom as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_tied() {
        assert_eq!(auc_from_scores(&[0.9, 0.8], &[0.1, 0.2]).unwrap(), 1.0);
        assert_eq!(auc_from_scores(&[0.1, 0.2], &[0.9, 0.8]).unwrap(), 0.0);
        assert_eq!(auc_from_scores(&[0.5; 3], &[0.5; 4]).unwrap(), 0.5);
    }

    #[test]
    fn partial_ordering() {
        // wins: 3 vs {1,2}: 2; 1 vs {1,2}: tie 1 => (2*2 + 1) / (2*4)
        assert_eq!(auc_from_scores(&[3.0, 1.0], &[1.0, 2.0]).unwrap(), 5.0 / 8.0);
    }

    #[test]
    fn empty_side() {
        assert!(matches!(auc_from_scores(&[], &[1.0]), Err(Error::InsufficientData(_))));
        assert!(matches!(auc_from_scores(&[1.0], &[]), Err(Error::InsufficientData(_))));
    }
}
