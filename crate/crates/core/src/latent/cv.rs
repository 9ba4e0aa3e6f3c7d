use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::auc::auc_from_scores;
use super::codes::{featurize, CodeVector, FeatureMode};
use super::svm::{train_svm_smo, SmoParams};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub k: usize,
    pub seed: u64,
}

impl Default for FoldSpec {
    fn default() -> Self {
        FoldSpec { k: 5, seed: 0 }
    }
}

/// Assigns each index a fold in `0..k`, stratified by `strata`.
///
/// Within a stratum the indices are shuffled and dealt round-robin, so every
/// fold receives `floor(m / k)` or `ceil(m / k)` members of a stratum of size `m`.
pub fn stratified_folds(strata: &[usize], spec: &FoldSpec) -> Result<Vec<usize>> {
    if spec.k < 2 {
        return Err(Error::Fold(format!("fold count must be >= 2, got {}", spec.k)));
    }
    let n_strata = strata.iter().max().map_or(0, |m| m + 1);
    let mut assignment = vec![0; strata.len()];
    for s in 0..n_strata {
        let mut members: Vec<usize> = (0..strata.len()).filter(|&i| strata[i] == s).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < spec.k {
            return Err(Error::Fold(format!(
                "stratum {s} has {} samples, fewer than {} folds",
                members.len(),
                spec.k
            )));
        }
        members.shuffle(&mut stream_rng(spec.seed, s as u64));
        for (pos, &i) in members.iter().enumerate() {
            assignment[i] = pos % spec.k;
        }
    }
    Ok(assignment)
}

/// Mean held-out AUC of an RBF SVM separating two groups.
///
/// `vectors` must contain exactly two groups; the lexicographically smaller
/// label is the positive class.
pub fn cross_validated_auc(
    vectors: &[CodeVector],
    mode: FeatureMode,
    params: &SmoParams,
    folds: &FoldSpec,
) -> Result<f64> {
    let mut labels: Vec<&str> = vectors.iter().map(|v| v.group.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() != 2 {
        return Err(Error::InsufficientGroups { found: labels.len() });
    }
    if let Some(v) = vectors.iter().find(|v| v.k != vectors[0].k || v.codes.len() != vectors[0].codes.len()) {
        return Err(Error::Shape {
            expected: vectors[0].codes.len(),
            got: v.codes.len(),
        });
    }
    let features = vectors
        .iter()
        .map(|v| featurize(v, mode))
        .collect::<Result<Vec<_>>>()?;
    let strata: Vec<usize> = vectors.iter().map(|v| usize::from(v.group != labels[0])).collect();
    let y: Vec<i8> = strata.iter().map(|&s| if s == 0 { 1 } else { -1 }).collect();
    let assignment = stratified_folds(&strata, folds)?;

    let aucs = (0..folds.k)
        .into_par_iter()
        .map(|f| {
            let (mut train_x, mut train_y) = (Vec::new(), Vec::new());
            let (mut pos, mut neg) = (Vec::new(), Vec::new());
            let mut held_out = Vec::new();
            for i in 0..vectors.len() {
                if assignment[i] == f {
                    held_out.push(i);
                } else {
                    train_x.push(features[i].clone());
                    train_y.push(y[i]);
                }
            }
            let model = train_svm_smo(&train_x, &train_y, params)?;
            if !model.converged {
                log::warn!(
                    "fold {f}: SMO stopped after {} iterations, violation {:.3e}",
                    model.iterations,
                    model.violation
                );
            }
            for i in held_out {
                let s = model.decision_score(&features[i])?;
                if y[i] > 0 { pos.push(s) } else { neg.push(s) }
            }
            auc_from_scores(&pos, &neg)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_balanced_partitions() {
        let strata: Vec<usize> = (0..23).map(|i| usize::from(i >= 11)).collect();
        let a = stratified_folds(&strata, &FoldSpec { k: 5, seed: 3 }).unwrap();
        for f in 0..5 {
            for s in 0..2 {
                let c = (0..23).filter(|&i| a[i] == f && strata[i] == s).count();
                let m = strata.iter().filter(|&&x| x == s).count();
                assert!(c == m / 5 || c == m.div_ceil(5));
            }
        }
        assert_eq!(a, stratified_folds(&strata, &FoldSpec { k: 5, seed: 3 }).unwrap());
    }

    #[test]
    fn small_group_is_fold_error() {
        let strata = vec![0, 0, 0, 1, 1, 1, 1, 1];
        assert!(matches!(stratified_folds(&strata, &FoldSpec { k: 4, seed: 0 }), Err(Error::Fold(_))));
        assert!(matches!(stratified_folds(&strata, &FoldSpec { k: 1, seed: 0 }), Err(Error::Fold(_))));
    }

    #[test]
    fn needs_two_groups() {
        let v: Vec<CodeVector> = (0..10)
            .map(|i| CodeVector::new(i.to_string(), "A", vec![i % 4], 4).unwrap())
            .collect();
        let r = cross_validated_auc(&v, FeatureMode::ScaledIndices, &SmoParams::default(), &FoldSpec::default());
        assert!(matches!(r, Err(Error::InsufficientGroups { found: 1 })));
    }
}
