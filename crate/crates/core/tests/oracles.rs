//! Worked examples checked against independent re-computations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use biasaudit_core::latent::{
    cross_validated_auc, featurize, rbf, train_svm_smo, FeatureMode, FoldSpec, Gamma, SmoParams,
};
use biasaudit_core::stats::{
    chi2_survival, chi_squared_one_sided, dip_critical_value, dip_statistic, shapiro_wilk,
    summary_stats, ContingencyTable2x2,
};
use biasaudit_core::synthetic::{
    gen_code_vectors, gen_lognormal, gen_mixture, LognormalSpec, MixtureComponent, MixtureSpec,
};
use biasaudit_core::threshold::{
    bias_sweep, eer_operating_point, roc_curve, significant_regions, threshold_for_bonafide_error,
    Grid,
};
use biasaudit_core::{Dataset, GroupPair, ResponseRecord, SampleClass, Side};

fn cloud(rng: &mut ChaCha8Rng, n: usize, d: usize, centre: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| centre + 0.3 * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

#[test]
fn chi_squared_reference_table() {
    // rejection rates 0.10 vs 0.01, pooled two-proportion z = 3.948
    let r = chi_squared_one_sided(&ContingencyTable2x2::new(180, 20, 198, 2)).unwrap();
    assert!((r.p_value - 3.9e-5).abs() < 0.1e-5, "{}", r.p_value);
    assert_eq!(r.direction, Some(Side::A));
    let z = r.statistic.sqrt();
    assert!((z - 3.948).abs() < 1e-3);
}

#[test]
fn chi2_survival_matches_normal_tail_identity() {
    // P(chi2_1 >= z^2) = 2 P(Z >= z), the normal tail integrated by Simpson's rule
    for i in 0..=100 {
        let x = i as f64 * 0.5;
        let z = x.sqrt();
        let h = 1e-3;
        let steps = 40_000usize;
        let mut integral = 0.0;
        for k in 0..=steps {
            let t = z + k as f64 * h;
            let w = if k == 0 || k == steps { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            integral += w * (-t * t / 2.0).exp();
        }
        let tail = 2.0 * integral * h / 3.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((chi2_survival(x).unwrap() - tail).abs() < 1e-10, "x = {x}");
    }
    assert_eq!(chi2_survival(0.0).unwrap(), 1.0);
    assert!(chi2_survival(-1.0).is_err());
}

#[test]
fn grid_sample_dip_below_critical() {
    let grid: Vec<f64> = (0..200).map(|i| i as f64 / 199.0).collect();
    assert!(dip_statistic(&grid, None).unwrap() < 0.037);
    let cv = dip_critical_value(200, 0.05, 2000, 11, None).unwrap();
    assert!(dip_statistic(&grid, None).unwrap() < cv);
}

#[test]
fn lognormal_mean_within_three_standard_errors() {
    for (n, seed) in [(200, 1u64), (10_000, 2)] {
        let v = gen_lognormal(&LognormalSpec::new(-3.6, 0.45, n, "A").unwrap(), seed).unwrap();
        let s = summary_stats(&v).unwrap();
        let mean = (-3.6f64 + 0.45 * 0.45 / 2.0).exp();
        let var = ((0.45f64 * 0.45).exp() - 1.0) * (2.0 * -3.6 + 0.45 * 0.45f64).exp();
        let se = (var / n as f64).sqrt();
        assert!((s.mean - mean).abs() < 3.0 * se, "n={n}: {} vs {mean}", s.mean);
    }
}

#[test]
fn lognormal_half_sigma_rejected_by_shapiro() {
    let v = gen_lognormal(&LognormalSpec::new(-3.6, 0.5, 500, "A").unwrap(), 3).unwrap();
    assert!(shapiro_wilk(&v).unwrap().p_value < 0.01);
}

#[test]
fn roc_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let bona: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..1.0)).collect();
    let attack: Vec<f64> = (0..50).map(|_| rng.random_range(0.3..1.3)).collect();
    let roc = roc_curve(&bona, &attack).unwrap();
    assert_eq!(roc.points.len(), 102);
    for w in roc.points.windows(2) {
        assert!(w[0].threshold < w[1].threshold);
        assert!(w[0].far <= w[1].far && w[0].frr >= w[1].frr);
    }
    for p in &roc.points {
        let mut fa = 0;
        for &a in &attack {
            if a <= p.threshold {
                fa += 1;
            }
        }
        let mut fr = 0;
        for &b in &bona {
            if b > p.threshold {
                fr += 1;
            }
        }
        assert_eq!(p.far, fa as f64 / 50.0);
        assert_eq!(p.frr, fr as f64 / 50.0);
    }
    let first = roc.points[0];
    let last = roc.points[roc.points.len() - 1];
    assert_eq!((first.far, first.frr), (0.0, 1.0));
    assert_eq!((last.far, last.frr), (1.0, 0.0));
}

#[test]
fn small_eer_matches_exhaustive_search() {
    let roc = roc_curve(&[0.1, 0.3, 0.5], &[0.2, 0.4, 0.6]).unwrap();
    let eer = eer_operating_point(&roc);
    // candidates with |far - frr| = 0: t = 0.3 (1/3, 1/3); t = 0.4 (2/3, 1/3) is worse
    assert_eq!(eer.threshold, 0.3);
    assert!((eer.hter - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn quantile_thresholds_match_sort_oracle() {
    let v = gen_lognormal(&LognormalSpec::new(-3.6, 0.45, 200, "A").unwrap(), 5).unwrap();
    let mut sorted = v.clone();
    sorted.sort_by(f64::total_cmp);
    let mut prev = f64::INFINITY;
    for (q, allowed) in [(0.01, 2usize), (0.02, 4), (0.05, 10), (0.10, 20), (0.20, 40)] {
        let t = threshold_for_bonafide_error(&v, q).unwrap();
        assert_eq!(t, sorted[200 - allowed - 1]);
        assert!(t < prev);
        prev = t;
        let rejected = v.iter().filter(|&&x| x > t).count();
        assert!(rejected as f64 <= q * 200.0 + 1e-9);
    }
    assert_eq!(threshold_for_bonafide_error(&v, 0.0).unwrap(), sorted[199]);
    assert!(threshold_for_bonafide_error(&v, 1.0).unwrap() < sorted[0]);
    assert!(threshold_for_bonafide_error(&v, 1.1).is_err());
}

#[test]
fn auto_grid_has_one_point_per_distinct_value() {
    let a = gen_lognormal(&LognormalSpec::new(-3.6, 0.45, 200, "A").unwrap(), 1).unwrap();
    let b = gen_lognormal(&LognormalSpec::new(-3.6, 0.45, 200, "B").unwrap(), 2).unwrap();
    let pair = GroupPair::new("A", "B").unwrap();
    let curve = bias_sweep(&pair, &a, &b, &Grid::Auto, 0.05).unwrap();
    assert_eq!(curve.grid.len(), 400);
    assert_eq!(curve.p_values.len(), 400);
    assert!(bias_sweep(&pair, &a, &b, &Grid::Explicit(vec![0.1]), 0.05).is_err());
}

#[test]
fn mixture_against_lognormal_has_disjoint_regions() {
    let a = gen_lognormal(&LognormalSpec::new(-3.6, 0.45, 200, "A").unwrap(), 31).unwrap();
    let mix = MixtureSpec {
        components: vec![
            MixtureComponent { weight: 0.5, mu: -4.2, sigma: 0.2 },
            MixtureComponent { weight: 0.5, mu: -2.8, sigma: 0.2 },
        ],
        n: 200,
        group: "B".into(),
    };
    let b = gen_mixture(&mix, 32).unwrap();
    let pair = GroupPair::new("A", "B").unwrap();
    let regions = significant_regions(&bias_sweep(&pair, &a, &b, &Grid::Auto, 0.05).unwrap());
    assert!(regions.len() >= 2);
    let cv = dip_critical_value(200, 0.05, 2000, 0, None).unwrap();
    assert!(dip_statistic(&b, None).unwrap() > cv);
}

#[test]
fn rare_mixture_component_is_rare() {
    let mix = MixtureSpec {
        components: vec![
            MixtureComponent { weight: 0.999, mu: -3.6, sigma: 0.1 },
            MixtureComponent { weight: 0.001, mu: 2.0, sigma: 0.1 },
        ],
        n: 200,
        group: "A".into(),
    };
    // expected count 0.2; over 50 seeds the mean stays near that
    let total: usize = (0..50u64)
        .map(|s| gen_mixture(&mix, s).unwrap().iter().filter(|&&x| x > 1.0).count())
        .sum();
    assert!(total as f64 / 50.0 <= 1.0, "{total}");
}

#[test]
fn svm_separates_point_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let mut x = cloud(&mut rng, 40, 8, 0.0);
    x.extend(cloud(&mut rng, 40, 8, 1.5));
    let y: Vec<i8> = (0..80).map(|i| if i < 40 { 1 } else { -1 }).collect();
    let m = train_svm_smo(&x, &y, &SmoParams::default()).unwrap();
    assert!(m.converged);
    for (xi, &yi) in x.iter().zip(&y) {
        assert_eq!(m.decision_score(xi).unwrap() > 0.0, yi > 0);
    }
    assert_eq!(m.support_vectors.len(), m.alphas.len());
    assert!(m.alphas.iter().all(|a| a.abs() <= m.regularization_c + 1e-12));
}

/// XOR: four clusters at the corners of a square, opposite corners sharing a
/// label.
fn xor_data(seed: u64) -> (Vec<Vec<f64>>, Vec<i8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (cx, cy, label) in [(0.0, 0.0, 1i8), (1.0, 1.0, 1), (0.0, 1.0, -1), (1.0, 0.0, -1)] {
        for _ in 0..25 {
            x.push(vec![
                cx + 0.1 * rng.sample::<f64, _>(StandardNormal),
                cy + 0.1 * rng.sample::<f64, _>(StandardNormal),
            ]);
            y.push(label);
        }
    }
    (x, y)
}

/// Best accuracy of any line `w . x + b > 0`, searched over 720 directions
/// and every offset that changes the classification.
fn best_linear_accuracy(x: &[Vec<f64>], y: &[i8]) -> f64 {
    let mut best = 0usize;
    for k in 0..720 {
        let th = k as f64 * std::f64::consts::PI / 360.0;
        let (w0, w1) = (th.cos(), th.sin());
        let mut proj: Vec<f64> = x.iter().map(|p| w0 * p[0] + w1 * p[1]).collect();
        proj.sort_by(f64::total_cmp);
        let mut cuts = vec![proj[0] - 1.0];
        cuts.extend(proj.windows(2).map(|w| (w[0] + w[1]) / 2.0));
        cuts.push(proj[proj.len() - 1] + 1.0);
        for c in cuts {
            let correct = x
                .iter()
                .zip(y)
                .filter(|(p, &l)| (w0 * p[0] + w1 * p[1] > c) == (l > 0))
                .count();
            best = best.max(correct);
        }
    }
    best as f64 / x.len() as f64
}

#[test]
fn xor_needs_a_kernel() {
    let (x, y) = xor_data(41);
    let params = SmoParams { c: 10.0, gamma: Gamma::Value(2.0), ..SmoParams::default() };
    let m = train_svm_smo(&x, &y, &params).unwrap();
    let correct = x
        .iter()
        .zip(&y)
        .filter(|(p, &l)| (m.decision_score(p).unwrap() > 0.0) == (l > 0))
        .count();
    let rbf_acc = correct as f64 / x.len() as f64;
    let lin_acc = best_linear_accuracy(&x, &y);
    assert!(rbf_acc >= 0.95, "{rbf_acc}");
    assert!(lin_acc <= 0.75, "{lin_acc}");
}

#[test]
fn flipped_labels_negate_scores() {
    let (x, y) = xor_data(42);
    let flipped: Vec<i8> = y.iter().map(|l| -l).collect();
    let params = SmoParams { tol: 1e-8, gamma: Gamma::Value(2.0), ..SmoParams::default() };
    let m = train_svm_smo(&x, &y, &params).unwrap();
    let f = train_svm_smo(&x, &flipped, &params).unwrap();
    for p in &x {
        let (s, t) = (m.decision_score(p).unwrap(), f.decision_score(p).unwrap());
        assert!((s + t).abs() < 1e-6, "{s} vs {t}");
    }
}

#[test]
fn decision_score_matches_kernel_sum() {
    let (x, y) = xor_data(43);
    let m = train_svm_smo(&x, &y, &SmoParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..20 {
        let q = [rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5)];
        let mut s = m.bias;
        for (sv, a) in m.support_vectors.iter().zip(&m.alphas) {
            let d2 = (sv[0] - q[0]).powi(2) + (sv[1] - q[1]).powi(2);
            s += a * (-m.gamma * d2).exp();
        }
        assert!((m.decision_score(&q).unwrap() - s).abs() < 1e-10);
    }
}

#[test]
fn margin_support_vectors_score_unit_magnitude() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let mut x = cloud(&mut rng, 15, 3, 0.0);
    x.extend(cloud(&mut rng, 15, 3, 1.0));
    let y: Vec<i8> = (0..30).map(|i| if i < 15 { 1 } else { -1 }).collect();
    let params = SmoParams { c: 1.0, tol: 1e-6, ..SmoParams::default() };
    let m = train_svm_smo(&x, &y, &params).unwrap();
    assert!(m.converged);
    let free: Vec<_> = m
        .support_vectors
        .iter()
        .zip(&m.alphas)
        .filter(|(_, a)| a.abs() < m.regularization_c - 1e-9)
        .collect();
    assert!(!free.is_empty());
    for (sv, _) in free {
        let s = m.decision_score(sv).unwrap();
        assert!((s.abs() - 1.0).abs() < 1e-5, "{s}");
    }
}

/// Maximises the dual over the feasible set by exhaustive active-set search:
/// every split of the indices into {0}, {C} and free, solving the equality-
/// constrained quadratic for the free ones and keeping the best feasible one.
fn dual_brute_force(x: &[Vec<f64>], y: &[i8], c: f64, gamma: f64) -> f64 {
    let n = x.len();
    let q = |i: usize, j: usize| y[i] as f64 * y[j] as f64 * rbf(&x[i], &x[j], gamma);
    let objective = |a: &[f64]| {
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += a[i] * a[j] * q(i, j);
            }
        }
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let mut best = f64::NEG_INFINITY;
    let mut state = vec![0u8; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut a: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let ok = if free.is_empty() {
            true
        } else {
            // KKT system [Q_ff y_f; y_f' 0] [a_f; nu] = [1 - Q_fb a_b; -y_b' a_b]
            let m = free.len() + 1;
            let mut mat = vec![vec![0.0; m + 1]; m];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    mat[r][s] = q(i, j);
                }
                mat[r][m - 1] = y[i] as f64;
                let fixed: f64 = (0..n).filter(|&j| state[j] == 1).map(|j| q(i, j) * c).sum();
                mat[r][m] = 1.0 - fixed;
            }
            for (s, &j) in free.iter().enumerate() {
                mat[m - 1][s] = y[j] as f64;
            }
            mat[m - 1][m] = -(0..n).filter(|&j| state[j] == 1).map(|j| y[j] as f64 * c).sum::<f64>();
            match solve(mat) {
                Some(sol) => {
                    for (r, &i) in free.iter().enumerate() {
                        a[i] = sol[r];
                    }
                    free.iter().all(|&i| a[i] >= -1e-12 && a[i] <= c + 1e-12)
                }
                None => false,
            }
        };
        let balanced = (0..n).map(|i| y[i] as f64 * a[i]).sum::<f64>().abs() < 1e-9;
        if ok && balanced {
            best = best.max(objective(&a));
        }
        // next assignment in base 3
        let mut k = 0;
        while k < n && state[k] == 2 {
            state[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
        state[k] += 1;
    }
    best
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                for k in col..=n {
                    m[r][k] -= f * m[col][k];
                }
            }
        }
    }
    Some((0..n).map(|r| m[r][n] / m[r][r]).collect())
}

#[test]
fn smo_dual_matches_active_set_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    for trial in 0..6 {
        let n = 5 + trial % 4;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)])
            .collect();
        let mut y: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
        y[0] = 1;
        y[1] = -1;
        let c = [0.5, 1.0, 5.0][trial % 3];
        let params = SmoParams { c, gamma: Gamma::Value(1.0), tol: 1e-10, max_passes: 100_000 };
        let m = train_svm_smo(&x, &y, &params).unwrap();
        assert!(m.converged);
        let brute = dual_brute_force(&x, &y, c, 1.0);
        assert!((m.dual_objective() - brute).abs() < 1e-6, "trial {trial}: {} vs {brute}", m.dual_objective());
    }
}

#[test]
fn histogram_features_sum_to_one() {
    let set = gen_code_vectors(5, 37, 11, 0.3, 2).unwrap();
    for v in &set.vectors {
        let h = featurize(v, FeatureMode::CodeHistogram).unwrap();
        assert_eq!(h.len(), 11);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(h.iter().all(|&p| p >= 0.0));
    }
}

#[test]
fn cross_validation_is_deterministic() {
    let set = gen_code_vectors(30, 16, 8, 0.5, 3).unwrap();
    let folds = FoldSpec { k: 3, seed: 9 };
    let a = cross_validated_auc(&set.vectors, FeatureMode::CodeHistogram, &SmoParams::default(), &folds).unwrap();
    let b = cross_validated_auc(&set.vectors, FeatureMode::CodeHistogram, &SmoParams::default(), &folds).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    let small = gen_code_vectors(2, 16, 8, 0.5, 3).unwrap();
    assert!(cross_validated_auc(&small.vectors, FeatureMode::ScaledIndices, &SmoParams::default(), &folds).is_err());
}

#[test]
fn code_vectors_stay_in_range() {
    for s in [0.0, 0.25, 0.5, 1.0] {
        let set = gen_code_vectors(10, 50, 7, s, 1).unwrap();
        assert!(set.vectors.iter().all(|v| v.codes.iter().all(|&c| c < 7)));
    }
    let disjoint = gen_code_vectors(20, 50, 8, 1.0, 1).unwrap();
    for v in &disjoint.vectors {
        let low = v.group == "A";
        assert!(v.codes.iter().all(|&c| (c < 4) == low));
    }
}

#[test]
fn dataset_composition() {
    let mut records = Vec::new();
    for i in 0..200 {
        records.push(ResponseRecord::new(format!("b{i}"), "X", SampleClass::BonaFide, i as f64).unwrap());
        records.push(ResponseRecord::new(format!("a{i}"), "X", SampleClass::Attack, 1.0).unwrap());
    }
    records.push(ResponseRecord::new("only-attack", "Y", SampleClass::Attack, 0.5).unwrap());
    let ds = Dataset::from_records(records).unwrap();
    assert_eq!(ds.bona_fide_responses("X").unwrap().len(), 200);
    assert!(ds.bona_fide_responses("Y").unwrap().is_empty());
    assert!(matches!(
        ds.bona_fide_responses("Z"),
        Err(biasaudit_core::Error::UnknownGroup(g)) if g == "Z"
    ));
}
