//! Full audit over every group pair, plus JSON and plot rendering.

mod json;
mod plots;

pub use json::{parse_json, render_json};
pub use plots::{render_plots, sanitize_label};

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroupPair, SampleClass};
use crate::error::{Error, Result};
use crate::latent::{cross_validated_auc, CodeSet, FeatureMode, FoldSpec, Gamma, SmoParams};
use crate::stats::{
    chi_squared_one_sided, dip_critical_value, dip_statistic, mann_whitney_u, shapiro_wilk,
    summary_stats, ContingencyTable2x2, DipResult, MwuMode, SummaryStats, TestResult,
    SHAPIRO_MAX_N, SHAPIRO_MIN_N,
};
use crate::threshold::{
    bias_sweep, check_alpha, eer_operating_point, hter_at, roc_curve, significant_regions,
    table_at, threshold_for_bonafide_error, BiasCurve, BiasRegion, Grid, OperatingPoint,
};

pub const DEFAULT_QUANTILES: [f64; 5] = [0.01, 0.02, 0.05, 0.10, 0.20];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: Gamma,
    pub folds: usize,
    pub feature_mode: FeatureMode,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        let p = SmoParams::default();
        SvmConfig {
            c: p.c,
            gamma: p.gamma,
            folds: 5,
            feature_mode: FeatureMode::ScaledIndices,
            tol: p.tol,
            max_passes: p.max_passes,
        }
    }
}

impl SvmConfig {
    pub fn smo_params(&self) -> SmoParams {
        SmoParams {
            c: self.c,
            gamma: self.gamma,
            tol: self.tol,
            max_passes: self.max_passes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub alpha: f64,
    /// bona fide rejection fractions used as threshold anchors
    pub quantiles: Vec<f64>,
    pub dip_bins: usize,
    pub dip_replicas: usize,
    pub seed: u64,
    pub svm: SvmConfig,
    /// where the CLI writes its outputs; not echoed into reports
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            alpha: 0.05,
            quantiles: DEFAULT_QUANTILES.to_vec(),
            dip_bins: 50,
            dip_replicas: 10_000,
            seed: 0,
            svm: SvmConfig::default(),
            out_dir: None,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if let Some(q) = self.quantiles.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(Error::Parameter(format!("quantile {q} outside [0, 1]")));
        }
        if self.dip_bins < 2 {
            return Err(Error::Parameter(format!("dip_bins must be >= 2, got {}", self.dip_bins)));
        }
        if self.dip_replicas == 0 {
            return Err(Error::Parameter("dip_replicas must be positive".into()));
        }
        if self.svm.folds < 2 {
            return Err(Error::Parameter(format!("svm folds must be >= 2, got {}", self.svm.folds)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub bona_fide: SummaryStats,
    /// absent when the sample size is outside the test's range or constant
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shapiro_wilk: Option<TestResult>,
    /// binned dip with its Monte Carlo critical value; absent below four values
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dip: Option<DipResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    /// `eer` or `q<fraction>`
    pub label: String,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupHter {
    pub group: String,
    pub operating_point: OperatingPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EerSection {
    /// pooled bona fide against pooled attack responses
    pub pooled: OperatingPoint,
    /// groups without attack responses are left out
    pub per_group: Vec<GroupHter>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorTest {
    pub anchor: String,
    pub threshold: f64,
    pub table: ContingencyTable2x2,
    pub statistic: f64,
    pub p_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worse_group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairChi2 {
    pub pair: GroupPair,
    pub tests: Vec<AnchorTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMwu {
    pub pair: GroupPair,
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCurve {
    pub curve: BiasCurve,
    pub regions: Vec<BiasRegion>,
}

/// Shared-edge histogram of both groups' bona fide responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairHistogram {
    pub pair: GroupPair,
    /// `bins + 1` edges; the last bin is closed on the right
    pub edges: Vec<f64>,
    pub counts_a: Vec<u64>,
    pub counts_b: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAuc {
    pub pair: GroupPair,
    pub auc: f64,
    pub n_a: usize,
    pub n_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub toolkit_version: String,
    pub config: AuditConfig,
    pub groups: Vec<GroupSummary>,
    pub anchors: Vec<Anchor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eer: Option<EerSection>,
    pub chi_squared: Vec<PairChi2>,
    pub mann_whitney: Vec<PairMwu>,
    pub bias_curves: Vec<PairCurve>,
    pub histograms: Vec<PairHistogram>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svm: Option<Vec<PairAuc>>,
}

impl AuditReport {
    pub fn pairs(&self) -> Vec<&GroupPair> {
        self.mann_whitney.iter().map(|m| &m.pair).collect()
    }
}

fn anchor_label(q: f64) -> String {
    format!("q{q}")
}

/// `bins` equal-width bins over `[min, max]` of both samples.
pub fn pair_histogram(pair: &GroupPair, a: &[f64], b: &[f64], bins: usize) -> PairHistogram {
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + span * i as f64 / bins as f64 })
        .collect();
    let count = |xs: &[f64]| {
        let mut c = vec![0u64; bins];
        for &x in xs {
            let idx = if span > 0.0 {
                (((x - lo) / span * bins as f64).floor() as usize).min(bins - 1)
            } else {
                0
            };
            c[idx] += 1;
        }
        c
    };
    PairHistogram {
        pair: pair.clone(),
        edges,
        counts_a: count(a),
        counts_b: count(b),
    }
}

/// Runs the binary-outcome, scalar-response and (when `codes` is given)
/// latent-code analyses for every group pair of `ds`.
pub fn run_audit(ds: &Dataset, cfg: &AuditConfig, codes: Option<&CodeSet>) -> Result<AuditReport> {
    cfg.validate()?;
    let pairs = ds.group_pairs()?;
    let groups: Vec<String> = ds.groups().map(str::to_string).collect();
    let mut bona: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for g in &groups {
        let v = ds.bona_fide_responses(g)?;
        if v.is_empty() {
            return Err(Error::InsufficientData(format!("group `{g}` has no bona fide responses")));
        }
        bona.insert(g, v);
    }

    // one Monte Carlo critical value per distinct sample size
    let mut critical: BTreeMap<usize, f64> = BTreeMap::new();
    for v in bona.values() {
        let n = v.len();
        if n >= 4 && !critical.contains_key(&n) {
            let cv = dip_critical_value(n, cfg.alpha, cfg.dip_replicas, cfg.seed, Some(cfg.dip_bins))?;
            critical.insert(n, cv);
        }
    }

    let mut group_summaries = Vec::with_capacity(groups.len());
    for g in &groups {
        let v = &bona[g.as_str()];
        let shapiro = if (SHAPIRO_MIN_N..=SHAPIRO_MAX_N).contains(&v.len()) {
            match shapiro_wilk(v) {
                Ok(r) => Some(r),
                Err(Error::DegenerateSample(_)) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let dip = match critical.get(&v.len()) {
            Some(&cv) => Some(DipResult::new(
                dip_statistic(v, Some(cfg.dip_bins))?,
                v.len(),
                Some(cfg.dip_bins),
                cv,
                cfg.alpha,
            )),
            None => None,
        };
        group_summaries.push(GroupSummary {
            group: g.clone(),
            bona_fide: summary_stats_or_single(v)?,
            shapiro_wilk: shapiro,
            dip,
        });
    }

    let pooled_bona = ds.pooled_responses(SampleClass::BonaFide);
    let mut anchors = Vec::new();
    let mut eer = None;
    if ds.has_class(SampleClass::Attack) {
        let pooled_attack = ds.pooled_responses(SampleClass::Attack);
        let op = eer_operating_point(&roc_curve(&pooled_bona, &pooled_attack)?);
        let mut per_group = Vec::new();
        for g in &groups {
            let attack = ds.class_responses(g, SampleClass::Attack)?;
            if attack.is_empty() {
                continue;
            }
            per_group.push(GroupHter {
                group: g.clone(),
                operating_point: hter_at(&bona[g.as_str()], &attack, op.threshold)?,
            });
        }
        anchors.push(Anchor {
            label: "eer".into(),
            threshold: op.threshold,
        });
        eer = Some(EerSection { pooled: op, per_group });
    }
    for &q in &cfg.quantiles {
        anchors.push(Anchor {
            label: anchor_label(q),
            threshold: threshold_for_bonafide_error(&pooled_bona, q)?,
        });
    }

    struct PairOut {
        chi2: PairChi2,
        mwu: PairMwu,
        curve: PairCurve,
        hist: PairHistogram,
    }
    let per_pair = pairs
        .par_iter()
        .map(|pair| -> Result<PairOut> {
            let a = &bona[pair.a.as_str()];
            let b = &bona[pair.b.as_str()];
            let mut tests = Vec::with_capacity(anchors.len());
            for anchor in &anchors {
                let table = table_at(a, b, anchor.threshold)?;
                let r = chi_squared_one_sided(&table)?;
                tests.push(AnchorTest {
                    anchor: anchor.label.clone(),
                    threshold: anchor.threshold,
                    table,
                    statistic: r.statistic,
                    p_value: r.p_value,
                    worse_group: r.direction.map(|s| pair.label(s).to_string()),
                });
            }
            let mwu = mann_whitney_u(a, b, MwuMode::Auto)?;
            let curve = bias_sweep(pair, a, b, &Grid::Auto, cfg.alpha)?;
            let regions = significant_regions(&curve);
            Ok(PairOut {
                chi2: PairChi2 { pair: pair.clone(), tests },
                mwu: PairMwu { pair: pair.clone(), result: mwu },
                curve: PairCurve { curve, regions },
                hist: pair_histogram(pair, a, b, cfg.dip_bins),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let svm = match codes {
        Some(set) => Some(svm_section(set, &pairs, cfg)?),
        None => None,
    };

    let mut config = cfg.clone();
    config.out_dir = None;
    let mut report = AuditReport {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        groups: group_summaries,
        anchors,
        eer,
        chi_squared: Vec::with_capacity(pairs.len()),
        mann_whitney: Vec::with_capacity(pairs.len()),
        bias_curves: Vec::with_capacity(pairs.len()),
        histograms: Vec::with_capacity(pairs.len()),
        svm,
    };
    for p in per_pair {
        report.chi_squared.push(p.chi2);
        report.mann_whitney.push(p.mwu);
        report.bias_curves.push(p.curve);
        report.histograms.push(p.hist);
    }
    Ok(report)
}

/// Summary statistics, tolerating single-value groups with a zero spread.
fn summary_stats_or_single(v: &[f64]) -> Result<SummaryStats> {
    if v.len() == 1 {
        return Ok(SummaryStats {
            n: 1,
            mean: v[0],
            std_dev: 0.0,
            dip: None,
        });
    }
    summary_stats(v)
}

fn svm_section(set: &CodeSet, pairs: &[GroupPair], cfg: &AuditConfig) -> Result<Vec<PairAuc>> {
    let params = cfg.svm.smo_params();
    let folds = FoldSpec {
        k: cfg.svm.folds,
        seed: cfg.seed,
    };
    pairs
        .par_iter()
        .map(|pair| {
            let a = set.group(&pair.a);
            let b = set.group(&pair.b);
            for (label, members) in [(&pair.a, &a), (&pair.b, &b)] {
                if members.is_empty() {
                    return Err(Error::UnknownGroup(format!("{label} (no code vectors)")));
                }
            }
            let vectors: Vec<_> = a.iter().chain(&b).map(|v| (*v).clone()).collect();
            let auc = cross_validated_auc(&vectors, cfg.svm.feature_mode, &params, &folds)?;
            Ok(PairAuc {
                pair: pair.clone(),
                auc,
                n_a: a.len(),
                n_b: b.len(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_everything() {
        let pair = GroupPair::new("A", "B").unwrap();
        let h = pair_histogram(&pair, &[0.0, 0.5, 1.0], &[1.0, 1.0], 4);
        assert_eq!(h.edges, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(h.counts_a, vec![1, 0, 1, 1]);
        assert_eq!(h.counts_b, vec![0, 0, 0, 2]);
        let flat = pair_histogram(&pair, &[2.0], &[2.0], 3);
        assert_eq!(flat.counts_a, vec![1, 0, 0]);
    }

    #[test]
    fn config_validation() {
        assert!(AuditConfig::default().validate().is_ok());
        let bad = AuditConfig { alpha: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = AuditConfig { quantiles: vec![1.5], ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
