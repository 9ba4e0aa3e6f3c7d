//! Seeded lognormal response generators and latent-code fixtures.
//!
//! Every generator is a pure function of its spec and seed. Responses are
//! `exp(mu + sigma * Z)` with `Z` standard normal, so they are strictly
//! positive.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ResponseRecord, SampleClass};
use crate::error::{Error, Result};
use crate::latent::{CodeSet, CodeVector};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LognormalSpec {
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
    pub group: String,
}

impl LognormalSpec {
    pub fn new(mu: f64, sigma: f64, n: usize, group: impl Into<String>) -> Result<Self> {
        let s = LognormalSpec {
            mu,
            sigma,
            n,
            group: group.into(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_log_params(self.mu, self.sigma)?;
        if self.n == 0 {
            return Err(Error::Parameter("n must be >= 1".into()));
        }
        Ok(())
    }
}

fn check_log_params(mu: f64, sigma: f64) -> Result<()> {
    if !mu.is_finite() {
        return Err(Error::Parameter(format!("mu must be finite, got {mu}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mu: f64,
    pub sigma: f64,
}

/// `n` draws from a weighted mixture of lognormal components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<MixtureComponent>,
    pub n: usize,
    pub group: String,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Parameter("mixture has no components".into()));
        }
        for c in &self.components {
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::Parameter(format!("weight must be positive, got {}", c.weight)));
            }
            check_log_params(c.mu, c.sigma)?;
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("weights sum to {total}, not 1")));
        }
        if self.n == 0 {
            return Err(Error::Parameter("n must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierSpec {
    /// share of entries to scale, in `[0, 0.5)`
    pub fraction: f64,
    /// multiplier applied to the chosen entries, `> 1`
    pub offset_factor: f64,
}

impl OutlierSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.fraction) {
            return Err(Error::Parameter(format!(
                "outlier fraction must be in [0, 0.5), got {}",
                self.fraction
            )));
        }
        if !(self.offset_factor > 1.0 && self.offset_factor.is_finite()) {
            return Err(Error::Parameter(format!(
                "offset factor must exceed 1, got {}",
                self.offset_factor
            )));
        }
        Ok(())
    }
}

pub fn gen_lognormal(spec: &LognormalSpec, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = stream_rng(seed, 0);
    Ok((0..spec.n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (spec.mu + spec.sigma * z).exp()
        })
        .collect())
}

/// Normal draws use the same stream as [`gen_lognormal`]; component choices
/// come from a second stream, so a one-component mixture reproduces
/// `gen_lognormal` exactly.
pub fn gen_mixture(spec: &MixtureSpec, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut normals = stream_rng(seed, 0);
    let mut picks = stream_rng(seed, 1);
    let last = spec.components.len() - 1;
    Ok((0..spec.n)
        .map(|_| {
            let u: f64 = picks.random();
            let mut acc = 0.0;
            let mut chosen = last;
            for (i, c) in spec.components.iter().enumerate() {
                acc += c.weight;
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            let c = &spec.components[chosen];
            let z: f64 = normals.sample(StandardNormal);
            (c.mu + c.sigma * z).exp()
        })
        .collect())
}

/// Scales a seeded `ceil(fraction * n)`-subset of `base` by `offset_factor`.
pub fn inject_outliers(base: &[f64], spec: &OutlierSpec, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    if base.is_empty() {
        return Err(Error::InsufficientData("no base responses".into()));
    }
    let n = base.len();
    // guard against 0.05 * 200 landing a hair above 10
    let count = ((spec.fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut out = base.to_vec();
    for i in index::sample(&mut stream_rng(seed, 2), n, count.min(n)) {
        out[i] *= spec.offset_factor;
    }
    Ok(out)
}

/// Half-open code alphabet of group `g` out of `m` at the given separability.
///
/// The codebook is cut into `m` equal blocks. At separability 1 group `g`
/// uses only block `g`; at 0 every group uses the whole codebook; in between
/// each alphabet shrinks linearly towards its block.
pub fn code_alphabet(g: usize, m: usize, k: u32, separability: f64) -> (u32, u32) {
    let h = k as f64 / m as f64;
    let start = (g as f64 * h).round();
    let end = ((g + 1) as f64 * h).round();
    let lo = (separability * start).round();
    let hi = end + ((1.0 - separability) * (k as f64 - end)).round();
    (lo as u32, hi as u32)
}

/// Code vectors for the given groups, `n_per_group` each, of length `d`.
pub fn gen_code_vectors_for(
    groups: &[&str],
    n_per_group: usize,
    d: usize,
    k: u32,
    separability: f64,
    seed: u64,
) -> Result<CodeSet> {
    if d == 0 || n_per_group == 0 {
        return Err(Error::Parameter("d and n_per_group must be >= 1".into()));
    }
    if groups.is_empty() || (k as usize) < groups.len().max(2) {
        return Err(Error::Parameter(format!(
            "codebook size {k} too small for {} groups",
            groups.len()
        )));
    }
    if !(0.0..=1.0).contains(&separability) {
        return Err(Error::Parameter(format!(
            "separability must be in [0, 1], got {separability}"
        )));
    }
    let mut vectors = Vec::with_capacity(groups.len() * n_per_group);
    for (g, label) in groups.iter().enumerate() {
        let (lo, hi) = code_alphabet(g, groups.len(), k, separability);
        let mut rng = stream_rng(seed, 16 + g as u64);
        for i in 0..n_per_group {
            let codes = (0..d).map(|_| rng.random_range(lo..hi)).collect();
            vectors.push(CodeVector::new(format!("{label}-{i:04}"), *label, codes, k)?);
        }
    }
    CodeSet::new(k, vectors)
}

/// Two groups `A` and `B`.
pub fn gen_code_vectors(
    n_per_group: usize,
    d: usize,
    k: u32,
    separability: f64,
    seed: u64,
) -> Result<CodeSet> {
    gen_code_vectors_for(&["A", "B"], n_per_group, d, k, separability, seed)
}

/// Reference log-location and spread used by the fixtures below.
pub const BASE_MU: f64 = -3.6;
pub const BASE_SIGMA: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mechanism {
    MeanShift,
    VarianceShift,
    Bimodal,
    Outliers,
}

impl Mechanism {
    pub const ALL: [Mechanism; 4] = [
        Mechanism::MeanShift,
        Mechanism::VarianceShift,
        Mechanism::Bimodal,
        Mechanism::Outliers,
    ];
}

fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn bona_fide(group: &str, values: &[f64]) -> Result<Vec<ResponseRecord>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| ResponseRecord::new(format!("{group}-{i:04}"), group, SampleClass::BonaFide, v))
        .collect()
}

/// Bona fide responses of a reference group and of a group exhibiting `mech`.
///
/// * `MeanShift`: log-location -3.6 against -3.3, spread 0.45.
/// * `VarianceShift`: spread 0.3 against 0.6 at log-location -3.6.
/// * `Bimodal`: reference against an equal mixture at -4.2 and -2.8, spread 0.2.
/// * `Outliers`: the reference sample itself with 5% of entries scaled by 5.
pub fn mechanism_samples(mech: Mechanism, n: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let s_ref = sub_seed(seed, 1);
    let s_alt = sub_seed(seed, 2);
    let reference = |sigma: f64| gen_lognormal(&LognormalSpec::new(BASE_MU, sigma, n, "A")?, s_ref);
    Ok(match mech {
        Mechanism::MeanShift => (
            reference(BASE_SIGMA)?,
            gen_lognormal(&LognormalSpec::new(-3.3, BASE_SIGMA, n, "B")?, s_alt)?,
        ),
        Mechanism::VarianceShift => (
            reference(0.3)?,
            gen_lognormal(&LognormalSpec::new(BASE_MU, 0.6, n, "B")?, s_alt)?,
        ),
        Mechanism::Bimodal => (reference(BASE_SIGMA)?, gen_mixture(&bimodal_spec(n, "B"), s_alt)?),
        Mechanism::Outliers => {
            let base = reference(BASE_SIGMA)?;
            let spiked = inject_outliers(&base, &default_outliers(), s_alt)?;
            (base, spiked)
        }
    })
}

fn bimodal_spec(n: usize, group: &str) -> MixtureSpec {
    MixtureSpec {
        components: vec![
            MixtureComponent { weight: 0.5, mu: -4.2, sigma: 0.2 },
            MixtureComponent { weight: 0.5, mu: -2.8, sigma: 0.2 },
        ],
        n,
        group: group.into(),
    }
}

fn default_outliers() -> OutlierSpec {
    OutlierSpec { fraction: 0.05, offset_factor: 5.0 }
}

/// Two-group dataset (`A` reference, `B` affected) for one mechanism.
pub fn mechanism_fixture(mech: Mechanism, n: usize, seed: u64) -> Result<Dataset> {
    let (a, b) = mechanism_samples(mech, n, seed)?;
    let mut records = bona_fide("A", &a)?;
    records.extend(bona_fide("B", &b)?);
    Dataset::from_records(records)
}

/// Four groups, each carrying a different mechanism relative to
/// `Caucasian`: outliers (`African`), a mean shift (`Asian`) and
/// bimodality (`Indian`). With `n_attack > 0` every group also gets that many
/// attack responses at log-location -2.6, spread 0.4.
pub fn four_group_dataset(n_per_group: usize, n_attack: usize, seed: u64) -> Result<Dataset> {
    let base = |tag: u64, group: &str| {
        gen_lognormal(&LognormalSpec::new(BASE_MU, BASE_SIGMA, n_per_group, group)?, sub_seed(seed, tag))
    };
    let african = inject_outliers(&base(10, "African")?, &default_outliers(), sub_seed(seed, 11))?;
    let asian = gen_lognormal(
        &LognormalSpec::new(-3.3, BASE_SIGMA, n_per_group, "Asian")?,
        sub_seed(seed, 12),
    )?;
    let caucasian = base(13, "Caucasian")?;
    let indian = gen_mixture(&bimodal_spec(n_per_group, "Indian"), sub_seed(seed, 14))?;

    let mut records = Vec::new();
    for (g, (label, values)) in [
        ("African", african),
        ("Asian", asian),
        ("Caucasian", caucasian),
        ("Indian", indian),
    ]
    .into_iter()
    .enumerate()
    {
        records.extend(bona_fide(label, &values)?);
        if n_attack > 0 {
            let attack = gen_lognormal(
                &LognormalSpec::new(-2.6, 0.4, n_attack, label)?,
                sub_seed(seed, 20 + g as u64),
            )?;
            for (i, v) in attack.into_iter().enumerate() {
                records.push(ResponseRecord::new(
                    format!("{label}-atk-{i:04}"),
                    label,
                    SampleClass::Attack,
                    v,
                )?);
            }
        }
    }
    Dataset::from_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_sigma() {
        let v = gen_lognormal(&LognormalSpec::new(-3.6, 1e-12, 50, "A").unwrap(), 1).unwrap();
        let target = (-3.6f64).exp();
        assert!(v.iter().all(|x| (x / target - 1.0).abs() < 1e-9));
    }

    #[test]
    fn invalid_specs() {
        assert!(LognormalSpec::new(0.0, 0.0, 5, "A").is_err());
        assert!(LognormalSpec::new(0.0, 1.0, 0, "A").is_err());
        let bad = MixtureSpec {
            components: vec![MixtureComponent { weight: 0.6, mu: 0.0, sigma: 1.0 }],
            n: 10,
            group: "A".into(),
        };
        assert!(matches!(gen_mixture(&bad, 0), Err(Error::Parameter(_))));
        let o = OutlierSpec { fraction: 0.5, offset_factor: 2.0 };
        assert!(inject_outliers(&[1.0], &o, 0).is_err());
        let o = OutlierSpec { fraction: 0.1, offset_factor: 1.0 };
        assert!(inject_outliers(&[1.0], &o, 0).is_err());
    }

    #[test]
    fn single_component_mixture_matches_lognormal() {
        let spec = LognormalSpec::new(-3.6, 0.45, 100, "A").unwrap();
        let mix = MixtureSpec {
            components: vec![MixtureComponent { weight: 1.0, mu: -3.6, sigma: 0.45 }],
            n: 100,
            group: "A".into(),
        };
        assert_eq!(gen_lognormal(&spec, 9).unwrap(), gen_mixture(&mix, 9).unwrap());
    }

    #[test]
    fn outlier_count() {
        let base = vec![1.0; 200];
        let out = inject_outliers(&base, &default_outliers(), 4).unwrap();
        assert_eq!(out.iter().filter(|&&v| v == 5.0).count(), 10);
        let none = OutlierSpec { fraction: 0.0, offset_factor: 3.0 };
        assert_eq!(inject_outliers(&base, &none, 4).unwrap(), base);
    }

    #[test]
    fn alphabets() {
        assert_eq!(code_alphabet(0, 2, 16, 0.0), (0, 16));
        assert_eq!(code_alphabet(1, 2, 16, 0.0), (0, 16));
        assert_eq!(code_alphabet(0, 2, 16, 1.0), (0, 8));
        assert_eq!(code_alphabet(1, 2, 16, 1.0), (8, 16));
        assert_eq!(code_alphabet(0, 2, 16, 0.5), (0, 12));
        assert_eq!(code_alphabet(1, 2, 16, 0.5), (4, 16));
    }

    #[test]
    fn four_groups() {
        let ds = four_group_dataset(50, 20, 3).unwrap();
        assert_eq!(ds.group_count(), 4);
        assert_eq!(ds.len(), 4 * 70);
        assert!(ds.records().iter().all(|r| r.response > 0.0));
        assert_eq!(ds, four_group_dataset(50, 20, 3).unwrap());
    }
}
