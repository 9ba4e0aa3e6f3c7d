//! Auditing threshold-based binary classifiers for group bias in bona fide
//! errors.
//!
//! The crate covers four layers of analysis:
//!
//! * binary outcomes: per-threshold 2x2 tables tested with a one-sided
//!   chi-squared test, swept over all thresholds ([`threshold`]);
//! * scalar responses: Mann–Whitney U, Shapiro–Wilk and Hartigan's dip
//!   ([`stats`]);
//! * latent codes: cross-validated AUC of an RBF-kernel SVM trained to tell
//!   two groups apart ([`latent`]);
//! * reporting: one audit over every group pair, rendered to canonical JSON,
//!   SVG plots and CSV series ([`report`]).
//!
//! [`synthetic`] generates seeded lognormal response sets that exhibit mean
//! shifts, variance shifts, bimodality and outliers.

pub mod data;
pub mod error;
pub mod latent;
pub mod report;
mod rng;
pub mod stats;
pub mod synthetic;
pub mod threshold;

pub use data::{Dataset, GroupPair, ResponseRecord, SampleClass, Side};
pub use error::{Error, Result};
pub use latent::{CodeVector, FeatureMode, FoldSpec, SvmModel};
pub use report::{AuditConfig, AuditReport};
pub use stats::{ContingencyTable2x2, DipResult, SummaryStats, TestResult};
pub use threshold::{BiasCurve, BiasRegion, OperatingPoint, RocCurve};
