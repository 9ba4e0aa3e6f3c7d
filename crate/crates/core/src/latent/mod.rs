//! Separability of two groups in a discrete latent-code space, measured as
//! the cross-validated AUC of an RBF support vector machine.

mod auc;
mod codes;
mod cv;
mod svm;

pub use auc::auc_from_scores;
pub use codes::{featurize, CodeSet, CodeVector, FeatureMode};
pub use cv::{cross_validated_auc, stratified_folds, FoldSpec};
pub use svm::{auto_gamma, rbf, train_svm_smo, Gamma, SmoParams, SvmModel};
