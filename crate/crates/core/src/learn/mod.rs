//! Per-user feature extraction and suspension classifiers.

pub mod balance;
pub mod classifiers;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod gbt;
pub mod model;
pub mod validation;

pub use balance::{rose_balance, RoseConfig};
pub use dataset::{Label, LabeledDataset, Standardizer};
pub use eval::{evaluate, f1_score, ConfusionCounts, EvalReport};
pub use features::{
    altruistic_score, extract_features, FeatureCategory, FeatureMatrix, StatusSmoothing, FEATURE_NAMES,
    FEATURE_SCHEMA_VERSION, N_FEATURES,
};
pub use gbt::GbtParams;
pub use model::{train, Algorithm, Model, Prediction, TrainConfig};
pub use validation::{
    backward_elimination, cross_validate, feature_importance, holdout, CvConfig, CvReport, HoldoutConfig,
    HoldoutResult, ImportanceReport,
};

use crate::corpus::{aggregate_ledgers, build_ff_network, EventCorpus};
use crate::deviance::compute_deviance;
use crate::error::Result;

/// Ledgers, deviance scores and follow graph of `corpus` turned into a
/// labeled dataset, one row per user.
pub fn dataset_from_corpus(corpus: &EventCorpus, status: StatusSmoothing) -> Result<LabeledDataset> {
    let ledgers = aggregate_ledgers(corpus);
    let deviance = compute_deviance(&ledgers)?;
    let ff = build_ff_network(corpus);
    let features = extract_features(corpus, &ledgers, &deviance, &ff, status)?;
    LabeledDataset::from_features(&features, &corpus.suspended_by_index())
}
