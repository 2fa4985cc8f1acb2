use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::balance::{rose_balance, RoseConfig};
use super::dataset::{Label, LabeledDataset};
use super::eval::{evaluate, EvalReport};
use super::model::{train, Model, TrainConfig};
use crate::error::{Error, Result};
use crate::stats::{mean, sample_std};

/// Independent seed for sub-task `(a, b)` of a run seeded with `seed`.
pub(crate) fn task_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    /// Applied to each training fold only.
    pub balance: Option<RoseConfig>,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            repeats: 10,
            balance: Some(RoseConfig::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<EvalReport>,
    /// Per-fold metrics averaged.
    pub mean: EvalReport,
    pub std_accuracy: f64,
    pub std_precision: f64,
    pub std_recall: f64,
    pub std_f1: f64,
}

fn fit_and_score(
    data: &LabeledDataset,
    train_rows: &[usize],
    test_rows: &[usize],
    config: &TrainConfig,
    balance: Option<&RoseConfig>,
    seed: u64,
) -> Result<(Model, EvalReport)> {
    let mut train_set = data.subset(train_rows);
    if let Some(b) = balance {
        train_set = rose_balance(&train_set, b, task_seed(seed, 1, 0))?;
    }
    let model = train(&train_set, config, task_seed(seed, 2, 0))?;
    let test = data.subset(test_rows);
    let report = evaluate(&model.predict_labels(&test.x)?, &test.y, Label::Suspended)?;
    Ok((model, report))
}

/// Fold index of every row for one repeat; each class is dealt round-robin
/// over the folds after shuffling.
fn stratified_folds(data: &LabeledDataset, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; data.len()];
    let mut next = 0;
    for stratum in data.shuffled_strata(&mut rng) {
        for i in stratum {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

pub fn cross_validate(data: &LabeledDataset, config: &TrainConfig, cv: &CvConfig, seed: u64) -> Result<CvReport> {
    if cv.folds < 2 || cv.repeats == 0 {
        return Err(Error::InvalidConfig {
            field: "folds",
            message: format!("need at least 2 folds and 1 repeat, got {} x {}", cv.folds, cv.repeats),
        });
    }
    if data.len() < cv.folds {
        return Err(Error::InsufficientData(format!(
            "{} rows cannot fill {} folds",
            data.len(),
            cv.folds
        )));
    }
    let assignments: Vec<Vec<usize>> = (0..cv.repeats)
        .map(|r| stratified_folds(data, cv.folds, task_seed(seed, r as u64, u64::MAX)))
        .collect();
    let tasks: Vec<(usize, usize)> = (0..cv.repeats).flat_map(|r| (0..cv.folds).map(move |f| (r, f))).collect();
    let folds = tasks
        .par_iter()
        .map(|&(r, f)| {
            let a = &assignments[r];
            let (test, train_rows): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| a[i] == f);
            let s = task_seed(seed, r as u64, f as u64);
            fit_and_score(data, &train_rows, &test, config, cv.balance.as_ref(), s).map(|(_, e)| e)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(folds))
}

fn summarize(folds: Vec<EvalReport>) -> CvReport {
    let pick = |f: fn(&EvalReport) -> f64| folds.iter().map(f).collect::<Vec<_>>();
    let (acc, prec, rec, f1) = (
        pick(|e| e.accuracy),
        pick(|e| e.precision),
        pick(|e| e.recall),
        pick(|e| e.f1),
    );
    let mut confusion = [[0.0; 2]; 2];
    for e in &folds {
        for (row, src) in confusion.iter_mut().zip(&e.confusion) {
            for (c, v) in row.iter_mut().zip(src) {
                *c += v / folds.len() as f64;
            }
        }
    }
    let spread = |xs: &[f64]| if xs.len() > 1 { sample_std(xs) } else { 0.0 };
    CvReport {
        mean: EvalReport {
            positive: Label::Suspended,
            accuracy: mean(&acc),
            precision: mean(&prec),
            recall: mean(&rec),
            f1: mean(&f1),
            confusion,
            n: folds.iter().map(|e| e.n).sum(),
        },
        std_accuracy: spread(&acc),
        std_precision: spread(&prec),
        std_recall: spread(&rec),
        std_f1: spread(&f1),
        folds,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    /// Accuracy drop when the feature is left out, scaled so the largest
    /// drop is 100.
    pub importance: f64,
    pub accuracy_without: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub baseline_accuracy: f64,
    /// In column order.
    pub features: Vec<FeatureImportance>,
}

impl ImportanceReport {
    /// Most important first; ties keep column order.
    pub fn ranked(&self) -> Vec<&FeatureImportance> {
        let mut v: Vec<&FeatureImportance> = self.features.iter().collect();
        v.sort_by(|a, b| b.importance.total_cmp(&a.importance));
        v
    }
}

fn without(d: usize, j: usize) -> Vec<usize> {
    (0..d).filter(|&c| c != j).collect()
}

pub fn feature_importance(
    data: &LabeledDataset,
    config: &TrainConfig,
    cv: &CvConfig,
    seed: u64,
) -> Result<ImportanceReport> {
    let d = data.n_features();
    if d < 2 {
        return Err(Error::InsufficientData("importance needs at least two features".into()));
    }
    let base = cross_validate(data, config, cv, seed)?.mean.accuracy;
    let acc = (0..d)
        .map(|j| cross_validate(&data.select_columns(&without(d, j)), config, cv, seed).map(|r| r.mean.accuracy))
        .collect::<Result<Vec<_>>>()?;
    let drops: Vec<f64> = acc.iter().map(|a| (base - a).max(0.0)).collect();
    let top = drops.iter().cloned().fold(0.0, f64::max);
    let features = (0..d)
        .map(|j| FeatureImportance {
            feature: data.feature_names[j].clone(),
            importance: if top > 0.0 { 100.0 * drops[j] / top } else { 0.0 },
            accuracy_without: acc[j],
        })
        .collect();
    Ok(ImportanceReport {
        baseline_accuracy: base,
        features,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationStep {
    pub removed: String,
    /// Accuracy with this feature and all earlier ones removed.
    pub accuracy: f64,
}

/// Greedy backwards elimination: repeatedly drop the feature whose removal
/// hurts accuracy least, until one feature is left.
pub fn backward_elimination(
    data: &LabeledDataset,
    config: &TrainConfig,
    cv: &CvConfig,
    seed: u64,
) -> Result<Vec<EliminationStep>> {
    let mut kept: Vec<usize> = (0..data.n_features()).collect();
    let mut steps = Vec::new();
    while kept.len() > 1 {
        let mut best: Option<(f64, usize)> = None;
        for (pos, _) in kept.iter().enumerate() {
            let cols: Vec<usize> = kept.iter().enumerate().filter(|(p, _)| *p != pos).map(|(_, &c)| c).collect();
            let a = cross_validate(&data.select_columns(&cols), config, cv, seed)?.mean.accuracy;
            if best.is_none_or(|(b, _)| a > b) {
                best = Some((a, pos));
            }
        }
        let (accuracy, pos) = best.expect("at least two features kept");
        let col = kept.remove(pos);
        steps.push(EliminationStep {
            removed: data.feature_names[col].clone(),
            accuracy,
        });
    }
    Ok(steps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoldoutConfig {
    pub train_fraction: f64,
    pub balance: Option<RoseConfig>,
}

impl Default for HoldoutConfig {
    fn default() -> Self {
        HoldoutConfig {
            train_fraction: 0.6,
            balance: Some(RoseConfig::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutResult {
    pub model: Model,
    pub report: EvalReport,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Stratified train/test split, balancing on the training side only, then
/// evaluation on the untouched test side.
pub fn holdout(data: &LabeledDataset, config: &TrainConfig, holdout: &HoldoutConfig, seed: u64) -> Result<HoldoutResult> {
    let (train_rows, test_rows) = data.stratified_split(holdout.train_fraction, task_seed(seed, 0, 0))?;
    let (model, report) = fit_and_score(data, &train_rows, &test_rows, config, holdout.balance.as_ref(), seed)?;
    Ok(HoldoutResult {
        model,
        report,
        train_rows,
        test_rows,
    })
}
