use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifiers::{BoostedLogistic, GaussianNb, KnnModel, KnnParams, LogisticParams};
use super::dataset::{Label, LabeledDataset};
use super::features::FEATURE_SCHEMA_VERSION;
use super::gbt::{GbtModel, GbtParams};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "cqa-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    NaiveBayes,
    Logistic,
    Knn,
    Gbt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::NaiveBayes, Algorithm::Logistic, Algorithm::Knn, Algorithm::Gbt];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::NaiveBayes => "naive-bayes",
            Algorithm::Logistic => "logistic",
            Algorithm::Knn => "knn",
            Algorithm::Gbt => "gbt",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig {
                field: "algorithm",
                message: format!(
                    "unknown algorithm {s:?}; valid options: {}",
                    Algorithm::ALL.map(|a| a.as_str()).join(", ")
                ),
            })
    }
}

/// Algorithm choice plus the hyper-parameters of every algorithm; only the
/// chosen one's block is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub logistic: LogisticParams,
    pub knn: KnnParams,
    pub gbt: GbtParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            algorithm: Algorithm::Gbt,
            logistic: LogisticParams::default(),
            knn: KnnParams::default(),
            gbt: GbtParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        TrainConfig {
            algorithm,
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "params", rename_all = "kebab-case")]
pub enum Classifier {
    NaiveBayes(GaussianNb),
    Logistic(BoostedLogistic),
    Knn(KnnModel),
    Gbt(GbtModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub p_fair: f64,
    pub p_suspended: f64,
}

impl Prediction {
    fn from_proba(p: f64) -> Prediction {
        Prediction {
            label: if p > 0.5 { Label::Suspended } else { Label::Fair },
            p_fair: 1.0 - p,
            p_suspended: p,
        }
    }
}

/// A trained classifier with the schema it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format: String,
    pub version: u32,
    pub feature_schema_version: u32,
    pub feature_names: Vec<String>,
    pub config: TrainConfig,
    pub classifier: Classifier,
}

pub fn train(data: &LabeledDataset, config: &TrainConfig, seed: u64) -> Result<Model> {
    let classifier = match config.algorithm {
        Algorithm::NaiveBayes => Classifier::NaiveBayes(GaussianNb::fit(data)?),
        Algorithm::Logistic => Classifier::Logistic(BoostedLogistic::fit(data, &config.logistic)?),
        Algorithm::Knn => Classifier::Knn(KnnModel::fit(data, &config.knn)?),
        Algorithm::Gbt => Classifier::Gbt(GbtModel::fit(data, &config.gbt, seed)?),
    };
    Ok(Model {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        feature_schema_version: FEATURE_SCHEMA_VERSION,
        feature_names: data.feature_names.clone(),
        config: *config,
        classifier,
    })
}

impl Model {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn predict_proba(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        let d = self.n_features();
        if let Some(r) = x.iter().find(|r| r.len() != d) {
            return Err(Error::Arity {
                expected: d,
                got: r.len(),
            });
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prediction input".into()));
        }
        Ok(match &self.classifier {
            Classifier::NaiveBayes(m) => x.par_iter().map(|r| m.proba(r)).collect(),
            Classifier::Logistic(m) => x.par_iter().map(|r| m.proba(r)).collect(),
            Classifier::Knn(m) => m.proba_batch(x),
            Classifier::Gbt(m) => x.par_iter().map(|r| m.proba(r)).collect(),
        })
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        Ok(self.predict_proba(x)?.into_iter().map(Prediction::from_proba).collect())
    }

    pub fn predict_labels(&self, x: &[Vec<f64>]) -> Result<Vec<Label>> {
        Ok(self.predict(x)?.into_iter().map(|p| p.label).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let m: Model = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if m.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!("not a model file (format {:?})", m.format)));
        }
        if m.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!(
                "model version {} is not supported (expected {MODEL_VERSION})",
                m.version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Model> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> LabeledDataset {
        let x = (0..60).map(|i| vec![i as f64, (i % 5) as f64]).collect();
        let y = (0..60).map(|i| if i >= 30 { Label::Suspended } else { Label::Fair }).collect();
        LabeledDataset::from_rows(x, y).unwrap()
    }

    #[test]
    fn unknown_algorithm_lists_options() {
        let e = "svm".parse::<Algorithm>().unwrap_err().to_string();
        assert!(e.contains("naive-bayes, logistic, knn, gbt"), "{e}");
        assert_eq!("knn".parse::<Algorithm>().unwrap(), Algorithm::Knn);
    }

    #[test]
    fn every_algorithm_round_trips() {
        let d = data();
        for a in Algorithm::ALL {
            let m = train(&d, &TrainConfig::with_algorithm(a), 1).unwrap();
            let back = Model::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(m.predict_proba(&d.x).unwrap(), back.predict_proba(&d.x).unwrap(), "{a}");
            let acc = m
                .predict_labels(&d.x)
                .unwrap()
                .iter()
                .zip(&d.y)
                .filter(|(p, y)| p == y)
                .count();
            assert!(acc >= 50, "{a}: {acc}");
        }
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let m = train(&data(), &TrainConfig::with_algorithm(Algorithm::NaiveBayes), 0).unwrap();
        assert!(matches!(
            m.predict(&[vec![1.0, 2.0, 3.0]]),
            Err(Error::Arity { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let m = train(&data(), &TrainConfig::with_algorithm(Algorithm::NaiveBayes), 0).unwrap();
        let text = m.to_json().unwrap().replace("\"version\": 1", "\"version\": 99");
        assert!(matches!(Model::from_json(&text), Err(Error::ModelFormat(_))));
    }
}
