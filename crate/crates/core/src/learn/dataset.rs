use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureMatrix, FEATURE_NAMES};
use crate::corpus::UserId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Fair,
    Suspended,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Fair, Label::Suspended];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::Fair
        } else {
            Label::Suspended
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Fair => "fair",
            Label::Suspended => "suspended",
        }
    }

    pub fn other(self) -> Label {
        Label::from_index(1 - self.index())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fair" | "0" => Ok(Label::Fair),
            "suspended" | "1" => Ok(Label::Suspended),
            _ => Err(Error::InvalidConfig {
                field: "label",
                message: format!("unknown label {s:?}"),
            }),
        }
    }
}

/// Rows of features with one label each. Feature columns are addressed by
/// position; `feature_names` only travels along for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub feature_names: Vec<String>,
    pub ids: Vec<UserId>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(feature_names: Vec<String>, ids: Vec<UserId>, x: Vec<Vec<f64>>, y: Vec<Label>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if ids.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: ids.len(),
                right: y.len(),
            });
        }
        let d = feature_names.len();
        if let Some(row) = x.iter().find(|r| r.len() != d) {
            return Err(Error::Arity {
                expected: d,
                got: row.len(),
            });
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset".into()));
        }
        Ok(LabeledDataset {
            feature_names,
            ids,
            x,
            y,
        })
    }

    /// Anonymous rows, ids `0..n`.
    pub fn from_rows(x: Vec<Vec<f64>>, y: Vec<Label>) -> Result<Self> {
        let d = x.first().map_or(0, Vec::len);
        let names = (0..d).map(|j| format!("f{j}")).collect();
        let ids = (0..y.len()).map(|i| UserId::new(i.to_string())).collect();
        Self::new(names, ids, x, y)
    }

    pub fn from_features(features: &FeatureMatrix, suspended: &[bool]) -> Result<Self> {
        if features.rows.len() != suspended.len() {
            return Err(Error::LengthMismatch {
                left: features.rows.len(),
                right: suspended.len(),
            });
        }
        let y = suspended
            .iter()
            .map(|&s| if s { Label::Suspended } else { Label::Fair })
            .collect();
        Self::new(
            FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            features.ids.clone(),
            features.rows.iter().map(|r| r.to_vec()).collect(),
            y,
        )
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// `[fair, suspended]`
    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0, 0];
        for l in &self.y {
            c[l.index()] += 1;
        }
        c
    }

    pub fn subset(&self, rows: &[usize]) -> LabeledDataset {
        LabeledDataset {
            feature_names: self.feature_names.clone(),
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            x: rows.iter().map(|&i| self.x[i].clone()).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> LabeledDataset {
        LabeledDataset {
            feature_names: cols.iter().map(|&j| self.feature_names[j].clone()).collect(),
            ids: self.ids.clone(),
            x: self.x.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect(),
            y: self.y.clone(),
        }
    }

    pub fn standardization(&self) -> Standardizer {
        Standardizer::fit(&self.x, self.n_features())
    }

    /// Row indices per class, shuffled.
    pub(crate) fn shuffled_strata(&self, rng: &mut ChaCha8Rng) -> [Vec<usize>; 2] {
        let mut strata = [Vec::new(), Vec::new()];
        for (i, l) in self.y.iter().enumerate() {
            strata[l.index()].push(i);
        }
        for s in &mut strata {
            s.shuffle(rng);
        }
        strata
    }

    /// Stratified split; the first part holds `fraction` of each class.
    pub fn stratified_split(&self, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidConfig {
                field: "train_fraction",
                message: format!("{fraction} is not in (0, 1)"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for s in self.shuffled_strata(&mut rng) {
            let k = (s.len() as f64 * fraction).round() as usize;
            a.extend_from_slice(&s[..k]);
            b.extend_from_slice(&s[k..]);
        }
        a.sort_unstable();
        b.sort_unstable();
        if a.is_empty() || b.is_empty() {
            return Err(Error::InsufficientData(format!("cannot split {} rows", self.len())));
        }
        Ok((a, b))
    }

    /// CSV with `user_id`, one column per feature, then `label`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| csv_err(path, e);
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        let mut header = vec!["user_id".to_string()];
        header.extend(self.feature_names.iter().cloned());
        header.push("label".into());
        w.write_record(&header).map_err(io)?;
        for ((id, row), l) in self.ids.iter().zip(&self.x).zip(&self.y) {
            let mut rec = vec![id.as_str().to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            rec.push(l.as_str().into());
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<LabeledDataset> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
        let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < 3 || cols[0] != "user_id" || cols[cols.len() - 1] != "label" {
            return Err(Error::Parse {
                file: path.into(),
                line: 1,
                message: "expected header user_id,<features...>,label".into(),
            });
        }
        let names: Vec<String> = cols[1..cols.len() - 1].iter().map(|s| s.to_string()).collect();
        let (mut ids, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let bad = |message: String| Error::Parse {
                file: path.into(),
                line,
                message,
            };
            if rec.len() != cols.len() {
                return Err(bad(format!("expected {} fields, got {}", cols.len(), rec.len())));
            }
            ids.push(UserId::new(&rec[0]));
            let row = (1..rec.len() - 1)
                .map(|j| rec[j].parse::<f64>().map_err(|e| bad(format!("{}: {e}", cols[j]))))
                .collect::<Result<Vec<_>>>()?;
            x.push(row);
            y.push(rec[rec.len() - 1].parse().map_err(|e: Error| bad(e.to_string()))?);
        }
        Self::new(names, ids, x, y)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            file: path.into(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Per-column z-scoring. Constant columns are centred but not scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>], d: usize) -> Standardizer {
        let n = x.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in x {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in x {
            for j in 0..d {
                var[j] += (r[j] - mean[j]).powi(2);
            }
        }
        let scale = var
            .iter()
            .zip(&mean)
            .map(|(v, m)| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 * (1.0 + m.abs()) {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LabeledDataset {
        let x = (0..10).map(|i| vec![i as f64, 1.0]).collect();
        let y = (0..10).map(|i| if i < 3 { Label::Suspended } else { Label::Fair }).collect();
        LabeledDataset::from_rows(x, y).unwrap()
    }

    #[test]
    fn arity_and_finiteness_checked() {
        assert!(matches!(
            LabeledDataset::from_rows(vec![vec![1.0], vec![1.0, 2.0]], vec![Label::Fair; 2]),
            Err(Error::Arity { .. })
        ));
        assert!(matches!(
            LabeledDataset::from_rows(vec![vec![f64::NAN]], vec![Label::Fair]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn standardizer_centres_and_scales() {
        let d = toy();
        let s = d.standardization();
        let z = s.transform(&d.x);
        let m: f64 = z.iter().map(|r| r[0]).sum::<f64>() / 10.0;
        let v: f64 = z.iter().map(|r| r[0] * r[0]).sum::<f64>() / 10.0;
        assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
        assert!(z.iter().all(|r| r[1] == 0.0));
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let d = toy();
        let (a, b) = d.stratified_split(0.6, 3).unwrap();
        assert_eq!(a.len() + b.len(), 10);
        assert_eq!(d.subset(&a).class_counts(), [4, 2]);
        assert!(a.iter().all(|i| !b.contains(i)));
        assert_eq!(d.stratified_split(0.6, 3).unwrap(), (a, b));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let d = toy();
        d.write_csv(&p).unwrap();
        assert_eq!(LabeledDataset::read_csv(&p).unwrap(), d);
    }
}
