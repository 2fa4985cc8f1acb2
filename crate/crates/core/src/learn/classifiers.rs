use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{Label, LabeledDataset, Standardizer};
use crate::error::{Error, Result};

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn target(l: Label) -> f64 {
    l.index() as f64
}

fn require_both_classes(data: &LabeledDataset) -> Result<()> {
    let [fair, susp] = data.class_counts();
    if fair == 0 || susp == 0 {
        return Err(Error::InsufficientData(format!(
            "training needs both classes, got {fair} fair and {susp} suspended"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

impl GaussianNb {
    pub fn fit(data: &LabeledDataset) -> Result<GaussianNb> {
        require_both_classes(data)?;
        let d = data.n_features();
        let counts = data.class_counts();
        let mut mean = [vec![0.0; d], vec![0.0; d]];
        for (r, l) in data.x.iter().zip(&data.y) {
            for (m, v) in mean[l.index()].iter_mut().zip(r) {
                *m += v;
            }
        }
        for c in 0..2 {
            mean[c].iter_mut().for_each(|m| *m /= counts[c] as f64);
        }
        let mut var = [vec![0.0; d], vec![0.0; d]];
        for (r, l) in data.x.iter().zip(&data.y) {
            let c = l.index();
            for j in 0..d {
                var[c][j] += (r[j] - mean[c][j]).powi(2);
            }
        }
        for c in 0..2 {
            var[c].iter_mut().for_each(|v| *v /= counts[c] as f64);
        }
        // variance floor relative to the widest feature
        let widest = var.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        let floor = (1e-9 * widest).max(1e-12);
        for v in var.iter_mut().flatten() {
            *v += floor;
        }
        let n = data.len() as f64;
        Ok(GaussianNb {
            log_prior: [(counts[0] as f64 / n).ln(), (counts[1] as f64 / n).ln()],
            mean,
            var,
        })
    }

    pub fn proba(&self, row: &[f64]) -> f64 {
        let ll = |c: usize| {
            self.log_prior[c]
                + row
                    .iter()
                    .zip(self.mean[c].iter().zip(&self.var[c]))
                    .map(|(x, (m, v))| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m).powi(2) / v))
                    .sum::<f64>()
        };
        sigmoid(ll(1) - ll(0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub max_iter: usize,
    /// Stop once the loss improves by less than this.
    pub tolerance: f64,
    pub l2: f64,
    /// AdaBoost rounds; 1 is a plain logistic regression.
    pub boosting_rounds: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            learning_rate: 0.5,
            max_iter: 1000,
            tolerance: 1e-8,
            l2: 1e-4,
            boosting_rounds: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticStage {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub alpha: f64,
}

impl LogisticStage {
    fn proba(&self, z: &[f64]) -> f64 {
        sigmoid(self.intercept + z.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedLogistic {
    pub standardizer: Standardizer,
    pub stages: Vec<LogisticStage>,
}

/// Weighted cross-entropy by full-batch gradient descent on z-scored rows.
fn fit_stage(z: &[Vec<f64>], y: &[f64], w: &[f64], p: &LogisticParams) -> LogisticStage {
    let d = z.first().map_or(0, Vec::len);
    let (mut b0, mut b) = (0.0, vec![0.0; d]);
    let loss = |b0: f64, b: &[f64]| -> f64 {
        let ce: f64 = z
            .iter()
            .zip(y.iter().zip(w))
            .map(|(r, (t, wi))| {
                let s = b0 + r.iter().zip(b).map(|(a, c)| a * c).sum::<f64>();
                // log(1 + e^s) - t s, stable
                wi * (s.max(0.0) + (-s.abs()).exp().ln_1p() - t * s)
            })
            .sum();
        ce + 0.5 * p.l2 * b.iter().map(|v| v * v).sum::<f64>()
    };
    let mut prev = loss(b0, &b);
    for _ in 0..p.max_iter {
        let (mut g0, mut g) = (0.0, vec![0.0; d]);
        for (r, (t, wi)) in z.iter().zip(y.iter().zip(w)) {
            let s = b0 + r.iter().zip(&b).map(|(a, c)| a * c).sum::<f64>();
            let e = wi * (sigmoid(s) - t);
            g0 += e;
            for (gj, x) in g.iter_mut().zip(r) {
                *gj += e * x;
            }
        }
        b0 -= p.learning_rate * g0;
        for (bj, gj) in b.iter_mut().zip(&g) {
            *bj -= p.learning_rate * (gj + p.l2 * *bj);
        }
        let cur = loss(b0, &b);
        if (prev - cur).abs() < p.tolerance {
            break;
        }
        prev = cur;
    }
    LogisticStage {
        intercept: b0,
        weights: b,
        alpha: 1.0,
    }
}

impl BoostedLogistic {
    pub fn fit(data: &LabeledDataset, params: &LogisticParams) -> Result<BoostedLogistic> {
        require_both_classes(data)?;
        if params.boosting_rounds == 0 {
            return Err(Error::InvalidConfig {
                field: "boosting_rounds",
                message: "must be at least 1".into(),
            });
        }
        let standardizer = data.standardization();
        let z = standardizer.transform(&data.x);
        let y: Vec<f64> = data.y.iter().map(|&l| target(l)).collect();
        let n = data.len();
        let mut w = vec![1.0 / n as f64; n];
        let mut stages = Vec::new();
        for _ in 0..params.boosting_rounds {
            let mut stage = fit_stage(&z, &y, &w, params);
            let wrong: Vec<bool> = z
                .iter()
                .zip(&y)
                .map(|(r, t)| (stage.proba(r) > 0.5) != (*t > 0.5))
                .collect();
            let err: f64 = w.iter().zip(&wrong).filter(|(_, m)| **m).map(|(wi, _)| wi).sum();
            if err >= 0.5 && !stages.is_empty() {
                break;
            }
            let err = err.clamp(1e-10, 0.5 - 1e-10);
            stage.alpha = 0.5 * ((1.0 - err) / err).ln();
            stages.push(stage);
            let total: f64 = w
                .iter_mut()
                .zip(&wrong)
                .map(|(wi, m)| {
                    if *m {
                        *wi *= (2.0 * stages.last().unwrap().alpha).exp();
                    }
                    *wi
                })
                .sum();
            w.iter_mut().for_each(|wi| *wi /= total);
        }
        Ok(BoostedLogistic { standardizer, stages })
    }

    /// Alpha-weighted mean of the stage probabilities; one stage gives its own
    /// probability back.
    pub fn proba(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.transform_row(row);
        let total: f64 = self.stages.iter().map(|s| s.alpha).sum();
        self.stages.iter().map(|s| s.alpha * s.proba(&z)).sum::<f64>() / total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub standardizer: Standardizer,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Label>,
}

impl KnnModel {
    pub fn fit(data: &LabeledDataset, params: &KnnParams) -> Result<KnnModel> {
        if params.k == 0 {
            return Err(Error::InvalidConfig {
                field: "k",
                message: "must be at least 1".into(),
            });
        }
        if data.is_empty() {
            return Err(Error::InsufficientData("no training rows".into()));
        }
        let standardizer = data.standardization();
        Ok(KnnModel {
            k: params.k.min(data.len()),
            x: standardizer.transform(&data.x),
            y: data.y.clone(),
            standardizer,
        })
    }

    /// Share of suspended rows among the `k` nearest; distance ties go to
    /// the earlier training row.
    pub fn proba(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.transform_row(row);
        let mut dist: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
            .collect();
        let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by);
        }
        let hits = dist[..self.k].iter().filter(|(_, i)| self.y[*i] == Label::Suspended).count();
        hits as f64 / self.k as f64
    }

    pub fn proba_batch(&self, x: &[Vec<f64>]) -> Vec<f64> {
        x.par_iter().map(|r| self.proba(r)).collect()
    }
}
