//! Random over-sampling examples: the minority class is regenerated by a
//! smoothed bootstrap, the majority class is under-sampled, and the total
//! row count is preserved.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoseConfig {
    /// Share of output rows that belong to the minority class.
    pub minority_share: f64,
    /// Kernel bandwidth multiplier; 0 makes synthetic rows exact copies.
    pub shrink: f64,
}

impl Default for RoseConfig {
    fn default() -> Self {
        RoseConfig {
            minority_share: 0.5,
            shrink: 0.0,
        }
    }
}

impl RoseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.minority_share > 0.0 && self.minority_share < 1.0) {
            return Err(Error::InvalidConfig {
                field: "minority_share",
                message: format!("{} is not in (0, 1)", self.minority_share),
            });
        }
        if !(self.shrink >= 0.0 && self.shrink.is_finite()) {
            return Err(Error::InvalidConfig {
                field: "shrink",
                message: format!("{} must be finite and >= 0", self.shrink),
            });
        }
        Ok(())
    }
}

/// The less frequent label; ties go to `Suspended`.
pub fn minority_label(data: &LabeledDataset) -> Label {
    let [fair, susp] = data.class_counts();
    if susp <= fair {
        Label::Suspended
    } else {
        Label::Fair
    }
}

/// Per-feature Gaussian kernel widths for `rows`:
/// `shrink * (4 / ((d + 2) n))^(1 / (d + 4)) * sd_j`.
pub fn rose_bandwidths(rows: &[&Vec<f64>], d: usize, shrink: f64) -> Vec<f64> {
    let n = rows.len() as f64;
    let factor = (4.0 / ((d as f64 + 2.0) * n)).powf(1.0 / (d as f64 + 4.0));
    (0..d)
        .map(|j| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = if rows.len() > 1 {
                rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            shrink * factor * var.sqrt()
        })
        .collect()
}

pub fn rose_balance(data: &LabeledDataset, config: &RoseConfig, seed: u64) -> Result<LabeledDataset> {
    config.validate()?;
    let minority = minority_label(data);
    let counts = data.class_counts();
    if counts[minority.index()] == 0 {
        return Err(Error::InsufficientData(format!("no {minority} rows to over-sample")));
    }
    let n = data.len();
    let n_min = ((n as f64 * config.minority_share).round() as usize).clamp(1, n - 1);
    let n_maj = n - n_min;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let idx_of = |l: Label| -> Vec<usize> { (0..n).filter(|&i| data.y[i] == l).collect() };
    let (min_idx, maj_idx) = (idx_of(minority), idx_of(minority.other()));
    let min_rows: Vec<&Vec<f64>> = min_idx.iter().map(|&i| &data.x[i]).collect();
    let h = rose_bandwidths(&min_rows, data.n_features(), config.shrink);

    let mut out = LabeledDataset {
        feature_names: data.feature_names.clone(),
        ids: Vec::with_capacity(n),
        x: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
    };
    for _ in 0..n_min {
        let &i = min_idx.choose(&mut rng).expect("minority is non-empty");
        let row = data.x[i]
            .iter()
            .zip(&h)
            .map(|(v, hj)| {
                if *hj > 0.0 {
                    v + hj * rng.sample::<f64, _>(StandardNormal)
                } else {
                    *v
                }
            })
            .collect();
        out.ids.push(data.ids[i].clone());
        out.x.push(row);
        out.y.push(minority);
    }
    let picks: Vec<usize> = if n_maj <= maj_idx.len() {
        rand::seq::index::sample(&mut rng, maj_idx.len(), n_maj).into_vec()
    } else if maj_idx.is_empty() {
        return Err(Error::InsufficientData(format!("no {} rows", minority.other())));
    } else {
        (0..n_maj).map(|_| rng.random_range(0..maj_idx.len())).collect()
    };
    for p in picks {
        let i = maj_idx[p];
        out.ids.push(data.ids[i].clone());
        out.x.push(data.x[i].clone());
        out.y.push(data.y[i]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skewed(n: usize, minority: usize) -> LabeledDataset {
        let x = (0..n).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let y = (0..n)
            .map(|i| if i < minority { Label::Suspended } else { Label::Fair })
            .collect();
        LabeledDataset::from_rows(x, y).unwrap()
    }

    #[test]
    fn nine_to_one_becomes_even() {
        let d = skewed(1000, 100);
        let b = rose_balance(&d, &RoseConfig::default(), 1).unwrap();
        assert_eq!(b.len(), 1000);
        assert_eq!(b.class_counts(), [500, 500]);
    }

    #[test]
    fn zero_shrink_copies_rows() {
        let d = skewed(200, 20);
        let cfg = RoseConfig {
            shrink: 0.0,
            ..RoseConfig::default()
        };
        let b = rose_balance(&d, &cfg, 4).unwrap();
        let originals: Vec<&Vec<f64>> = d.x[..20].iter().collect();
        for (row, l) in b.x.iter().zip(&b.y) {
            if *l == Label::Suspended {
                assert!(originals.contains(&row));
            }
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let d = skewed(300, 30);
        let cfg = RoseConfig {
            shrink: 1.0,
            ..RoseConfig::default()
        };
        assert_eq!(rose_balance(&d, &cfg, 9).unwrap(), rose_balance(&d, &cfg, 9).unwrap());
        assert_ne!(rose_balance(&d, &cfg, 9).unwrap(), rose_balance(&d, &cfg, 10).unwrap());
    }

    #[test]
    fn balanced_input_keeps_counts() {
        let d = skewed(100, 50);
        assert_eq!(rose_balance(&d, &RoseConfig::default(), 2).unwrap().class_counts(), [50, 50]);
    }

    #[test]
    fn bandwidth_formula() {
        let rows = [vec![0.0], vec![2.0]];
        let refs: Vec<&Vec<f64>> = rows.iter().collect();
        let h = rose_bandwidths(&refs, 1, 1.0);
        let expect = (4.0f64 / 6.0).powf(0.2) * 2f64.sqrt();
        assert!((h[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn empty_minority_is_an_error() {
        let d = skewed(10, 0);
        assert!(rose_balance(&d, &RoseConfig::default(), 0).is_err());
    }
}
