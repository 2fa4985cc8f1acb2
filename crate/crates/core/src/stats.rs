//! Statistical kernel shared by the analyses: correlation, empirical
//! distributions, descriptive summaries and two-sample tests.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default smoothing added to every probability before taking logs.
pub const DEFAULT_EPSILON: f64 = 1e-6;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divides by n).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (divides by n - 1); 0 for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(
            "pearson needs at least two paired values".into(),
        ));
    }
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("pearson x"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("pearson y"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    /// P(X <= x)
    Cdf,
    /// P(X >= x)
    Ccdf,
}

/// Step-function empirical distribution over a sorted sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
    kind: DistributionKind,
}

impl EmpiricalDistribution {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let below_or_equal = self.values.partition_point(|v| *v <= x);
        below_or_equal as f64 / self.values.len() as f64
    }

    pub fn ccdf(&self, x: f64) -> f64 {
        let below = self.values.partition_point(|v| *v < x);
        (self.values.len() - below) as f64 / self.values.len() as f64
    }

    /// Evaluates the distribution according to its kind.
    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            DistributionKind::Cdf => self.cdf(x),
            DistributionKind::Ccdf => self.ccdf(x),
        }
    }

    /// One `(x, F(x))` point per distinct sample value, ascending in x.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.values.len() {
            let x = self.values[i];
            out.push((x, self.eval(x)));
            while i < self.values.len() && self.values[i] == x {
                i += 1;
            }
        }
        out
    }
}

pub fn empirical_distribution(
    sample: &[f64],
    kind: DistributionKind,
) -> Result<EmpiricalDistribution> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("empirical distribution sample".into()));
    }
    let mut values = sample.to_vec();
    values.sort_by(f64::total_cmp);
    Ok(EmpiricalDistribution { values, kind })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

/// Type-7 quantile (linear interpolation between order statistics) of an
/// ascending-sorted, nonempty slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn descriptive(sample: &[f64]) -> Result<DescriptiveStats> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(DescriptiveStats {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        mean: mean(&sorted),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// `exp(mean(ln(p_i + epsilon)))`. Returns `epsilon` for an empty slice.
pub fn geometric_mean_smoothed(p: &[f64], epsilon: f64) -> f64 {
    if p.is_empty() {
        return epsilon;
    }
    let s: f64 = p.iter().map(|v| (v + epsilon).ln()).sum();
    (s / p.len() as f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleResult {
    /// KS distance D, or the observed |mean(a) - mean(b)| for permutation tests.
    pub statistic: f64,
    /// Replicate z-score of the observed statistic (permutation tests only).
    pub z: Option<f64>,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Survival function of the Kolmogorov distribution, P(K > lambda).
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let q = if lambda < 1.18 {
        // Jacobi theta form converges fast for small lambda.
        let y = (-std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda)).exp();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda
            * (y + y.powi(9) + y.powi(25) + y.powi(49));
        1.0 - cdf
    } else {
        let x = (-2.0 * lambda * lambda).exp();
        2.0 * (x - x.powi(4) + x.powi(9) - x.powi(16))
    };
    q.clamp(0.0, 1.0)
}

fn sorted_finite(xs: &[f64], what: &str) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what.into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TwoSampleResult> {
    let a = sorted_finite(a, "ks sample a")?;
    let b = sorted_finite(b, "ks sample b")?;
    let (n1, n2) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        let x = a[i].min(b[j]);
        while i < n1 && a[i] <= x {
            i += 1;
        }
        while j < n2 && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    Ok(TwoSampleResult {
        statistic: d,
        z: None,
        p_value: kolmogorov_survival(ne.sqrt() * d),
        n1,
        n2,
    })
}

/// One-sample KS distance and asymptotic p-value against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let xs = sorted_finite(sample, "ks sample")?;
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok((d, kolmogorov_survival(n.sqrt() * d)))
}

/// `stat >= observed` with a relative slack for summation-order noise.
pub(crate) fn at_least(stat: f64, observed: f64) -> bool {
    stat >= observed - 1e-12 * observed.abs().max(1.0)
}

fn n_choose_k(n: usize, k: usize) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Permutation test on the absolute difference of means.
///
/// When `n_perm` covers every distinct relabelling of the pooled sample the
/// test is exact: each split is enumerated once and the p-value is the
/// fraction of splits at least as extreme as the observed one. Otherwise
/// `n_perm` random relabellings are drawn and the p-value is add-one
/// smoothed. The z-score is taken on the signed difference `mean(a) -
/// mean(b)` so that exchangeable samples centre on zero.
pub fn permutation_test(a: &[f64], b: &[f64], n_perm: usize, seed: u64) -> Result<TwoSampleResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if n_perm < 100 {
        return Err(Error::InsufficientData(format!(
            "permutation test needs n_perm >= 100, got {n_perm}"
        )));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("permutation sample".into()));
    }
    if variance(&pooled) == 0.0 {
        return Err(Error::ZeroVariance("pooled permutation sample"));
    }
    let (n1, n2) = (a.len(), b.len());
    let total: f64 = pooled.iter().sum();
    let signed_of = |sum_a: f64| sum_a / n1 as f64 - (total - sum_a) / n2 as f64;
    let observed_signed = signed_of(a.iter().sum());
    let observed = observed_signed.abs();

    let exact = n_choose_k(n1 + n2, n1).filter(|c| *c <= n_perm as u64);
    let signed: Vec<f64> = match exact {
        Some(count) => {
            let mut out = Vec::with_capacity(count as usize);
            let n = n1 + n2;
            let mut idx: Vec<usize> = (0..n1).collect();
            loop {
                out.push(signed_of(idx.iter().map(|&i| pooled[i]).sum()));
                // next combination in lexicographic order
                let mut i = n1;
                while i > 0 && idx[i - 1] == n - n1 + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                idx[i - 1] += 1;
                for j in i..n1 {
                    idx[j] = idx[j - 1] + 1;
                }
            }
            out
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut work = pooled.clone();
            (0..n_perm)
                .map(|_| {
                    let (head, _) = work.partial_shuffle(&mut rng, n1);
                    signed_of(head.iter().sum())
                })
                .collect()
        }
    };

    let extreme = signed.iter().filter(|s| at_least(s.abs(), observed)).count();
    let p_value = match exact {
        Some(_) => extreme as f64 / signed.len() as f64,
        None => (extreme + 1) as f64 / (signed.len() + 1) as f64,
    };
    let m = mean(&signed);
    let sd = variance(&signed).sqrt();
    let z = if sd > 0.0 { (observed_signed - m) / sd } else { 0.0 };
    Ok(TwoSampleResult {
        statistic: observed,
        z: Some(z),
        p_value: p_value.clamp(0.0, 1.0),
        n1,
        n2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn random_vec(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>() * 10.0 - 3.0).collect()
    }

    #[test]
    fn pearson_identity_and_negation() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_relative_eq!(pearson(&x, &x).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(pearson(&x, &neg).unwrap(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn pearson_matches_raw_sum_formula() {
        let x = random_vec(3, 100);
        let y: Vec<f64> = random_vec(4, 100)
            .iter()
            .zip(&x)
            .map(|(a, b)| a + 0.3 * b)
            .collect();
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|a| a * a).sum();
        let oracle = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
        assert!((pearson(&x, &y).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::ZeroVariance(_))
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn empirical_step_values() {
        let cdf = empirical_distribution(&[1.0, 2.0, 3.0], DistributionKind::Cdf).unwrap();
        assert_relative_eq!(cdf.eval(2.0), 2.0 / 3.0);
        let ccdf = empirical_distribution(&[1.0, 2.0, 3.0], DistributionKind::Ccdf).unwrap();
        assert_eq!(ccdf.eval(0.5), 1.0);
        assert_eq!(ccdf.eval(3.5), 0.0);
        assert!(matches!(
            empirical_distribution(&[], DistributionKind::Cdf),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn empirical_matches_counting_oracle() {
        let sample: Vec<f64> = random_vec(9, 300).iter().map(|v| v.round()).collect();
        let cdf = empirical_distribution(&sample, DistributionKind::Cdf).unwrap();
        let ccdf = empirical_distribution(&sample, DistributionKind::Ccdf).unwrap();
        for k in 0..20 {
            let x = -4.0 + k as f64 * 0.7;
            let le = sample.iter().filter(|v| **v <= x).count() as f64 / 300.0;
            let ge = sample.iter().filter(|v| **v >= x).count() as f64 / 300.0;
            assert_eq!(cdf.eval(x), le);
            assert_eq!(ccdf.eval(x), ge);
        }
    }

    #[test]
    fn cdf_plus_next_ccdf_is_one() {
        let sample = [3.0, 1.0, 1.0, 2.0, 5.0, 5.0];
        let d = empirical_distribution(&sample, DistributionKind::Cdf).unwrap();
        let steps = d.steps();
        for w in steps.windows(2) {
            assert_relative_eq!(d.cdf(w[0].0) + d.ccdf(w[1].0), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn descriptive_small_and_constant() {
        let d = descriptive(&[1.0, 1.0, 2.0, 5.0]).unwrap();
        assert_eq!((d.min, d.max, d.mean), (1.0, 5.0, 2.25));
        assert_relative_eq!(d.q1, 1.0);
        assert_relative_eq!(d.median, 1.5);
        assert_relative_eq!(d.q3, 2.75);
        let c = descriptive(&[4.0; 7]).unwrap();
        assert!([c.min, c.q1, c.median, c.mean, c.q3, c.max].iter().all(|v| *v == 4.0));
        assert!(descriptive(&[]).is_err());
    }

    #[test]
    fn descriptive_matches_order_statistics() {
        // n = 101 puts every quartile exactly on an order statistic.
        let sample = random_vec(21, 101);
        let mut sorted = sample.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let d = descriptive(&sample).unwrap();
        assert_eq!(d.q1, sorted[25]);
        assert_eq!(d.median, sorted[50]);
        assert_eq!(d.q3, sorted[75]);
        assert!(d.min <= d.q1 && d.q1 <= d.median && d.median <= d.q3 && d.q3 <= d.max);
    }

    #[test]
    fn geometric_mean_cases() {
        assert_relative_eq!(geometric_mean_smoothed(&[0.25, 0.25], 1e-15), 0.25, epsilon = 1e-12);
        let g = geometric_mean_smoothed(&[0.0, 0.5], 1e-6);
        assert!(g.is_finite() && g > 0.0);
        let p: Vec<f64> = random_vec(5, 50).iter().map(|v| (v.abs() / 10.0).min(1.0)).collect();
        let oracle = (p.iter().map(|v| (v + 1e-6).ln()).sum::<f64>() / 50.0).exp();
        assert!((geometric_mean_smoothed(&p, 1e-6) - oracle).abs() < 1e-12);
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a).unwrap().statistic, 0.0);
        let r = ks_two_sample(&a, &[10.0, 11.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(ks_two_sample(&[], &a).is_err());
    }

    #[test]
    fn kolmogorov_survival_reference_points() {
        // Reference values of the Kolmogorov distribution.
        assert!((kolmogorov_survival(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_survival(1.63) - 0.0098).abs() < 1e-3);
        assert!((kolmogorov_survival(0.5) - 0.9639).abs() < 1e-3);
        // The two series agree where they hand over.
        let lo = {
            let l: f64 = 1.18;
            let x = (-2.0 * l * l).exp();
            2.0 * (x - x.powi(4) + x.powi(9) - x.powi(16))
        };
        assert!((kolmogorov_survival(1.1799999) - lo).abs() < 1e-6);
    }

    #[test]
    fn permutation_shift_hits_floor() {
        let b = random_vec(1, 30);
        let a: Vec<f64> = b.iter().map(|v| v + 1000.0).collect();
        let r = permutation_test(&a, &b, 999, 7).unwrap();
        assert_relative_eq!(r.p_value, 1.0 / 1000.0);
        assert!(r.z.unwrap() > 5.0);
    }

    #[test]
    fn permutation_same_multiset_is_null() {
        let a = random_vec(2, 40);
        let mut b = a.clone();
        b.reverse();
        let r = permutation_test(&a, &b, 2000, 3).unwrap();
        assert!(r.p_value > 0.9, "p = {}", r.p_value);
        assert!(r.z.unwrap().abs() < 0.1, "z = {:?}", r.z);
    }

    #[test]
    fn permutation_is_reproducible_and_rejects_degenerate() {
        let a = random_vec(11, 25);
        let b = random_vec(12, 25);
        assert_eq!(
            permutation_test(&a, &b, 500, 42).unwrap(),
            permutation_test(&a, &b, 500, 42).unwrap()
        );
        assert!(matches!(
            permutation_test(&[1.0, 1.0], &[1.0], 100, 0),
            Err(Error::ZeroVariance(_))
        ));
        assert!(permutation_test(&a, &b, 10, 0).is_err());
    }

    #[test]
    fn n_choose_k_small() {
        assert_eq!(n_choose_k(10, 3), Some(120));
        assert_eq!(n_choose_k(6, 6), Some(1));
        assert_eq!(n_choose_k(200, 100), None);
    }
}
