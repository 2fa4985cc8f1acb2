mod oracle;

use cqa_core::stats::{
    empirical_distribution, geometric_mean_smoothed, ks_two_sample, pearson, permutation_test, DistributionKind,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() * 4.0 + shift).collect()
}

#[test]
fn ks_matches_sup_oracle_on_fixed_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = sample(&mut rng, 200, 0.0);
    let b = sample(&mut rng, 200, 0.7);
    let d = ks_two_sample(&a, &b).unwrap().statistic;
    assert!((d - oracle::ks_sup(&a, &b)).abs() < 1e-12);
}

#[test]
fn pearson_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = sample(&mut rng, 100, 0.0);
    let y: Vec<f64> = x.iter().map(|v| v * 0.3 + rng.random::<f64>()).collect();
    let pairs: Vec<(usize, usize)> = (0..100).map(|i| (i, 100 + i)).collect();
    let attr: Vec<f64> = x.iter().chain(&y).copied().collect();
    assert!((pearson(&x, &y).unwrap() - oracle::edge_correlation(&pairs, &attr)).abs() < 1e-12);
}

/// Exact two-sided p-value by enumerating every subset of the pooled sample.
fn exhaustive_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (n, k) = (pooled.len(), a.len());
    let total: f64 = pooled.iter().sum();
    let diff = |s: f64| (s / k as f64 - (total - s) / (n - k) as f64).abs();
    let observed = diff(a.iter().sum());
    let (mut hits, mut all) = (0usize, 0usize);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        all += 1;
        let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| pooled[i]).sum();
        if diff(s) >= observed - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / all as f64
}

#[test]
fn exact_permutation_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (na, nb) in [(3, 4), (5, 5), (6, 4), (2, 9)] {
        let a = sample(&mut rng, na, 0.5);
        let b = sample(&mut rng, nb, 0.0);
        let r = permutation_test(&a, &b, 100_000, 1).unwrap();
        assert!((r.p_value - exhaustive_p(&a, &b)).abs() < 1e-12, "{na}x{nb}");
    }
}

#[test]
fn geometric_mean_matches_log_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = sample(&mut rng, 50, 0.0);
    let want = (p.iter().map(|v| (v + 1e-6).ln()).sum::<f64>() / 50.0).exp();
    assert!((geometric_mean_smoothed(&p, 1e-6) - want).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ks_invariant_under_monotone_maps(seed in any::<u64>(), na in 2usize..80, nb in 2usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sample(&mut rng, na, 0.0);
        let b = sample(&mut rng, nb, 0.5);
        let f = |v: &f64| (v * 0.5).exp() * 3.0 - 1.0;
        let d = ks_two_sample(&a, &b).unwrap().statistic;
        let fa: Vec<f64> = a.iter().map(f).collect();
        let fb: Vec<f64> = b.iter().map(f).collect();
        prop_assert!((d - ks_two_sample(&fa, &fb).unwrap().statistic).abs() < 1e-12);
        prop_assert!((d - oracle::ks_sup(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn cdf_and_next_ccdf_sum_to_one(values in prop::collection::vec(0u8..20, 1..60)) {
        let xs: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
        let cdf = empirical_distribution(&xs, DistributionKind::Cdf).unwrap();
        let ccdf = empirical_distribution(&xs, DistributionKind::Ccdf).unwrap();
        let mut distinct = xs.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        for w in distinct.windows(2) {
            prop_assert!((cdf.eval(w[0]) + ccdf.eval(w[1]) - 1.0).abs() < 1e-12);
        }
        let last = *distinct.last().unwrap();
        prop_assert!((cdf.eval(last) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn permutation_is_reproducible(seed in any::<u64>(), perm_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sample(&mut rng, 30, 0.0);
        let b = sample(&mut rng, 25, 0.2);
        prop_assert_eq!(
            permutation_test(&a, &b, 300, perm_seed).unwrap(),
            permutation_test(&a, &b, 300, perm_seed).unwrap()
        );
    }

    #[test]
    fn geometric_mean_is_monotone(p in prop::collection::vec(0.0f64..1.0, 1..20), i in any::<prop::sample::Index>(), bump in 0.0f64..1.0) {
        let mut q = p.clone();
        let j = i.index(q.len());
        q[j] += bump;
        prop_assert!(geometric_mean_smoothed(&q, 1e-6) >= geometric_mean_smoothed(&p, 1e-6) * (1.0 - 1e-12));
    }
}
