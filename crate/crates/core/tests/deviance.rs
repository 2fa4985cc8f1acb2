mod oracle;

use cqa_core::corpus::{aggregate_ledgers, generate_synthetic, Ledgers, PostKind, SyntheticConfig, UserId, UserLedger};
use cqa_core::deviance::{
    compute_deviance, deviance_scores, fit_population, flag_activity_correlations, flagged_fraction_distribution, ols,
    suspension_probability_curve, RegressionModel,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ids(n: usize) -> Vec<UserId> {
    (0..n).map(|i| UserId::new(format!("u{i:05}"))).collect()
}

/// Ledgers whose flag counts are drawn independently of activity.
fn random_ledgers(n: usize, seed: u64) -> Ledgers {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let mut l = UserLedger {
                n_questions: rng.random_range(0..40),
                n_answers: rng.random_range(0..80),
                q_flags_received: rng.random_range(0..6),
                a_flags_received: rng.random_range(0..6),
                q_flags_reported: rng.random_range(0..6),
                a_flags_reported: rng.random_range(0..6),
                ..UserLedger::default()
            };
            l.q_flags_received_valid = rng.random_range(0..=l.q_flags_received);
            l.a_flags_received_valid = rng.random_range(0..=l.a_flags_received);
            l.q_flags_reported_valid = rng.random_range(0..=l.q_flags_reported);
            l.a_flags_reported_valid = rng.random_range(0..=l.a_flags_reported);
            l
        })
        .collect();
    Ledgers::from_parts(ids(n), rows)
}

fn model(alpha: f64, beta: f64) -> RegressionModel {
    RegressionModel {
        alpha,
        beta,
        r_squared: 0.0,
        n: 0,
    }
}

#[test]
fn one_more_valid_flag_adds_one_deviance() {
    let ledgers = random_ledgers(200, 3);
    let (q, a) = (model(0.2, 0.05), model(-0.1, 0.02));
    let before = deviance_scores(&ledgers, q, a);
    let mut rows = ledgers.rows().to_vec();
    let target = (0..rows.len()).find(|&i| rows[i].n_answers > 0).unwrap();
    rows[target].a_flags_received += 1;
    rows[target].a_flags_received_valid += 1;
    let after = deviance_scores(&Ledgers::from_parts(ledgers.ids().to_vec(), rows), q, a);
    for i in 0..200 {
        let want = if i == target { 1.0 } else { 0.0 };
        assert!((after.answer_deviance[i] - before.answer_deviance[i] - want).abs() < 1e-12);
        assert_eq!(after.question_deviance[i], before.question_deviance[i]);
    }
}

#[test]
fn full_curve_is_the_base_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 777;
    let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let suspended: Vec<bool> = (0..n).map(|_| rng.random_bool(0.2)).collect();
    let rate = suspended.iter().filter(|s| **s).count() as f64 / n as f64;
    let curve = suspension_probability_curve(&ids(n), &scores, &suspended, &[100.0]).unwrap();
    assert!((curve[0].1 - rate).abs() < 1e-12);
}

#[test]
fn deviance_can_outrank_raw_flags() {
    // a heavy poster with many flags, a light poster with few flags beyond expectation
    let rows = [(100, 10), (1, 3), (50, 5)]
        .map(|(posts, valid)| UserLedger {
            n_answers: posts,
            a_flags_received: valid,
            a_flags_received_valid: valid,
            ..UserLedger::default()
        })
        .to_vec();
    let ledgers = Ledgers::from_parts(ids(3), rows);
    let dev = deviance_scores(&ledgers, model(0.0, 0.0), model(0.0, 0.1));
    let flags: Vec<f64> = ledgers.rows().iter().map(|r| r.a_flags_received_valid as f64).collect();
    let suspended = [false, true, false];
    let by_dev = suspension_probability_curve(&ids(3), &dev.answer_deviance, &suspended, &[33.0]).unwrap();
    let by_flags = suspension_probability_curve(&ids(3), &flags, &suspended, &[33.0]).unwrap();
    assert_eq!(by_dev[0].1, 1.0);
    assert_eq!(by_flags[0].1, 0.0);
}

#[test]
fn shuffled_labels_give_a_flat_curve() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 20_000;
    let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let suspended: Vec<bool> = (0..n).map(|_| rng.random_bool(0.1)).collect();
    let percents: Vec<f64> = (1..=20).map(|k| f64::from(k) * 5.0).collect();
    for (x, p) in suspension_probability_curve(&ids(n), &scores, &suspended, &percents).unwrap() {
        assert!((p - 0.1).abs() < 0.04, "{x}: {p}");
    }
}

#[test]
fn flagged_fraction_matches_recount() {
    let c = generate_synthetic(&SyntheticConfig {
        n_users: 800,
        seed: 5,
        ..SyntheticConfig::default()
    })
    .unwrap()
    .corpus;
    let ledgers = aggregate_ledgers(&c);
    for kind in [PostKind::Question, PostKind::Answer] {
        let d = flagged_fraction_distribution(&ledgers, kind).unwrap();
        let fr: Vec<f64> = ledgers
            .rows()
            .iter()
            .filter(|r| r.posts(kind) > 0)
            .map(|r| r.flagged_posts(kind) as f64 / r.posts(kind) as f64)
            .collect();
        for t in [0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0] {
            let want = fr.iter().filter(|v| **v <= t).count() as f64 / fr.len() as f64;
            assert!((d.eval(t) - want).abs() < 1e-12, "{kind:?} {t}");
        }
    }
}

#[test]
fn independent_counters_are_uncorrelated() {
    let t = flag_activity_correlations(&random_ledgers(20_000, 1)).unwrap();
    for (x, y, r) in &t.pairs {
        if x.ends_with("_posts") {
            assert!(r.abs() < 0.05, "{x} vs {y}: {r}");
        }
    }
}

#[test]
fn planted_flags_track_valid_flags() {
    let c = generate_synthetic(&SyntheticConfig {
        n_users: 3000,
        seed: 2,
        ..SyntheticConfig::default()
    })
    .unwrap()
    .corpus;
    let t = flag_activity_correlations(&aggregate_ledgers(&c)).unwrap();
    for (x, y, r) in &t.pairs {
        if x.ends_with("_flags_received") {
            assert!(*r > 0.8, "{x} vs {y}: {r}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ols_matches_normal_equations(seed in any::<u64>(), n in 5usize..300) {
        let ledgers = random_ledgers(n, seed);
        for kind in [PostKind::Question, PostKind::Answer] {
            let (x, y) = fit_population(&ledgers, kind);
            let Ok(m) = ols(&x, &y) else { continue };
            let (a, b) = oracle::normal_equations(&x, &y);
            prop_assert!((m.alpha - a).abs() < 1e-8 && (m.beta - b).abs() < 1e-8);
            let res: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| yi - m.predict(*xi)).collect();
            let scale = y.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            prop_assert!(res.iter().sum::<f64>().abs() < 1e-9 * scale);
            let dot: f64 = res.iter().zip(&x).map(|(r, xi)| r * xi).sum();
            prop_assert!(dot.abs() < 1e-9 * scale * x.iter().fold(1.0f64, |m, v| m.max(*v)));
        }
    }

    #[test]
    fn population_deviance_sums_to_zero(seed in any::<u64>(), n in 5usize..300) {
        let ledgers = random_ledgers(n, seed);
        let Ok(dev) = compute_deviance(&ledgers) else { return Ok(()) };
        for kind in [PostKind::Question, PostKind::Answer] {
            let s: f64 = dev.scores(kind).iter().sum();
            prop_assert!(s.abs() < 1e-8 * n as f64, "{:?} {}", kind, s);
        }
    }
}
