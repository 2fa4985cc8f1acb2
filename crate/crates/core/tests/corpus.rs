use std::collections::{BTreeSet, HashMap};

use cqa_core::corpus::{
    aggregate_ledgers, build_activity_network, build_ff_network, generate_synthetic, write_corpus, CorpusFormat,
    EventCorpus, PostId, PostKind, SyntheticConfig, UserId, UserLedger,
};
use cqa_core::deviance::compute_deviance;
use cqa_core::homophily::attribute_assortativity;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn synth(n_users: usize, seed: u64) -> EventCorpus {
    generate_synthetic(&SyntheticConfig {
        n_users,
        seed,
        ..SyntheticConfig::default()
    })
    .unwrap()
    .corpus
}

/// Copy of `c` with every user and post id prefixed.
fn relabel(c: &EventCorpus, prefix: &str) -> EventCorpus {
    let u = |id: &UserId| UserId::new(format!("{prefix}{id}"));
    let p = |id: &PostId| PostId::new(format!("{prefix}{id}"));
    let users = c
        .users()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.user_id = u(&r.user_id);
            r
        })
        .collect();
    let posts = c
        .posts()
        .iter()
        .map(|e| {
            let mut e = e.clone();
            e.post_id = p(&e.post_id);
            e.author = u(&e.author);
            e.parent_question = e.parent_question.as_ref().map(p);
            e
        })
        .collect();
    let flags = c
        .flags()
        .iter()
        .map(|f| {
            let mut f = f.clone();
            f.reporter = u(&f.reporter);
            f.reportee = u(&f.reportee);
            f.target_post = p(&f.target_post);
            f
        })
        .collect();
    let follows = c
        .follows()
        .iter()
        .map(|f| {
            let mut f = f.clone();
            f.follower = u(&f.follower);
            f.followee = u(&f.followee);
            f
        })
        .collect();
    EventCorpus::new(users, posts, flags, follows).unwrap()
}

fn shuffled(c: &EventCorpus, seed: u64) -> EventCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut users = c.users().to_vec();
    let mut posts = c.posts().to_vec();
    let mut flags = c.flags().to_vec();
    let mut follows = c.follows().to_vec();
    users.shuffle(&mut rng);
    posts.shuffle(&mut rng);
    flags.shuffle(&mut rng);
    follows.shuffle(&mut rng);
    EventCorpus::new(users, posts, flags, follows).unwrap()
}

/// Ledgers rebuilt by scanning the raw events once per user.
fn recount(c: &EventCorpus) -> HashMap<UserId, UserLedger> {
    let kind_of: HashMap<&PostId, PostKind> = c.posts().iter().map(|p| (&p.post_id, p.kind)).collect();
    c.users()
        .iter()
        .map(|r| {
            let me = &r.user_id;
            let mut l = UserLedger::default();
            for p in c.posts().iter().filter(|p| &p.author == me) {
                match p.kind {
                    PostKind::Question => {
                        l.n_questions += 1;
                        let resolved = c
                            .posts()
                            .iter()
                            .any(|a| a.best_answer && a.parent_question.as_ref() == Some(&p.post_id));
                        l.n_questions_resolved += u64::from(resolved);
                    }
                    PostKind::Answer => {
                        l.n_answers += 1;
                        l.thumbs_up_sum += u64::from(p.thumbs_up);
                        l.thumbs_down_sum += u64::from(p.thumbs_down);
                        if p.best_answer {
                            l.n_best_answers += 1;
                            l.award_ratings_sum += u64::from(p.answer_rating);
                        }
                    }
                }
                if c.flags().iter().any(|f| f.target_post == p.post_id) {
                    match p.kind {
                        PostKind::Question => l.n_flagged_questions += 1,
                        PostKind::Answer => l.n_flagged_answers += 1,
                    }
                }
            }
            for f in c.flags() {
                let q = kind_of[&f.target_post] == PostKind::Question;
                let v = u64::from(f.valid);
                if &f.reportee == me {
                    if q {
                        l.q_flags_received += 1;
                        l.q_flags_received_valid += v;
                    } else {
                        l.a_flags_received += 1;
                        l.a_flags_received_valid += v;
                    }
                }
                if &f.reporter == me {
                    if q {
                        l.q_flags_reported += 1;
                        l.q_flags_reported_valid += v;
                    } else {
                        l.a_flags_reported += 1;
                        l.a_flags_reported_valid += v;
                    }
                }
            }
            l.points = -5 * l.n_questions as i64
                + 3 * l.n_questions_resolved as i64
                + 2 * l.n_answers as i64
                + 10 * l.n_best_answers as i64;
            (me.clone(), l)
        })
        .collect()
}

#[test]
fn ledgers_match_event_recount() {
    let c = synth(50, 13);
    assert!(!c.flags().is_empty());
    let want = recount(&c);
    let got = aggregate_ledgers(&c);
    assert_eq!(got.len(), 50);
    for (id, l) in got.iter() {
        assert_eq!(*l, want[id], "{id}");
    }
}

#[test]
fn aggregation_is_a_homomorphism() {
    let a = synth(120, 1);
    let b = relabel(&synth(90, 2), "x");
    let joint = aggregate_ledgers(&a.concat(&b).unwrap());
    let merged = aggregate_ledgers(&a).merge(&aggregate_ledgers(&b));
    assert_eq!(joint, merged);
}

#[test]
fn ff_edges_match_follow_count() {
    let c = synth(2000, 7);
    assert_eq!(build_ff_network(&c).edge_count(), c.follows().len());
}

#[test]
fn activity_network_matches_pair_enumeration() {
    let c = synth(400, 3);
    let g = build_activity_network(&c);
    let author: HashMap<&PostId, &UserId> = c.posts().iter().map(|p| (&p.post_id, &p.author)).collect();
    let want: BTreeSet<(UserId, UserId)> = c
        .posts()
        .iter()
        .filter_map(|p| Some((p.author.clone(), (*author[p.parent_question.as_ref()?]).clone())))
        .collect();
    let got: BTreeSet<(UserId, UserId)> = g.edges().map(|(u, v)| (g.id(u).clone(), g.id(v).clone())).collect();
    assert_eq!(got, want);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let c1 = synth(1500, 1);
    let c2 = synth(1500, 1);
    let f1 = write_corpus(&c1, &dir.path().join("a"), CorpusFormat::Jsonl).unwrap();
    let f2 = write_corpus(&c2, &dir.path().join("b"), CorpusFormat::Jsonl).unwrap();
    for (x, y) in f1.iter().zip(&f2) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
    assert_ne!(c1, synth(1500, 2));
}

#[test]
fn no_homophily_means_no_deviance_assortativity() {
    for seed in 1..=10 {
        let c = generate_synthetic(&SyntheticConfig {
            n_users: 5000,
            homophily_strength: 0.0,
            seed,
            ..SyntheticConfig::default()
        })
        .unwrap()
        .corpus;
        let ff = build_ff_network(&c);
        let dev = compute_deviance(&aggregate_ledgers(&c)).unwrap();
        for s in [&dev.question_deviance, &dev.answer_deviance] {
            let r = attribute_assortativity(&ff, s).unwrap();
            assert!(r.abs() < 0.05, "seed {seed}: r = {r}");
        }
    }
}

#[test]
fn synthetic_timing_is_planted() {
    let c = synth(5000, 4);
    for kind in [PostKind::Question, PostKind::Answer] {
        let s = cqa_core::timing::deletion_delay_summary(&c, kind).unwrap();
        assert!((s.within_one_day - 0.97).abs() < 0.03, "{kind:?} {}", s.within_one_day);
        let r = cqa_core::timing::report_time_to_flag_cdf(&c, kind).unwrap();
        assert!((r.cdf(600.0) - 0.5).abs() < 0.08, "{kind:?} {}", r.cdf(600.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn valid_never_exceeds_total(seed in 0u64..1000, n in 20usize..300) {
        for (_, l) in aggregate_ledgers(&synth(n, seed)).iter() {
            prop_assert!(l.is_consistent());
        }
    }

    #[test]
    fn builders_ignore_event_order(seed in 0u64..1000, shuffle in 0u64..1000) {
        let c = synth(150, seed);
        let s = shuffled(&c, shuffle);
        let edges = |g: &cqa_core::DirectedGraph| g.edges().collect::<Vec<_>>();
        prop_assert_eq!(edges(&build_ff_network(&c)), edges(&build_ff_network(&s)));
        prop_assert_eq!(edges(&build_activity_network(&c)), edges(&build_activity_network(&s)));
        prop_assert_eq!(aggregate_ledgers(&c), aggregate_ledgers(&s));
    }
}
