//! Synthetic platform logs with planted structure.
//!
//! The generator plants four user cohorts:
//!
//! * **normal** users post abusive content at a small baseline rate;
//! * **mild deviants** are prolific posters with a low abuse rate, so they
//!   collect many flags without standing out relative to their activity;
//! * **severe deviants** post abusive content at a high rate and make up
//!   most of the flagged suspended accounts;
//! * **stealth** users are suspended without ever receiving a flag. They are
//!   quiet, low-activity accounts embedded in the deviant part of the follow
//!   graph.
//!
//! Follow edges prefer the follower's own side (deviant-ish vs normal) with
//! probability `homophily_strength`. Answers and abuse reports are drawn
//! preferentially from the author's close follower (and answerer)
//! neighbourhood, with weight decaying geometrically in hop distance.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use super::{
    aggregate_ledgers, EventCorpus, FlagEvent, FollowEdge, PostEvent, PostId, PostKind, UserId,
    UserRecord,
};
use crate::error::{Error, Result};
use crate::graph::{BfsWorkspace, DirectedGraph, Orientation};

const MAX_HOPS: usize = 4;
const DAY: f64 = 86_400.0;
/// Half-width of the homophilous follow window as a share of the pool.
const SIMILARITY_WINDOW: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_users: usize,
    /// Power-law exponent of follow out-degree and followee attractiveness.
    pub follow_exponent: f64,
    /// Smallest number of accounts a regular user follows.
    pub min_follows: usize,
    /// Probability that a followee follows back.
    pub reciprocation_rate: f64,
    pub deviant_fraction: f64,
    /// Abuse rate of normal users.
    pub baseline_abuse_rate: f64,
    pub suspended_fraction: f64,
    /// Share of suspended users who never receive a flag.
    pub stealth_fraction: f64,
    pub homophily_strength: f64,
    /// Mean questions per user of average activity.
    pub questions_per_user: f64,
    pub answers_per_question: f64,
    /// Probability an answer comes from the asker's follower neighbourhood.
    pub social_answer_rate: f64,
    /// Relative weight of hop h+1 versus hop h when drawing nearby users.
    pub hop_decay: f64,
    /// Target share of flags that are valid.
    pub flag_validity_rate: f64,
    pub report_median_seconds: f64,
    /// Share of abusive posts deleted within a day of posting.
    pub same_day_deletion_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_users: 10_000,
            follow_exponent: 2.5,
            min_follows: 1,
            reciprocation_rate: 0.3,
            deviant_fraction: 0.12,
            baseline_abuse_rate: 0.01,
            suspended_fraction: 0.09,
            stealth_fraction: 0.4,
            homophily_strength: 0.8,
            questions_per_user: 3.0,
            answers_per_question: 2.0,
            social_answer_rate: 0.6,
            hop_decay: 0.5,
            flag_validity_rate: 0.9,
            report_median_seconds: 600.0,
            same_day_deletion_rate: 0.97,
            seed: 1,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("reciprocation_rate", self.reciprocation_rate),
            ("deviant_fraction", self.deviant_fraction),
            ("baseline_abuse_rate", self.baseline_abuse_rate),
            ("suspended_fraction", self.suspended_fraction),
            ("stealth_fraction", self.stealth_fraction),
            ("homophily_strength", self.homophily_strength),
            ("social_answer_rate", self.social_answer_rate),
            ("hop_decay", self.hop_decay),
            ("same_day_deletion_rate", self.same_day_deletion_rate),
        ];
        for (field, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig {
                    field,
                    message: format!("must lie in [0, 1], got {v}"),
                });
            }
        }
        if !(self.flag_validity_rate > 0.0 && self.flag_validity_rate <= 1.0) {
            return Err(Error::InvalidConfig {
                field: "flag_validity_rate",
                message: format!("must lie in (0, 1], got {}", self.flag_validity_rate),
            });
        }
        if self.n_users < 2 {
            return Err(Error::InvalidConfig {
                field: "n_users",
                message: format!("need at least 2 users, got {}", self.n_users),
            });
        }
        if !(self.follow_exponent > 1.0 && self.follow_exponent.is_finite()) {
            return Err(Error::InvalidConfig {
                field: "follow_exponent",
                message: format!("must be a finite value > 1, got {}", self.follow_exponent),
            });
        }
        for (field, v) in [
            ("questions_per_user", self.questions_per_user),
            ("answers_per_question", self.answers_per_question),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig {
                    field,
                    message: format!("must be finite and non-negative, got {v}"),
                });
            }
        }
        if !(self.report_median_seconds > 0.0 && self.report_median_seconds < DAY) {
            return Err(Error::InvalidConfig {
                field: "report_median_seconds",
                message: format!("must lie in (0, 86400), got {}", self.report_median_seconds),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cohort {
    Normal,
    MildDeviant,
    SevereDeviant,
    Stealth,
}

/// Latent per-user ground truth, aligned with the corpus' dense user order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedUser {
    pub cohort: Cohort,
    pub abuse_rate: f64,
    pub activity: f64,
    pub suspended: bool,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: EventCorpus,
    pub truth: Vec<PlantedUser>,
}

/// Cumulative-weight sampler over a fixed item list.
struct WeightedPool {
    items: Vec<usize>,
    cum: Vec<f64>,
}

impl WeightedPool {
    fn new(items: Vec<usize>, weight: impl Fn(usize) -> f64) -> Self {
        let mut acc = 0.0;
        let cum = items
            .iter()
            .map(|&i| {
                acc += weight(i);
                acc
            })
            .collect();
        WeightedPool { items, cum }
    }

    fn sample(&self, rng: &mut impl Rng) -> Option<usize> {
        self.sample_range(rng, 0, self.items.len())
    }

    /// Samples among `items[lo..hi]` only.
    fn sample_range(&self, rng: &mut impl Rng, lo: usize, hi: usize) -> Option<usize> {
        if lo >= hi {
            return None;
        }
        let base = if lo == 0 { 0.0 } else { self.cum[lo - 1] };
        let span = self.cum[hi - 1] - base;
        if span <= 0.0 {
            return None;
        }
        let x = base + rng.random::<f64>() * span;
        let i = self.cum[lo..hi].partition_point(|c| *c <= x).min(hi - lo - 1);
        Some(self.items[lo + i])
    }
}

fn pareto(rng: &mut impl Rng, exponent: f64) -> f64 {
    (1.0 - rng.random::<f64>()).powf(-1.0 / (exponent - 1.0))
}

fn poisson(rng: &mut impl Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive lambda").sample(rng) as u64
}

/// Hop levels 1..=MAX_HOPS of `source` in orientation `o`.
fn hop_levels(ws: &mut BfsWorkspace, g: &DirectedGraph, source: usize, o: Orientation) -> Vec<Vec<usize>> {
    let d = ws.run(g, source, MAX_HOPS, o);
    (1..=MAX_HOPS).map(|h| d.at_hop(h).to_vec()).collect()
}

/// Picks a node from `levels` choosing hop h with weight decay^(h-1).
fn pick_nearby(rng: &mut impl Rng, levels: &[Vec<usize>], decay: f64) -> Option<usize> {
    let mut total = 0.0;
    let weights: Vec<f64> = levels
        .iter()
        .enumerate()
        .map(|(h, l)| {
            let w = if l.is_empty() { 0.0 } else { decay.powi(h as i32) };
            total += w;
            w
        })
        .collect();
    if total <= 0.0 {
        return None;
    }
    let mut x = rng.random::<f64>() * total;
    for (h, w) in weights.iter().enumerate() {
        if x < *w {
            return levels[h].choose(rng).copied();
        }
        x -= w;
    }
    levels.iter().rev().find(|l| !l.is_empty())?.choose(rng).copied()
}

pub fn level_for_points(points: i64) -> u8 {
    match points {
        i64::MIN..=249 => 1,
        250..=999 => 2,
        1000..=2499 => 3,
        2500..=4999 => 4,
        5000..=9999 => 5,
        10000..=24999 => 6,
        _ => 7,
    }
}

struct Question {
    author: usize,
    timestamp: u64,
    answers: Vec<usize>,
}

struct Answer {
    author: usize,
    question: usize,
    timestamp: u64,
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_users;
    let width = (n - 1).to_string().len();
    let ids: Vec<UserId> = (0..n).map(|i| UserId::new(format!("u{i:0width$}"))).collect();

    // --- cohorts -----------------------------------------------------------
    let mut truth: Vec<PlantedUser> = (0..n)
        .map(|_| PlantedUser {
            cohort: Cohort::Normal,
            abuse_rate: cfg.baseline_abuse_rate,
            activity: pareto(&mut rng, 2.5).min(50.0),
            suspended: false,
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_dev = (cfg.deviant_fraction * n as f64).round() as usize;
    let (deviants, normals) = order.split_at(n_dev);
    for &u in deviants {
        let t = &mut truth[u];
        if rng.random::<f64>() < 0.4 {
            t.cohort = Cohort::MildDeviant;
            t.abuse_rate = rng.random_range(0.03..0.08);
            t.activity *= 8.0;
        } else {
            t.cohort = Cohort::SevereDeviant;
            t.abuse_rate = rng.random_range(0.25..0.85);
        }
    }

    let n_susp = (cfg.suspended_fraction * n as f64).round() as usize;
    let n_stealth = (cfg.stealth_fraction * n_susp as f64).round() as usize;
    let n_flagged = n_susp - n_stealth;
    // weighted sampling without replacement, keys u^(1/w); heavier abusers
    // with more output are likelier to be removed
    let mut keyed: Vec<(f64, usize)> = deviants
        .iter()
        .map(|&u| {
            let w = truth[u].abuse_rate.powi(2) * truth[u].activity;
            (rng.random::<f64>().powf(1.0 / w), u)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, u) in keyed.iter().take(n_flagged) {
        truth[u].suspended = true;
    }
    let mut normal_iter = normals.iter().copied();
    for u in normal_iter.by_ref().take(n_flagged.saturating_sub(n_dev)) {
        truth[u].suspended = true;
    }
    for u in normal_iter.take(n_stealth) {
        let t = &mut truth[u];
        t.cohort = Cohort::Stealth;
        t.abuse_rate = 0.0;
        t.suspended = true;
        t.activity = 0.3;
    }
    // homophily pools: one per cohort, flagged suspended normals join the severe pool
    let side: Vec<usize> = truth
        .iter()
        .map(|t| match t.cohort {
            Cohort::Normal if t.suspended => 2,
            Cohort::Normal => 0,
            Cohort::MildDeviant => 1,
            Cohort::SevereDeviant => 2,
            Cohort::Stealth => 3,
        })
        .collect();

    // --- follow graph ------------------------------------------------------
    let gamma = cfg.follow_exponent;
    let attract: Vec<f64> = truth
        .iter()
        .map(|t| {
            let b = pareto(&mut rng, gamma).min(n as f64 / 10.0) * t.activity.sqrt();
            if t.cohort == Cohort::Stealth {
                0.2 * b
            } else {
                b
            }
        })
        .collect();
    let max_out = (n / 20).max(1);
    let out_deg: Vec<usize> = truth
        .iter()
        .map(|t| {
            let k = ((cfg.min_follows as f64 * pareto(&mut rng, gamma)).floor() as usize).clamp(1, max_out);
            if t.cohort == Cohort::Stealth {
                1 + usize::from(rng.random::<f64>() < 0.3)
            } else {
                k
            }
        })
        .collect();
    let pool_all = WeightedPool::new((0..n).collect(), |i| attract[i]);
    // within a pool, members are ordered by a latent deviance proxy and a
    // homophilous follow picks from a window around the follower's rank
    let crowd_rate = truth.iter().map(|t| t.abuse_rate * t.activity).sum::<f64>()
        / truth.iter().map(|t| t.activity).sum::<f64>();
    let latent: Vec<f64> = truth
        .iter()
        .map(|t| (t.abuse_rate - crowd_rate) * t.activity)
        .collect();
    let mut rank_in_side = vec![0usize; n];
    let pools: Vec<WeightedPool> = (0..4)
        .map(|s| {
            let mut members: Vec<usize> = (0..n).filter(|&i| side[i] == s).collect();
            members.sort_by(|&a, &b| latent[a].total_cmp(&latent[b]).then(a.cmp(&b)));
            for (r, &m) in members.iter().enumerate() {
                rank_in_side[m] = r;
            }
            WeightedPool::new(members, |i| attract[i])
        })
        .collect();
    let mut edge_set = HashSet::new();
    let mut edges = Vec::new();
    for u in 0..n {
        for _ in 0..out_deg[u] {
            for _ in 0..10 {
                let picked = if rng.random::<f64>() < cfg.homophily_strength {
                    let pool = &pools[side[u]];
                    let len = pool.items.len();
                    let w = ((len as f64 * SIMILARITY_WINDOW) as usize).max(10);
                    let r = rank_in_side[u];
                    pool.sample_range(&mut rng, r.saturating_sub(w), (r + w + 1).min(len))
                } else {
                    pool_all.sample(&mut rng)
                };
                let Some(v) = picked else { continue };
                if v != u && edge_set.insert((u, v)) {
                    edges.push((u, v));
                    break;
                }
            }
        }
    }
    for i in 0..edges.len() {
        let (u, v) = edges[i];
        if rng.random::<f64>() < cfg.reciprocation_rate && edge_set.insert((v, u)) {
            edges.push((v, u));
        }
    }
    edges.sort_unstable();
    let ff = DirectedGraph::new(ids.clone(), edges.iter().copied());

    // --- questions and answers ----------------------------------------------
    let mean_activity = truth.iter().map(|t| t.activity).sum::<f64>() / n as f64;
    let year = 361.0 * DAY;
    let mut questions: Vec<Question> = Vec::new();
    for u in 0..n {
        let k = poisson(&mut rng, cfg.questions_per_user * truth[u].activity / mean_activity);
        for _ in 0..k {
            questions.push(Question {
                author: u,
                timestamp: (rng.random::<f64>() * year) as u64,
                answers: Vec::new(),
            });
        }
    }
    let answer_pool = WeightedPool::new((0..n).collect(), |i| {
        if truth[i].cohort == Cohort::Stealth {
            0.05
        } else {
            truth[i].activity
        }
    });
    let answer_delay = Exp::<f64>::new(1.0 / 7200.0).expect("positive rate");
    let mut answers: Vec<Answer> = Vec::new();
    let mut ws = BfsWorkspace::new(n);
    let mut q_by_author: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (qi, q) in questions.iter().enumerate() {
        q_by_author[q.author].push(qi);
    }
    for (asker, qs) in q_by_author.iter().enumerate() {
        if qs.is_empty() {
            continue;
        }
        let levels = hop_levels(&mut ws, &ff, asker, Orientation::Reverse);
        for &qi in qs {
            let m = poisson(&mut rng, cfg.answers_per_question);
            for _ in 0..m {
                for _ in 0..10 {
                    let v = if rng.random::<f64>() < cfg.social_answer_rate {
                        pick_nearby(&mut rng, &levels, cfg.hop_decay)
                    } else {
                        answer_pool.sample(&mut rng)
                    };
                    let Some(v) = v else { continue };
                    if v != asker && !questions[qi].answers.contains(&v) {
                        questions[qi].answers.push(v);
                        let dt = answer_delay.sample(&mut rng).min(3.9 * DAY) as u64;
                        answers.push(Answer {
                            author: v,
                            question: qi,
                            timestamp: questions[qi].timestamp + dt,
                        });
                        break;
                    }
                }
            }
        }
    }
    // --- post records ----------------------------------------------------
    let q_width = questions.len().max(1).to_string().len();
    let a_width = answers.len().max(1).to_string().len();
    let mut posts: Vec<PostEvent> = Vec::with_capacity(questions.len() + answers.len());
    let mut abusive: Vec<bool> = Vec::with_capacity(questions.len() + answers.len());
    for (qi, q) in questions.iter().enumerate() {
        posts.push(PostEvent {
            post_id: PostId::new(format!("q{qi:0q_width$}")),
            author: ids[q.author].clone(),
            kind: PostKind::Question,
            parent_question: None,
            timestamp: q.timestamp,
            best_answer: false,
            answer_rating: 0,
            thumbs_up: 0,
            thumbs_down: 0,
        });
        abusive.push(rng.random::<f64>() < truth[q.author].abuse_rate);
    }
    let answer_base = posts.len();
    let mut answers_of_q: Vec<Vec<usize>> = vec![Vec::new(); questions.len()];
    for (ai, a) in answers.iter().enumerate() {
        answers_of_q[a.question].push(ai);
        let is_abusive = rng.random::<f64>() < truth[a.author].abuse_rate;
        let stealth = truth[a.author].cohort == Cohort::Stealth;
        let (up, down) = if stealth {
            (poisson(&mut rng, 0.3), poisson(&mut rng, 3.0))
        } else {
            (
                poisson(&mut rng, 1.5),
                poisson(&mut rng, if is_abusive { 2.4 } else { 0.4 }),
            )
        };
        posts.push(PostEvent {
            post_id: PostId::new(format!("a{ai:0a_width$}")),
            author: ids[a.author].clone(),
            kind: PostKind::Answer,
            parent_question: Some(posts[a.question].post_id.clone()),
            timestamp: a.timestamp,
            best_answer: false,
            answer_rating: 0,
            thumbs_up: up as u32,
            thumbs_down: down as u32,
        });
        abusive.push(is_abusive);
    }
    for ans in &answers_of_q {
        if ans.is_empty() || rng.random::<f64>() >= 0.75 {
            continue;
        }
        let eligible: Vec<usize> = ans
            .iter()
            .copied()
            .filter(|&ai| !abusive[answer_base + ai] && truth[answers[ai].author].cohort != Cohort::Stealth)
            .collect();
        if let Some(&ai) = eligible.choose(&mut rng) {
            let p = &mut posts[answer_base + ai];
            p.best_answer = true;
            p.thumbs_up += poisson(&mut rng, 2.0) as u32;
            if rng.random::<f64>() < 0.8 {
                p.answer_rating = rng.random_range(1..=5);
            }
        }
    }

    // --- abuse reports -------------------------------------------------------
    let an = DirectedGraph::new(
        ids.clone(),
        answers.iter().map(|a| (a.author, questions[a.question].author)),
    );
    let mut neighbourhoods: Vec<Option<(Vec<Vec<usize>>, Vec<Vec<usize>>)>> = vec![None; n];
    let mut reporter_for = |rng: &mut ChaCha8Rng, author: usize| -> Option<usize> {
        let (ff_levels, an_levels) = neighbourhoods[author].get_or_insert_with(|| {
            (
                hop_levels(&mut ws, &ff, author, Orientation::Reverse),
                hop_levels(&mut ws, &an, author, Orientation::Reverse),
            )
        });
        for _ in 0..10 {
            let r = rng.random::<f64>();
            let v = if r < 0.45 {
                pick_nearby(rng, ff_levels, cfg.hop_decay)
            } else if r < 0.9 {
                pick_nearby(rng, an_levels, cfg.hop_decay)
            } else {
                Some(rng.random_range(0..n))
            };
            match v {
                Some(v) if v != author => return Some(v),
                _ => {}
            }
        }
        None
    };
    let report_delay = LogNormal::new(cfg.report_median_seconds.ln(), 1.2).expect("valid lognormal");
    let author_of = |p: &PostEvent| -> usize { p.author.as_str()[1..].parse().expect("generated id") };
    let mut flags: Vec<FlagEvent> = Vec::new();
    for (pi, p) in posts.iter().enumerate() {
        if !abusive[pi] {
            continue;
        }
        let author = author_of(p);
        let n_rep = 1 + usize::from(rng.random::<f64>() < 0.25) + usize::from(rng.random::<f64>() < 0.25);
        let mut reporters: Vec<usize> = Vec::new();
        for _ in 0..n_rep {
            if let Some(r) = reporter_for(&mut rng, author) {
                if !reporters.contains(&r) {
                    reporters.push(r);
                }
            }
        }
        if reporters.is_empty() {
            continue;
        }
        let delays: Vec<u64> = reporters
            .iter()
            .map(|_| report_delay.sample(&mut rng) as u64)
            .collect();
        let last = *delays.iter().max().expect("nonempty") as f64;
        let deletion = if rng.random::<f64>() < cfg.same_day_deletion_rate {
            if last < DAY - 1.0 {
                rng.random_range(last..DAY - 1.0)
            } else {
                last + rng.random::<f64>() * 3600.0
            }
        } else {
            (last.max(DAY)) + rng.random::<f64>() * 2.0 * DAY
        } as u64;
        for (r, d) in reporters.iter().zip(&delays) {
            flags.push(FlagEvent {
                reporter: ids[*r].clone(),
                reportee: p.author.clone(),
                target_post: p.post_id.clone(),
                report_time: p.timestamp + d,
                valid: true,
                deletion_time: Some(p.timestamp + deletion.max(*d)),
            });
        }
    }
    let n_valid = flags.len() as f64;
    let n_invalid = (n_valid * (1.0 - cfg.flag_validity_rate) / cfg.flag_validity_rate).round() as usize;
    let clean: Vec<usize> = (0..posts.len())
        .filter(|&pi| !abusive[pi] && truth[author_of(&posts[pi])].cohort != Cohort::Stealth)
        .collect();
    if !clean.is_empty() {
        for _ in 0..n_invalid {
            let pi = clean[rng.random_range(0..clean.len())];
            let p = &posts[pi];
            let author = author_of(p);
            if let Some(r) = reporter_for(&mut rng, author) {
                flags.push(FlagEvent {
                    reporter: ids[r].clone(),
                    reportee: p.author.clone(),
                    target_post: p.post_id.clone(),
                    report_time: p.timestamp + report_delay.sample(&mut rng) as u64,
                    valid: false,
                    deletion_time: None,
                });
            }
        }
    }

    // --- users ------------------------------------------------------------
    let follows: Vec<FollowEdge> = edges
        .iter()
        .map(|&(u, v)| FollowEdge {
            follower: ids[u].clone(),
            followee: ids[v].clone(),
        })
        .collect();
    let mut users: Vec<UserRecord> = (0..n)
        .map(|i| UserRecord {
            user_id: ids[i].clone(),
            level: 1,
            suspended: truth[i].suspended,
            join_rank: i as u64,
        })
        .collect();
    let draft = EventCorpus::new(users.clone(), posts, flags, follows)?;
    let ledgers = aggregate_ledgers(&draft);
    for (u, row) in users.iter_mut().zip(ledgers.rows()) {
        u.level = level_for_points(row.points);
    }
    let EventCorpus {
        posts,
        flags,
        follows,
        ..
    } = draft;
    let corpus = EventCorpus::new(users, posts, flags, follows)?;
    Ok(SyntheticCorpus { corpus, truth })
}
