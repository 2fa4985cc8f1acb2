//! Deviance scoring: how many more valid flags a user collects than their
//! activity level predicts, plus the analyses built on top of the score.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::corpus::{EventCorpus, Ledgers, PostKind, UserId, UserLedger};
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::stats::{
    descriptive, empirical_distribution, ks_two_sample, mean, pearson, permutation_test,
    DescriptiveStats, DistributionKind, EmpiricalDistribution, TwoSampleResult,
};

/// Simple linear model `y = alpha + beta * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub alpha: f64,
    pub beta: f64,
    pub r_squared: f64,
    pub n: usize,
}

impl RegressionModel {
    pub fn predict(&self, x: f64) -> f64 {
        self.alpha + self.beta * x
    }
}

/// Ordinary least squares of `y` on `x` with an intercept.
pub fn ols(x: &[f64], y: &[f64]) -> Result<RegressionModel> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "regression needs at least 2 points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression input".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("regression predictor"));
    }
    let beta = sxy / sxx;
    let alpha = my - beta * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(RegressionModel {
        alpha,
        beta,
        r_squared,
        n: x.len(),
    })
}

/// `(posts, valid flags received)` of every user with at least one post of
/// `kind`, in ledger order.
pub fn fit_population(ledgers: &Ledgers, kind: PostKind) -> (Vec<f64>, Vec<f64>) {
    ledgers
        .rows()
        .iter()
        .filter(|r| r.posts(kind) > 0)
        .map(|r| (r.posts(kind) as f64, r.valid_flags_received(kind) as f64))
        .unzip()
}

pub fn fit_flag_regression(ledgers: &Ledgers, kind: PostKind) -> Result<RegressionModel> {
    let (x, y) = fit_population(ledgers, kind);
    ols(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFit {
    pub degree: usize,
    /// Coefficients of `x^0 .. x^degree`.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    pub n: usize,
}

impl PolynomialFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

pub fn fit_polynomial(x: &[f64], y: &[f64], degree: usize) -> Result<PolynomialFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if degree == 0 || n < degree + 2 {
        return Err(Error::InsufficientData(format!(
            "degree {degree} fit needs at least {} points, got {n}",
            degree + 2
        )));
    }
    // scale x into [-1, 1] for conditioning, then unscale coefficients
    let s = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if s == 0.0 || x.iter().all(|v| *v == x[0]) {
        return Err(Error::ZeroVariance("regression predictor"));
    }
    let design = DMatrix::from_fn(n, degree + 1, |i, j| (x[i] / s).powi(j as i32));
    let target = DVector::from_column_slice(y);
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&target, 1e-12)
        .map_err(|e| Error::InsufficientData(e.to_string()))?;
    let coefficients: Vec<f64> = coef.iter().enumerate().map(|(j, c)| c / s.powi(j as i32)).collect();
    let fitted = &design * &coef;
    let my = mean(y);
    let sse: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let sst: f64 = y.iter().map(|a| (a - my).powi(2)).sum();
    let r_squared = if sst == 0.0 { 1.0 } else { (1.0 - sse / sst).clamp(0.0, 1.0) };
    let adjusted_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) as f64 / (n - degree - 1) as f64;
    Ok(PolynomialFit {
        degree,
        coefficients,
        r_squared,
        adjusted_r_squared,
        n,
    })
}

/// Fits degrees `1..=max_degree` on the fit population of `kind`. Returns
/// the fits and the index of the one with the best adjusted r².
pub fn compare_polynomial_models(
    ledgers: &Ledgers,
    kind: PostKind,
    max_degree: usize,
) -> Result<(Vec<PolynomialFit>, usize)> {
    let (x, y) = fit_population(ledgers, kind);
    let mut fits = Vec::new();
    for d in 1..=max_degree.max(1) {
        match fit_polynomial(&x, &y, d) {
            Ok(f) => fits.push(f),
            Err(e) if d == 1 => return Err(e),
            Err(_) => break,
        }
    }
    let best = fits
        .iter()
        .enumerate()
        .max_by(|a, b| {
            a.1.adjusted_r_squared
                .total_cmp(&b.1.adjusted_r_squared)
                .then(b.0.cmp(&a.0))
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok((fits, best))
}

/// Per-user question and answer deviance, in ledger order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevianceReport {
    pub ids: Vec<UserId>,
    pub question_deviance: Vec<f64>,
    pub answer_deviance: Vec<f64>,
    pub question_model: RegressionModel,
    pub answer_model: RegressionModel,
}

impl DevianceReport {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &UserId) -> Option<(f64, f64)> {
        let i = self.ids.binary_search(id).ok()?;
        Some((self.question_deviance[i], self.answer_deviance[i]))
    }

    pub fn scores(&self, kind: PostKind) -> &[f64] {
        match kind {
            PostKind::Question => &self.question_deviance,
            PostKind::Answer => &self.answer_deviance,
        }
    }
}

fn user_deviance(row: &UserLedger, kind: PostKind, model: &RegressionModel) -> f64 {
    let posts = row.posts(kind);
    if posts == 0 {
        return 0.0;
    }
    row.valid_flags_received(kind) as f64 - model.predict(posts as f64)
}

pub fn deviance_scores(
    ledgers: &Ledgers,
    question_model: RegressionModel,
    answer_model: RegressionModel,
) -> DevianceReport {
    let rows = ledgers.rows();
    DevianceReport {
        ids: ledgers.ids().to_vec(),
        question_deviance: rows
            .iter()
            .map(|r| user_deviance(r, PostKind::Question, &question_model))
            .collect(),
        answer_deviance: rows
            .iter()
            .map(|r| user_deviance(r, PostKind::Answer, &answer_model))
            .collect(),
        question_model,
        answer_model,
    }
}

/// Fits both models and scores every user.
pub fn compute_deviance(ledgers: &Ledgers) -> Result<DevianceReport> {
    let q = fit_flag_regression(ledgers, PostKind::Question)?;
    let a = fit_flag_regression(ledgers, PostKind::Answer)?;
    Ok(deviance_scores(ledgers, q, a))
}

/// Pearson correlations between activity and flag counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    /// `(x label, y label, r)` for the six headline pairs.
    pub pairs: Vec<(String, String, f64)>,
    /// Labels of the heatmap rows and columns.
    pub heatmap_labels: Vec<String>,
    /// Full correlation matrices over the four flag counters, per kind.
    pub question_heatmap: Vec<Vec<f64>>,
    pub answer_heatmap: Vec<Vec<f64>>,
}

const HEATMAP_LABELS: [&str; 4] = ["received", "received_valid", "reported", "reported_valid"];

fn flag_columns(rows: &[UserLedger], kind: PostKind) -> [Vec<f64>; 4] {
    let pick = |f: fn(&UserLedger) -> u64| rows.iter().map(|r| f(r) as f64).collect::<Vec<_>>();
    match kind {
        PostKind::Question => [
            pick(|r| r.q_flags_received),
            pick(|r| r.q_flags_received_valid),
            pick(|r| r.q_flags_reported),
            pick(|r| r.q_flags_reported_valid),
        ],
        PostKind::Answer => [
            pick(|r| r.a_flags_received),
            pick(|r| r.a_flags_received_valid),
            pick(|r| r.a_flags_reported),
            pick(|r| r.a_flags_reported_valid),
        ],
    }
}

fn heatmap(cols: &[Vec<f64>; 4]) -> Result<Vec<Vec<f64>>> {
    let mut m = vec![vec![1.0; 4]; 4];
    for i in 0..4 {
        for j in (i + 1)..4 {
            let r = pearson(&cols[i], &cols[j])?;
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    Ok(m)
}

pub fn flag_activity_correlations(ledgers: &Ledgers) -> Result<CorrelationTable> {
    let rows = ledgers.rows();
    if rows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "correlations need at least 2 users, got {}",
            rows.len()
        )));
    }
    let mut pairs = Vec::new();
    let mut maps = Vec::new();
    for kind in [PostKind::Question, PostKind::Answer] {
        let cols = flag_columns(rows, kind);
        let posts: Vec<f64> = rows.iter().map(|r| r.posts(kind) as f64).collect();
        let k = kind.as_str();
        pairs.push((format!("{k}_posts"), format!("{k}_flags_received_valid"), pearson(&posts, &cols[1])?));
        pairs.push((
            format!("{k}_flags_received"),
            format!("{k}_flags_received_valid"),
            pearson(&cols[0], &cols[1])?,
        ));
        pairs.push((
            format!("{k}_flags_reported"),
            format!("{k}_flags_reported_valid"),
            pearson(&cols[2], &cols[3])?,
        ));
        maps.push(heatmap(&cols)?);
    }
    let answer_heatmap = maps.pop().expect("two kinds");
    let question_heatmap = maps.pop().expect("two kinds");
    Ok(CorrelationTable {
        pairs,
        heatmap_labels: HEATMAP_LABELS.iter().map(|s| s.to_string()).collect(),
        question_heatmap,
        answer_heatmap,
    })
}

/// Distribution of `flagged posts / posts` over users with at least one post
/// of `kind`.
pub fn flagged_fraction_distribution(ledgers: &Ledgers, kind: PostKind) -> Result<EmpiricalDistribution> {
    let fractions: Vec<f64> = ledgers
        .rows()
        .iter()
        .filter(|r| r.posts(kind) > 0)
        .map(|r| r.flagged_posts(kind) as f64 / r.posts(kind) as f64)
        .collect();
    empirical_distribution(&fractions, DistributionKind::Cdf)
}

/// Order of users by descending score, ties by ascending id.
pub fn rank_by_score(ids: &[UserId], scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| match scores[b].total_cmp(&scores[a]) {
        Ordering::Equal => ids[a].cmp(&ids[b]),
        o => o,
    });
    order
}

/// For each `x` in `percents`, the fraction of suspended users among the top
/// `ceil(n * x / 100)` users by score.
pub fn suspension_probability_curve(
    ids: &[UserId],
    scores: &[f64],
    suspended: &[bool],
    percents: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if scores.is_empty() {
        return Err(Error::EmptySample);
    }
    for (l, r) in [(ids.len(), scores.len()), (suspended.len(), scores.len())] {
        if l != r {
            return Err(Error::LengthMismatch { left: l, right: r });
        }
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("suspension curve scores".into()));
    }
    let order = rank_by_score(ids, scores);
    let mut prefix = Vec::with_capacity(order.len() + 1);
    prefix.push(0usize);
    for &i in &order {
        prefix.push(prefix.last().unwrap() + usize::from(suspended[i]));
    }
    let n = scores.len();
    percents
        .iter()
        .map(|&x| {
            if !(x > 0.0 && x <= 100.0) {
                return Err(Error::InvalidConfig {
                    field: "percents",
                    message: format!("{x} is outside (0, 100]"),
                });
            }
            let top = ((n as f64 * x / 100.0).ceil() as usize).clamp(1, n);
            Ok((x, prefix[top] as f64 / top as f64))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserCohort {
    Typical,
    DeviantNotSuspended,
    Suspended,
}

impl UserCohort {
    pub const ALL: [UserCohort; 3] = [
        UserCohort::Typical,
        UserCohort::DeviantNotSuspended,
        UserCohort::Suspended,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UserCohort::Typical => "typical",
            UserCohort::DeviantNotSuspended => "deviant_not_suspended",
            UserCohort::Suspended => "suspended",
        }
    }
}

/// Suspended users form their own cohort; of the rest, users with positive
/// question deviance are deviant.
pub fn classify_cohorts(report: &DevianceReport, suspended: &[bool]) -> Vec<UserCohort> {
    report
        .question_deviance
        .iter()
        .zip(suspended)
        .map(|(&d, &s)| {
            if s {
                UserCohort::Suspended
            } else if d > 0.0 {
                UserCohort::DeviantNotSuspended
            } else {
                UserCohort::Typical
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: usize,
    pub stats: Option<DescriptiveStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub a: String,
    pub b: String,
    pub ks: TwoSampleResult,
    pub permutation: TwoSampleResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub metric: String,
    pub groups: Vec<GroupSummary>,
    /// Tests for every pair of groups where both tests were defined.
    pub tests: Vec<PairTest>,
    #[serde(skip)]
    pub samples: Vec<(String, Vec<f64>)>,
}

/// Descriptive statistics for each sample and KS plus permutation tests for
/// every pair. Pairs where a test is undefined (empty or constant pooled
/// sample) are skipped.
pub fn compare_groups(
    metric: &str,
    samples: Vec<(String, Vec<f64>)>,
    n_perm: usize,
    seed: u64,
) -> GroupComparison {
    let groups = samples
        .iter()
        .map(|(label, v)| GroupSummary {
            label: label.clone(),
            n: v.len(),
            stats: descriptive(v).ok(),
        })
        .collect();
    let mut tests = Vec::new();
    for i in 0..samples.len() {
        for j in (i + 1)..samples.len() {
            let (a, b) = (&samples[i].1, &samples[j].1);
            let pair_seed = seed ^ ((i as u64) << 32 | j as u64);
            if let (Ok(ks), Ok(permutation)) = (ks_two_sample(a, b), permutation_test(a, b, n_perm, pair_seed)) {
                tests.push(PairTest {
                    a: samples[i].0.clone(),
                    b: samples[j].0.clone(),
                    ks,
                    permutation,
                });
            }
        }
    }
    GroupComparison {
        metric: metric.to_string(),
        groups,
        tests,
        samples,
    }
}

fn by_cohort(cohorts: &[UserCohort], value: impl Fn(usize) -> Option<f64>) -> Vec<(String, Vec<f64>)> {
    UserCohort::ALL
        .iter()
        .map(|&c| {
            let v = (0..cohorts.len())
                .filter(|&i| cohorts[i] == c)
                .filter_map(&value)
                .collect();
            (c.as_str().to_string(), v)
        })
        .collect()
}

/// Engagement and quality comparisons between typical, deviant and suspended
/// users: answers received per question, distinct answerers (activity-network
/// indegree) of askers, and percentage of answers that were chosen best.
pub fn cohort_comparisons(
    corpus: &EventCorpus,
    ledgers: &Ledgers,
    an: &DirectedGraph,
    cohorts: &[UserCohort],
    n_perm: usize,
    seed: u64,
) -> Vec<GroupComparison> {
    let mut answers_per_q: std::collections::HashMap<&crate::corpus::PostId, u64> = corpus
        .posts()
        .iter()
        .filter(|p| p.kind == PostKind::Question)
        .map(|p| (&p.post_id, 0))
        .collect();
    for p in corpus.posts() {
        if let Some(parent) = &p.parent_question {
            *answers_per_q.get_mut(parent).expect("validated parent") += 1;
        }
    }
    let mut per_question: Vec<(String, Vec<f64>)> = UserCohort::ALL
        .iter()
        .map(|c| (c.as_str().to_string(), Vec::new()))
        .collect();
    for p in corpus.posts().iter().filter(|p| p.kind == PostKind::Question) {
        let u = corpus.user_index(&p.author).expect("validated author");
        let slot = UserCohort::ALL.iter().position(|c| *c == cohorts[u]).expect("cohort");
        per_question[slot].1.push(answers_per_q[&p.post_id] as f64);
    }
    let rows = ledgers.rows();
    let answerers = by_cohort(cohorts, |i| (rows[i].n_questions > 0).then(|| an.in_degree(i) as f64));
    let best_pct = by_cohort(cohorts, |i| {
        (rows[i].n_answers > 0).then(|| 100.0 * rows[i].n_best_answers as f64 / rows[i].n_answers as f64)
    });
    vec![
        compare_groups("answers_per_question", per_question, n_perm, seed),
        compare_groups("distinct_answerers", answerers, n_perm, seed.wrapping_add(1)),
        compare_groups("best_answer_percentage", best_pct, n_perm, seed.wrapping_add(2)),
    ]
}

/// Suspended users who never received a flag compared with fair
/// (non-suspended) users on follow indegree, outdegree and activity.
pub fn never_flagged_comparisons(
    ledgers: &Ledgers,
    ff: &DirectedGraph,
    suspended: &[bool],
    n_perm: usize,
    seed: u64,
) -> Vec<GroupComparison> {
    let rows = ledgers.rows();
    let split = |f: &dyn Fn(usize) -> f64| -> Vec<(String, Vec<f64>)> {
        let mut nfs = Vec::new();
        let mut fair = Vec::new();
        for i in 0..rows.len() {
            if suspended[i] && rows[i].total_flags_received() == 0 {
                nfs.push(f(i));
            } else if !suspended[i] {
                fair.push(f(i));
            }
        }
        vec![("never_flagged_suspended".into(), nfs), ("fair".into(), fair)]
    };
    vec![
        compare_groups("indegree", split(&|i| ff.in_degree(i) as f64), n_perm, seed),
        compare_groups("outdegree", split(&|i| ff.out_degree(i) as f64), n_perm, seed.wrapping_add(1)),
        compare_groups(
            "activity",
            split(&|i| (rows[i].n_questions + rows[i].n_answers) as f64),
            n_perm,
            seed.wrapping_add(2),
        ),
    ]
}
