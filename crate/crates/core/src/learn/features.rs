use serde::{Deserialize, Serialize};

use crate::corpus::{EventCorpus, Ledgers, UserId, UserLedger};
use crate::deviance::DevianceReport;
use crate::error::{Error, Result};
use crate::graph::{ego_reciprocity, local_clustering, ClusteringMode, DirectedGraph};

pub const N_FEATURES: usize = 29;
/// Bumped whenever the order or meaning of a feature column changes.
pub const FEATURE_SCHEMA_VERSION: u32 = 1;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "indegree",
    "outdegree",
    "status",
    "reciprocity",
    "recip_net_degree",
    "recip_net_cc",
    "n_questions",
    "n_answers",
    "n_flagged_questions",
    "n_flagged_answers",
    "points",
    "n_best_answers",
    "award_ratings",
    "thumbs",
    "altruistic_score",
    "q_flags_received",
    "q_flags_received_valid",
    "q_flags_reported",
    "q_flags_reported_valid",
    "a_flags_received",
    "a_flags_received_valid",
    "a_flags_reported",
    "a_flags_reported_valid",
    "question_deviance",
    "answer_deviance",
    "follower_mean_question_deviance",
    "follower_mean_answer_deviance",
    "followee_mean_question_deviance",
    "followee_mean_answer_deviance",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureCategory {
    Social,
    Activity,
    Accomplishment,
    Flag,
    DevianceScore,
    DevianceHomophily,
}

impl FeatureCategory {
    pub fn of(index: usize) -> FeatureCategory {
        match index {
            0..=5 => FeatureCategory::Social,
            6..=9 => FeatureCategory::Activity,
            10..=14 => FeatureCategory::Accomplishment,
            15..=22 => FeatureCategory::Flag,
            23..=24 => FeatureCategory::DevianceScore,
            _ => FeatureCategory::DevianceHomophily,
        }
    }
}

pub type FeatureVector = [f64; N_FEATURES];

/// How `status = followers / followees` handles users who follow nobody.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatusSmoothing {
    /// `in / max(out, 1)`
    #[default]
    MaxOne,
    /// `(in + 1) / (out + 1)`
    AddOne,
}

/// `2A + 10BA - 5Q`: what a user gives to the community minus what they take.
pub fn altruistic_score(ledger: &UserLedger) -> f64 {
    2.0 * ledger.n_answers as f64 + 10.0 * ledger.n_best_answers as f64 - 5.0 * ledger.n_questions as f64
}

/// One feature vector per user, in ascending user-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<UserId>,
    pub rows: Vec<FeatureVector>,
}

impl FeatureMatrix {
    pub fn get(&self, id: &UserId) -> Option<&FeatureVector> {
        self.ids.binary_search(id).ok().map(|i| &self.rows[i])
    }
}

fn mean_of(nodes: &[usize], scores: &[f64]) -> f64 {
    if nodes.is_empty() {
        0.0
    } else {
        nodes.iter().map(|&v| scores[v]).sum::<f64>() / nodes.len() as f64
    }
}

pub fn extract_features(
    corpus: &EventCorpus,
    ledgers: &Ledgers,
    deviance: &DevianceReport,
    ff: &DirectedGraph,
    status: StatusSmoothing,
) -> Result<FeatureMatrix> {
    let ids = corpus.sorted_user_ids();
    if ledgers.ids() != ids {
        return Err(Error::Integrity("ledgers do not cover the corpus users".into()));
    }
    if deviance.ids.as_slice() != ids {
        return Err(Error::Integrity("deviance report does not cover the corpus users".into()));
    }
    if ff.ids() != ids {
        return Err(Error::Integrity("follow graph does not cover the corpus users".into()));
    }
    let cc = local_clustering(ff, ClusteringMode::Reciprocated);
    let (qd, ad) = (&deviance.question_deviance, &deviance.answer_deviance);
    let rows = ledgers
        .rows()
        .iter()
        .enumerate()
        .map(|(u, l)| {
            let (indeg, outdeg) = (ff.in_degree(u) as f64, ff.out_degree(u) as f64);
            let status = match status {
                StatusSmoothing::MaxOne => indeg / outdeg.max(1.0),
                StatusSmoothing::AddOne => (indeg + 1.0) / (outdeg + 1.0),
            };
            let (followers, followees) = (ff.in_neighbors(u), ff.out_neighbors(u));
            let c = |v: u64| v as f64;
            let v: FeatureVector = [
                indeg,
                outdeg,
                status,
                ego_reciprocity(ff, u),
                ff.reciprocated_neighbors(u).len() as f64,
                cc[u],
                c(l.n_questions),
                c(l.n_answers),
                c(l.n_flagged_questions),
                c(l.n_flagged_answers),
                l.points as f64,
                c(l.n_best_answers),
                c(l.award_ratings_sum),
                l.thumbs_up_sum as f64 - l.thumbs_down_sum as f64,
                altruistic_score(l),
                c(l.q_flags_received),
                c(l.q_flags_received_valid),
                c(l.q_flags_reported),
                c(l.q_flags_reported_valid),
                c(l.a_flags_received),
                c(l.a_flags_received_valid),
                c(l.a_flags_reported),
                c(l.a_flags_reported_valid),
                qd[u],
                ad[u],
                mean_of(followers, qd),
                mean_of(followers, ad),
                mean_of(followees, qd),
                mean_of(followees, ad),
            ];
            v
        })
        .collect::<Vec<_>>();
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("feature matrix".into()));
    }
    Ok(FeatureMatrix {
        ids: ids.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;
    use crate::corpus::{aggregate_ledgers, build_ff_network};
    use crate::deviance::{deviance_scores, RegressionModel};

    fn zero_model() -> RegressionModel {
        RegressionModel {
            alpha: 0.0,
            beta: 0.0,
            r_squared: 1.0,
            n: 2,
        }
    }

    #[test]
    fn altruism_formula() {
        let l = UserLedger {
            n_questions: 1,
            n_answers: 1,
            n_best_answers: 1,
            ..UserLedger::default()
        };
        assert_eq!(altruistic_score(&l), 7.0);
        assert_eq!(altruistic_score(&UserLedger::default()), 0.0);
        let q2 = UserLedger {
            n_questions: 2,
            ..UserLedger::default()
        };
        assert_eq!(altruistic_score(&q2), -10.0);
    }

    #[test]
    fn names_and_categories_line_up() {
        assert_eq!(FEATURE_NAMES.len(), N_FEATURES);
        let count = |c| (0..N_FEATURES).filter(|&i| FeatureCategory::of(i) == c).count();
        assert_eq!(count(FeatureCategory::Social), 6);
        assert_eq!(count(FeatureCategory::Flag), 8);
        assert_eq!(count(FeatureCategory::DevianceHomophily), 4);
    }

    #[test]
    fn isolated_user_is_zero_but_for_status_baseline() {
        let c = EventCorpus::new(vec![user("z", false)], vec![], vec![], vec![]).unwrap();
        let l = aggregate_ledgers(&c);
        let d = deviance_scores(&l, zero_model(), zero_model());
        let ff = build_ff_network(&c);
        let m = extract_features(&c, &l, &d, &ff, StatusSmoothing::MaxOne).unwrap();
        assert!(m.rows[0].iter().all(|v| *v == 0.0));
        let m = extract_features(&c, &l, &d, &ff, StatusSmoothing::AddOne).unwrap();
        assert_eq!(m.rows[0][2], 1.0);
        assert_eq!(m.rows[0].iter().filter(|v| **v != 0.0).count(), 1);
    }

    #[test]
    fn neighbour_deviance_means() {
        let c = three_user();
        let l = aggregate_ledgers(&c);
        let mut d = deviance_scores(&l, zero_model(), zero_model());
        d.question_deviance = vec![1.0, 2.0, 4.0];
        let ff = build_ff_network(&c);
        let m = extract_features(&c, &l, &d, &ff, StatusSmoothing::MaxOne).unwrap();
        // c follows a
        let a = m.get(&"a".into()).unwrap();
        assert_eq!((a[0], a[25], a[27]), (1.0, 4.0, 0.0));
        let cc = m.get(&"c".into()).unwrap();
        assert_eq!((cc[1], cc[27]), (1.0, 1.0));
    }
}
