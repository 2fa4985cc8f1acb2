use std::collections::HashSet;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use super::{EventCorpus, PostKind, UserId};

/// Points for asking a question.
pub const POINTS_QUESTION: i64 = -5;
/// Refund for a question whose asker chose a best answer.
pub const POINTS_BEST_CHOSEN: i64 = 3;
pub const POINTS_ANSWER: i64 = 2;
pub const POINTS_BEST_ANSWER: i64 = 10;

/// Per-user activity, accomplishment and flag counters.
///
/// `points` is signed: asking costs points, so a user who only asks ends up
/// below zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserLedger {
    pub n_questions: u64,
    pub n_answers: u64,
    pub n_best_answers: u64,
    /// Questions of this user for which a best answer was chosen.
    pub n_questions_resolved: u64,
    pub points: i64,
    pub award_ratings_sum: u64,
    pub thumbs_up_sum: u64,
    pub thumbs_down_sum: u64,
    pub q_flags_received: u64,
    pub q_flags_received_valid: u64,
    pub q_flags_reported: u64,
    pub q_flags_reported_valid: u64,
    pub a_flags_received: u64,
    pub a_flags_received_valid: u64,
    pub a_flags_reported: u64,
    pub a_flags_reported_valid: u64,
    pub n_flagged_questions: u64,
    pub n_flagged_answers: u64,
}

impl UserLedger {
    pub fn posts(&self, kind: PostKind) -> u64 {
        match kind {
            PostKind::Question => self.n_questions,
            PostKind::Answer => self.n_answers,
        }
    }

    pub fn valid_flags_received(&self, kind: PostKind) -> u64 {
        match kind {
            PostKind::Question => self.q_flags_received_valid,
            PostKind::Answer => self.a_flags_received_valid,
        }
    }

    pub fn flags_received(&self, kind: PostKind) -> u64 {
        match kind {
            PostKind::Question => self.q_flags_received,
            PostKind::Answer => self.a_flags_received,
        }
    }

    pub fn flagged_posts(&self, kind: PostKind) -> u64 {
        match kind {
            PostKind::Question => self.n_flagged_questions,
            PostKind::Answer => self.n_flagged_answers,
        }
    }

    pub fn total_flags_received(&self) -> u64 {
        self.q_flags_received + self.a_flags_received
    }

    /// True when every valid/total pair and flagged/posted pair is ordered.
    pub fn is_consistent(&self) -> bool {
        self.q_flags_received_valid <= self.q_flags_received
            && self.q_flags_reported_valid <= self.q_flags_reported
            && self.a_flags_received_valid <= self.a_flags_received
            && self.a_flags_reported_valid <= self.a_flags_reported
            && self.n_flagged_questions <= self.n_questions
            && self.n_flagged_answers <= self.n_answers
            && self.n_best_answers <= self.n_answers
            && self.n_questions_resolved <= self.n_questions
    }
}

impl AddAssign for UserLedger {
    fn add_assign(&mut self, o: Self) {
        self.n_questions += o.n_questions;
        self.n_answers += o.n_answers;
        self.n_best_answers += o.n_best_answers;
        self.n_questions_resolved += o.n_questions_resolved;
        self.points += o.points;
        self.award_ratings_sum += o.award_ratings_sum;
        self.thumbs_up_sum += o.thumbs_up_sum;
        self.thumbs_down_sum += o.thumbs_down_sum;
        self.q_flags_received += o.q_flags_received;
        self.q_flags_received_valid += o.q_flags_received_valid;
        self.q_flags_reported += o.q_flags_reported;
        self.q_flags_reported_valid += o.q_flags_reported_valid;
        self.a_flags_received += o.a_flags_received;
        self.a_flags_received_valid += o.a_flags_received_valid;
        self.a_flags_reported += o.a_flags_reported;
        self.a_flags_reported_valid += o.a_flags_reported_valid;
        self.n_flagged_questions += o.n_flagged_questions;
        self.n_flagged_answers += o.n_flagged_answers;
    }
}

impl Add for UserLedger {
    type Output = UserLedger;
    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

/// Ledgers for every user, indexed in ascending user-id order (the same
/// dense order used by the network builders).
#[derive(Debug, Clone, PartialEq)]
pub struct Ledgers {
    ids: Vec<UserId>,
    rows: Vec<UserLedger>,
}

impl Ledgers {
    pub fn from_parts(ids: Vec<UserId>, rows: Vec<UserLedger>) -> Self {
        assert_eq!(ids.len(), rows.len());
        assert!(ids.windows(2).all(|w| w[0] < w[1]), "ledger ids must be strictly ascending");
        Ledgers { ids, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ids(&self) -> &[UserId] {
        &self.ids
    }

    pub fn rows(&self) -> &[UserLedger] {
        &self.rows
    }

    pub fn get(&self, id: &UserId) -> Option<&UserLedger> {
        self.ids.binary_search(id).ok().map(|i| &self.rows[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UserId, &UserLedger)> {
        self.ids.iter().zip(&self.rows)
    }

    /// Union of two ledger sets; users present in both are summed.
    pub fn merge(&self, other: &Ledgers) -> Ledgers {
        let mut merged: std::collections::BTreeMap<UserId, UserLedger> =
            self.iter().map(|(k, v)| (k.clone(), *v)).collect();
        for (k, v) in other.iter() {
            *merged.entry(k.clone()).or_default() += *v;
        }
        let (ids, rows) = merged.into_iter().unzip();
        Ledgers { ids, rows }
    }

    pub fn total(&self) -> UserLedger {
        self.rows.iter().fold(UserLedger::default(), |a, b| a + *b)
    }
}

pub fn aggregate_ledgers(corpus: &EventCorpus) -> Ledgers {
    let ids = corpus.sorted_user_ids().to_vec();
    let mut rows = vec![UserLedger::default(); ids.len()];
    let idx = |id: &UserId| corpus.user_index(id).expect("validated corpus");

    for p in corpus.posts() {
        let row = &mut rows[idx(&p.author)];
        match p.kind {
            PostKind::Question => row.n_questions += 1,
            PostKind::Answer => {
                row.n_answers += 1;
                row.thumbs_up_sum += u64::from(p.thumbs_up);
                row.thumbs_down_sum += u64::from(p.thumbs_down);
                if p.best_answer {
                    row.n_best_answers += 1;
                    row.award_ratings_sum += u64::from(p.answer_rating);
                    let parent = p.parent_question.as_ref().expect("validated answer");
                    let asker = &corpus.post(parent).expect("validated parent").author;
                    rows[idx(asker)].n_questions_resolved += 1;
                }
            }
        }
    }

    let mut flagged = HashSet::new();
    for f in corpus.flags() {
        let kind = corpus.post(&f.target_post).expect("validated flag").kind;
        let valid = u64::from(f.valid);
        {
            let r = &mut rows[idx(&f.reportee)];
            match kind {
                PostKind::Question => {
                    r.q_flags_received += 1;
                    r.q_flags_received_valid += valid;
                }
                PostKind::Answer => {
                    r.a_flags_received += 1;
                    r.a_flags_received_valid += valid;
                }
            }
            if flagged.insert(&f.target_post) {
                match kind {
                    PostKind::Question => r.n_flagged_questions += 1,
                    PostKind::Answer => r.n_flagged_answers += 1,
                }
            }
        }
        let r = &mut rows[idx(&f.reporter)];
        match kind {
            PostKind::Question => {
                r.q_flags_reported += 1;
                r.q_flags_reported_valid += valid;
            }
            PostKind::Answer => {
                r.a_flags_reported += 1;
                r.a_flags_reported_valid += valid;
            }
        }
    }

    for r in &mut rows {
        r.points = POINTS_QUESTION * r.n_questions as i64
            + POINTS_BEST_CHOSEN * r.n_questions_resolved as i64
            + POINTS_ANSWER * r.n_answers as i64
            + POINTS_BEST_ANSWER * r.n_best_answers as i64;
    }
    Ledgers { ids, rows }
}
