//! Event data model for a Q&A platform log: users, posts, abuse flags and
//! follow relations, plus ingestion, per-user aggregation, network builders
//! and a synthetic generator with planted structure.

mod io;
mod ledger;
mod network;
pub mod synth;

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_corpus, write_corpus, CorpusFormat, ENTITY_FILES};
pub use ledger::{aggregate_ledgers, Ledgers, UserLedger};
pub use network::{build_activity_network, build_ff_network};
pub use synth::{generate_synthetic, Cohort, PlantedUser, SyntheticConfig, SyntheticCorpus};

pub use crate::graph::DirectedGraph;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(String);

impl UserId {
    pub fn new(id: impl Into<String>) -> Self {
        UserId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for UserId {
    fn from(s: &str) -> Self {
        UserId(s.to_owned())
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PostId(String);

impl PostId {
    pub fn new(id: impl Into<String>) -> Self {
        PostId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PostId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: UserId,
    pub level: u8,
    pub suspended: bool,
    pub join_rank: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostKind {
    Question,
    Answer,
}

impl PostKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PostKind::Question => "question",
            PostKind::Answer => "answer",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostEvent {
    pub post_id: PostId,
    pub author: UserId,
    pub kind: PostKind,
    pub parent_question: Option<PostId>,
    pub timestamp: u64,
    pub best_answer: bool,
    pub answer_rating: u8,
    pub thumbs_up: u32,
    pub thumbs_down: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagEvent {
    pub reporter: UserId,
    pub reportee: UserId,
    pub target_post: PostId,
    pub report_time: u64,
    pub valid: bool,
    pub deletion_time: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FollowEdge {
    pub follower: UserId,
    pub followee: UserId,
}

/// A validated platform log. Construction checks every foreign key and
/// entity invariant; the value is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct EventCorpus {
    users: Vec<UserRecord>,
    posts: Vec<PostEvent>,
    flags: Vec<FlagEvent>,
    follows: Vec<FollowEdge>,
    sorted_ids: Vec<UserId>,
    user_index: HashMap<UserId, usize>,
    post_index: HashMap<PostId, usize>,
}

fn cat<T: Clone>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().chain(b).cloned().collect()
}

impl EventCorpus {
    pub fn new(
        users: Vec<UserRecord>,
        posts: Vec<PostEvent>,
        flags: Vec<FlagEvent>,
        follows: Vec<FollowEdge>,
    ) -> Result<Self> {
        let mut sorted_ids: Vec<UserId> = users.iter().map(|u| u.user_id.clone()).collect();
        sorted_ids.sort();
        if let Some(w) = sorted_ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Integrity(format!("duplicate user_id {}", w[0])));
        }
        if let Some(u) = users.iter().find(|u| !(1..=7).contains(&u.level)) {
            return Err(Error::Integrity(format!(
                "user {} has level {} outside 1..7",
                u.user_id, u.level
            )));
        }
        let user_index: HashMap<UserId, usize> = sorted_ids
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, id)| (id, i))
            .collect();

        let mut post_index = HashMap::with_capacity(posts.len());
        for (i, p) in posts.iter().enumerate() {
            if post_index.insert(p.post_id.clone(), i).is_some() {
                return Err(Error::Integrity(format!("duplicate post_id {}", p.post_id)));
            }
            if !user_index.contains_key(&p.author) {
                return Err(Error::Integrity(format!(
                    "post {} has unknown author {}",
                    p.post_id, p.author
                )));
            }
        }
        let mut best_seen: HashSet<&PostId> = HashSet::new();
        for p in &posts {
            validate_post(p, &posts, &post_index, &mut best_seen)?;
        }

        for f in &flags {
            for who in [&f.reporter, &f.reportee] {
                if !user_index.contains_key(who) {
                    return Err(Error::Integrity(format!(
                        "flag on {} references unknown user {}",
                        f.target_post, who
                    )));
                }
            }
            let target = post_index.get(&f.target_post).map(|&i| &posts[i]).ok_or_else(|| {
                Error::Integrity(format!("flag references missing post {}", f.target_post))
            })?;
            if target.author != f.reportee {
                return Err(Error::Integrity(format!(
                    "flag on {} names reportee {} but the author is {}",
                    f.target_post, f.reportee, target.author
                )));
            }
            if f.reporter == f.reportee {
                return Err(Error::Integrity(format!(
                    "user {} flagged their own post {}",
                    f.reporter, f.target_post
                )));
            }
            if f.report_time < target.timestamp {
                return Err(Error::Integrity(format!(
                    "flag on {} reported before the post was created",
                    f.target_post
                )));
            }
            match (f.valid, f.deletion_time) {
                (true, None) => {
                    return Err(Error::Integrity(format!(
                        "valid flag on {} has no deletion_time",
                        f.target_post
                    )))
                }
                (false, Some(_)) => {
                    return Err(Error::Integrity(format!(
                        "invalid flag on {} carries a deletion_time",
                        f.target_post
                    )))
                }
                (true, Some(t)) if t < f.report_time => {
                    return Err(Error::Integrity(format!(
                        "flag on {} deleted before it was reported",
                        f.target_post
                    )))
                }
                _ => {}
            }
        }

        let mut pairs = HashSet::with_capacity(follows.len());
        for e in &follows {
            for who in [&e.follower, &e.followee] {
                if !user_index.contains_key(who) {
                    return Err(Error::Integrity(format!("follow references unknown user {who}")));
                }
            }
            if e.follower == e.followee {
                return Err(Error::Integrity(format!("user {} follows themselves", e.follower)));
            }
            if !pairs.insert((&e.follower, &e.followee)) {
                return Err(Error::Integrity(format!(
                    "duplicate follow {} -> {}",
                    e.follower, e.followee
                )));
            }
        }

        Ok(EventCorpus {
            users,
            posts,
            flags,
            follows,
            sorted_ids,
            user_index,
            post_index,
        })
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new(), Vec::new(), Vec::new()).expect("empty corpus is valid")
    }

    pub fn users(&self) -> &[UserRecord] {
        &self.users
    }

    pub fn posts(&self) -> &[PostEvent] {
        &self.posts
    }

    pub fn flags(&self) -> &[FlagEvent] {
        &self.flags
    }

    pub fn follows(&self) -> &[FollowEdge] {
        &self.follows
    }

    /// `(users, posts, flags, follows)` counts.
    pub fn counts(&self) -> (usize, usize, usize, usize) {
        (self.users.len(), self.posts.len(), self.flags.len(), self.follows.len())
    }

    /// User ids in ascending order; position is the dense node index used by
    /// ledgers and graphs.
    pub fn sorted_user_ids(&self) -> &[UserId] {
        &self.sorted_ids
    }

    pub fn user_index(&self, id: &UserId) -> Option<usize> {
        self.user_index.get(id).copied()
    }

    pub fn post(&self, id: &PostId) -> Option<&PostEvent> {
        self.post_index.get(id).map(|&i| &self.posts[i])
    }

    /// Suspension flag per dense user index.
    pub fn suspended_by_index(&self) -> Vec<bool> {
        let mut out = vec![false; self.users.len()];
        for u in &self.users {
            out[self.user_index[&u.user_id]] = u.suspended;
        }
        out
    }

    /// Concatenates two corpora with disjoint users and posts.
    pub fn concat(&self, other: &EventCorpus) -> Result<EventCorpus> {
        EventCorpus::new(
            cat(&self.users, &other.users),
            cat(&self.posts, &other.posts),
            cat(&self.flags, &other.flags),
            cat(&self.follows, &other.follows),
        )
    }
}

fn validate_post<'a>(
    p: &'a PostEvent,
    posts: &'a [PostEvent],
    post_index: &HashMap<PostId, usize>,
    best_seen: &mut HashSet<&'a PostId>,
) -> Result<()> {
    if p.answer_rating > 5 {
        return Err(Error::Integrity(format!(
            "post {} has answer_rating {} outside 0..5",
            p.post_id, p.answer_rating
        )));
    }
    if p.answer_rating != 0 && !p.best_answer {
        return Err(Error::Integrity(format!(
            "post {} is rated but is not a best answer",
            p.post_id
        )));
    }
    match p.kind {
        PostKind::Question => {
            if p.parent_question.is_some() || p.best_answer {
                return Err(Error::Integrity(format!(
                    "question {} carries answer-only fields",
                    p.post_id
                )));
            }
        }
        PostKind::Answer => {
            let parent_id = p.parent_question.as_ref().ok_or_else(|| {
                Error::Integrity(format!("answer {} has no parent_question", p.post_id))
            })?;
            let parent = post_index.get(parent_id).map(|&i| &posts[i]).ok_or_else(|| {
                Error::Integrity(format!(
                    "answer {} references missing question {}",
                    p.post_id, parent_id
                ))
            })?;
            if parent.kind != PostKind::Question {
                return Err(Error::Integrity(format!(
                    "answer {} references {} which is not a question",
                    p.post_id, parent_id
                )));
            }
            if parent.author == p.author {
                return Err(Error::Integrity(format!(
                    "answer {} is a self-answer by {}",
                    p.post_id, p.author
                )));
            }
            if p.best_answer && !best_seen.insert(parent_id) {
                return Err(Error::Integrity(format!(
                    "question {parent_id} has more than one best answer"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn user(id: &str, suspended: bool) -> UserRecord {
        UserRecord {
            user_id: UserId::new(id),
            level: 1,
            suspended,
            join_rank: 0,
        }
    }

    pub fn question(id: &str, author: &str, ts: u64) -> PostEvent {
        PostEvent {
            post_id: PostId::new(id),
            author: UserId::new(author),
            kind: PostKind::Question,
            parent_question: None,
            timestamp: ts,
            best_answer: false,
            answer_rating: 0,
            thumbs_up: 0,
            thumbs_down: 0,
        }
    }

    pub fn answer(id: &str, author: &str, parent: &str, ts: u64) -> PostEvent {
        PostEvent {
            kind: PostKind::Answer,
            parent_question: Some(PostId::new(parent)),
            ..question(id, author, ts)
        }
    }

    pub fn flag(reporter: &str, reportee: &str, post: &str, t: u64, deleted: Option<u64>) -> FlagEvent {
        FlagEvent {
            reporter: UserId::new(reporter),
            reportee: UserId::new(reportee),
            target_post: PostId::new(post),
            report_time: t,
            valid: deleted.is_some(),
            deletion_time: deleted,
        }
    }

    pub fn follow(a: &str, b: &str) -> FollowEdge {
        FollowEdge {
            follower: UserId::new(a),
            followee: UserId::new(b),
        }
    }

    /// Three users, one question, one answer, one valid flag, one follow.
    pub fn three_user() -> EventCorpus {
        EventCorpus::new(
            vec![user("a", false), user("b", false), user("c", true)],
            vec![question("q1", "a", 10), answer("a1", "b", "q1", 20)],
            vec![flag("c", "b", "a1", 30, Some(40))],
            vec![follow("c", "a")],
        )
        .unwrap()
    }
}
