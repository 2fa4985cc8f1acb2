//! Analytics for abuse reports on community Q&A platforms.
//!
//! The crate ingests platform logs (users, posts, flags, follows), builds
//! follower and answer networks, scores per-user deviance against the crowd,
//! measures homophily over hop distance and trains suspension classifiers.

pub mod corpus;
pub mod deviance;
pub mod error;
pub mod graph;
pub mod homophily;
pub mod learn;
pub mod stats;
pub mod timing;

pub use corpus::{
    aggregate_ledgers, build_activity_network, build_ff_network, generate_synthetic, load_corpus,
    write_corpus, CorpusFormat, EventCorpus, FlagEvent, FollowEdge, Ledgers, PostEvent, PostId,
    PostKind, SyntheticConfig, SyntheticCorpus, UserId, UserLedger, UserRecord,
};
pub use error::{Error, Result};
pub use graph::{DirectedGraph, Orientation};
