//! Shared fixtures for the criterion benches.

use cqa_core::{generate_synthetic, SyntheticConfig, SyntheticCorpus};

/// Synthetic corpus of `n_users` users with default structure.
pub fn fixture(n_users: usize, seed: u64) -> SyntheticCorpus {
    generate_synthetic(&SyntheticConfig {
        n_users,
        seed,
        ..SyntheticConfig::default()
    })
    .expect("default config is valid")
}
