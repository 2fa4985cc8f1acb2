pub mod analyze;
pub mod learn;
pub mod report;
pub mod synth;

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use cqa_core::corpus::{load_corpus, CorpusFormat, EventCorpus};
use serde::de::DeserializeOwned;

use crate::args::{CorpusArgs, GlobalArgs};
use crate::failure::{ExitCode, Outcome};

pub const DEFAULT_SEED: u64 = 1;

pub fn seed(g: &GlobalArgs) -> u64 {
    g.seed.unwrap_or(DEFAULT_SEED)
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn corpus_dir(g: &GlobalArgs, a: &CorpusArgs) -> PathBuf {
    a.corpus.clone().unwrap_or_else(|| g.out_dir.join("corpus"))
}

/// Loads the corpus in `dir` along with the files it was read from.
pub fn open_corpus(dir: &Path) -> Outcome<(EventCorpus, Vec<PathBuf>)> {
    let format = [CorpusFormat::Jsonl, CorpusFormat::CsvBundle]
        .into_iter()
        .find(|f| f.entity_path(dir, "users").exists())
        .ok_or_else(|| anyhow!("no users.jsonl or users.csv in {}", dir.display()))
        .usage()?;
    log::info!("loading {:?} corpus from {}", format, dir.display());
    let corpus = load_corpus(dir, format).analysis()?;
    let files = ["users", "posts", "flags", "follows"]
        .iter()
        .map(|s| format.entity_path(dir, s))
        .collect();
    Ok((corpus, files))
}

/// The invocation as typed, for the manifest.
pub fn command_line() -> String {
    std::iter::once("cqa".to_string())
        .chain(std::env::args().skip(1))
        .collect::<Vec<_>>()
        .join(" ")
}
