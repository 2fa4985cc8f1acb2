use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{EventCorpus, FlagEvent, FollowEdge, PostEvent, UserRecord};
use crate::error::{Error, Result};

/// Entity file stems, in the order they are read and written.
pub const ENTITY_FILES: [&str; 4] = ["users", "posts", "flags", "follows"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    /// `users.jsonl`, `posts.jsonl`, `flags.jsonl`, `follows.jsonl`
    Jsonl,
    /// `users.csv`, `posts.csv`, `flags.csv`, `follows.csv` with header rows
    CsvBundle,
}

impl CorpusFormat {
    pub fn extension(self) -> &'static str {
        match self {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::CsvBundle => "csv",
        }
    }

    pub fn entity_path(self, dir: &Path, stem: &str) -> PathBuf {
        dir.join(format!("{stem}.{}", self.extension()))
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
            file: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let mut out = Vec::new();
    for rec in reader.deserialize() {
        let rec = rec.map_err(|e| Error::Parse {
            file: path.to_path_buf(),
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

fn read_entity<T: DeserializeOwned>(dir: &Path, stem: &str, format: CorpusFormat) -> Result<Vec<T>> {
    let path = format.entity_path(dir, stem);
    match format {
        CorpusFormat::Jsonl => read_jsonl(&path),
        CorpusFormat::CsvBundle => read_csv(&path),
    }
}

/// Reads the four entity files from `dir` and validates the result.
pub fn load_corpus(dir: &Path, format: CorpusFormat) -> Result<EventCorpus> {
    let users: Vec<UserRecord> = read_entity(dir, "users", format)?;
    let posts: Vec<PostEvent> = read_entity(dir, "posts", format)?;
    let flags: Vec<FlagEvent> = read_entity(dir, "flags", format)?;
    let follows: Vec<FollowEdge> = read_entity(dir, "follows", format)?;
    EventCorpus::new(users, posts, flags, follows)
}

fn write_entity<T: Serialize>(path: &Path, rows: &[T], format: CorpusFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        CorpusFormat::Jsonl => {
            for row in rows {
                let line = serde_json::to_string(row).expect("corpus records serialize");
                writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
            }
        }
        CorpusFormat::CsvBundle => {
            let mut cw = csv::Writer::from_writer(&mut w);
            for row in rows {
                cw.serialize(row).map_err(|e| Error::io(path, e.into()))?;
            }
            cw.flush().map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the corpus into `dir` (created if missing). Returns the written
/// paths in [`ENTITY_FILES`] order.
pub fn write_corpus(corpus: &EventCorpus, dir: &Path, format: CorpusFormat) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths: Vec<PathBuf> = ENTITY_FILES
        .iter()
        .map(|stem| format.entity_path(dir, stem))
        .collect();
    write_entity(&paths[0], corpus.users(), format)?;
    write_entity(&paths[1], corpus.posts(), format)?;
    write_entity(&paths[2], corpus.flags(), format)?;
    write_entity(&paths[3], corpus.follows(), format)?;
    Ok(paths)
}
