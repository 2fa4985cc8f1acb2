use cqa_core::corpus::{generate_synthetic, write_corpus, CorpusFormat, SyntheticConfig};

use super::{command_line, read_toml};
use crate::args::{GlobalArgs, SynthArgs};
use crate::failure::{ExitCode, Outcome};
use crate::manifest::Stage;
use crate::row;
use crate::table::Table;

pub fn run(g: &GlobalArgs, a: &SynthArgs) -> Outcome {
    let mut cfg: SyntheticConfig = match &a.config {
        Some(p) => read_toml(p).usage()?,
        None => SyntheticConfig::default(),
    };
    if let Some(n) = a.n_users {
        cfg.n_users = n;
    }
    if let Some(s) = a.stealth_fraction {
        cfg.stealth_fraction = s;
    }
    if let Some(h) = a.homophily_strength {
        cfg.homophily_strength = h;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.validate().usage()?;

    let snapshot = serde_json::to_value(&cfg).expect("config serializes");
    let mut stage = Stage::begin("synth", command_line(), cfg.seed, g.threads, snapshot);
    if let Some(p) = &a.config {
        stage.input(p);
    }
    let s = generate_synthetic(&cfg).analysis()?;
    for p in write_corpus(&s.corpus, &g.out_dir.join("corpus"), CorpusFormat::Jsonl).analysis()? {
        stage.output(p);
    }
    let mut truth = Table::new(
        "planted_truth",
        &["user_id", "cohort", "abuse_rate", "activity", "suspended"],
    );
    for (id, t) in s.corpus.sorted_user_ids().iter().zip(&s.truth) {
        let cohort = serde_json::to_value(t.cohort).expect("cohort serializes");
        truth.push(row![id.as_str(), cohort.as_str().unwrap_or_default(), t.abuse_rate, t.activity, t.suspended]);
    }
    stage.output(truth.write(&g.out_dir, g.format).analysis()?);
    stage.finish(&g.out_dir).analysis()?;

    let (users, posts, flags, follows) = s.corpus.counts();
    println!("users {users}  posts {posts}  flags {flags}  follows {follows}");
    println!("corpus written to {}", g.out_dir.join("corpus").display());
    Ok(())
}
