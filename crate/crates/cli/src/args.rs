use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cqa", version, about = "Abuse-report analytics for community Q&A corpora")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Run seed; overrides any seed in a config file.
    #[arg(long, global = true, env = "CQA_SEED")]
    pub seed: Option<u64>,

    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true, env = "CQA_THREADS")]
    pub threads: Option<usize>,

    #[arg(long, global = true, env = "CQA_OUT_DIR", default_value = "cqa-out")]
    pub out_dir: PathBuf,

    /// Format of emitted tables.
    #[arg(long, global = true, env = "CQA_FORMAT", value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Jsonl,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a planted synthetic corpus.
    Synth(SynthArgs),
    /// Run one analysis over a corpus and emit its tables.
    Analyze(AnalyzeArgs),
    /// Extract features, train and evaluate a classifier.
    Learn(LearnArgs),
    /// Summarize the manifest of an output directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SynthArgs {
    /// TOML file with generator settings.
    #[arg(long, env = "CQA_SYNTH_CONFIG")]
    pub config: Option<PathBuf>,

    /// Overrides `n_users` from the config.
    #[arg(long)]
    pub n_users: Option<usize>,

    /// Overrides `stealth_fraction` from the config.
    #[arg(long)]
    pub stealth_fraction: Option<f64>,

    /// Overrides `homophily_strength` from the config.
    #[arg(long)]
    pub homophily_strength: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Analysis {
    Network,
    Deviance,
    Homophily,
    Timing,
}

impl Analysis {
    pub fn as_str(self) -> &'static str {
        match self {
            Analysis::Network => "network",
            Analysis::Deviance => "deviance",
            Analysis::Homophily => "homophily",
            Analysis::Timing => "timing",
        }
    }
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus directory (default: <out-dir>/corpus). JSONL is preferred when
    /// both JSONL and CSV files are present.
    #[arg(long, env = "CQA_CORPUS")]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(value_enum)]
    pub analysis: Analysis,

    #[command(flatten)]
    pub corpus: CorpusArgs,

    /// Largest hop distance for homophily profiles and histograms.
    #[arg(long, default_value_t = 4)]
    pub max_hop: usize,

    /// Users sampled per homophily profile.
    #[arg(long, default_value_t = cqa_core::homophily::DEFAULT_SAMPLE_SIZE)]
    pub sample_size: usize,

    /// Permutations per two-sample test.
    #[arg(long, default_value_t = 1000)]
    pub n_perm: usize,

    /// Highest polynomial degree tried against the linear flag model.
    #[arg(long, default_value_t = 3)]
    pub max_degree: usize,

    /// Similarity thresholds as multiples of the score standard deviation;
    /// one profile per value.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0])]
    pub delta_sigma: Vec<f64>,

    /// Smallest degree included in power-law fits.
    #[arg(long, default_value_t = 1)]
    pub x_min: usize,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,

    /// Train from a feature CSV instead of a corpus.
    #[arg(long, conflicts_with = "corpus")]
    pub dataset: Option<PathBuf>,

    /// One of: naive-bayes, logistic, knn, gbt.
    #[arg(long, env = "CQA_ALGO")]
    pub algo: Option<String>,

    /// TOML file with learner settings.
    #[arg(long, env = "CQA_LEARN_CONFIG")]
    pub config: Option<PathBuf>,

    /// Also run repeated stratified cross-validation.
    #[arg(long)]
    pub cv: bool,

    /// Skip drop-one feature importance.
    #[arg(long)]
    pub no_importance: bool,

    /// Also run greedy backwards elimination (slow).
    #[arg(long)]
    pub elimination: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Recompute every recorded hash and fail on mismatch.
    #[arg(long)]
    pub verify: bool,
}
