use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use polardyn::pipeline::{QScope, OUTPUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "polardyn", version, about = "Stance and community polarization dynamics over repost corpora")]
pub struct Cli {
    /// Fail with exit code 4 when label propagation hits its sweep cap.
    #[arg(long, global = true)]
    pub strict: bool,

    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read, validate and deduplicate tweet files into one JSON Lines corpus.
    Ingest(IngestArgs),
    /// Keep the tweets matching any query.
    Filter(FilterArgs),
    /// Expand the seed hashtag lexicons, label tweets and rank burst hashtags.
    Lexicon(LexiconArgs),
    /// Cross-validate on the gold set and train the stance model.
    Train(TrainArgs),
    /// Predict a stance class for every tweet.
    Classify(ClassifyArgs),
    /// Build snapshots, propagate labels and test modularity.
    Network(NetworkArgs),
    /// Community sizes and network switch ratios per snapshot.
    Communities(CommunitiesArgs),
    /// Users whose content stance flips between their first and last tweets.
    Switches(SwitchesArgs),
    /// Per-user soft network labels and the leaning histogram.
    Softlabels(SoftlabelsArgs),
    /// Correlate content polarity with soft network labels.
    Correlate(CorrelateArgs),
    /// Generate a synthetic scenario with ground truth and a matching config.
    Synth(SynthArgs),
    /// Run every stage from a config file and write the report bundle.
    #[command(alias = "run")]
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct OutDir {
    /// Output directory.
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// JSON Lines (.jsonl) or CSV (.csv) tweet files.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Normalization rules (JSON).
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Corpus to write (JSON Lines).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write record counts as JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// One query per line.
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Rules applied to query terms.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Ingest summary to update with the filtered count.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LexiconArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub pro_seeds: PathBuf,
    #[arg(long)]
    pub anti_seeds: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub iterations: u32,
    /// Minimum co-occurrence count for a candidate hashtag.
    #[arg(long, default_value_t = 3)]
    pub min_count: usize,
    #[arg(long, default_value_t = 20)]
    pub burst_k: usize,
    #[arg(long, default_value_t = 3.0)]
    pub burst_ratio_min: f64,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// `tweet_id,class` CSV.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub folds: usize,
    /// Classifier hyperparameters (JSON); defaults when absent.
    #[arg(long)]
    pub classifier: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct Windowing {
    /// Snapshot width in days.
    #[arg(long, default_value_t = 3)]
    pub window: u32,
    /// Days between snapshot starts.
    #[arg(long, default_value_t = 1)]
    pub step: u32,
    #[arg(long, default_value_t = polardyn::netdyn::DEFAULT_MAX_SWEEPS)]
    pub max_sweeps: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Scope {
    None,
    First,
    All,
}

impl From<Scope> for QScope {
    fn from(s: Scope) -> Self {
        match s {
            Scope::None => QScope::None,
            Scope::First => QScope::First,
            Scope::All => QScope::All,
        }
    }
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// `author_id,leaning` CSV.
    #[arg(long)]
    pub seeds: PathBuf,
    #[command(flatten)]
    pub windowing: Windowing,
    /// Surrogate graphs per modularity test.
    #[arg(long, default_value_t = 100)]
    pub n_surr: usize,
    #[arg(long, default_value_t = 10)]
    pub swaps_per_edge: usize,
    /// Snapshots that get a surrogate test.
    #[arg(long, value_enum, default_value = "first")]
    pub q_reports: Scope,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct CommunitiesArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub seeds: PathBuf,
    #[command(flatten)]
    pub windowing: Windowing,
    #[arg(long)]
    pub seed: u64,
    /// Suffix for output file names.
    #[arg(long)]
    pub tag: Option<String>,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct SwitchesArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// `tweet_id,class` CSV from `classify`.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Minimum tweets per user, comma separated.
    #[arg(long = "n", value_delimiter = ',', default_value = "5,10,15,20")]
    pub thresholds: Vec<usize>,
    #[arg(long)]
    pub tag: Option<String>,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct SoftlabelsArgs {
    /// `snapshot_labels.csv` from `network`.
    #[arg(long)]
    pub labels: PathBuf,
    /// First day of the period; the first labeled day when absent.
    #[arg(long)]
    pub from: Option<NaiveDate>,
    /// Last day of the period; the last labeled day when absent.
    #[arg(long)]
    pub to: Option<NaiveDate>,
    #[arg(long, default_value_t = 0.05)]
    pub bin_width: f64,
    #[arg(long)]
    pub tag: Option<String>,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// `community_sizes` CSV; enables the community crossover.
    #[arg(long)]
    pub communities: Option<PathBuf>,
    /// Period bounds; the corpus day range when absent.
    #[arg(long)]
    pub from: Option<NaiveDate>,
    #[arg(long)]
    pub to: Option<NaiveDate>,
    #[arg(long)]
    pub tag: Option<String>,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scenario spec (JSON); the default scenario when absent.
    #[arg(long, conflicts_with = "demo")]
    pub spec: Option<PathBuf>,
    /// The 100k-tweet demo scenario.
    #[arg(long)]
    pub demo: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub out: Option<PathBuf>,
}
