//! End-to-end orchestration and the file formats shared by the stages.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{
    classify_corpus, cross_validate_detailed, daily_proportions_from_predictions, gold_examples, mean_and_sample_std,
    read_gold, train, EvalReport, StanceClass, StanceModel, TrainConfig,
};
use crate::corpus::{filter_corpus, parse_query_file, Corpus, IngestStats, NormalizationRules};
use crate::dynamics::{
    community_sizes, content_network_correlation, content_polarity, content_switches_from_predictions, crossover,
    leaning_histogram, network_switch_series, soft_labels, SwitchVerdict,
};
use crate::lexicon::{burst_hashtags, expand_lexicons, label_corpus, Expansion, HeuristicLabel};
use crate::netdyn::{
    build_snapshots, graph_stats, modularity, propagate_chain, surrogate_zscore, ChainStep, GraphSnapshot, Leaning,
    QReport, SeedList, SnapshotLabels, SurrogateConfig,
};
use crate::{io, rng, Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable overriding `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "POLARDYN_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconConfig {
    pub pro_seeds: PathBuf,
    pub anti_seeds: PathBuf,
    pub iterations: u32,
    pub min_count: usize,
    pub burst_k: usize,
    pub burst_ratio_min: f64,
}

impl Default for LexiconConfig {
    fn default() -> Self {
        LexiconConfig {
            pro_seeds: PathBuf::new(),
            anti_seeds: PathBuf::new(),
            iterations: 4,
            min_count: 3,
            burst_k: 20,
            burst_ratio_min: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QScope {
    None,
    /// First labeled snapshot only.
    #[default]
    First,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub seeds: PathBuf,
    pub window: u32,
    pub step: u32,
    pub max_sweeps: usize,
    pub surrogates: SurrogateConfig,
    pub q_reports: QScope,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            seeds: PathBuf::new(),
            window: 3,
            step: 1,
            max_sweeps: crate::netdyn::DEFAULT_MAX_SWEEPS,
            surrogates: SurrogateConfig::default(),
            q_reports: QScope::First,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Period {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    #[serde(default)]
    pub normalization: Option<PathBuf>,
    #[serde(default)]
    pub queries: Option<PathBuf>,
    pub gold: PathBuf,
    #[serde(default)]
    pub lexicon: LexiconConfig,
    #[serde(default)]
    pub classifier: TrainConfig,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default = "default_thresholds")]
    pub n_thresholds: Vec<usize>,
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    /// Soft-label and correlation period; the corpus day range when absent.
    #[serde(default)]
    pub period: Option<Period>,
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_folds() -> usize {
    20
}

fn default_thresholds() -> Vec<usize> {
    vec![5, 10, 15, 20]
}

fn default_bin_width() -> f64 {
    0.05
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("bundle")
}

impl PipelineConfig {
    /// Config matching the files written by [`crate::synthgen::write_scenario`].
    pub fn for_scenario(spec: &crate::synthgen::ScenarioSpec) -> Self {
        PipelineConfig {
            inputs: vec!["tweets.jsonl".into()],
            normalization: None,
            queries: Some("queries.txt".into()),
            gold: "gold.csv".into(),
            lexicon: LexiconConfig {
                pro_seeds: "pro_seeds.txt".into(),
                anti_seeds: "anti_seeds.txt".into(),
                ..LexiconConfig::default()
            },
            classifier: TrainConfig::default(),
            cv_folds: default_folds(),
            network: NetworkConfig {
                seeds: "network_seeds.csv".into(),
                ..NetworkConfig::default()
            },
            n_thresholds: default_thresholds(),
            bin_width: default_bin_width(),
            period: None,
            seed: spec.seed,
            output_dir: default_output_dir(),
        }
    }

    /// Hex sha256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    fn referenced_paths(&self) -> Vec<(&'static str, &Path)> {
        let mut out: Vec<(&'static str, &Path)> = self.inputs.iter().map(|p| ("inputs", p.as_path())).collect();
        out.extend(self.normalization.as_deref().map(|p| ("normalization", p)));
        out.extend(self.queries.as_deref().map(|p| ("queries", p)));
        out.push(("gold", &self.gold));
        out.push(("lexicon.pro_seeds", &self.lexicon.pro_seeds));
        out.push(("lexicon.anti_seeds", &self.lexicon.anti_seeds));
        out.push(("network.seeds", &self.network.seeds));
        out
    }

    /// Paths made absolute against `base` (the config file's directory).
    pub fn resolved(&self, base: &Path) -> PipelineConfig {
        let r = |p: &Path| if p.as_os_str().is_empty() { p.to_path_buf() } else { base.join(p) };
        let mut c = self.clone();
        c.inputs = self.inputs.iter().map(|p| r(p)).collect();
        c.normalization = self.normalization.as_deref().map(r);
        c.queries = self.queries.as_deref().map(r);
        c.gold = r(&self.gold);
        c.lexicon.pro_seeds = r(&self.lexicon.pro_seeds);
        c.lexicon.anti_seeds = r(&self.lexicon.anti_seeds);
        c.network.seeds = r(&self.network.seeds);
        c.output_dir = r(&self.output_dir);
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.inputs.is_empty() {
            return bad("inputs is empty".into());
        }
        for (field, p) in self.referenced_paths() {
            if p.as_os_str().is_empty() {
                return bad(format!("{field} is not set"));
            }
            if !p.is_file() {
                return bad(format!("{field}: {} does not exist", p.display()));
            }
        }
        if self.cv_folds < 2 {
            return bad("cv_folds must be >= 2".into());
        }
        if let Some(n) = self.n_thresholds.iter().find(|n| **n < 3) {
            return bad(format!("n_thresholds entries must be >= 3, got {n}"));
        }
        if !(self.bin_width > 0.0 && self.bin_width <= 1.0) {
            return bad(format!("bin_width must lie in (0, 1], got {}", self.bin_width));
        }
        if self.network.window < 1 || self.network.step < 1 {
            return bad("network.window and network.step must be >= 1".into());
        }
        if self.network.q_reports != QScope::None && self.network.surrogates.n_surr < 2 {
            return bad("network.surrogates.n_surr must be >= 2".into());
        }
        if let Some(p) = self.period {
            if p.from > p.to {
                return bad(format!("period {}..{} is empty", p.from, p.to));
            }
        }
        Ok(())
    }
}

/// Load a config file, apply overrides, resolve paths against the file's
/// directory and validate.
pub fn load_config(path: &Path, seed: Option<u64>, output_dir: Option<PathBuf>) -> Result<PipelineConfig> {
    let src = io::read_to_string(path).map_err(|e| Error::Config(e.to_string()))?;
    let bad = |e: serde_json::Error| Error::Config(format!("{}: {e}", path.display()));
    let mut value: serde_json::Value = serde_json::from_str(&src).map_err(bad)?;
    if let (Some(s), Some(obj)) = (seed, value.as_object_mut()) {
        obj.insert("seed".into(), s.into());
    }
    let raw: PipelineConfig = serde_json::from_value(value).map_err(bad)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut cfg = raw.resolved(base);
    if let Some(d) = output_dir {
        cfg.output_dir = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Named random streams derived from the master seed.
pub fn stream_seeds(seed: u64) -> BTreeMap<&'static str, u64> {
    ["cv", "train", "lp", "surrogates"]
        .into_iter()
        .map(|n| (n, rng::stream_seed(seed, n)))
        .collect()
}

/// Tracks the files a stage writes.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Outputs {
            dir: dir.into(),
            files: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }
}

/// `name_tag.ext`, or `name.ext` without a tag.
pub fn tagged(name: &str, ext: &str, tag: Option<&str>) -> String {
    match tag {
        Some(t) => format!("{name}_{t}.{ext}"),
        None => format!("{name}.{ext}"),
    }
}

/// Period plus a config-hash prefix.
pub fn output_tag(period: Period, config_hash: &str) -> String {
    format!("{}-{}_{}", period.from.format("%Y%m%d"), period.to.format("%Y%m%d"), &config_hash[..12])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestSummary {
    pub records: usize,
    pub duplicates: usize,
    pub rejected: usize,
    pub after_filter: usize,
    pub queries: usize,
}

pub fn ingest(inputs: &[PathBuf], rules: Option<&NormalizationRules>) -> Result<(Corpus, IngestStats)> {
    let (c, stats) = io::load_corpus(inputs)?;
    Ok(match rules {
        Some(r) => (c.normalized(r), stats),
        None => (c, stats),
    })
}

pub fn load_rules(path: &Path) -> Result<NormalizationRules> {
    NormalizationRules::from_json(&io::read_to_string(path)?)
}

pub fn load_queries(path: &Path, rules: Option<&NormalizationRules>) -> Result<Vec<crate::corpus::Query>> {
    let none = NormalizationRules::default();
    parse_query_file(&io::read_to_string(path)?, rules.unwrap_or(&none))
}

pub fn load_terms(path: &Path) -> Result<BTreeSet<String>> {
    Ok(io::parse_term_list(&io::read_to_string(path)?).into_iter().collect())
}

pub fn load_seeds(path: &Path) -> Result<SeedList> {
    SeedList::read_csv(io::open(path)?)
}

/// Lexicon expansion, heuristic labels and burst ranking.
pub fn lexicon_stage(c: &Corpus, cfg: &LexiconConfig, out: &mut Outputs) -> Result<Expansion> {
    let pro = load_terms(&cfg.pro_seeds)?;
    let anti = load_terms(&cfg.anti_seeds)?;
    let exp = expand_lexicons(c, &pro, &anti, cfg.iterations, cfg.min_count)?;
    io::write_json(&out.path("lexicon.json"), &exp.lexicon)?;
    let labels = label_corpus(c, &exp.lexicon);
    let labeled = labels.iter().filter(|l| **l != HeuristicLabel::Unlabeled).count();
    io::write_csv_with_header(
        &out.path("lexicon_steps.csv"),
        &["iteration", "labeled_pro", "labeled_anti", "added_pro", "added_anti"],
        exp.steps
            .iter()
            .map(|s| (s.iteration, s.labeled_pro, s.labeled_anti, s.added_pro, s.added_anti)),
    )?;
    io::write_csv_with_header(
        &out.path("heuristic_labels.csv"),
        &["tweet_id", "label"],
        c.tweets().iter().zip(&labels).map(|(t, l)| {
            let l = match l {
                HeuristicLabel::Pro => "pro",
                HeuristicLabel::Anti => "anti",
                HeuristicLabel::Unlabeled => "unlabeled",
            };
            (t.id(), l)
        }),
    )?;
    log::info!(
        "lexicon: {} pro / {} anti terms, {labeled} of {} tweets labeled",
        exp.lexicon.len(crate::lexicon::Side::Pro),
        exp.lexicon.len(crate::lexicon::Side::Anti),
        c.len()
    );
    let bursts = if c.is_empty() {
        Vec::new()
    } else {
        burst_hashtags(c, cfg.burst_k.max(1), cfg.burst_ratio_min)?
    };
    let mut rows = Vec::new();
    for (rank, b) in bursts.iter().enumerate() {
        for (day, n) in &b.daily {
            rows.push((rank + 1, &b.hashtag, *day, *n, b.peak_day, b.peak_count, b.burst_ratio));
        }
    }
    io::write_csv_with_header(
        &out.path("burst_hashtags.csv"),
        &["rank", "hashtag", "day", "count", "peak_day", "peak_count", "burst_ratio"],
        rows,
    )?;
    Ok(exp)
}

/// Cross-validation on the gold set, then a final model on all of it.
pub fn train_stage(
    c: &Corpus,
    gold_path: &Path,
    folds: usize,
    cfg: &TrainConfig,
    seed: u64,
    out: &mut Outputs,
) -> Result<(StanceModel, EvalReport)> {
    let gold = read_gold(io::open(gold_path)?)?;
    let data = gold_examples(c, &gold);
    if data.is_empty() {
        return Err(Error::Data("no gold tweet occurs in the corpus".into()));
    }
    let streams = stream_seeds(seed);
    let (report, outcomes) = cross_validate_detailed(&data, folds, streams["cv"], cfg)?;
    let leaks = leakage_audit(&data, &outcomes);
    if leaks > 0 {
        return Err(Error::Data(format!("{leaks} features leaked from test folds into vocabularies")));
    }
    let model = train(&data, streams["train"], cfg)?;
    io::write_json(&out.path("cv_report.json"), &report)?;
    std::fs::write(out.path("model.json"), model.to_json()?).map_err(|e| Error::io(out.dir().join("model.json"), e))?;
    log::info!("cv: mean accuracy {:.4} (sd {:.4})", report.mean_accuracy, report.std_accuracy);
    Ok((model, report))
}

/// Number of (fold, feature) pairs where a fold's vocabulary holds a feature
/// that occurs only in that fold's test split.
pub fn leakage_audit<T: std::borrow::Borrow<crate::corpus::Tweet>>(
    data: &[(T, StanceClass)],
    outcomes: &[crate::classifier::FoldOutcome],
) -> usize {
    let mut leaks = 0;
    for o in outcomes {
        let test: BTreeSet<usize> = o.test.iter().copied().collect();
        let mut train_feats: BTreeSet<String> = BTreeSet::new();
        for (i, (t, _)) in data.iter().enumerate() {
            if !test.contains(&i) {
                let fv = crate::classifier::features_of_tokens(&t.borrow().tokens().to_vec(), o.model.config().features);
                train_feats.extend(fv.into_keys());
            }
        }
        leaks += o.model.vocabulary().iter().filter(|f| !train_feats.contains(*f)).count();
    }
    leaks
}

pub fn load_model(path: &Path) -> Result<StanceModel> {
    StanceModel::from_json(&io::read_to_string(path)?)
}

/// Predictions and daily class proportions.
pub fn classify_stage(c: &Corpus, model: &StanceModel, out: &mut Outputs) -> Result<Vec<StanceClass>> {
    let preds = classify_corpus(c, model);
    io::write_csv_with_header(
        &out.path("predictions.csv"),
        &["tweet_id", "class"],
        c.tweets().iter().zip(&preds).map(|(t, p)| (t.id(), p.as_str())),
    )?;
    let daily = daily_proportions_from_predictions(c, &preds)?;
    io::write_csv_with_header(
        &out.path("daily_stance.csv"),
        &["day", "pro", "neutral", "anti", "frac_pro", "frac_neutral", "frac_anti"],
        daily.iter().map(|d| {
            let f = d.fractions.map_or([None; 3], |f| f.map(Some));
            (d.day, d.counts[0], d.counts[1], d.counts[2], f[0], f[1], f[2])
        }),
    )?;
    Ok(preds)
}

/// Predictions aligned with `c` from a `tweet_id,class` file.
pub fn read_predictions(path: &Path, c: &Corpus) -> Result<Vec<StanceClass>> {
    let rows = read_gold(io::open(path)?)?;
    let by_id: HashMap<String, StanceClass> = rows.into_iter().collect();
    c.tweets()
        .iter()
        .map(|t| {
            by_id
                .get(t.id())
                .copied()
                .ok_or_else(|| Error::Data(format!("no prediction for tweet {}", t.id())))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct NetworkRun {
    pub snapshots: Vec<GraphSnapshot>,
    pub steps: Vec<ChainStep>,
}

/// Snapshots, giant components and the warm-started propagation chain.
pub fn propagate(c: &Corpus, seeds: &SeedList, cfg: &NetworkConfig, seed: u64) -> Result<NetworkRun> {
    let raw = build_snapshots(c, cfg.window, cfg.step)?;
    let (snapshots, steps) = propagate_chain(raw, seeds, stream_seeds(seed)["lp"], cfg.max_sweeps)?;
    Ok(NetworkRun { snapshots, steps })
}

#[derive(Debug, Clone, Serialize)]
pub struct QSummary {
    pub snapshots: usize,
    pub mean_q: Option<f64>,
    pub std_q: Option<f64>,
    pub reports: Vec<QReport>,
}

/// Per-snapshot statistics, labels and modularity significance.
pub fn network_stage(run: &NetworkRun, seeds: &SeedList, cfg: &NetworkConfig, seed: u64, out: &mut Outputs) -> Result<QSummary> {
    let by_day: BTreeMap<NaiveDate, &GraphSnapshot> = run.snapshots.iter().map(|g| (g.day, g)).collect();
    let mut rows = Vec::with_capacity(run.steps.len());
    let mut qs = Vec::new();
    for s in &run.steps {
        let g = by_day.get(&s.day).filter(|_| s.skipped.is_none());
        let stats = g.map(|g| graph_stats(g));
        let q = match g {
            Some(g) if g.edge_count() > 0 => Some(modularity(g, g.labels())?),
            _ => None,
        };
        qs.extend(q);
        let sizes = g.map(|g| {
            let isl = g.labels().iter().filter(|l| **l == Some(Leaning::Islamist)).count();
            (g.node_count() - isl, isl)
        });
        rows.push((
            s.day,
            s.nodes_before_giant,
            s.nodes,
            stats.map(|x| x.edges),
            g.map(|g| g.total_weight()),
            stats.map(|x| x.density),
            stats.map(|x| x.mean_degree),
            stats.map(|x| x.mean_clustering),
            stats.and_then(|x| x.assortativity),
            sizes.map(|x| x.0),
            sizes.map(|x| x.1),
            q,
            s.converged,
            s.sweeps,
            s.warm_started,
            s.skipped.clone(),
        ));
    }
    io::write_csv_with_header(
        &out.path("network.csv"),
        &[
            "day",
            "nodes_before_giant",
            "nodes",
            "edges",
            "total_weight",
            "density",
            "mean_degree",
            "mean_clustering",
            "assortativity",
            "secular",
            "islamist",
            "modularity",
            "converged",
            "sweeps",
            "warm_started",
            "skipped",
        ],
        rows,
    )?;
    write_snapshot_labels(&out.path("snapshot_labels.csv"), &run.snapshots)?;

    let targets: Vec<&GraphSnapshot> = match cfg.q_reports {
        QScope::None => Vec::new(),
        QScope::First => run.snapshots.iter().take(1).collect(),
        QScope::All => run.snapshots.iter().collect(),
    };
    let base = stream_seeds(seed)["surrogates"];
    let mut reports = Vec::with_capacity(targets.len());
    for g in targets {
        let rs = rng::stream_seed(base, &g.day.to_string());
        reports.push(surrogate_zscore(g, seeds, &cfg.surrogates, rs)?);
    }
    let (mean_q, std_q) = if qs.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_and_sample_std(&qs);
        (Some(m), Some(s))
    };
    let summary = QSummary {
        snapshots: run.snapshots.len(),
        mean_q,
        std_q,
        reports,
    };
    io::write_json(&out.path("q_reports.json"), &summary)?;
    Ok(summary)
}

/// `day,author_id,leaning,is_seed,reposts` rows for every labeled snapshot.
pub fn write_snapshot_labels(path: &Path, snapshots: &[GraphSnapshot]) -> Result<()> {
    let mut rows = Vec::new();
    for g in snapshots {
        let strength = g.out_strength();
        for (i, node) in g.nodes().iter().enumerate() {
            let Some(l) = g.labels()[i] else { continue };
            rows.push((g.day, node.as_str(), l.index(), g.seed_flags()[i], strength[i]));
        }
    }
    io::write_csv_with_header(path, &["day", "author_id", "leaning", "is_seed", "reposts"], rows)
}

pub fn read_snapshot_labels(path: &Path) -> Result<Vec<SnapshotLabels>> {
    #[derive(Deserialize)]
    struct Row {
        day: NaiveDate,
        author_id: String,
        leaning: usize,
        reposts: u64,
    }
    let mut rdr = csv::Reader::from_reader(io::open(path)?);
    let mut out: Vec<SnapshotLabels> = Vec::new();
    for (i, r) in rdr.deserialize::<Row>().enumerate() {
        let r = r?;
        let leaning = Leaning::from_index(r.leaning).ok_or_else(|| Error::Record {
            line: i + 2,
            reason: format!("leaning must be 0 or 1, got {}", r.leaning),
        })?;
        match out.last_mut() {
            Some(s) if s.day == r.day => s.entries.push((r.author_id, leaning, r.reposts)),
            _ => out.push(SnapshotLabels {
                day: r.day,
                entries: vec![(r.author_id, leaning, r.reposts)],
            }),
        }
    }
    Ok(out)
}

/// Community sizes per snapshot and network switch ratios between
/// consecutive snapshots.
pub fn communities_stage(run: &NetworkRun, tag: Option<&str>, out: &mut Outputs) -> Result<()> {
    let sizes = community_sizes(&run.snapshots)?;
    io::write_csv_with_header(
        &out.path(&tagged("community_sizes", "csv", tag)),
        &["day", "secular", "islamist", "size"],
        sizes.iter().map(|s| (s.day, s.secular, s.islamist, s.size)),
    )?;
    let series = network_switch_series(&run.snapshots);
    io::write_csv_with_header(
        &out.path(&tagged("network_switches", "csv", tag)),
        &["day", "common", "changed", "ratio", "secular_to_islamist", "islamist_to_secular"],
        series.iter().map(|(d, r)| {
            (
                d,
                r.map(|r| r.common),
                r.map(|r| r.changed),
                r.map(|r| r.ratio),
                r.and_then(|r| r.secular_to_islamist),
                r.and_then(|r| r.islamist_to_secular),
            )
        }),
    )
}

/// Content switches for every threshold; per-user verdicts for the smallest.
pub fn switches_stage(c: &Corpus, preds: &[StanceClass], thresholds: &[usize], tag: Option<&str>, out: &mut Outputs) -> Result<()> {
    let mut reports = Vec::with_capacity(thresholds.len());
    for &n in thresholds {
        reports.push(content_switches_from_predictions(c, preds, n)?);
    }
    io::write_csv_with_header(
        &out.path(&tagged("content_switches", "csv", tag)),
        &["n", "users_examined", "pro_to_anti", "anti_to_pro", "switch_fraction"],
        reports
            .iter()
            .map(|r| (r.n_threshold, r.users_examined, r.pro_to_anti, r.anti_to_pro, r.switch_fraction)),
    )?;
    if let Some(r) = reports.iter().min_by_key(|r| r.n_threshold) {
        let mut users: Vec<_> = r.users.iter().collect();
        users.sort_by(|a, b| a.user.cmp(&b.user));
        io::write_csv_with_header(
            &out.path(&tagged("switch_users", "csv", tag)),
            &["user", "tweets", "first_score", "last_score", "verdict"],
            users.iter().map(|u| {
                let v = match u.verdict {
                    SwitchVerdict::NoSwitch => "no_switch",
                    SwitchVerdict::ProToAnti => "pro_to_anti",
                    SwitchVerdict::AntiToPro => "anti_to_pro",
                };
                (&u.user, u.tweets, u.first_score, u.last_score, v)
            }),
        )?;
    }
    Ok(())
}

/// Soft labels and their histogram; returns the table.
pub fn softlabels_stage(
    labels: &[SnapshotLabels],
    period: Period,
    bin_width: f64,
    tag: Option<&str>,
    out: &mut Outputs,
) -> Result<crate::dynamics::SoftLabelTable> {
    let tbl = soft_labels(labels, period.from, period.to)?;
    io::write_csv_with_header(
        &out.path(&tagged("soft_labels", "csv", tag)),
        &["author_id", "l", "snapshots_present", "islamist", "strength"],
        tbl.users
            .iter()
            .map(|(u, s)| (u, s.l, s.snapshots_present, s.islamist, s.strength)),
    )?;
    let hist = leaning_histogram(&tbl, bin_width)?;
    io::write_csv_with_header(
        &out.path(&tagged("leaning_histogram", "csv", tag)),
        &["lo", "hi", "users", "mean_strength"],
        hist.iter().map(|b| (b.lo, b.hi, b.users, b.mean_strength)),
    )?;
    Ok(tbl)
}

#[derive(Debug, Clone, Serialize)]
pub struct DynamicsSummary {
    pub period: Period,
    pub correlation_r: Option<f64>,
    pub correlation_n: usize,
    pub correlation_error: Option<String>,
    /// First day on which Anti outnumbers Pro (or the reverse) after a single sign change.
    pub stance_crossover: Option<crate::dynamics::Crossover>,
    pub community_crossover: Option<crate::dynamics::Crossover>,
}

/// Content/network correlation over the period.
pub fn correlate_stage(
    c: &Corpus,
    preds: &[StanceClass],
    tbl: &crate::dynamics::SoftLabelTable,
    tag: Option<&str>,
    out: &mut Outputs,
) -> Result<Option<crate::dynamics::Correlation>> {
    let polarity = content_polarity(c, preds)?;
    match content_network_correlation(&polarity, tbl) {
        Ok(corr) => {
            io::write_csv_with_header(
                &out.path(&tagged("correlation", "csv", tag)),
                &["author_id", "content_polarity", "soft_label"],
                corr.pairs.iter().map(|(u, x, y)| (u, x, y)),
            )?;
            Ok(Some(corr))
        }
        Err(Error::Data(reason)) => {
            log::warn!("correlation skipped: {reason}");
            io::write_csv_with_header(
                &out.path(&tagged("correlation", "csv", tag)),
                &["author_id", "content_polarity", "soft_label"],
                Vec::<(String, f64, f64)>::new(),
            )?;
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Day-wise difference series for crossover detection.
pub fn stance_difference(c: &Corpus, preds: &[StanceClass]) -> Result<Vec<(NaiveDate, f64)>> {
    Ok(daily_proportions_from_predictions(c, preds)?
        .into_iter()
        .filter_map(|d| d.fractions.map(|f| (d.day, f[0] - f[2])))
        .collect())
}

pub fn community_difference(snapshots: &[GraphSnapshot]) -> Result<Vec<(NaiveDate, f64)>> {
    Ok(community_sizes(snapshots)?
        .into_iter()
        .map(|s| (s.day, s.secular as f64 - s.islamist as f64))
        .collect())
}

/// The same series from a `community_sizes` CSV.
pub fn read_community_difference(path: &Path) -> Result<Vec<(NaiveDate, f64)>> {
    #[derive(Deserialize)]
    struct Row {
        day: NaiveDate,
        secular: usize,
        islamist: usize,
    }
    let mut rdr = csv::Reader::from_reader(io::open(path)?);
    let mut out = Vec::new();
    for r in rdr.deserialize::<Row>() {
        let r = r?;
        out.push((r.day, r.secular as f64 - r.islamist as f64));
    }
    Ok(out)
}

/// Correlation coefficient and both crossovers as `dynamics.json`. Without a
/// community series the community crossover is absent.
pub fn summary_stage(
    period: Period,
    corr: Option<&crate::dynamics::Correlation>,
    stance: &[(NaiveDate, f64)],
    community: Option<&[(NaiveDate, f64)]>,
    tag: Option<&str>,
    out: &mut Outputs,
) -> Result<DynamicsSummary> {
    let summary = DynamicsSummary {
        period,
        correlation_r: corr.map(|c| c.r),
        correlation_n: corr.map_or(0, |c| c.n),
        correlation_error: corr.is_none().then(|| "degenerate or too few shared users".to_string()),
        stance_crossover: crossover(stance),
        community_crossover: community.and_then(crossover),
    };
    io::write_json(&out.path(&tagged("dynamics", "json", tag)), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn digest(path: &Path, base: &Path) -> Result<FileDigest> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let rel = path.strip_prefix(base).unwrap_or(path);
    Ok(FileDigest {
        path: rel.to_string_lossy().replace('\\', "/"),
        bytes: data.len() as u64,
        sha256: hex::encode(Sha256::digest(&data)),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub seconds: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub rng_streams: BTreeMap<String, u64>,
    pub tag: Option<String>,
    pub inputs: Vec<FileDigest>,
    pub stages: Vec<StageRecord>,
    /// Every file written besides the manifest itself.
    pub outputs: Vec<FileDigest>,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
}

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
#[error("stage {stage} failed: {source}")]
pub struct PipelineError {
    pub stage: String,
    #[source]
    pub source: Error,
}

impl PipelineError {
    /// 2 for configuration problems, 4 for non-convergence, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.source {
            Error::Config(_) => 2,
            Error::NonConvergence(_) => 4,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Treat a propagation that hit `max_sweeps` as a failure.
    pub strict: bool,
}

struct Runner {
    out: Outputs,
    stages: Vec<StageRecord>,
}

impl Runner {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Outputs) -> Result<T>) -> Result<T, PipelineError> {
        let t0 = Instant::now();
        let r = f(&mut self.out);
        self.stages.push(StageRecord {
            name: name.to_owned(),
            seconds: t0.elapsed().as_secs_f64(),
            ok: r.is_ok(),
        });
        log::info!("stage {name}: {:.2}s", t0.elapsed().as_secs_f64());
        r.map_err(|source| PipelineError {
            stage: name.to_owned(),
            source,
        })
    }
}

/// Run every stage and write the bundle plus `manifest.json` into
/// `cfg.output_dir`. On failure the manifest lists the completed stages and
/// names the failed one.
pub fn run(cfg: &PipelineConfig, opts: RunOptions) -> Result<Manifest, PipelineError> {
    let as_config = |source| PipelineError {
        stage: "config".into(),
        source,
    };
    cfg.validate().map_err(as_config)?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| as_config(Error::Config(format!("cannot create {}: {e}", cfg.output_dir.display()))))?;
    let hash = cfg.hash();
    let mut manifest = Manifest {
        tool: "polardyn".into(),
        version: VERSION.into(),
        config_hash: hash.clone(),
        seed: cfg.seed,
        rng_streams: stream_seeds(cfg.seed).into_iter().map(|(k, v)| (k.to_owned(), v)).collect(),
        tag: None,
        inputs: Vec::new(),
        stages: Vec::new(),
        outputs: Vec::new(),
        failed_stage: None,
        error: None,
    };
    let mut runner = Runner {
        out: Outputs::new(&cfg.output_dir),
        stages: Vec::new(),
    };
    let result = run_stages(cfg, opts, &hash, &mut runner, &mut manifest);
    manifest.stages = runner.stages;
    let mut seen = BTreeSet::new();
    for f in runner.out.files() {
        if seen.insert(f.clone()) && f.is_file() {
            if let Ok(d) = digest(f, &cfg.output_dir) {
                manifest.outputs.push(d);
            }
        }
    }
    if let Err(e) = &result {
        manifest.failed_stage = Some(e.stage.clone());
        manifest.error = Some(e.source.to_string());
    }
    let written = io::write_json(&cfg.output_dir.join(MANIFEST), &manifest);
    result?;
    written.map_err(|source| PipelineError {
        stage: "manifest".into(),
        source,
    })?;
    Ok(manifest)
}

fn run_stages(
    cfg: &PipelineConfig,
    opts: RunOptions,
    hash: &str,
    r: &mut Runner,
    manifest: &mut Manifest,
) -> Result<(), PipelineError> {
    let mut inputs = Vec::new();
    for p in &cfg.inputs {
        let base = p.parent().unwrap_or(Path::new(""));
        inputs.push(digest(p, base).map_err(|source| PipelineError {
            stage: "ingest".into(),
            source,
        })?);
    }
    manifest.inputs = inputs;

    let rules = r.stage("ingest", |_| cfg.normalization.as_deref().map(load_rules).transpose())?;
    let (corpus, stats) = r.stage("ingest", |_| ingest(&cfg.inputs, rules.as_ref()))?;
    let (corpus, n_queries) = r.stage("filter", |out| {
        let (c, n) = match &cfg.queries {
            Some(q) => {
                let qs = load_queries(q, rules.as_ref())?;
                (filter_corpus(&corpus, &qs)?, qs.len())
            }
            None => (corpus, 0),
        };
        let summary = IngestSummary {
            records: stats.records,
            duplicates: stats.duplicates,
            rejected: stats.rejected,
            after_filter: c.len(),
            queries: n,
        };
        io::write_json(&out.path("ingest.json"), &summary)?;
        io::save_jsonl(&c, &out.path("corpus.jsonl"))?;
        Ok((c, n))
    })?;
    log::info!("{} tweets after {n_queries} queries", corpus.len());
    let Some((first, last)) = corpus.day_range() else {
        return Err(PipelineError {
            stage: "filter".into(),
            source: Error::Data("corpus is empty after filtering".into()),
        });
    };
    let period = cfg.period.unwrap_or(Period { from: first, to: last });
    let tag = output_tag(period, hash);
    manifest.tag = Some(tag.clone());

    r.stage("lexicon", |out| lexicon_stage(&corpus, &cfg.lexicon, out))?;
    let (model, _) = r.stage("train", |out| train_stage(&corpus, &cfg.gold, cfg.cv_folds, &cfg.classifier, cfg.seed, out))?;
    let preds = r.stage("classify", |out| classify_stage(&corpus, &model, out))?;

    let seeds = r.stage("network", |_| load_seeds(&cfg.network.seeds))?;
    let net = r.stage("network", |_| {
        let net = propagate(&corpus, &seeds, &cfg.network, cfg.seed)?;
        if net.snapshots.is_empty() {
            return Err(Error::Data("no snapshot could be labeled".into()));
        }
        if let Some(s) = net.steps.iter().find(|s| s.skipped.is_none() && !s.converged) {
            let msg = format!("propagation on {} stopped after {} sweeps", s.day, s.sweeps);
            if opts.strict {
                return Err(Error::NonConvergence(msg));
            }
            log::warn!("{msg}");
        }
        Ok(net)
    })?;
    r.stage("qreports", |out| network_stage(&net, &seeds, &cfg.network, cfg.seed, out))?;

    r.stage("dynamics", |out| {
        let t = Some(tag.as_str());
        communities_stage(&net, t, out)?;
        switches_stage(&corpus, &preds, &cfg.n_thresholds, t, out)?;
        let labels: Vec<SnapshotLabels> = net.snapshots.iter().map(GraphSnapshot::label_summary).collect();
        let tbl = softlabels_stage(&labels, period, cfg.bin_width, t, out)?;
        let corr = correlate_stage(&corpus, &preds, &tbl, t, out)?;
        let stance = stance_difference(&corpus, &preds)?;
        let community = community_difference(&net.snapshots)?;
        summary_stage(period, corr.as_ref(), &stance, Some(&community), t, out).map(drop)
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_and_names() {
        let p = Period {
            from: NaiveDate::from_ymd_opt(2013, 6, 21).unwrap(),
            to: NaiveDate::from_ymd_opt(2013, 7, 10).unwrap(),
        };
        let tag = output_tag(p, &"ab".repeat(32));
        assert_eq!(tag, "20130621-20130710_abababababab");
        assert_eq!(tagged("soft_labels", "csv", Some(&tag)), format!("soft_labels_{tag}.csv"));
        assert_eq!(tagged("x", "json", None), "x.json");
    }

    #[test]
    fn hash_ignores_output_dir_but_not_seed() {
        let spec = crate::synthgen::ScenarioSpec::default();
        let a = PipelineConfig::for_scenario(&spec);
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn config_requires_seed_and_existing_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"inputs": ["t.jsonl"], "gold": "g.csv"}"#).unwrap();
        let e = load_config(&path, None, None).unwrap_err();
        assert!(matches!(e, Error::Config(_)), "{e}");
        assert!(e.to_string().contains("seed"), "{e}");
        let e = load_config(&path, Some(1), None).unwrap_err();
        assert!(e.to_string().contains("does not exist"), "{e}");
    }
}
