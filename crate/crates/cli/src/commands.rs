use std::path::{Path, PathBuf};

use polardyn::classifier::TrainConfig;
use polardyn::corpus::{filter_corpus, Corpus};
use polardyn::netdyn::SurrogateConfig;
use polardyn::pipeline::{self as pl, IngestSummary, NetworkConfig, Outputs, Period};
use polardyn::synthgen::{self, ScenarioSpec};
use polardyn::{io, Error, Result};

use crate::args::*;

fn require<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            return Err(Error::Config(format!("{} does not exist", p.display())));
        }
    }
    Ok(())
}

fn outputs(dir: &OutDir) -> Result<Outputs> {
    std::fs::create_dir_all(&dir.out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.out.display())))?;
    Ok(Outputs::new(&dir.out))
}

fn report_files(out: &Outputs) {
    for f in out.files() {
        println!("{}", f.display());
    }
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    Ok(pl::ingest(&[path.to_path_buf()], None)?.0)
}

fn period_or(from: Option<chrono::NaiveDate>, to: Option<chrono::NaiveDate>, range: Option<(chrono::NaiveDate, chrono::NaiveDate)>) -> Result<Period> {
    let (lo, hi) = match (from, to, range) {
        (Some(f), Some(t), _) => (f, t),
        (f, t, Some((a, b))) => (f.unwrap_or(a), t.unwrap_or(b)),
        _ => return Err(Error::Data("no days to derive a period from; pass --from and --to".into())),
    };
    if lo > hi {
        return Err(Error::Config(format!("period {lo}..{hi} is empty")));
    }
    Ok(Period { from: lo, to: hi })
}

pub fn ingest(a: &IngestArgs) -> Result<()> {
    require(a.inputs.iter().map(PathBuf::as_path).chain(a.rules.as_deref()))?;
    let rules = a.rules.as_deref().map(pl::load_rules).transpose()?;
    let (c, stats) = pl::ingest(&a.inputs, rules.as_ref())?;
    io::save_jsonl(&c, &a.out)?;
    if let Some(p) = &a.summary {
        let s = IngestSummary {
            records: stats.records,
            duplicates: stats.duplicates,
            rejected: stats.rejected,
            after_filter: c.len(),
            queries: 0,
        };
        io::write_json(p, &s)?;
    }
    eprintln!(
        "{} records, {} duplicates, {} rejected; {} tweets written",
        stats.records,
        stats.duplicates,
        stats.rejected,
        c.len()
    );
    Ok(())
}

pub fn filter(a: &FilterArgs) -> Result<()> {
    require(a.inputs.iter().map(PathBuf::as_path).chain([a.queries.as_path()]).chain(a.rules.as_deref()))?;
    let rules = a.rules.as_deref().map(pl::load_rules).transpose()?;
    let (c, _) = io::load_corpus(&a.inputs)?;
    let queries = pl::load_queries(&a.queries, rules.as_ref())?;
    let kept = filter_corpus(&c, &queries)?;
    io::save_jsonl(&kept, &a.out)?;
    if let Some(p) = &a.summary {
        let mut s: IngestSummary = serde_json::from_str(&io::read_to_string(p)?)?;
        s.after_filter = kept.len();
        s.queries = queries.len();
        io::write_json(p, &s)?;
    }
    eprintln!("{} of {} tweets match {} queries", kept.len(), c.len(), queries.len());
    Ok(())
}

pub fn lexicon(a: &LexiconArgs) -> Result<()> {
    require([a.corpus.as_path(), &a.pro_seeds, &a.anti_seeds])?;
    let c = load_corpus(&a.corpus)?;
    let cfg = pl::LexiconConfig {
        pro_seeds: a.pro_seeds.clone(),
        anti_seeds: a.anti_seeds.clone(),
        iterations: a.iterations,
        min_count: a.min_count,
        burst_k: a.burst_k,
        burst_ratio_min: a.burst_ratio_min,
    };
    let mut out = outputs(&a.out)?;
    pl::lexicon_stage(&c, &cfg, &mut out)?;
    report_files(&out);
    Ok(())
}

pub fn train(a: &TrainArgs) -> Result<()> {
    require([a.corpus.as_path(), &a.gold].into_iter().chain(a.classifier.as_deref()))?;
    if a.folds < 2 {
        return Err(Error::Config("--folds must be >= 2".into()));
    }
    let cfg: TrainConfig = match &a.classifier {
        Some(p) => serde_json::from_str(&io::read_to_string(p)?).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        None => TrainConfig::default(),
    };
    let c = load_corpus(&a.corpus)?;
    let mut out = outputs(&a.out)?;
    let (_, report) = pl::train_stage(&c, &a.gold, a.folds, &cfg, a.seed, &mut out)?;
    eprintln!("{}-fold accuracy {:.4} (sd {:.4})", a.folds, report.mean_accuracy, report.std_accuracy);
    report_files(&out);
    Ok(())
}

pub fn classify(a: &ClassifyArgs) -> Result<()> {
    require([a.corpus.as_path(), &a.model])?;
    let c = load_corpus(&a.corpus)?;
    let model = pl::load_model(&a.model)?;
    let mut out = outputs(&a.out)?;
    pl::classify_stage(&c, &model, &mut out)?;
    report_files(&out);
    Ok(())
}

fn network_config(w: &Windowing, seeds: &Path) -> Result<NetworkConfig> {
    if w.window < 1 || w.step < 1 {
        return Err(Error::Config("--window and --step must be >= 1".into()));
    }
    Ok(NetworkConfig {
        seeds: seeds.to_path_buf(),
        window: w.window,
        step: w.step,
        max_sweeps: w.max_sweeps,
        ..NetworkConfig::default()
    })
}

fn propagate(corpus: &Path, seeds: &Path, cfg: &NetworkConfig, seed: u64, strict: bool) -> Result<(pl::NetworkRun, polardyn::netdyn::SeedList)> {
    let c = load_corpus(corpus)?;
    let seeds = pl::load_seeds(seeds)?;
    let run = pl::propagate(&c, &seeds, cfg, seed)?;
    if let Some(s) = run.steps.iter().find(|s| s.skipped.is_none() && !s.converged) {
        let msg = format!("propagation on {} stopped after {} sweeps", s.day, s.sweeps);
        if strict {
            return Err(Error::NonConvergence(msg));
        }
        log::warn!("{msg}");
    }
    Ok((run, seeds))
}

pub fn network(a: &NetworkArgs, strict: bool) -> Result<()> {
    require([a.corpus.as_path(), &a.seeds])?;
    let mut cfg = network_config(&a.windowing, &a.seeds)?;
    cfg.surrogates = SurrogateConfig {
        n_surr: a.n_surr,
        swaps_per_edge: a.swaps_per_edge,
        max_sweeps: a.windowing.max_sweeps,
        ..SurrogateConfig::default()
    };
    cfg.q_reports = a.q_reports.into();
    if cfg.q_reports != pl::QScope::None && a.n_surr < 2 {
        return Err(Error::Config("--n-surr must be >= 2".into()));
    }
    let (run, seeds) = propagate(&a.corpus, &a.seeds, &cfg, a.seed, strict)?;
    let mut out = outputs(&a.out)?;
    let q = pl::network_stage(&run, &seeds, &cfg, a.seed, &mut out)?;
    eprintln!("{} labeled snapshots, mean Q {:?}", q.snapshots, q.mean_q);
    report_files(&out);
    Ok(())
}

pub fn communities(a: &CommunitiesArgs, strict: bool) -> Result<()> {
    require([a.corpus.as_path(), &a.seeds])?;
    let cfg = network_config(&a.windowing, &a.seeds)?;
    let (run, _) = propagate(&a.corpus, &a.seeds, &cfg, a.seed, strict)?;
    let mut out = outputs(&a.out)?;
    pl::communities_stage(&run, a.tag.as_deref(), &mut out)?;
    report_files(&out);
    Ok(())
}

pub fn switches(a: &SwitchesArgs) -> Result<()> {
    require([a.corpus.as_path(), &a.predictions])?;
    if let Some(n) = a.thresholds.iter().find(|n| **n < 3) {
        return Err(Error::Config(format!("--n entries must be >= 3, got {n}")));
    }
    let c = load_corpus(&a.corpus)?;
    let preds = pl::read_predictions(&a.predictions, &c)?;
    let mut out = outputs(&a.out)?;
    pl::switches_stage(&c, &preds, &a.thresholds, a.tag.as_deref(), &mut out)?;
    report_files(&out);
    Ok(())
}

pub fn softlabels(a: &SoftlabelsArgs) -> Result<()> {
    require([a.labels.as_path()])?;
    if !(a.bin_width > 0.0 && a.bin_width <= 1.0) {
        return Err(Error::Config(format!("--bin-width must lie in (0, 1], got {}", a.bin_width)));
    }
    let labels = pl::read_snapshot_labels(&a.labels)?;
    let range = labels.first().zip(labels.last()).map(|(f, l)| (f.day, l.day));
    let period = period_or(a.from, a.to, range)?;
    let mut out = outputs(&a.out)?;
    let tbl = pl::softlabels_stage(&labels, period, a.bin_width, a.tag.as_deref(), &mut out)?;
    eprintln!("{} users over {} snapshots", tbl.users.len(), tbl.snapshots);
    report_files(&out);
    Ok(())
}

pub fn correlate(a: &CorrelateArgs) -> Result<()> {
    require([a.corpus.as_path(), &a.predictions, &a.labels].into_iter().chain(a.communities.as_deref()))?;
    let c = load_corpus(&a.corpus)?;
    let preds = pl::read_predictions(&a.predictions, &c)?;
    let labels = pl::read_snapshot_labels(&a.labels)?;
    let period = period_or(a.from, a.to, c.day_range())?;
    let tbl = polardyn::dynamics::soft_labels(&labels, period.from, period.to)?;
    let community = a.communities.as_deref().map(pl::read_community_difference).transpose()?;
    let mut out = outputs(&a.out)?;
    let tag = a.tag.as_deref();
    let corr = pl::correlate_stage(&c, &preds, &tbl, tag, &mut out)?;
    let stance = pl::stance_difference(&c, &preds)?;
    let s = pl::summary_stage(period, corr.as_ref(), &stance, community.as_deref(), tag, &mut out)?;
    match s.correlation_r {
        Some(r) => eprintln!("r = {r:.4} over {} users", s.correlation_n),
        None => eprintln!("correlation undefined"),
    }
    report_files(&out);
    Ok(())
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let mut spec = match (&a.spec, a.demo) {
        (Some(p), _) => {
            require([p.as_path()])?;
            ScenarioSpec::from_json(&io::read_to_string(p)?).map_err(|e| match e {
                Error::Json(e) => Error::Config(format!("{}: {e}", p.display())),
                e => e,
            })?
        }
        (None, true) => ScenarioSpec::demo(),
        (None, false) => ScenarioSpec::default(),
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let scenario = synthgen::generate(&spec)?;
    let dir = outputs(&a.out)?;
    let files = synthgen::write_scenario(&scenario, dir.dir())?;
    eprintln!("{} tweets from {} users over {} days", scenario.corpus.len(), spec.users, spec.days);
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

pub fn report(a: &ReportArgs, strict: bool) -> std::result::Result<(), pl::PipelineError> {
    let cfg = pl::load_config(&a.config, a.seed, a.out.clone()).map_err(|source| pl::PipelineError {
        stage: "config".into(),
        source,
    })?;
    let m = pl::run(&cfg, pl::RunOptions { strict })?;
    eprintln!(
        "{} outputs in {} (config {})",
        m.outputs.len(),
        cfg.output_dir.display(),
        &m.config_hash[..12]
    );
    println!("{}", cfg.output_dir.join(pl::MANIFEST).display());
    Ok(())
}
