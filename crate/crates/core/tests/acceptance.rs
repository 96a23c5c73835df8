//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test -p polardyn --test acceptance`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;
use std::time::{Duration, Instant};

use chrono::{NaiveDate, TimeZone, Utc};
use polardyn::classifier::{classify_corpus, cross_validate_detailed, gold_examples, train, StanceClass, TrainConfig};
use polardyn::corpus::{parse_query, Corpus, NormalizationRules, Tweet};
use polardyn::dynamics::{content_network_correlation, content_polarity, content_switches_from_predictions, crossover, network_switch_ratio, soft_labels, SwitchVerdict};
use polardyn::lexicon::{burst_hashtags, Side};
use polardyn::netdyn::{
    giant_component, label_propagation, modularity, surrogate_zscore, GraphSnapshot, Labeling, Leaning, SeedList,
    SurrogateConfig, DEFAULT_MAX_SWEEPS,
};
use polardyn::pipeline::{self, leakage_audit, NetworkConfig, RunOptions};
use polardyn::synthgen::{self, AlignmentSpec, NetworkSpec, ScenarioSpec, SwitchGroup, TextSpec, VolumeChange};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let o = f();
    let dt = t0.elapsed();
    let in_time = dt <= budget;
    let pass = o.pass && in_time;
    println!(
        "{} {name}: {} [{:.1}s / {:.0}s budget{}]",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        dt.as_secs_f64(),
        budget.as_secs_f64(),
        if in_time { "" } else { ", over budget" }
    );
    pass
}

fn day0() -> NaiveDate {
    NaiveDate::from_ymd_opt(2013, 7, 1).unwrap()
}

// ---------- oracles ----------

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> GraphSnapshot {
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(p) {
                arcs.push((format!("v{i}"), format!("v{j}"), rng.random_range(1..5u32)));
            }
        }
    }
    GraphSnapshot::from_edges(day0(), arcs)
}

/// `(1/2m) sum_ij [A_ij - s_i s_j / 2m] delta(c_i, c_j)` over all ordered pairs.
fn modularity_double_sum(g: &GraphSnapshot, labels: &[Option<Leaning>]) -> f64 {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for e in g.edges() {
        a[e.src as usize][e.dst as usize] += f64::from(e.weight);
        a[e.dst as usize][e.src as usize] += f64::from(e.weight);
    }
    let s: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = s.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i][j] - s[i] * s[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Largest component by BFS from every node; ties go to the smallest member name.
fn giant_by_traversal(g: &GraphSnapshot) -> BTreeSet<String> {
    let n = g.node_count();
    let mut adj = vec![Vec::new(); n];
    for e in g.edges() {
        adj[e.src as usize].push(e.dst as usize);
        adj[e.dst as usize].push(e.src as usize);
    }
    let mut best: BTreeSet<String> = BTreeSet::new();
    for start in 0..n {
        let mut seen = vec![false; n];
        let mut q = VecDeque::from([start]);
        seen[start] = true;
        while let Some(x) = q.pop_front() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    q.push_back(y);
                }
            }
        }
        let comp: BTreeSet<String> = (0..n).filter(|&i| seen[i]).map(|i| g.nodes()[i].clone()).collect();
        if comp.len() > best.len() || (comp.len() == best.len() && comp.first() < best.first()) {
            best = comp;
        }
    }
    best
}

#[derive(Clone, Debug)]
enum Expr {
    Term(usize),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

const WORDS: [&str; 5] = ["alpha", "beta", "#gamma", "delta", "eps"];

fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.3) {
        return Expr::Term(rng.random_range(0..WORDS.len()));
    }
    match rng.random_range(0..3) {
        0 => Expr::And(Box::new(random_expr(rng, depth - 1)), Box::new(random_expr(rng, depth - 1))),
        1 => Expr::Or(Box::new(random_expr(rng, depth - 1)), Box::new(random_expr(rng, depth - 1))),
        _ => Expr::Not(Box::new(random_expr(rng, depth - 1))),
    }
}

/// Fully parenthesized rendering, independent of the library printer.
fn render(e: &Expr) -> String {
    match e {
        Expr::Term(i) => WORDS[*i].to_string(),
        Expr::And(a, b) => format!("({} AND {})", render(a), render(b)),
        Expr::Or(a, b) => format!("({} OR {})", render(a), render(b)),
        Expr::Not(a) => format!("NOT {}", render(a)),
    }
}

fn truth(e: &Expr, bits: u32) -> bool {
    match e {
        Expr::Term(i) => bits & (1 << i) != 0,
        Expr::And(a, b) => truth(a, bits) && truth(b, bits),
        Expr::Or(a, b) => truth(a, bits) || truth(b, bits),
        Expr::Not(a) => !truth(a, bits),
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    let mut fails = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..150 {
        let n = rng.random_range(4..50);
        let p = rng.random_range(0.03..0.3);
        let g = random_graph(&mut rng, n, p);
        if g.edge_count() == 0 {
            continue;
        }
        let labels: Vec<_> = (0..g.node_count())
            .map(|_| Some(if rng.random_bool(0.5) { Leaning::Secular } else { Leaning::Islamist }))
            .collect();
        let q = modularity(&g, &labels).unwrap();
        worst = worst.max((q - modularity_double_sum(&g, &labels)).abs());
    }
    if worst > 1e-12 {
        fails.push(format!("modularity diff {worst:e}"));
    }

    let mut gc_bad = 0;
    for _ in 0..120 {
        let n = rng.random_range(2..200);
        let p = rng.random_range(0.0005..0.02);
        let g = random_graph(&mut rng, n, p);
        if g.is_empty() {
            continue;
        }
        let gc: BTreeSet<String> = giant_component(&g).nodes().iter().cloned().collect();
        gc_bad += usize::from(gc != giant_by_traversal(&g));
    }
    if gc_bad > 0 {
        fails.push(format!("giant component mismatches {gc_bad}"));
    }

    let mut sr_bad = 0;
    for _ in 0..120 {
        let pick = |rng: &mut ChaCha8Rng| -> Labeling {
            let mut l = Labeling::new();
            for i in 0..300 {
                if rng.random_bool(0.8) {
                    let side = if rng.random_bool(0.5) { Leaning::Secular } else { Leaning::Islamist };
                    l.insert(format!("u{i}"), side);
                }
            }
            l
        };
        let (a, b) = (pick(&mut rng), pick(&mut rng));
        let r = network_switch_ratio(&a, &b).unwrap();
        let common: Vec<&String> = a.keys().filter(|u| b.contains_key(*u)).collect();
        let changed = common.iter().filter(|u| a[**u] != b[**u]).count();
        let s2i = common
            .iter()
            .filter(|u| a[**u] == Leaning::Secular && b[**u] == Leaning::Islamist)
            .count();
        let ok = r.common == common.len()
            && r.changed == changed
            && r.ratio == changed as f64 / common.len() as f64
            && r.secular_to_islamist == (changed > 0).then(|| s2i as f64 / changed as f64);
        sr_bad += usize::from(!ok);
    }
    if sr_bad > 0 {
        fails.push(format!("switch ratio mismatches {sr_bad}"));
    }

    let mut burst_bad = 0;
    for inst in 0..100 {
        let tags = ["#a", "#b", "#c", "#d", "#e", "#f"];
        let mut tweets = Vec::new();
        for i in 0..rng.random_range(20..300) {
            let day = rng.random_range(0..6u32);
            let ts = Utc.with_ymd_and_hms(2013, 7, 1 + day, 12, 0, 0).unwrap();
            let text: Vec<&str> = (0..rng.random_range(0..4)).map(|_| *tags.choose(&mut rng).unwrap()).collect();
            tweets.push(Tweet::new(format!("{inst}-{i}"), "u", ts, text.join(" w "), None).unwrap());
        }
        let (c, _) = Corpus::new(tweets);
        // Full tabulation: tag -> day -> tweets containing it.
        let mut tab: BTreeMap<String, BTreeMap<NaiveDate, usize>> = BTreeMap::new();
        for t in c.tweets() {
            let present: BTreeSet<&str> = t.text().split(' ').filter(|w| w.starts_with('#')).collect();
            for tag in present {
                *tab.entry(tag.to_string()).or_default().entry(t.day()).or_default() += 1;
            }
        }
        let ratio_min = 1.5;
        let mut expect: Vec<(usize, String)> = tab
            .iter()
            .filter_map(|(tag, days)| {
                let peak = *days.values().max().unwrap();
                let mean = days.values().sum::<usize>() as f64 / days.len() as f64;
                (peak as f64 / mean >= ratio_min).then(|| (peak, tag.clone()))
            })
            .collect();
        expect.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        expect.truncate(4);
        let got: Vec<(usize, String)> = burst_hashtags(&c, 4, ratio_min)
            .unwrap()
            .into_iter()
            .map(|b| (b.peak_count, b.hashtag))
            .collect();
        burst_bad += usize::from(got != expect);
    }
    if burst_bad > 0 {
        fails.push(format!("burst ranking mismatches {burst_bad}"));
    }

    let rules = NormalizationRules::default();
    let mut q_bad = 0;
    for _ in 0..200 {
        let e = random_expr(&mut rng, 4);
        let q = parse_query(&render(&e), &rules).unwrap();
        for bits in 0..(1u32 << WORDS.len()) {
            let toks: Vec<String> = (0..WORDS.len())
                .filter(|i| bits & (1 << i) != 0)
                .map(|i| WORDS[i].to_string())
                .collect();
            q_bad += usize::from(q.matches(&toks) != truth(&e, bits));
        }
    }
    if q_bad > 0 {
        fails.push(format!("query truth-table mismatches {q_bad}"));
    }

    Outcome {
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            format!("modularity max diff {worst:.1e}; giant component, switch ratio, burst ranking, query truth tables all equal")
        } else {
            fails.join("; ")
        },
    }
}

// ---------- planted partition ----------

fn planted_recovery() -> Outcome {
    let mut ok_seeds = 0;
    let mut accs = Vec::new();
    for s in 0..20u64 {
        let (g, truth) = synthgen::planted_partition(60, 0.2, 0.01, s).unwrap();
        let seeds = SeedList::new([("n000".to_string(), Leaning::Secular), ("n030".to_string(), Leaning::Islamist)]).unwrap();
        let p = label_propagation(&g, &seeds, None, s, DEFAULT_MAX_SWEEPS).unwrap();
        let correct = truth
            .iter()
            .filter(|(u, l)| g.node_index(u).is_some_and(|i| p.labels[i] == Some(**l)))
            .count();
        let acc = correct as f64 / truth.len() as f64;
        accs.push(acc);
        ok_seeds += usize::from(acc >= 0.95);
    }
    let mut z_ok = 0;
    let mut zs = Vec::new();
    let mut degenerate = 0;
    let mut max_surr_q = f64::NEG_INFINITY;
    for outer in 0..10u64 {
        let (g, _) = synthgen::planted_partition(120, 0.2, 0.01, 1000 + outer).unwrap();
        let seeds = SeedList::new([("n000".to_string(), Leaning::Secular), ("n060".to_string(), Leaning::Islamist)]).unwrap();
        let r = surrogate_zscore(&g, &seeds, &SurrogateConfig::default(), outer).unwrap();
        let z = r.z.unwrap_or(f64::NAN);
        degenerate += usize::from(r.std == 0.0);
        max_surr_q = r.surrogate_q.iter().copied().fold(max_surr_q, f64::max);
        zs.push(z);
        z_ok += usize::from(z > 3.0);
    }
    let min_acc = accs.iter().copied().fold(f64::INFINITY, f64::min);
    let min_z = zs.iter().copied().fold(f64::INFINITY, f64::min);
    Outcome {
        pass: ok_seeds >= 19 && z_ok == 10,
        detail: format!("{ok_seeds}/20 seeds >= 95% (min {min_acc:.3}); z > 3 in {z_ok}/10 (min z {min_z:.2}; {degenerate} with zero surrogate spread; max surrogate Q {max_surr_q:.4})"),
    }
}

// ---------- classifier ----------

fn classifier_cv() -> Outcome {
    let data = synthgen::separable_examples(1000, [0.35, 0.09, 0.56], 7).unwrap();
    let (report, outcomes) = cross_validate_detailed(&data, 20, 7, &TrainConfig::default()).unwrap();
    let rows_ok = report
        .confusion
        .iter()
        .all(|r| (r.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    let leaks = leakage_audit(&data, &outcomes);
    Outcome {
        pass: report.mean_accuracy >= 0.95 && rows_ok && leaks == 0,
        detail: format!(
            "mean accuracy {:.4} (sd {:.4}); confusion rows sum to 1: {rows_ok}; leaked features {leaks}",
            report.mean_accuracy, report.std_accuracy
        ),
    }
}

// ---------- switches ----------

fn base_spec(seed: u64, users: usize, days: u32) -> ScenarioSpec {
    ScenarioSpec {
        seed,
        users,
        days,
        start: day0(),
        text: TextSpec {
            offtopic_prob: 0.0,
            ..TextSpec::default()
        },
        ..ScenarioSpec::default()
    }
}

fn gold_model(s: &synthgen::Scenario, n: usize, seed: u64) -> polardyn::classifier::StanceModel {
    let gold: Vec<(String, StanceClass)> = s.truth.tweet_classes.iter().take(n).map(|(k, v)| (k.clone(), *v)).collect();
    let data = gold_examples(&s.corpus, &gold);
    train(&data, seed, &TrainConfig::default()).unwrap()
}

fn switch_detection() -> Outcome {
    let mut spec = base_spec(41, 1000, 20);
    spec.activity = 1.0;
    spec.extra_tweets = 0.5;
    spec.network = NetworkSpec {
        p_in: 0.0005,
        p_out: 0.0,
        hubs_per_side: 2,
        hub_repost_prob: 0.0,
    };
    spec.switchers = vec![SwitchGroup {
        count: 50,
        from: Side::Pro,
        day: 10,
    }];
    let s = synthgen::generate(&spec).unwrap();
    let model = gold_model(&s, 1000, 1);
    let preds = classify_corpus(&s.corpus, &model);
    let r = content_switches_from_predictions(&s.corpus, &preds, 10).unwrap();
    let planted: BTreeSet<&str> = s.truth.switchers(Side::Pro).into_iter().collect();
    let found: BTreeSet<&str> = r
        .users
        .iter()
        .filter(|u| u.verdict == SwitchVerdict::ProToAnti)
        .map(|u| u.user.as_str())
        .collect();
    let wrong_dir = r.anti_to_pro;
    let tp = found.intersection(&planted).count();
    let precision = tp as f64 / (found.len() + wrong_dir).max(1) as f64;
    let recall = tp as f64 / planted.len() as f64;
    let min_tweets = r.users.iter().map(|u| u.tweets).min().unwrap_or(0);

    spec.switchers.clear();
    spec.seed = 42;
    let stable = synthgen::generate(&spec).unwrap();
    let model = gold_model(&stable, 1000, 1);
    let preds = classify_corpus(&stable.corpus, &model);
    let mut false_switches = Vec::new();
    for n in [5, 10, 15, 20] {
        let r = content_switches_from_predictions(&stable.corpus, &preds, n).unwrap();
        false_switches.push(r.pro_to_anti + r.anti_to_pro);
    }
    Outcome {
        pass: precision >= 0.9 && recall >= 0.9 && false_switches.iter().all(|f| *f == 0),
        detail: format!(
            "n=10 precision {precision:.3} recall {recall:.3} (min classified tweets {min_tweets}); \
             false switches on stable scenario at n=5/10/15/20: {false_switches:?}"
        ),
    }
}

// ---------- regime change ----------

fn regime_change() -> Outcome {
    let mut spec = base_spec(77, 1500, 20);
    spec.activity = 0.6;
    spec.volume = Some(VolumeChange {
        day: 10,
        pro_before: 1.0,
        pro_after: 0.35,
        anti_before: 0.35,
        anti_after: 1.0,
    });
    spec.network = NetworkSpec {
        p_in: 0.003,
        p_out: 0.0003,
        hubs_per_side: 3,
        hub_repost_prob: 0.3,
    };
    let s = synthgen::generate(&spec).unwrap();
    let model = gold_model(&s, 1000, 1);
    let preds = classify_corpus(&s.corpus, &model);
    let plant = spec.day(10);
    let stance = crossover(&pipeline::stance_difference(&s.corpus, &preds).unwrap());
    let seeds = SeedList::new(s.truth.network_seeds()).unwrap();
    let net = pipeline::propagate(&s.corpus, &seeds, &NetworkConfig::default(), spec.seed).unwrap();
    let comm = crossover(&pipeline::community_difference(&net.snapshots).unwrap());
    let within = |c: Option<polardyn::dynamics::Crossover>| c.is_some_and(|c| (c.day - plant).num_days().abs() <= 1);
    Outcome {
        pass: within(stance) && within(comm),
        detail: format!(
            "planted {plant}; stance crossover {:?}; community crossover {:?} ({} snapshots)",
            stance.map(|c| c.day),
            comm.map(|c| c.day),
            net.snapshots.len()
        ),
    }
}

// ---------- correlation ----------

fn correlation() -> Outcome {
    let mut rs = Vec::new();
    for seed in 0..20u64 {
        let mut spec = base_spec(500 + seed, 2000, 10);
        spec.activity = 1.0;
        spec.extra_tweets = 0.0;
        spec.alignment = Some(AlignmentSpec { rho: 0.6 });
        spec.network = NetworkSpec {
            p_in: 0.0015,
            p_out: 0.0001,
            hubs_per_side: 3,
            hub_repost_prob: 0.3,
        };
        let s = synthgen::generate(&spec).unwrap();
        let model = gold_model(&s, 600, seed);
        let preds = classify_corpus(&s.corpus, &model);
        let polarity = content_polarity(&s.corpus, &preds).unwrap();
        let seeds = SeedList::new(s.truth.network_seeds()).unwrap();
        let net = pipeline::propagate(&s.corpus, &seeds, &NetworkConfig::default(), seed).unwrap();
        let labels: Vec<_> = net.snapshots.iter().map(GraphSnapshot::label_summary).collect();
        let tbl = soft_labels(&labels, spec.day(0), spec.day(spec.days - 1)).unwrap();
        let c = content_network_correlation(&polarity, &tbl).unwrap();
        rs.push(c.r);
    }
    let inside = rs.iter().filter(|r| (0.5..=0.7).contains(*r)).count();
    let lo = rs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        pass: inside >= 18,
        detail: format!("r in [0.5, 0.7] for {inside}/20 seeds (range {lo:.3}..{hi:.3})"),
    }
}

// ---------- bundle ----------

fn run_bundle(scenario_dir: &Path, out: &Path) -> (pipeline::Manifest, Duration) {
    let cfg = pipeline::load_config(&scenario_dir.join("config.json"), None, Some(out.to_path_buf())).unwrap();
    let t0 = Instant::now();
    let m = pipeline::run(&cfg, RunOptions::default()).unwrap();
    (m, t0.elapsed())
}

fn main() {
    let mut results = Vec::new();
    results.push(check("oracle equivalence", Duration::from_secs(10), oracle_equivalence));
    results.push(check("planted partition recovery", Duration::from_secs(30), planted_recovery));
    results.push(check("classifier cross-validation", Duration::from_secs(20), classifier_cv));
    results.push(check("switch detection", Duration::from_secs(20), switch_detection));
    results.push(check("regime change crossover", Duration::from_secs(60), regime_change));
    results.push(check("content-network correlation", Duration::from_secs(10), correlation));

    let dir = tempfile::tempdir().unwrap();
    let scenario = synthgen::generate(&ScenarioSpec::demo()).unwrap();
    synthgen::write_scenario(&scenario, dir.path()).unwrap();
    let tweets = scenario.corpus.len();
    drop(scenario);
    let mut first = None;
    results.push(check("end-to-end demo pipeline", Duration::from_secs(120), || {
        let (m, dt) = run_bundle(dir.path(), &dir.path().join("run1"));
        let detail = format!(
            "{tweets} tweets, 5000 users, 20 days; run() took {:.1}s, {} outputs",
            dt.as_secs_f64(),
            m.outputs.len()
        );
        first = Some(m);
        Outcome { pass: true, detail }
    }));
    results.push(check("determinism", Duration::from_secs(300), || {
        let (m2, _) = run_bundle(dir.path(), &dir.path().join("run2"));
        let m1 = first.as_ref().expect("first run");
        let differing: Vec<&str> = m1
            .outputs
            .iter()
            .zip(&m2.outputs)
            .filter(|(a, b)| a.path != b.path || a.sha256 != b.sha256)
            .map(|(a, _)| a.path.as_str())
            .collect();
        let same_list = m1.outputs.len() == m2.outputs.len();
        Outcome {
            pass: same_list && differing.is_empty() && m1.config_hash == m2.config_hash,
            detail: format!(
                "{} bundle files compared, {} differ{}",
                m1.outputs.len(),
                differing.len(),
                if differing.is_empty() { String::new() } else { format!(": {differing:?}") }
            ),
        }
    }));

    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
