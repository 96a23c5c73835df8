use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use polardyn::corpus::{Corpus, Tweet};
use polardyn::netdyn::{
    build_snapshots, giant_component, graph_stats, label_propagation, GraphSnapshot, Labeling, Leaning, SeedList,
    DEFAULT_MAX_SWEEPS,
};
use polardyn::synthgen::planted_partition;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn day(k: i64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2013, 7, 1).unwrap() + Duration::days(k)
}

/// Random repost events over `days` days: `(day offset, reposter, original author)`.
fn schedule(rng: &mut ChaCha8Rng, days: i64, users: usize, events: usize) -> Vec<(i64, String, String)> {
    (0..events)
        .map(|_| {
            let a = rng.random_range(0..users);
            let mut b = rng.random_range(0..users - 1);
            if b >= a {
                b += 1;
            }
            (rng.random_range(0..days), format!("u{a:02}"), format!("u{b:02}"))
        })
        .collect()
}

fn corpus_of(events: &[(i64, String, String)]) -> Corpus {
    let tweets = events
        .iter()
        .enumerate()
        .map(|(i, (d, a, b))| {
            let ts = Utc.from_utc_datetime(&day(*d).and_hms_opt((i % 24) as u32, (i / 24 % 60) as u32, 0).unwrap());
            Tweet::new(format!("r{i:05}"), a.as_str(), ts, "rt", Some(b.clone())).unwrap()
        })
        .collect();
    Corpus::new(tweets).0
}

fn arcs_by_name(g: &GraphSnapshot) -> BTreeMap<(String, String), u32> {
    g.edges()
        .iter()
        .map(|e| ((g.nodes()[e.src as usize].clone(), g.nodes()[e.dst as usize].clone()), e.weight))
        .collect()
}

#[test]
fn snapshots_equal_bruteforce_window_scan() {
    for (seed, window, step) in [(1u64, 3u32, 1u32), (2, 3, 1), (3, 1, 1), (4, 4, 2), (5, 5, 3)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let events = schedule(&mut rng, 10, 25, 400);
        let snaps = build_snapshots(&corpus_of(&events), window, step).unwrap();
        let first = events.iter().map(|e| e.0).min().unwrap();
        let last = events.iter().map(|e| e.0).max().unwrap();
        let before = i64::from(window / 2);
        let after = i64::from(window) - 1 - before;
        let mut expected = Vec::new();
        let mut t = first;
        while t <= last {
            let mut agg: BTreeMap<(String, String), u32> = BTreeMap::new();
            let mut count = 0u64;
            for (d, a, b) in &events {
                if *d >= t - before && *d <= t + after {
                    *agg.entry((a.clone(), b.clone())).or_default() += 1;
                    count += 1;
                }
            }
            if !agg.is_empty() {
                expected.push((day(t), agg, count));
            }
            t += i64::from(step);
        }
        assert_eq!(snaps.len(), expected.len(), "seed {seed}");
        for (g, (d, agg, count)) in snaps.iter().zip(&expected) {
            assert_eq!(g.day, *d);
            assert_eq!(&arcs_by_name(g), agg, "seed {seed} day {d}");
            assert_eq!(g.total_weight(), *count, "total weight equals events in window");
        }
    }
}

#[test]
fn centred_three_day_window() {
    let events: Vec<(i64, String, String)> =
        [(4, "a", "b"), (5, "b", "c"), (6, "c", "a"), (7, "a", "c")].iter().map(|(d, a, b)| (*d, a.to_string(), b.to_string())).collect();
    let snaps = build_snapshots(&corpus_of(&events), 3, 1).unwrap();
    let g = snaps.iter().find(|g| g.day == day(5)).unwrap();
    assert_eq!(g.total_weight(), 3);
    assert!(!arcs_by_name(g).contains_key(&("a".to_string(), "c".to_string())));
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> GraphSnapshot {
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(p) {
                arcs.push((format!("n{i:03}"), format!("n{j:03}"), rng.random_range(1..4u32)));
            }
        }
    }
    GraphSnapshot::from_edges(day(0), arcs)
}

#[test]
fn graph_stats_match_cubic_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let g = random_graph(&mut rng, 500, 0.006);
    let n = g.node_count();
    let mut w = vec![vec![0.0f64; n]; n];
    for e in g.edges() {
        w[e.src as usize][e.dst as usize] += f64::from(e.weight);
        w[e.dst as usize][e.src as usize] += f64::from(e.weight);
    }
    let adj = |i: usize, j: usize| w[i][j] > 0.0;
    let deg: Vec<usize> = (0..n).map(|i| (0..n).filter(|&j| adj(i, j)).count()).collect();
    let m = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| adj(i, j)).count();

    let mut clustering = 0.0;
    for i in 0..n {
        if deg[i] < 2 {
            continue;
        }
        let mut closed = 0usize;
        for j in 0..n {
            for k in j + 1..n {
                if adj(i, j) && adj(i, k) && adj(j, k) {
                    closed += 1;
                }
            }
        }
        clustering += 2.0 * closed as f64 / (deg[i] * (deg[i] - 1)) as f64;
    }
    clustering /= n as f64;

    // Edge-weighted Pearson correlation over both orientations of each edge.
    let (mut sw, mut sx, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i != j && adj(i, j) {
                let (x, y) = (deg[i] as f64, deg[j] as f64);
                sw += w[i][j];
                sx += w[i][j] * x;
                sxx += w[i][j] * x * x;
                sxy += w[i][j] * x * y;
            }
        }
    }
    let mean = sx / sw;
    let r = (sxy / sw - mean * mean) / (sxx / sw - mean * mean);

    let s = graph_stats(&g);
    assert_eq!(s.nodes, n);
    assert_eq!(s.edges, m);
    assert!((s.density - 2.0 * m as f64 / (n * (n - 1)) as f64).abs() < 1e-12);
    assert!((s.mean_degree - deg.iter().sum::<usize>() as f64 / n as f64).abs() < 1e-12);
    assert!((s.mean_clustering - clustering).abs() < 1e-12, "{} vs {clustering}", s.mean_clustering);
    assert!((s.assortativity.unwrap() - r).abs() < 1e-9, "{:?} vs {r}", s.assortativity);
}

#[test]
fn giant_component_is_idempotent() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, 80, 0.012);
        let once = giant_component(&g);
        assert_eq!(giant_component(&once), once, "seed {seed}");
    }
}

fn incident(g: &GraphSnapshot, labels: &[Option<Leaning>], i: usize) -> [f64; 2] {
    let mut acc = [0.0; 2];
    for e in g.edges() {
        let (a, b) = (e.src as usize, e.dst as usize);
        let other = if a == i { b } else if b == i { a } else { continue };
        if let Some(l) = labels[other] {
            acc[l.index()] += f64::from(e.weight);
        }
    }
    acc
}

#[test]
fn converged_labels_are_locally_optimal() {
    for seed in 0..20u64 {
        let (g, truth) = planted_partition(60, 0.2, 0.01, seed).unwrap();
        let g = giant_component(&g);
        let pick = |l: Leaning| g.nodes().iter().find(|n| truth.get(*n) == Some(&l)).unwrap().clone();
        let seeds = SeedList::new([(pick(Leaning::Secular), Leaning::Secular), (pick(Leaning::Islamist), Leaning::Islamist)]).unwrap();
        let p = label_propagation(&g, &seeds, None, seed, DEFAULT_MAX_SWEEPS).unwrap();
        assert!(p.converged, "seed {seed}");
        for i in 0..g.node_count() {
            let l = p.labels[i].expect("connected graph is fully labeled");
            if p.is_seed[i] {
                assert_eq!(Some(l), seeds.get(&g.nodes()[i]));
                continue;
            }
            let w = incident(&g, &p.labels, i);
            assert!(w[l.index()] >= w[1 - l.index()], "seed {seed}: node {i} holds a minority label");
        }
    }
}

#[test]
fn warm_start_never_moves_seeds() {
    for seed in 0..10u64 {
        let (g, truth) = planted_partition(60, 0.2, 0.01, seed).unwrap();
        let g = giant_component(&g);
        // A warm start that contradicts the seeds everywhere.
        let init: Labeling = g
            .nodes()
            .iter()
            .map(|n| {
                let flipped = if truth[n] == Leaning::Secular { Leaning::Islamist } else { Leaning::Secular };
                (n.clone(), flipped)
            })
            .collect();
        let seed_pairs: Vec<(String, Leaning)> = g.nodes().iter().step_by(7).map(|n| (n.clone(), truth[n])).collect();
        let seeds = SeedList::new(seed_pairs.clone()).unwrap();
        let p = label_propagation(&g, &seeds, Some(&init), seed, DEFAULT_MAX_SWEEPS).unwrap();
        for (user, l) in seed_pairs {
            let i = g.node_index(&user).unwrap();
            assert_eq!(p.labels[i], Some(l));
            assert!(p.is_seed[i]);
        }
    }
}
