use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::stats::undirected_pairs;
use super::{giant_component, GraphSnapshot, Labeling, Leaning, SeedList};
use crate::{rng, Error, Result};

pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Compressed undirected weighted adjacency.
pub(crate) struct Adjacency {
    offsets: Vec<usize>,
    nbrs: Vec<u32>,
    weights: Vec<f64>,
}

impl Adjacency {
    pub(crate) fn new(g: &GraphSnapshot, binary: bool) -> Adjacency {
        let n = g.node_count();
        let pairs = undirected_pairs(g);
        let mut deg = vec![0usize; n];
        for &((a, b), _) in &pairs {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut fill = offsets.clone();
        let mut nbrs = vec![0u32; offsets[n]];
        let mut weights = vec![0.0; offsets[n]];
        for &((a, b), w) in &pairs {
            let w = if binary { 1.0 } else { w };
            for (x, y) in [(a, b), (b, a)] {
                let slot = fill[x as usize];
                nbrs[slot] = y;
                weights[slot] = w;
                fill[x as usize] += 1;
            }
        }
        Adjacency { offsets, nbrs, weights }
    }

    pub(crate) fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub(crate) fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.nbrs[r.clone()].iter().map(|n| *n as usize).zip(self.weights[r].iter().copied())
    }

    pub(crate) fn strength(&self, i: usize) -> f64 {
        self.weights[self.offsets[i]..self.offsets[i + 1]].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub labels: Vec<Option<Leaning>>,
    pub is_seed: Vec<bool>,
    pub converged: bool,
    /// Sweeps performed, including the final quiet one.
    pub sweeps: usize,
    pub label_changes: usize,
}

/// Seed-constrained two-label propagation.
///
/// Seeds keep their leaning. Other nodes start from `init` when it has them,
/// otherwise unassigned. Each sweep visits the non-seed nodes in a fresh random
/// order; a node takes the leaning with the largest incident edge weight over
/// assigned neighbours (both directions). A node already holding a maximal
/// leaning keeps it; otherwise ties are broken uniformly at random. A node
/// with no leaning yet only counts neighbours that held one when the sweep
/// began, so fresh labels advance one hop per sweep from their sources rather
/// than racing along a random visiting order. The run stops after a sweep
/// with no change, or after `max_sweeps`.
pub fn label_propagation(
    g: &GraphSnapshot,
    seeds: &SeedList,
    init: Option<&Labeling>,
    rng_seed: u64,
    max_sweeps: usize,
) -> Result<Propagation> {
    let n = g.node_count();
    let mut labels: Vec<Option<Leaning>> = vec![None; n];
    let mut is_seed = vec![false; n];
    let mut present = [false; 2];
    for (i, node) in g.nodes().iter().enumerate() {
        if let Some(l) = seeds.get(node) {
            labels[i] = Some(l);
            is_seed[i] = true;
            present[l.index()] = true;
        } else if let Some(l) = init.and_then(|m| m.get(node)) {
            labels[i] = Some(*l);
        }
    }
    if !present[0] || !present[1] {
        return Err(Error::Data(format!(
            "snapshot {}: label propagation needs a seed of each leaning (secular: {}, islamist: {})",
            g.day, present[0], present[1]
        )));
    }
    let adj = Adjacency::new(g, false);
    let mut rng = rng::stream(rng_seed, "label_propagation");
    let mut order: Vec<usize> = (0..n).filter(|i| !is_seed[*i]).collect();
    let mut converged = false;
    let mut sweeps = 0;
    let mut label_changes = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        order.shuffle(&mut rng);
        let at_start = labels.clone();
        let mut changed = 0;
        for &i in &order {
            let view = if labels[i].is_some() { &labels } else { &at_start };
            let mut tally = [0.0f64; 2];
            for (j, w) in adj.neighbors(i) {
                if let Some(l) = view[j] {
                    tally[l.index()] += w;
                }
            }
            if tally[0] == 0.0 && tally[1] == 0.0 {
                continue;
            }
            let best = if tally[0] > tally[1] {
                Leaning::Secular
            } else if tally[1] > tally[0] {
                Leaning::Islamist
            } else if let Some(cur) = labels[i] {
                cur
            } else if rng.random_bool(0.5) {
                Leaning::Islamist
            } else {
                Leaning::Secular
            };
            if labels[i] != Some(best) {
                labels[i] = Some(best);
                changed += 1;
            }
        }
        label_changes += changed;
        if changed == 0 {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("label propagation on {} did not converge in {max_sweeps} sweeps", g.day);
    }
    Ok(Propagation {
        labels,
        is_seed,
        converged,
        sweeps,
        label_changes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainStep {
    pub day: chrono::NaiveDate,
    pub nodes_before_giant: usize,
    /// Labeled nodes kept in the snapshot.
    pub nodes: usize,
    pub converged: bool,
    pub sweeps: usize,
    pub warm_started: bool,
    /// Set when the snapshot had no seed of some leaning and was dropped.
    pub skipped: Option<String>,
}

/// Giant component plus warm-started propagation over a time-ordered
/// snapshot sequence. Each snapshot starts from the labels of the previous
/// labeled one. Snapshots whose giant component lacks a seed side are dropped.
/// A run cut off by `max_sweeps` keeps only the nodes it managed to label.
pub fn propagate_chain(
    snapshots: Vec<GraphSnapshot>,
    seeds: &SeedList,
    rng_seed: u64,
    max_sweeps: usize,
) -> Result<(Vec<GraphSnapshot>, Vec<ChainStep>)> {
    let mut out = Vec::with_capacity(snapshots.len());
    let mut steps = Vec::with_capacity(snapshots.len());
    let mut prev: Option<Labeling> = None;
    for s in snapshots {
        let before = s.node_count();
        let mut g = giant_component(&s);
        let seed = rng::stream_seed(rng_seed, &format!("lp/{}", g.day));
        match label_propagation(&g, seeds, prev.as_ref(), seed, max_sweeps) {
            Ok(p) => {
                let (converged, sweeps) = (p.converged, p.sweeps);
                g.set_labels(p.labels, p.is_seed);
                let keep: Vec<bool> = g.labels().iter().map(Option::is_some).collect();
                let unlabeled = keep.iter().filter(|k| !**k).count();
                if unlabeled > 0 {
                    log::warn!("{}: {unlabeled} nodes still unlabeled after {sweeps} sweeps; dropped", g.day);
                    g = g.induced(&keep);
                }
                steps.push(ChainStep {
                    day: g.day,
                    nodes_before_giant: before,
                    nodes: g.node_count(),
                    converged,
                    sweeps,
                    warm_started: prev.is_some(),
                    skipped: None,
                });
                prev = Some(g.labeling());
                out.push(g);
            }
            Err(Error::Data(reason)) => {
                log::warn!("{reason}; snapshot dropped");
                steps.push(ChainStep {
                    day: g.day,
                    nodes_before_giant: before,
                    nodes: g.node_count(),
                    converged: false,
                    sweeps: 0,
                    warm_started: prev.is_some(),
                    skipped: Some(reason),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok((out, steps))
}
