//! Sliding-window repost graphs and seeded two-community tracking.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::{Error, Result};

mod modularity;
mod propagation;
mod stats;

pub use modularity::{
    modularity, modularity_partial, modularity_with, rewire, surrogate_zscore, QReport, SurrogateConfig,
    Weighting,
};
pub use propagation::{label_propagation, propagate_chain, ChainStep, Propagation, DEFAULT_MAX_SWEEPS};
pub use stats::{graph_stats, GraphStats};

/// Network-side leaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Leaning {
    Secular = 0,
    Islamist = 1,
}

impl Leaning {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Leaning> {
        match i {
            0 => Some(Leaning::Secular),
            1 => Some(Leaning::Islamist),
            _ => None,
        }
    }
}

/// Node labeling keyed by author id.
pub type Labeling = BTreeMap<String, Leaning>;

/// Users whose leaning is fixed during propagation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList {
    seeds: BTreeMap<String, Leaning>,
}

impl SeedList {
    pub fn new(seeds: impl IntoIterator<Item = (String, Leaning)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (u, l) in seeds {
            if let Some(prev) = map.insert(u.clone(), l) {
                if prev != l {
                    return Err(Error::InvalidArgument(format!("seed {u} listed with both leanings")));
                }
            }
        }
        for side in [Leaning::Secular, Leaning::Islamist] {
            if !map.values().any(|l| *l == side) {
                return Err(Error::InvalidArgument(format!("seed list has no {side:?} seed")));
            }
        }
        Ok(SeedList { seeds: map })
    }

    pub fn get(&self, user: &str) -> Option<Leaning> {
        self.seeds.get(user).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Leaning)> {
        self.seeds.iter().map(|(u, l)| (u.as_str(), *l))
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// `author_id,label` CSV with a header row; labels are 0 (secular) or 1.
    pub fn read_csv(reader: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut out = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let user = rec.get(0).unwrap_or("").trim();
            let label = rec.get(1).unwrap_or("").trim();
            let leaning = label
                .parse::<usize>()
                .ok()
                .and_then(Leaning::from_index)
                .ok_or_else(|| Error::Record {
                    line: i + 2,
                    reason: format!("label must be 0 or 1, got {label:?}"),
                })?;
            if user.is_empty() {
                return Err(Error::Record {
                    line: i + 2,
                    reason: "empty author_id".into(),
                });
            }
            out.push((user.to_owned(), leaning));
        }
        SeedList::new(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: u32,
    pub dst: u32,
    pub weight: u32,
}

/// Weighted directed repost graph of one window: `src` reposted `dst`
/// `weight` times. Nodes are the endpoints of edges, sorted by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSnapshot {
    pub day: NaiveDate,
    nodes: Vec<String>,
    edges: Vec<Edge>,
    labels: Vec<Option<Leaning>>,
    seeds: Vec<bool>,
}

impl GraphSnapshot {
    /// Merge parallel arcs by summing weights; drop self-loops and zero weights.
    pub fn from_edges<S: AsRef<str>>(day: NaiveDate, arcs: impl IntoIterator<Item = (S, S, u32)>) -> GraphSnapshot {
        let mut merged: BTreeMap<(String, String), u32> = BTreeMap::new();
        for (s, d, w) in arcs {
            let (s, d) = (s.as_ref(), d.as_ref());
            if s == d || w == 0 {
                continue;
            }
            *merged.entry((s.to_owned(), d.to_owned())).or_default() += w;
        }
        let mut nodes: Vec<String> = merged.keys().flat_map(|(s, d)| [s.clone(), d.clone()]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let pos = |n: &str| nodes.binary_search_by(|x| x.as_str().cmp(n)).unwrap() as u32;
        let mut edges: Vec<Edge> = merged
            .iter()
            .map(|((s, d), w)| Edge {
                src: pos(s),
                dst: pos(d),
                weight: *w,
            })
            .collect();
        edges.sort_unstable();
        let n = nodes.len();
        GraphSnapshot {
            day,
            nodes,
            edges,
            labels: vec![None; n],
            seeds: vec![false; n],
        }
    }

    pub(crate) fn from_parts(day: NaiveDate, nodes: Vec<String>, mut edges: Vec<Edge>) -> GraphSnapshot {
        edges.sort_unstable();
        let n = nodes.len();
        GraphSnapshot {
            day,
            nodes,
            edges,
            labels: vec![None; n],
            seeds: vec![false; n],
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|x| x.as_str().cmp(id)).ok()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| u64::from(e.weight)).sum()
    }

    pub fn labels(&self) -> &[Option<Leaning>] {
        &self.labels
    }

    pub fn seed_flags(&self) -> &[bool] {
        &self.seeds
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.labels.iter().all(Option::is_some)
    }

    pub fn set_labels(&mut self, labels: Vec<Option<Leaning>>, seeds: Vec<bool>) {
        assert_eq!(labels.len(), self.nodes.len());
        assert_eq!(seeds.len(), self.nodes.len());
        self.labels = labels;
        self.seeds = seeds;
    }

    /// Assigned nodes and their leanings.
    pub fn labeling(&self) -> Labeling {
        self.nodes
            .iter()
            .zip(&self.labels)
            .filter_map(|(n, l)| l.map(|l| (n.clone(), l)))
            .collect()
    }

    /// Total weight of arcs leaving each node (reposts made).
    pub fn out_strength(&self) -> Vec<u64> {
        let mut s = vec![0u64; self.nodes.len()];
        for e in &self.edges {
            s[e.src as usize] += u64::from(e.weight);
        }
        s
    }

    pub fn in_out_degrees(&self) -> (Vec<usize>, Vec<usize>) {
        let mut indeg = vec![0; self.nodes.len()];
        let mut outdeg = vec![0; self.nodes.len()];
        for e in &self.edges {
            outdeg[e.src as usize] += 1;
            indeg[e.dst as usize] += 1;
        }
        (indeg, outdeg)
    }

    /// Per-user label and reposts made, for soft-label aggregation.
    pub fn label_summary(&self) -> SnapshotLabels {
        let strength = self.out_strength();
        SnapshotLabels {
            day: self.day,
            entries: self
                .nodes
                .iter()
                .enumerate()
                .filter_map(|(i, n)| self.labels[i].map(|l| (n.clone(), l, strength[i])))
                .collect(),
        }
    }

    /// Induced subgraph on nodes where `keep` is true; labels carried over.
    pub fn induced(&self, keep: &[bool]) -> GraphSnapshot {
        let mut remap = vec![u32::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        let mut labels = Vec::new();
        let mut seeds = Vec::new();
        for (i, k) in keep.iter().enumerate() {
            if *k {
                remap[i] = nodes.len() as u32;
                nodes.push(self.nodes[i].clone());
                labels.push(self.labels[i]);
                seeds.push(self.seeds[i]);
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| keep[e.src as usize] && keep[e.dst as usize])
            .map(|e| Edge {
                src: remap[e.src as usize],
                dst: remap[e.dst as usize],
                weight: e.weight,
            })
            .collect();
        // Nodes left without edges are silent and dropped.
        let mut g = GraphSnapshot {
            day: self.day,
            nodes,
            edges,
            labels,
            seeds,
        };
        g.drop_silent();
        g
    }

    fn drop_silent(&mut self) {
        let mut touched = vec![false; self.nodes.len()];
        for e in &self.edges {
            touched[e.src as usize] = true;
            touched[e.dst as usize] = true;
        }
        if touched.iter().all(|t| *t) {
            return;
        }
        *self = self.induced(&touched);
    }

    /// Write `src,dst,weight` and `node,label,is_seed` CSVs.
    pub fn export_csv(&self, edges_path: &Path, labels_path: &Path) -> Result<()> {
        crate::io::write_csv_with_header(
            edges_path,
            &["src", "dst", "weight"],
            self.edges
                .iter()
                .map(|e| (&self.nodes[e.src as usize], &self.nodes[e.dst as usize], e.weight)),
        )?;
        crate::io::write_csv_with_header(
            labels_path,
            &["node", "label", "is_seed"],
            self.nodes.iter().enumerate().map(|(i, n)| {
                (
                    n,
                    self.labels[i].map(|l| l.index().to_string()).unwrap_or_default(),
                    u8::from(self.seeds[i]),
                )
            }),
        )
    }

    pub fn import_csv(day: NaiveDate, edges_path: &Path, labels_path: &Path) -> Result<GraphSnapshot> {
        let mut rdr = csv::Reader::from_reader(crate::io::open(edges_path)?);
        let mut arcs = Vec::new();
        for rec in rdr.deserialize::<(String, String, u32)>() {
            arcs.push(rec?);
        }
        let mut g = GraphSnapshot::from_edges(day, arcs);
        let mut rdr = csv::Reader::from_reader(crate::io::open(labels_path)?);
        for rec in rdr.deserialize::<(String, String, u8)>() {
            let (node, label, seed) = rec?;
            let Some(i) = g.node_index(&node) else {
                return Err(Error::Data(format!("{}: unknown node {node}", labels_path.display())));
            };
            g.labels[i] = match label.trim() {
                "" => None,
                l => Some(l.parse().ok().and_then(Leaning::from_index).ok_or_else(|| {
                    Error::Data(format!("{}: bad label {l:?}", labels_path.display()))
                })?),
            };
            g.seeds[i] = seed != 0;
        }
        Ok(g)
    }
}

/// Labeled presence of users in one snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotLabels {
    pub day: NaiveDate,
    /// `(user, leaning, reposts made in the window)`.
    pub entries: Vec<(String, Leaning, u64)>,
}

/// Days before and after `t` covered by a window of width `w`:
/// `[t - w/2, t + w/2]` for odd widths, `[t - w/2, t + w/2 - 1]` for even.
pub fn window_span(window_days: u32) -> (i64, i64) {
    let before = i64::from(window_days / 2);
    let after = i64::from(window_days) - 1 - before;
    (before, after)
}

/// One repost graph per `step_days`, from the first to the last day with a
/// repost, each aggregating the events of its window. Windows without any
/// repost are skipped.
pub fn build_snapshots(c: &Corpus, window_days: u32, step_days: u32) -> Result<Vec<GraphSnapshot>> {
    if window_days < 1 || step_days < 1 {
        return Err(Error::InvalidArgument("window_days and step_days must be >= 1".into()));
    }
    // Ids follow name order, so sorted ids give the sorted node list directly.
    let mut names: Vec<&str> = c
        .tweets()
        .iter()
        .filter_map(|t| t.repost_of().map(|d| [t.author_id(), d]))
        .flatten()
        .collect::<FxHashSet<&str>>()
        .into_iter()
        .collect();
    names.sort_unstable();
    let ids: FxHashMap<&str, u32> = names.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
    let id_of = |s: &str| ids[s];
    let mut per_day: BTreeMap<NaiveDate, FxHashMap<(u32, u32), u32>> = BTreeMap::new();
    for t in c.tweets() {
        let Some(dst) = t.repost_of() else { continue };
        if t.author_id() == dst {
            continue;
        }
        *per_day.entry(t.day()).or_default().entry((id_of(t.author_id()), id_of(dst))).or_default() += 1;
    }
    let (Some(first), Some(last)) = (per_day.keys().next().copied(), per_day.keys().next_back().copied()) else {
        log::warn!("corpus has no repost events; no snapshots built");
        return Ok(Vec::new());
    };
    let (before, after) = window_span(window_days);
    let mut out = Vec::new();
    let mut local = vec![u32::MAX; names.len()];
    let mut t = first;
    while t <= last {
        let lo = t - Duration::days(before);
        let hi = t + Duration::days(after);
        let mut agg: FxHashMap<(u32, u32), u32> = FxHashMap::default();
        for (_, events) in per_day.range(lo..=hi) {
            for (k, w) in events {
                *agg.entry(*k).or_default() += w;
            }
        }
        if agg.is_empty() {
            log::debug!("no reposts in window around {t}; skipped");
        } else {
            let mut seen = vec![false; names.len()];
            for &(s, d) in agg.keys() {
                seen[s as usize] = true;
                seen[d as usize] = true;
            }
            let present: Vec<u32> = (0..names.len() as u32).filter(|&g| seen[g as usize]).collect();
            for (i, &g) in present.iter().enumerate() {
                local[g as usize] = i as u32;
            }
            let edges = agg
                .into_iter()
                .map(|((s, d), weight)| Edge {
                    src: local[s as usize],
                    dst: local[d as usize],
                    weight,
                })
                .collect();
            let nodes = present.iter().map(|&g| names[g as usize].to_owned()).collect();
            out.push(GraphSnapshot::from_parts(t, nodes, edges));
        }
        t += Duration::days(i64::from(step_days));
    }
    Ok(out)
}

/// Weakly connected components as a component id per node.
pub(crate) fn components(n: usize, edges: &[Edge]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in edges {
        let (a, b) = (find(&mut parent, e.src as usize), find(&mut parent, e.dst as usize));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            parent[hi] = lo;
        }
    }
    (0..n).map(|x| find(&mut parent, x)).collect()
}

/// Largest weakly connected component; equal sizes go to the component
/// holding the smallest node id.
pub fn giant_component(g: &GraphSnapshot) -> GraphSnapshot {
    let comp = components(g.node_count(), &g.edges);
    let mut size: FxHashMap<usize, usize> = FxHashMap::default();
    for c in &comp {
        *size.entry(*c).or_default() += 1;
    }
    // Roots are the smallest index of their component, and node ids are sorted.
    let Some(best) = size
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(c, _)| *c)
    else {
        return g.clone();
    };
    if size[&best] == g.node_count() {
        return g.clone();
    }
    let keep: Vec<bool> = comp.iter().map(|c| *c == best).collect();
    g.induced(&keep)
}
