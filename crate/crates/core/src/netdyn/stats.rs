use serde::Serialize;

use super::GraphSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    /// Undirected edges of the projection.
    pub edges: usize,
    pub density: f64,
    pub mean_degree: f64,
    /// Mean local clustering coefficient over all nodes (unweighted triangles).
    pub mean_clustering: f64,
    /// Weighted degree assortativity; `None` when all edge ends share one degree.
    pub assortativity: Option<f64>,
}

/// Undirected weighted projection: reciprocal arcs merge and their weights add.
pub(crate) fn undirected_pairs(g: &GraphSnapshot) -> Vec<((u32, u32), f64)> {
    let mut arcs: Vec<((u32, u32), f64)> = g
        .edges()
        .iter()
        .map(|e| {
            let key = if e.src < e.dst { (e.src, e.dst) } else { (e.dst, e.src) };
            (key, f64::from(e.weight))
        })
        .collect();
    arcs.sort_by_key(|(k, _)| *k);
    let mut pairs: Vec<((u32, u32), f64)> = Vec::with_capacity(arcs.len());
    for (k, w) in arcs {
        match pairs.last_mut() {
            Some((last, acc)) if *last == k => *acc += w,
            _ => pairs.push((k, w)),
        }
    }
    pairs
}

/// Density, mean degree, mean local clustering and weighted degree
/// assortativity on the undirected projection.
///
/// Assortativity is the edge-weighted Pearson correlation of the (unweighted)
/// degrees at the two ends of each edge.
pub fn graph_stats(g: &GraphSnapshot) -> GraphStats {
    let n = g.node_count();
    let pairs = undirected_pairs(g);
    let m = pairs.len();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &((a, b), _) in &pairs {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    let density = if n < 2 { 0.0 } else { 2.0 * m as f64 / (n as f64 * (n as f64 - 1.0)) };
    let mean_degree = if n == 0 { 0.0 } else { 2.0 * m as f64 / n as f64 };

    let mean_clustering = if n < 3 {
        0.0
    } else {
        let mut tri = vec![0usize; n];
        let mut mark = vec![false; n];
        for u in 0..n {
            for &w in &adj[u] {
                mark[w as usize] = true;
            }
            for &v in adj[u].iter().filter(|v| **v as usize > u) {
                for &w in adj[v as usize].iter().filter(|w| **w > v) {
                    if mark[w as usize] {
                        tri[u] += 1;
                        tri[v as usize] += 1;
                        tri[w as usize] += 1;
                    }
                }
            }
            for &w in &adj[u] {
                mark[w as usize] = false;
            }
        }
        let total: f64 = (0..n)
            .map(|i| {
                let k = adj[i].len() as f64;
                if k < 2.0 {
                    0.0
                } else {
                    2.0 * tri[i] as f64 / (k * (k - 1.0))
                }
            })
            .sum();
        total / n as f64
    };

    let assortativity = {
        let (mut h, mut prod, mut mean, mut sq) = (0.0, 0.0, 0.0, 0.0);
        for &((a, b), w) in &pairs {
            let (ka, kb) = (adj[a as usize].len() as f64, adj[b as usize].len() as f64);
            h += w;
            prod += w * ka * kb;
            mean += w * (ka + kb) / 2.0;
            sq += w * (ka * ka + kb * kb) / 2.0;
        }
        if h == 0.0 {
            None
        } else {
            let (prod, mean, sq) = (prod / h, mean / h, sq / h);
            let denom = sq - mean * mean;
            (denom.abs() > 1e-12).then(|| (prod - mean * mean) / denom)
        }
    };

    GraphStats {
        nodes: n,
        edges: m,
        density,
        mean_degree,
        mean_clustering,
        assortativity,
    }
}
