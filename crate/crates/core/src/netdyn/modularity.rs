use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::propagation::{label_propagation, Adjacency};
use super::{Edge, GraphSnapshot, Leaning, SeedList};
use crate::classifier::mean_and_sample_std;
use crate::{rng, Error, Result};

/// Edge weights used by modularity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Repost counts, reciprocal arcs summed.
    #[default]
    Weighted,
    /// Every connected pair weighs 1.
    Binary,
}

/// `Q = sum_c [ in_c / 2m - (S_c / 2m)^2 ]` over community ids.
fn partition_q(adj: &Adjacency, comm: &[usize]) -> Option<f64> {
    let k = comm.iter().copied().max().map_or(0, |m| m + 1);
    let mut inside = vec![0.0; k];
    let mut total = vec![0.0; k];
    let mut two_m = 0.0;
    for i in 0..adj.len() {
        let s = adj.strength(i);
        two_m += s;
        total[comm[i]] += s;
        for (j, w) in adj.neighbors(i) {
            if comm[j] == comm[i] {
                inside[comm[i]] += w;
            }
        }
    }
    if two_m == 0.0 {
        return None;
    }
    Some(
        inside
            .iter()
            .zip(&total)
            .map(|(a, s)| a / two_m - (s / two_m).powi(2))
            .sum(),
    )
}

/// Newman modularity of a complete two-label labeling on the weighted
/// undirected projection.
pub fn modularity(g: &GraphSnapshot, labels: &[Option<Leaning>]) -> Result<f64> {
    modularity_with(g, labels, Weighting::Weighted)
}

pub fn modularity_with(g: &GraphSnapshot, labels: &[Option<Leaning>], weighting: Weighting) -> Result<f64> {
    if labels.len() != g.node_count() {
        return Err(Error::InvalidArgument("labeling length differs from node count".into()));
    }
    if labels.iter().any(Option::is_none) {
        return Err(Error::InvalidArgument("modularity needs every node labeled".into()));
    }
    modularity_partial(g, labels, weighting)
}

/// Like [`modularity_with`], but each unassigned node forms its own community.
pub fn modularity_partial(g: &GraphSnapshot, labels: &[Option<Leaning>], weighting: Weighting) -> Result<f64> {
    let mut next = 2;
    let comm: Vec<usize> = labels
        .iter()
        .map(|l| match l {
            Some(l) => l.index(),
            None => {
                next += 1;
                next - 1
            }
        })
        .collect();
    let adj = Adjacency::new(g, weighting == Weighting::Binary);
    partition_q(&adj, &comm).ok_or_else(|| Error::InvalidArgument("modularity of a graph without edges".into()))
}

/// Degree-preserving randomization by directed double-edge swaps.
///
/// Two arcs `a->b (w1)`, `c->d (w2)` become `a->d (w1)`, `c->b (w2)`; a swap
/// that would create a self-loop or an arc already present is rejected and a
/// new pair drawn. In- and out-degrees and out-strengths are preserved.
/// Returns the surrogate and the number of accepted swaps (attempts are capped
/// at 100 per requested swap).
pub fn rewire<R: Rng>(g: &GraphSnapshot, swaps: usize, rng: &mut R) -> (GraphSnapshot, usize) {
    let mut edges: Vec<Edge> = g.edges().to_vec();
    let m = edges.len();
    if m < 2 {
        return (g.clone(), 0);
    }
    let mut present: HashSet<(u32, u32)> = edges.iter().map(|e| (e.src, e.dst)).collect();
    let max_attempts = swaps.saturating_mul(100);
    let (mut accepted, mut attempts) = (0, 0);
    while accepted < swaps && attempts < max_attempts {
        attempts += 1;
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        if i == j {
            continue;
        }
        let (e1, e2) = (edges[i], edges[j]);
        if e1.src == e2.dst || e2.src == e1.dst || present.contains(&(e1.src, e2.dst)) || present.contains(&(e2.src, e1.dst)) {
            continue;
        }
        present.remove(&(e1.src, e1.dst));
        present.remove(&(e2.src, e2.dst));
        edges[i].dst = e2.dst;
        edges[j].dst = e1.dst;
        present.insert((e1.src, e2.dst));
        present.insert((e2.src, e1.dst));
        accepted += 1;
    }
    if accepted < swaps {
        log::warn!("rewiring of {} stopped at {accepted}/{swaps} swaps", g.day);
    }
    (GraphSnapshot::from_parts(g.day, g.nodes().to_vec(), edges), accepted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub n_surr: usize,
    /// Accepted swaps per surrogate, as a multiple of the arc count.
    pub swaps_per_edge: usize,
    pub max_sweeps: usize,
    pub weighting: Weighting,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            n_surr: 100,
            swaps_per_edge: 10,
            max_sweeps: super::DEFAULT_MAX_SWEEPS,
            weighting: Weighting::Weighted,
        }
    }
}

/// Spread below which surrogate Q values count as identical.
pub const SPREAD_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QReport {
    pub day: chrono::NaiveDate,
    pub rng_seed: u64,
    pub q_actual: f64,
    pub surrogate_q: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation of `surrogate_q`.
    pub std: f64,
    /// `(q_actual - mean) / std`. Infinite when every surrogate lands on the
    /// same Q and `q_actual` differs from it; absent when both coincide.
    #[serde(with = "signed_infinity")]
    pub z: Option<f64>,
    pub swaps_target: usize,
    pub min_swaps_accepted: usize,
    /// The snapshot's own labeling was used for `q_actual` instead of a fresh run.
    pub used_existing_labels: bool,
}

/// Significance of the seeded two-community partition against
/// degree-preserving surrogates.
///
/// `q_actual` comes from the snapshot's labeling when it is complete, otherwise
/// from a fresh propagation. Every surrogate is propagated from the same seeds
/// with its own random stream; nodes a surrogate leaves unassigned count as
/// singleton communities.
pub fn surrogate_zscore(g: &GraphSnapshot, seeds: &SeedList, cfg: &SurrogateConfig, rng_seed: u64) -> Result<QReport> {
    if cfg.n_surr < 2 {
        return Err(Error::InvalidArgument("n_surr must be >= 2".into()));
    }
    if g.edge_count() < 2 {
        return Err(Error::InvalidArgument(format!(
            "snapshot {} has {} arcs; at least 2 are needed to rewire",
            g.day,
            g.edge_count()
        )));
    }
    let used_existing_labels = g.is_fully_labeled();
    let q_actual = if used_existing_labels {
        modularity_with(g, g.labels(), cfg.weighting)?
    } else {
        let p = label_propagation(g, seeds, None, rng::stream_seed(rng_seed, "actual"), cfg.max_sweeps)?;
        modularity_partial(g, &p.labels, cfg.weighting)?
    };
    let swaps_target = cfg.swaps_per_edge * g.edge_count();
    let base = rng::stream_seed(rng_seed, "surrogates");
    let runs: Vec<Result<(f64, usize)>> = (0..cfg.n_surr)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::substream(base, i as u64);
            let (sg, accepted) = rewire(g, swaps_target, &mut r);
            let lp_seed: u64 = r.random();
            let p = label_propagation(&sg, seeds, None, lp_seed, cfg.max_sweeps)?;
            Ok((modularity_partial(&sg, &p.labels, cfg.weighting)?, accepted))
        })
        .collect();
    let mut surrogate_q = Vec::with_capacity(cfg.n_surr);
    let mut min_swaps_accepted = usize::MAX;
    for r in runs {
        let (q, a) = r?;
        surrogate_q.push(q);
        min_swaps_accepted = min_swaps_accepted.min(a);
    }
    let (mean, mut std) = mean_and_sample_std(&surrogate_q);
    let gap = q_actual - mean;
    // Identical surrogate values still leave rounding residue in the std.
    if std <= SPREAD_EPS {
        std = 0.0;
    }
    let z = if std > 0.0 {
        Some(gap / std)
    } else if gap.abs() > SPREAD_EPS {
        Some(f64::INFINITY.copysign(gap))
    } else {
        None
    };
    Ok(QReport {
        day: g.day,
        rng_seed,
        q_actual,
        surrogate_q,
        mean,
        std,
        z,
        swaps_target,
        min_swaps_accepted,
        used_existing_labels,
    })
}

/// JSON has no infinities, so they travel as the strings "inf" / "-inf".
mod signed_infinity {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.is_infinite() => (if *x > 0.0 { "inf" } else { "-inf" }).serialize(s),
            other => other.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Num(x)) => Ok(Some(x)),
            Some(Repr::Str(t)) => match t.as_str() {
                "inf" => Ok(Some(f64::INFINITY)),
                "-inf" => Ok(Some(f64::NEG_INFINITY)),
                _ => Err(serde::de::Error::custom(format!("bad z value {t:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2013, 7, 1).unwrap()
    }

    fn two_cliques() -> GraphSnapshot {
        let mut arcs = Vec::new();
        for p in ["a", "b"] {
            for i in 0..4 {
                for j in 0..i {
                    arcs.push((format!("{p}{i}"), format!("{p}{j}"), 2));
                }
            }
        }
        GraphSnapshot::from_edges(day(), arcs)
    }

    #[test]
    fn single_label_has_zero_q() {
        let g = two_cliques();
        let labels = vec![Some(Leaning::Secular); g.node_count()];
        assert!(modularity(&g, &labels).unwrap().abs() < 1e-15);
    }

    #[test]
    fn disconnected_cliques_labeled_apart() {
        let g = two_cliques();
        let labels: Vec<_> = g
            .nodes()
            .iter()
            .map(|n| Some(if n.starts_with('a') { Leaning::Secular } else { Leaning::Islamist }))
            .collect();
        assert!((modularity(&g, &labels).unwrap() - 0.5).abs() < 1e-15);
        assert!((modularity_with(&g, &labels, Weighting::Binary).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn modularity_errors() {
        let g = two_cliques();
        let mut labels = vec![Some(Leaning::Secular); g.node_count()];
        labels[0] = None;
        assert!(modularity(&g, &labels).is_err());
        assert!(modularity(&g, &labels[1..]).is_err());
    }

    #[test]
    fn rewiring_preserves_degrees() {
        let g = two_cliques();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (sg, accepted) = rewire(&g, 10 * g.edge_count(), &mut rng);
        assert!(accepted > 0);
        assert_eq!(sg.in_out_degrees(), g.in_out_degrees());
        assert_eq!(sg.out_strength(), g.out_strength());
        assert!(sg.edges().iter().all(|e| e.src != e.dst));
        let uniq: HashSet<_> = sg.edges().iter().map(|e| (e.src, e.dst)).collect();
        assert_eq!(uniq.len(), sg.edge_count());
    }

    #[test]
    fn surrogate_argument_checks() {
        let g = GraphSnapshot::from_edges(day(), [("a", "b", 1)]);
        let seeds = SeedList::new([("a".to_string(), Leaning::Secular), ("b".to_string(), Leaning::Islamist)]).unwrap();
        assert!(surrogate_zscore(&g, &seeds, &SurrogateConfig::default(), 0).is_err());
        let cfg = SurrogateConfig { n_surr: 1, ..Default::default() };
        assert!(surrogate_zscore(&two_cliques(), &seeds, &cfg, 0).is_err());
    }

    #[test]
    fn infinite_z_survives_json() {
        let mut r = QReport {
            day: day(),
            rng_seed: 1,
            q_actual: 0.4,
            surrogate_q: vec![0.0, 0.0],
            mean: 0.0,
            std: 0.0,
            z: Some(f64::INFINITY),
            swaps_target: 10,
            min_swaps_accepted: 10,
            used_existing_labels: true,
        };
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains(r#""z":"inf""#));
        assert_eq!(serde_json::from_str::<QReport>(&text).unwrap(), r);
        r.z = Some(-2.5);
        assert_eq!(serde_json::from_str::<QReport>(&serde_json::to_string(&r).unwrap()).unwrap(), r);
        r.z = None;
        assert_eq!(serde_json::from_str::<QReport>(&serde_json::to_string(&r).unwrap()).unwrap(), r);
    }
}
