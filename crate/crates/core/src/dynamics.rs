//! Time-resolved analyses joining the content and network sides.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{classify_corpus, StanceClass, StanceModel};
use crate::corpus::Corpus;
use crate::netdyn::{GraphSnapshot, Labeling, Leaning, SnapshotLabels};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunitySize {
    pub day: NaiveDate,
    pub secular: usize,
    pub islamist: usize,
    pub size: usize,
}

/// Community sizes per labeled snapshot.
pub fn community_sizes(snapshots: &[GraphSnapshot]) -> Result<Vec<CommunitySize>> {
    snapshots
        .iter()
        .map(|g| {
            let mut counts = [0usize; 2];
            for l in g.labels() {
                match l {
                    Some(l) => counts[l.index()] += 1,
                    None => {
                        return Err(Error::InvalidArgument(format!("snapshot {} is not fully labeled", g.day)));
                    }
                }
            }
            Ok(CommunitySize {
                day: g.day,
                secular: counts[0],
                islamist: counts[1],
                size: counts[0] + counts[1],
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossover {
    /// First day of the new regime.
    pub day: NaiveDate,
    /// Sign of the difference before the crossover.
    pub from_positive: bool,
    /// Days whose sign disagrees with the fitted step.
    pub mismatches: usize,
}

/// Fits a single sign change to a daily difference series.
///
/// The split minimizes the number of days whose sign disagrees with the step;
/// zero differences always count as disagreeing and ties go to the earliest
/// split. Returns `None` when the series never changes sign.
pub fn crossover(series: &[(NaiveDate, f64)]) -> Option<Crossover> {
    let pos = series.iter().any(|(_, d)| *d > 0.0);
    let neg = series.iter().any(|(_, d)| *d < 0.0);
    if !(pos && neg) {
        return None;
    }
    let n = series.len();
    let mut best: Option<Crossover> = None;
    for from_positive in [true, false] {
        let agrees_before = |d: f64| if from_positive { d > 0.0 } else { d < 0.0 };
        let agrees_after = |d: f64| if from_positive { d < 0.0 } else { d > 0.0 };
        let mut miss_before = 0;
        let mut miss_after = series.iter().filter(|(_, d)| !agrees_after(*d)).count();
        for t in 1..n {
            let d = series[t - 1].1;
            miss_before += usize::from(!agrees_before(d));
            miss_after -= usize::from(!agrees_after(d));
            let mismatches = miss_before + miss_after;
            let better = match &best {
                None => true,
                Some(b) => mismatches < b.mismatches || (mismatches == b.mismatches && series[t].0 < b.day),
            };
            if better {
                best = Some(Crossover {
                    day: series[t].0,
                    from_positive,
                    mismatches,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchVerdict {
    NoSwitch,
    ProToAnti,
    AntiToPro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSwitch {
    pub user: String,
    /// Classified Pro/Anti tweets of the user.
    pub tweets: usize,
    /// Fraction Anti in the first third.
    pub first_score: f64,
    /// Fraction Anti in the last third.
    pub last_score: f64,
    pub verdict: SwitchVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchReport {
    pub n_threshold: usize,
    pub users_examined: usize,
    pub pro_to_anti: usize,
    pub anti_to_pro: usize,
    /// `(pro_to_anti + anti_to_pro) / users_examined`, 0 when nobody qualifies.
    pub switch_fraction: f64,
    pub users: Vec<UserSwitch>,
}

/// First/last-third verdict for one user's chronological Pro/Anti sequence
/// (`true` = Anti).
pub fn third_scores(seq: &[bool]) -> (f64, f64, SwitchVerdict) {
    let k = seq.len();
    let first = k.div_ceil(3);
    let last = k / 3;
    let frac = |s: &[bool]| s.iter().filter(|a| **a).count() as f64 / s.len() as f64;
    let a = frac(&seq[..first]);
    let b = frac(&seq[k - last..]);
    let verdict = if a < 0.5 && b > 0.5 {
        SwitchVerdict::ProToAnti
    } else if a > 0.5 && b < 0.5 {
        SwitchVerdict::AntiToPro
    } else {
        SwitchVerdict::NoSwitch
    };
    (a, b, verdict)
}

/// Content switch detection from predictions aligned with `c`.
/// Neutral predictions are dropped before the threshold is applied.
pub fn content_switches_from_predictions(c: &Corpus, preds: &[StanceClass], n: usize) -> Result<SwitchReport> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("switch threshold must be >= 3, got {n}")));
    }
    if preds.len() != c.len() {
        return Err(Error::InvalidArgument("prediction count differs from corpus size".into()));
    }
    let authors: Vec<(&str, &[usize])> = c.authors().collect();
    let users: Vec<UserSwitch> = authors
        .par_iter()
        .filter_map(|(user, pos)| {
            // Corpus positions are chronological.
            let seq: Vec<bool> = pos
                .iter()
                .filter_map(|&i| match preds[i] {
                    StanceClass::Pro => Some(false),
                    StanceClass::Anti => Some(true),
                    StanceClass::Neutral => None,
                })
                .collect();
            (seq.len() >= n).then(|| {
                let (first_score, last_score, verdict) = third_scores(&seq);
                UserSwitch {
                    user: (*user).to_owned(),
                    tweets: seq.len(),
                    first_score,
                    last_score,
                    verdict,
                }
            })
        })
        .collect();
    let count = |v| users.iter().filter(|u| u.verdict == v).count();
    let pro_to_anti = count(SwitchVerdict::ProToAnti);
    let anti_to_pro = count(SwitchVerdict::AntiToPro);
    let switch_fraction = if users.is_empty() {
        0.0
    } else {
        (pro_to_anti + anti_to_pro) as f64 / users.len() as f64
    };
    Ok(SwitchReport {
        n_threshold: n,
        users_examined: users.len(),
        pro_to_anti,
        anti_to_pro,
        switch_fraction,
        users,
    })
}

pub fn content_switches(c: &Corpus, m: &StanceModel, n: usize) -> Result<SwitchReport> {
    content_switches_from_predictions(c, &classify_corpus(c, m), n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchRatio {
    pub common: usize,
    pub changed: usize,
    pub ratio: f64,
    /// Share of changed nodes that went Secular to Islamist; absent when none changed.
    pub secular_to_islamist: Option<f64>,
    pub islamist_to_secular: Option<f64>,
}

/// Fraction of nodes common to two labelings whose leaning changed.
/// `None` when the node sets do not intersect.
pub fn network_switch_ratio(before: &Labeling, after: &Labeling) -> Option<SwitchRatio> {
    let (mut common, mut s2i, mut i2s) = (0usize, 0usize, 0usize);
    for (user, a) in before {
        if let Some(b) = after.get(user) {
            common += 1;
            match (a, b) {
                (Leaning::Secular, Leaning::Islamist) => s2i += 1,
                (Leaning::Islamist, Leaning::Secular) => i2s += 1,
                _ => {}
            }
        }
    }
    if common == 0 {
        return None;
    }
    let changed = s2i + i2s;
    let share = |k: usize| (changed > 0).then(|| k as f64 / changed as f64);
    Some(SwitchRatio {
        common,
        changed,
        ratio: changed as f64 / common as f64,
        secular_to_islamist: share(s2i),
        islamist_to_secular: share(i2s),
    })
}

/// Switch ratio between each labeled snapshot and its predecessor, keyed by
/// the later day.
pub fn network_switch_series(snapshots: &[GraphSnapshot]) -> Vec<(NaiveDate, Option<SwitchRatio>)> {
    let labelings: Vec<Labeling> = snapshots.iter().map(GraphSnapshot::labeling).collect();
    labelings
        .windows(2)
        .zip(&snapshots[1.min(snapshots.len())..])
        .map(|(w, g)| (g.day, network_switch_ratio(&w[0], &w[1])))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftLabel {
    /// Fraction of present snapshots labeled Islamist.
    pub l: f64,
    pub snapshots_present: usize,
    pub islamist: usize,
    /// Reposts made in the period's windows per snapshot present.
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftLabelTable {
    pub t0: NaiveDate,
    pub tf: NaiveDate,
    pub snapshots: usize,
    pub users: BTreeMap<String, SoftLabel>,
}

/// Per-user soft leaning over snapshots whose day lies in `[t0, tf]`.
pub fn soft_labels(snapshots: &[SnapshotLabels], t0: NaiveDate, tf: NaiveDate) -> Result<SoftLabelTable> {
    if t0 > tf {
        return Err(Error::InvalidArgument(format!("empty period {t0}..{tf}")));
    }
    let mut acc: BTreeMap<&str, (usize, usize, u64)> = BTreeMap::new();
    let mut used = 0;
    for s in snapshots.iter().filter(|s| s.day >= t0 && s.day <= tf) {
        used += 1;
        for (user, leaning, reposts) in &s.entries {
            let e = acc.entry(user).or_default();
            e.0 += 1;
            e.1 += usize::from(*leaning == Leaning::Islamist);
            e.2 += reposts;
        }
    }
    let users = acc
        .into_iter()
        .map(|(u, (present, islamist, reposts))| {
            let label = SoftLabel {
                l: islamist as f64 / present as f64,
                snapshots_present: present,
                islamist,
                strength: reposts as f64 / present as f64,
            };
            (u.to_owned(), label)
        })
        .collect();
    Ok(SoftLabelTable {
        t0,
        tf,
        snapshots: used,
        users,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub users: usize,
    /// Mean per-snapshot strength of the bin's users; absent for empty bins.
    pub mean_strength: Option<f64>,
}

/// Number of bins of width `bw` covering `[0, 1]`.
fn bin_count(bw: f64) -> usize {
    ((1.0 / bw) - 1e-9).ceil().max(1.0) as usize
}

/// Half-open bin `[k*bw, (k+1)*bw)`, with 1.0 folded into the last bin.
pub fn bin_index(l: f64, bw: f64) -> usize {
    let k = (l / bw + 1e-9).floor().max(0.0) as usize;
    k.min(bin_count(bw) - 1)
}

pub fn leaning_histogram(tbl: &SoftLabelTable, bin_width: f64) -> Result<Vec<HistogramBin>> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(Error::InvalidArgument(format!("bin width must lie in (0, 1], got {bin_width}")));
    }
    let nb = bin_count(bin_width);
    let mut users = vec![0usize; nb];
    let mut strength = vec![0.0; nb];
    for s in tbl.users.values() {
        let k = bin_index(s.l, bin_width);
        users[k] += 1;
        strength[k] += s.strength;
    }
    Ok((0..nb)
        .map(|k| HistogramBin {
            lo: k as f64 * bin_width,
            hi: ((k + 1) as f64 * bin_width).min(1.0),
            users: users[k],
            mean_strength: (users[k] > 0).then(|| strength[k] / users[k] as f64),
        })
        .collect())
}

/// Per-user fraction of Anti among classified Pro/Anti tweets over the whole
/// corpus. Users with only Neutral tweets are omitted.
pub fn content_polarity(c: &Corpus, preds: &[StanceClass]) -> Result<BTreeMap<String, f64>> {
    if preds.len() != c.len() {
        return Err(Error::InvalidArgument("prediction count differs from corpus size".into()));
    }
    Ok(c.authors()
        .filter_map(|(user, pos)| {
            let (mut pro, mut anti) = (0usize, 0usize);
            for &i in pos {
                match preds[i] {
                    StanceClass::Pro => pro += 1,
                    StanceClass::Anti => anti += 1,
                    StanceClass::Neutral => {}
                }
            }
            (pro + anti > 0).then(|| (user.to_owned(), anti as f64 / (pro + anti) as f64))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub n: usize,
    /// `(user, content polarity, soft label)`.
    pub pairs: Vec<(String, f64, f64)>,
}

/// Pearson correlation between content polarity and network soft label over
/// the users present in both.
pub fn content_network_correlation(polarity: &BTreeMap<String, f64>, tbl: &SoftLabelTable) -> Result<Correlation> {
    let pairs: Vec<(String, f64, f64)> = polarity
        .iter()
        .filter_map(|(u, p)| tbl.users.get(u).map(|s| (u.clone(), *p, s.l)))
        .collect();
    let n = pairs.len();
    if n < 2 {
        return Err(Error::Data(format!("correlation needs at least 2 shared users, found {n}")));
    }
    let mx = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let my = pairs.iter().map(|p| p.2).sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (_, x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 {
        return Err(Error::Data("content polarity has zero variance".into()));
    }
    if syy == 0.0 {
        return Err(Error::Data("soft label has zero variance".into()));
    }
    Ok(Correlation {
        r: (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0),
        n,
        pairs,
    })
}
