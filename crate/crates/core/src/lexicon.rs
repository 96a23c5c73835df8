//! Stance lexicon bootstrapping, heuristic tweet labeling and burst hashtags.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Tweet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Pro,
    Anti,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicLabel {
    Pro,
    Anti,
    Unlabeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub side: Side,
    pub origin: u32,
}

/// Two disjoint term sets; each term remembers the expansion iteration that
/// admitted it (0 for seeds).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, LexiconEntry>", into = "BTreeMap<String, LexiconEntry>")]
pub struct StanceLexicon {
    entries: BTreeMap<String, LexiconEntry>,
}

impl TryFrom<BTreeMap<String, LexiconEntry>> for StanceLexicon {
    type Error = Error;

    fn try_from(entries: BTreeMap<String, LexiconEntry>) -> Result<Self> {
        Ok(StanceLexicon { entries })
    }
}

impl From<StanceLexicon> for BTreeMap<String, LexiconEntry> {
    fn from(l: StanceLexicon) -> Self {
        l.entries
    }
}

impl StanceLexicon {
    pub fn from_seeds(pro: &BTreeSet<String>, anti: &BTreeSet<String>) -> Result<Self> {
        if pro.is_empty() || anti.is_empty() {
            return Err(Error::InvalidArgument("seed lists must both be non-empty".into()));
        }
        if let Some(t) = pro.intersection(anti).next() {
            return Err(Error::InvalidArgument(format!("seed term {t:?} appears in both lists")));
        }
        let mut entries = BTreeMap::new();
        for t in pro {
            entries.insert(t.clone(), LexiconEntry { side: Side::Pro, origin: 0 });
        }
        for t in anti {
            entries.insert(t.clone(), LexiconEntry { side: Side::Anti, origin: 0 });
        }
        Ok(StanceLexicon { entries })
    }

    pub fn side_of(&self, term: &str) -> Option<Side> {
        self.entries.get(term).map(|e| e.side)
    }

    pub fn origin(&self, term: &str) -> Option<u32> {
        self.entries.get(term).map(|e| e.origin)
    }

    pub fn terms(&self, side: Side) -> BTreeSet<&str> {
        self.entries
            .iter()
            .filter(|(_, e)| e.side == side)
            .map(|(t, _)| t.as_str())
            .collect()
    }

    pub fn len(&self, side: Side) -> usize {
        self.entries.values().filter(|e| e.side == side).count()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, LexiconEntry)> {
        self.entries.iter().map(|(t, e)| (t.as_str(), *e))
    }

    /// The lexicon as it stood after iteration `k`.
    pub fn at_iteration(&self, k: u32) -> StanceLexicon {
        StanceLexicon {
            entries: self
                .entries
                .iter()
                .filter(|(_, e)| e.origin <= k)
                .map(|(t, e)| (t.clone(), *e))
                .collect(),
        }
    }

    pub fn max_origin(&self) -> u32 {
        self.entries.values().map(|e| e.origin).max().unwrap_or(0)
    }

    fn label_tokens<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> HeuristicLabel {
        let (mut pro, mut anti) = (false, false);
        for t in tokens {
            match self.side_of(t) {
                Some(Side::Pro) => pro = true,
                Some(Side::Anti) => anti = true,
                None => {}
            }
            if pro && anti {
                return HeuristicLabel::Unlabeled;
            }
        }
        match (pro, anti) {
            (true, false) => HeuristicLabel::Pro,
            (false, true) => HeuristicLabel::Anti,
            _ => HeuristicLabel::Unlabeled,
        }
    }
}

/// Pro iff the tweet carries a pro term and no anti term; Anti symmetrically.
pub fn heuristic_label(t: &Tweet, lex: &StanceLexicon) -> HeuristicLabel {
    lex.label_tokens(t.tokens().iter())
}

pub fn label_corpus(c: &Corpus, lex: &StanceLexicon) -> Vec<HeuristicLabel> {
    c.tweets().par_iter().map(|t| heuristic_label(t, lex)).collect()
}

/// Per-iteration bookkeeping of an expansion run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansionStep {
    pub iteration: u32,
    pub labeled_pro: usize,
    pub labeled_anti: usize,
    pub added_pro: usize,
    pub added_anti: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Expansion {
    pub lexicon: StanceLexicon,
    pub steps: Vec<ExpansionStep>,
}

type DocFreq<'a> = HashMap<&'a str, [usize; 2]>;

fn side_doc_freq<'a>(c: &'a Corpus, labels: &[HeuristicLabel]) -> DocFreq<'a> {
    c.tweets()
        .par_iter()
        .zip(labels.par_iter())
        .fold(DocFreq::new, |mut acc, (t, l)| {
            let slot = match l {
                HeuristicLabel::Pro => 0,
                HeuristicLabel::Anti => 1,
                HeuristicLabel::Unlabeled => return acc,
            };
            let mut terms: Vec<&str> = t.tokens().to_vec();
            terms.sort_unstable();
            terms.dedup();
            for term in terms {
                acc.entry(term).or_default()[slot] += 1;
            }
            acc
        })
        .reduce(DocFreq::new, |mut a, b| {
            for (k, v) in b {
                let e = a.entry(k).or_default();
                e[0] += v[0];
                e[1] += v[1];
            }
            a
        })
}

/// Grow the seed lexicons by exclusive co-occurrence.
///
/// At iteration `k` every tweet is labeled with the lexicon of iteration
/// `k - 1`; a term not yet in the lexicon joins side S when it occurs in at
/// least `min_count` tweets labeled S and in no tweet labeled the other side.
/// Frequencies are per-tweet document counts. Terms are never removed.
pub fn expand_lexicons(
    c: &Corpus,
    seed_pro: &BTreeSet<String>,
    seed_anti: &BTreeSet<String>,
    iterations: u32,
    min_count: usize,
) -> Result<Expansion> {
    if min_count < 1 {
        return Err(Error::InvalidArgument("min_count must be >= 1".into()));
    }
    let mut lex = StanceLexicon::from_seeds(seed_pro, seed_anti)?;
    let mut steps = Vec::with_capacity(iterations as usize);
    for k in 1..=iterations {
        let labels = label_corpus(c, &lex);
        let labeled_pro = labels.iter().filter(|l| **l == HeuristicLabel::Pro).count();
        let labeled_anti = labels.iter().filter(|l| **l == HeuristicLabel::Anti).count();
        let df = side_doc_freq(c, &labels);
        let mut added: Vec<(&str, Side)> = df
            .iter()
            .filter(|(t, _)| !lex.entries.contains_key(**t))
            .filter_map(|(t, [p, a])| match (*p, *a) {
                (p, 0) if p >= min_count => Some((*t, Side::Pro)),
                (0, a) if a >= min_count => Some((*t, Side::Anti)),
                _ => None,
            })
            .collect();
        added.sort_unstable();
        let added_pro = added.iter().filter(|(_, s)| *s == Side::Pro).count();
        let added_anti = added.len() - added_pro;
        for (t, side) in added {
            lex.entries.insert(t.to_owned(), LexiconEntry { side, origin: k });
        }
        steps.push(ExpansionStep {
            iteration: k,
            labeled_pro,
            labeled_anti,
            added_pro,
            added_anti,
        });
        if added_pro + added_anti == 0 {
            log::info!("lexicon expansion reached a fixed point at iteration {k}");
            break;
        }
    }
    Ok(Expansion { lexicon: lex, steps })
}

/// Fraction of tweets that receive a Pro or Anti heuristic label.
pub fn labeled_fraction(c: &Corpus, lex: &StanceLexicon) -> Result<f64> {
    if c.is_empty() {
        return Err(Error::InvalidArgument("labeled_fraction of an empty corpus".into()));
    }
    let n = label_corpus(c, lex)
        .into_iter()
        .filter(|l| *l != HeuristicLabel::Unlabeled)
        .count();
    Ok(n as f64 / c.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurstHashtag {
    pub hashtag: String,
    pub peak_day: NaiveDate,
    pub peak_count: usize,
    /// Peak count over mean count on days the tag was used.
    pub burst_ratio: f64,
    /// Tweets per day containing the tag, active days only.
    pub daily: BTreeMap<NaiveDate, usize>,
}

/// Tweets per (hashtag, day); a tag repeated inside one tweet counts once.
pub fn hashtag_day_counts(c: &Corpus) -> BTreeMap<&str, BTreeMap<NaiveDate, usize>> {
    let mut counts: BTreeMap<&str, BTreeMap<NaiveDate, usize>> = BTreeMap::new();
    for t in c.tweets() {
        let mut tags: Vec<&str> = t.hashtags().collect();
        tags.sort_unstable();
        tags.dedup();
        for tag in tags {
            *counts.entry(tag).or_default().entry(t.day()).or_default() += 1;
        }
    }
    counts
}

/// Hashtags ranked by their largest single-day volume.
///
/// Tags whose peak is less than `burst_ratio_min` times their mean over active
/// days never burst and are dropped. Ties rank by name.
pub fn burst_hashtags(c: &Corpus, k: usize, burst_ratio_min: f64) -> Result<Vec<BurstHashtag>> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let mut ranked: Vec<BurstHashtag> = hashtag_day_counts(c)
        .into_iter()
        .filter_map(|(tag, daily)| {
            let (peak_day, peak_count) = daily
                .iter()
                .fold((None, 0usize), |(d, m), (day, n)| if *n > m { (Some(*day), *n) } else { (d, m) });
            let total: usize = daily.values().sum();
            let mean = total as f64 / daily.len() as f64;
            let ratio = peak_count as f64 / mean;
            (ratio >= burst_ratio_min).then(|| BurstHashtag {
                hashtag: tag.to_owned(),
                peak_day: peak_day.expect("active tag has a day"),
                peak_count,
                burst_ratio: ratio,
                daily,
            })
        })
        .collect();
    ranked.sort_by(|a, b| b.peak_count.cmp(&a.peak_count).then_with(|| a.hashtag.cmp(&b.hashtag)));
    ranked.truncate(k);
    Ok(ranked)
}
