//! Ingest, normalization, Boolean filtering and active-user selection.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rustc_hash::FxHashMap;

pub mod normalize;
pub mod query;
pub mod text;
mod tweet;

pub use normalize::{normalize_text, NormalizationRules, Rule};
pub use query::{eval_query, parse_query, Query, QuerySyntaxError};
pub use tweet::{Tweet, TweetRecord};

use crate::{Error, Result};

/// Counters collected while building a corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct IngestStats {
    pub records: usize,
    pub duplicates: usize,
    pub rejected: usize,
}

/// Immutable, time-ordered tweet collection with author and day indices.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    tweets: Vec<Tweet>,
    by_author: BTreeMap<String, Vec<usize>>,
    by_day: BTreeMap<NaiveDate, Vec<usize>>,
}

impl Corpus {
    /// Build from raw tweets. A repeated id keeps the last record seen.
    pub fn new(tweets: Vec<Tweet>) -> (Corpus, IngestStats) {
        let records = tweets.len();
        let mut latest: FxHashMap<&str, usize> = FxHashMap::default();
        latest.reserve(records);
        for (i, t) in tweets.iter().enumerate() {
            latest.insert(t.id(), i);
        }
        let duplicates = records - latest.len();
        if duplicates > 0 {
            log::warn!("{duplicates} duplicate tweet ids dropped (last record wins)");
        }
        let keep: Vec<bool> = tweets.iter().enumerate().map(|(i, t)| latest.get(t.id()) == Some(&i)).collect();
        drop(latest);
        let kept: Vec<Tweet> = tweets.into_iter().zip(keep).filter_map(|(t, k)| k.then_some(t)).collect();
        let stats = IngestStats {
            records,
            duplicates,
            rejected: 0,
        };
        (Corpus::from_unique(kept), stats)
    }

    fn from_unique(tweets: Vec<Tweet>) -> Corpus {
        let order = |a: &Tweet, b: &Tweet| a.timestamp().cmp(&b.timestamp()).then_with(|| a.id().cmp(b.id()));
        if tweets.is_sorted_by(|a, b| order(a, b).is_le()) {
            return Corpus::from_sorted(tweets);
        }
        // Sorting indices moves 8 bytes per swap instead of a whole tweet.
        let mut idx: Vec<usize> = (0..tweets.len()).collect();
        idx.sort_by(|&a, &b| order(&tweets[a], &tweets[b]));
        let mut slots: Vec<Option<Tweet>> = tweets.into_iter().map(Some).collect();
        Corpus::from_sorted(idx.into_iter().map(|i| slots[i].take().expect("each index once")).collect())
    }

    fn from_sorted(tweets: Vec<Tweet>) -> Corpus {
        let mut by_author: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut by_day: BTreeMap<NaiveDate, Vec<usize>> = BTreeMap::new();
        for (i, t) in tweets.iter().enumerate() {
            match by_author.get_mut(t.author_id()) {
                Some(v) => v.push(i),
                None => {
                    by_author.insert(t.author_id().to_owned(), vec![i]);
                }
            }
            by_day.entry(t.day()).or_default().push(i);
        }
        Corpus {
            tweets,
            by_author,
            by_day,
        }
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    /// Positions of an author's tweets, in time order.
    pub fn author_positions(&self, author: &str) -> &[usize] {
        self.by_author.get(author).map_or(&[], Vec::as_slice)
    }

    pub fn authors(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.by_author.iter().map(|(a, p)| (a.as_str(), p.as_slice()))
    }

    pub fn days(&self) -> impl Iterator<Item = (NaiveDate, &[usize])> {
        self.by_day.iter().map(|(d, p)| (*d, p.as_slice()))
    }

    pub fn day_positions(&self, day: NaiveDate) -> &[usize] {
        self.by_day.get(&day).map_or(&[], Vec::as_slice)
    }

    /// First and last UTC day with at least one tweet.
    pub fn day_range(&self) -> Option<(NaiveDate, NaiveDate)> {
        Some((*self.by_day.keys().next()?, *self.by_day.keys().next_back()?))
    }

    /// Sub-corpus of the tweets satisfying `keep`, order preserved.
    pub fn subset(&self, mut keep: impl FnMut(usize, &Tweet) -> bool) -> Corpus {
        let tweets = self
            .tweets
            .iter()
            .enumerate()
            .filter(|(i, t)| keep(*i, t))
            .map(|(_, t)| t.clone())
            .collect();
        Corpus::from_sorted(tweets)
    }

    pub fn normalized(&self, rules: &NormalizationRules) -> Corpus {
        Corpus::from_sorted(self.tweets.iter().map(|t| t.normalized(rules)).collect())
    }
}

/// Keep exactly the tweets that match at least one query.
pub fn filter_corpus(c: &Corpus, queries: &[Query]) -> Result<Corpus> {
    if queries.is_empty() {
        return Err(Error::InvalidArgument("filter_corpus needs at least one query".into()));
    }
    Ok(c.subset(|_, t| queries.iter().any(|q| eval_query(q, t))))
}

/// Authors with strictly more than `min_posts` authored or reposted items.
pub fn select_active_users(c: &Corpus, min_posts: usize) -> Result<BTreeSet<String>> {
    if min_posts < 1 {
        return Err(Error::InvalidArgument("min_posts must be >= 1".into()));
    }
    Ok(c.authors()
        .filter(|(_, p)| p.len() > min_posts)
        .map(|(a, _)| a.to_owned())
        .collect())
}

/// Parse a query file: one query per line, blank and `#`-comment lines skipped.
/// Errors carry the 1-based line number.
pub fn parse_query_file(src: &str, rules: &NormalizationRules) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let q = parse_query(trimmed, rules).map_err(|e| Error::Record {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(q);
    }
    Ok(out)
}
