//! Synthetic corpora and graphs with known ground truth.
//!
//! Text is token soup: each tweet mixes a topic token, side-specific marker
//! terms and shared noise words. Classification difficulty is set by the
//! marker probability alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, NaiveDate, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::classifier::StanceClass;
use crate::corpus::{Corpus, Tweet};
use crate::lexicon::Side;
use crate::netdyn::{GraphSnapshot, Labeling, Leaning};
use crate::{io, rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabSpec {
    /// Plain marker words per class (Pro, Anti and Neutral each).
    pub marker_words: usize,
    /// Marker hashtags per side.
    pub marker_hashtags: usize,
    /// Shared noise words.
    pub noise_words: usize,
}

impl Default for VocabSpec {
    fn default() -> Self {
        VocabSpec {
            marker_words: 20,
            marker_hashtags: 12,
            noise_words: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextSpec {
    pub words_per_tweet: usize,
    /// Probability that a token slot holds a marker of the tweet's class.
    pub marker_prob: f64,
    /// Force at least one marker per tweet, which makes the classes
    /// linearly separable.
    pub ensure_marker: bool,
    pub neutral_prob: f64,
    /// Tweets without the topic term; a topic query drops them.
    pub offtopic_prob: f64,
    pub topic_term: String,
}

impl Default for TextSpec {
    fn default() -> Self {
        TextSpec {
            words_per_tweet: 8,
            marker_prob: 0.25,
            ensure_marker: true,
            neutral_prob: 0.1,
            offtopic_prob: 0.02,
            topic_term: "topic".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchGroup {
    pub count: usize,
    pub from: Side,
    /// Day offset from the start at which the stance flips.
    pub day: u32,
}

/// Activity multipliers per stance side before and after a changepoint day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeChange {
    pub day: u32,
    pub pro_before: f64,
    pub pro_after: f64,
    pub anti_before: f64,
    pub anti_after: f64,
}

impl VolumeChange {
    fn multiplier(&self, side: Side, day: u32) -> f64 {
        match (side, day < self.day) {
            (Side::Pro, true) => self.pro_before,
            (Side::Pro, false) => self.pro_after,
            (Side::Anti, true) => self.anti_before,
            (Side::Anti, false) => self.anti_after,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSpec {
    /// Daily probability that a user reposts a given member of its community.
    pub p_in: f64,
    /// Same, across communities.
    pub p_out: f64,
    pub hubs_per_side: usize,
    /// Daily probability that an active user reposts one of its community's hubs.
    pub hub_repost_prob: f64,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            p_in: 0.002,
            p_out: 0.0002,
            hubs_per_side: 3,
            hub_repost_prob: 0.3,
        }
    }
}

/// Per-user content/network alignment. Each non-hub user draws a content
/// anti share `x` and an Islamist share `y` with `corr(x, y) = rho`; the user's
/// classified tweets carry exactly `round(x k)` Anti out of `k`, and the user
/// sits in the Islamist community for a contiguous block of `round(y D)` of
/// the `D` days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentSpec {
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub users: usize,
    pub start: NaiveDate,
    pub days: u32,
    pub vocab: VocabSpec,
    pub text: TextSpec,
    /// Share of stable non-hub users on the Pro side.
    pub pro_fraction: f64,
    pub switchers: Vec<SwitchGroup>,
    /// Daily probability that a user posts (before volume multipliers).
    pub activity: f64,
    /// Mean number of extra original tweets on an active day.
    pub extra_tweets: f64,
    pub volume: Option<VolumeChange>,
    pub network: NetworkSpec,
    pub alignment: Option<AlignmentSpec>,
    /// Number of tweets written to the gold file.
    pub gold_size: usize,
    /// Marker hashtags per side listed as lexicon seeds.
    pub seed_hashtags: usize,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            seed: 1,
            users: 500,
            start: NaiveDate::from_ymd_opt(2013, 6, 21).expect("valid date"),
            days: 20,
            vocab: VocabSpec::default(),
            text: TextSpec::default(),
            pro_fraction: 0.5,
            switchers: Vec::new(),
            activity: 0.6,
            extra_tweets: 0.3,
            volume: None,
            network: NetworkSpec::default(),
            alignment: None,
            gold_size: 1000,
            seed_hashtags: 3,
        }
    }
}

impl ScenarioSpec {
    /// Demo scenario: about 100k tweets from 5,000 users over 20 days, with a
    /// volume flip at day 10 and planted switchers in both directions.
    pub fn demo() -> Self {
        ScenarioSpec {
            seed: 2013,
            users: 5000,
            activity: 0.55,
            extra_tweets: 0.4,
            switchers: vec![
                SwitchGroup {
                    count: 150,
                    from: Side::Pro,
                    day: 10,
                },
                SwitchGroup {
                    count: 50,
                    from: Side::Anti,
                    day: 12,
                },
            ],
            volume: Some(VolumeChange {
                day: 10,
                pro_before: 1.0,
                pro_after: 0.5,
                anti_before: 0.5,
                anti_after: 1.0,
            }),
            network: NetworkSpec {
                p_in: 0.00025,
                p_out: 0.00002,
                hubs_per_side: 5,
                hub_repost_prob: 0.3,
            },
            ..ScenarioSpec::default()
        }
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let spec: ScenarioSpec = serde_json::from_str(src)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let probs = [
            ("text.marker_prob", self.text.marker_prob),
            ("text.neutral_prob", self.text.neutral_prob),
            ("text.offtopic_prob", self.text.offtopic_prob),
            ("pro_fraction", self.pro_fraction),
            ("activity", self.activity),
            ("network.hub_repost_prob", self.network.hub_repost_prob),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        let (p_in, p_out) = (self.network.p_in, self.network.p_out);
        if !(0.0 <= p_out && p_out < p_in && p_in <= 1.0) {
            return bad(format!("need 0 <= p_out < p_in <= 1, got p_in={p_in} p_out={p_out}"));
        }
        if self.days == 0 {
            return bad("days must be >= 1".into());
        }
        if self.extra_tweets < 0.0 || !self.extra_tweets.is_finite() {
            return bad(format!("extra_tweets must be >= 0, got {}", self.extra_tweets));
        }
        if self.vocab.marker_words + self.vocab.marker_hashtags == 0 || self.vocab.marker_words == 0 {
            return bad("vocab.marker_words must be >= 1".into());
        }
        if self.vocab.noise_words == 0 || self.text.words_per_tweet == 0 {
            return bad("vocab.noise_words and text.words_per_tweet must be >= 1".into());
        }
        if self.text.topic_term.is_empty() || crate::corpus::text::tokenize(&self.text.topic_term) != [self.text.topic_term.clone()] {
            return bad(format!("topic_term {:?} is not a single canonical token", self.text.topic_term));
        }
        if self.seed_hashtags > self.vocab.marker_hashtags {
            return bad("seed_hashtags exceeds vocab.marker_hashtags".into());
        }
        if self.network.hubs_per_side == 0 {
            return bad("network.hubs_per_side must be >= 1".into());
        }
        let switchers: usize = self.switchers.iter().map(|g| g.count).sum();
        if 2 * self.network.hubs_per_side + switchers > self.users {
            return bad(format!(
                "{} users cannot hold {} hubs and {switchers} switchers",
                self.users,
                2 * self.network.hubs_per_side
            ));
        }
        if let Some(g) = self.switchers.iter().find(|g| g.day == 0 || g.day >= self.days) {
            return bad(format!("switch day {} outside 1..{}", g.day, self.days));
        }
        if let Some(v) = &self.volume {
            let ms = [v.pro_before, v.pro_after, v.anti_before, v.anti_after];
            if ms.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
                return bad("volume multipliers must be finite and >= 0".into());
            }
        }
        if let Some(a) = &self.alignment {
            if !(-1.0..=1.0).contains(&a.rho) {
                return bad(format!("alignment.rho must lie in [-1, 1], got {}", a.rho));
            }
            if !self.switchers.is_empty() {
                return bad("alignment and switchers are mutually exclusive".into());
            }
        }
        Ok(())
    }

    pub fn day(&self, offset: u32) -> NaiveDate {
        self.start + Duration::days(i64::from(offset))
    }
}

/// Marker and noise vocabularies derived from a [`VocabSpec`].
#[derive(Debug, Clone)]
pub struct Vocabulary {
    pub pro: Vec<String>,
    pub anti: Vec<String>,
    pub neutral: Vec<String>,
    pub noise: Vec<String>,
}

impl Vocabulary {
    pub fn new(spec: &VocabSpec) -> Self {
        let side = |p: &str| {
            let mut v: Vec<String> = (0..spec.marker_hashtags).map(|i| format!("#{p}{i}")).collect();
            v.extend((0..spec.marker_words).map(|i| format!("{p}{i}")));
            v
        };
        Vocabulary {
            pro: side("pro"),
            anti: side("anti"),
            neutral: (0..spec.marker_words).map(|i| format!("neu{i}")).collect(),
            noise: (0..spec.noise_words).map(|i| format!("w{i}")).collect(),
        }
    }

    pub fn markers(&self, class: StanceClass) -> &[String] {
        match class {
            StanceClass::Pro => &self.pro,
            StanceClass::Neutral => &self.neutral,
            StanceClass::Anti => &self.anti,
        }
    }

    /// The first `k` hashtags of a side.
    pub fn seed_hashtags(&self, side: Side, k: usize) -> Vec<String> {
        let v = if side == Side::Pro { &self.pro } else { &self.anti };
        v.iter().filter(|t| t.starts_with('#')).take(k).cloned().collect()
    }
}

/// One tweet's text for a class.
pub fn tweet_text<R: Rng>(rng: &mut R, vocab: &Vocabulary, text: &TextSpec, class: StanceClass, on_topic: bool) -> String {
    let markers = vocab.markers(class);
    let mut words: Vec<&str> = Vec::with_capacity(text.words_per_tweet + 1);
    let mut placed = false;
    for _ in 0..text.words_per_tweet {
        if rng.random_bool(text.marker_prob) {
            words.push(markers.choose(rng).expect("non-empty markers"));
            placed = true;
        } else {
            words.push(vocab.noise.choose(rng).expect("non-empty noise"));
        }
    }
    if text.ensure_marker && !placed {
        let i = rng.random_range(0..words.len());
        words[i] = markers.choose(rng).expect("non-empty markers");
    }
    if on_topic {
        let i = rng.random_range(0..=words.len());
        words.insert(i, &text.topic_term);
    }
    words.join(" ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTruth {
    pub user: String,
    pub base_stance: Side,
    pub base_community: Leaning,
    pub switch_day: Option<NaiveDate>,
    pub hub: bool,
    /// Planted content anti share (alignment scenarios).
    pub anti_share: Option<f64>,
    /// Planted Islamist share of days (alignment scenarios).
    pub islamist_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayTruth {
    pub user: String,
    pub day: NaiveDate,
    /// Stance of the day's tweets; absent when the user mixes stances.
    pub stance: Option<Side>,
    pub community: Leaning,
    pub active: bool,
    pub switch_day: Option<NaiveDate>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub users: Vec<UserTruth>,
    pub days: Vec<DayTruth>,
    /// True class of every on-topic tweet.
    pub tweet_classes: BTreeMap<String, StanceClass>,
}

impl GroundTruth {
    pub fn user(&self, id: &str) -> Option<&UserTruth> {
        self.users
            .binary_search_by(|u| u.user.as_str().cmp(id))
            .ok()
            .map(|i| &self.users[i])
    }

    /// Hubs as network seeds; Pro hubs sit in the Secular community.
    pub fn network_seeds(&self) -> Vec<(String, Leaning)> {
        self.users
            .iter()
            .filter(|u| u.hub)
            .map(|u| (u.user.clone(), u.base_community))
            .collect()
    }

    /// Users planted as switchers, by direction.
    pub fn switchers(&self, from: Side) -> Vec<&str> {
        self.users
            .iter()
            .filter(|u| u.switch_day.is_some() && u.base_stance == from)
            .map(|u| u.user.as_str())
            .collect()
    }

    /// Per-day count of active users by planted community.
    pub fn active_by_community(&self) -> BTreeMap<NaiveDate, [usize; 2]> {
        let mut out: BTreeMap<NaiveDate, [usize; 2]> = BTreeMap::new();
        for d in self.days.iter().filter(|d| d.active) {
            out.entry(d.day).or_default()[d.community.index()] += 1;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub corpus: Corpus,
    pub truth: GroundTruth,
}

pub(crate) fn community_of(side: Side) -> Leaning {
    match side {
        Side::Pro => Leaning::Secular,
        Side::Anti => Leaning::Islamist,
    }
}

fn flip(side: Side) -> Side {
    match side {
        Side::Pro => Side::Anti,
        Side::Anti => Side::Pro,
    }
}

fn class_of(side: Side) -> StanceClass {
    match side {
        Side::Pro => StanceClass::Pro,
        Side::Anti => StanceClass::Anti,
    }
}

fn timestamp_in<R: Rng>(rng: &mut R, day: NaiveDate) -> DateTime<Utc> {
    let midnight = day.and_hms_opt(0, 0, 0).expect("valid time").and_utc();
    midnight + Duration::seconds(rng.random_range(0..86_400))
}

/// Latent pair with correlation exactly `rho`, rescaled into `[0, 1]`.
fn aligned_pair<R: Rng>(rng: &mut R, rho: f64) -> (f64, f64) {
    let x: f64 = rng.random();
    let e: f64 = rng.random();
    let c = (1.0 - rho * rho).sqrt();
    let y = rho * x + c * e;
    let (lo, hi) = (rho.min(0.0), rho.max(0.0) + c);
    (x, if hi > lo { (y - lo) / (hi - lo) } else { 0.5 })
}

struct Planned {
    side: Side,
    community: Leaning,
    switch_day: Option<u32>,
    hub: bool,
    align: Option<(f64, f64)>,
    /// First Islamist day and block length in alignment scenarios.
    block: (u32, u32),
}

impl Planned {
    fn stance(&self, day: u32) -> Side {
        match self.switch_day {
            Some(s) if day >= s => flip(self.side),
            _ => self.side,
        }
    }

    fn community(&self, day: u32) -> Leaning {
        if self.align.is_some() {
            let (b0, len) = self.block;
            return if day >= b0 && day < b0 + len {
                Leaning::Islamist
            } else {
                Leaning::Secular
            };
        }
        if self.hub {
            self.community
        } else {
            community_of(self.stance(day))
        }
    }
}

fn plan_users(spec: &ScenarioSpec) -> Vec<Planned> {
    let mut rng = rng::stream(spec.seed, "synth/users");
    let hubs = spec.network.hubs_per_side;
    let switchers: usize = spec.switchers.iter().map(|g| g.count).sum();
    let stable = spec.users - 2 * hubs - switchers;
    let n_pro = (spec.pro_fraction * stable as f64).round() as usize;
    let mut out = Vec::with_capacity(spec.users);
    for side in [Side::Pro, Side::Anti] {
        for _ in 0..hubs {
            out.push(Planned {
                side,
                community: community_of(side),
                switch_day: None,
                hub: true,
                align: None,
                block: (0, 0),
            });
        }
    }
    let mut rest: Vec<(Side, Option<u32>)> = Vec::with_capacity(stable + switchers);
    for g in &spec.switchers {
        rest.extend(std::iter::repeat_n((g.from, Some(g.day)), g.count));
    }
    rest.extend(std::iter::repeat_n((Side::Pro, None), n_pro));
    rest.extend(std::iter::repeat_n((Side::Anti, None), stable - n_pro));
    rest.shuffle(&mut rng);
    for (side, switch_day) in rest {
        let mut p = Planned {
            side,
            community: community_of(side),
            switch_day,
            hub: false,
            align: None,
            block: (0, 0),
        };
        if let Some(a) = &spec.alignment {
            let (x, y) = aligned_pair(&mut rng, a.rho);
            let len = (y * f64::from(spec.days)).round() as u32;
            // Islamist block at the start or the end of the period.
            let b0 = if rng.random_bool(0.5) { 0 } else { spec.days - len };
            p.side = if x > 0.5 { Side::Anti } else { Side::Pro };
            p.community = if len * 2 > spec.days { Leaning::Islamist } else { Leaning::Secular };
            p.align = Some((x, y));
            p.block = (b0, len);
        }
        out.push(p);
    }
    out
}

fn user_id(i: usize) -> String {
    format!("u{i:05}")
}

/// Draw a corpus and its ground truth from a validated spec.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let plan = plan_users(spec);
    let vocab = Vocabulary::new(&spec.vocab);
    let mut rng = rng::stream(spec.seed, "synth/days");
    let extra = (spec.extra_tweets > 0.0)
        .then(|| Poisson::new(spec.extra_tweets))
        .transpose()
        .map_err(|e| Error::Config(format!("extra_tweets: {e}")))?;
    let n = plan.len();
    let names: Vec<String> = (0..n).map(user_id).collect();
    let hub_ids: [Vec<usize>; 2] = [0, 1].map(|c| (0..n).filter(|&u| plan[u].hub && plan[u].community.index() == c).collect());

    struct Draft {
        author: usize,
        ts: DateTime<Utc>,
        repost_of: Option<usize>,
        class: Option<StanceClass>,
    }
    let mut drafts: Vec<Draft> = Vec::new();
    let mut days = Vec::with_capacity(n * spec.days as usize);

    for d in 0..spec.days {
        let date = spec.day(d);
        let community: Vec<Leaning> = plan.iter().map(|p| p.community(d)).collect();
        let members: [Vec<usize>; 2] = [0, 1].map(|c| (0..n).filter(|&u| community[u].index() == c).collect());
        for (u, p) in plan.iter().enumerate() {
            let stance = p.stance(d);
            let activity_side = if p.align.is_some() {
                if community[u] == Leaning::Islamist { Side::Anti } else { Side::Pro }
            } else {
                stance
            };
            let mult = spec.volume.as_ref().map_or(1.0, |v| v.multiplier(activity_side, d));
            let active = p.hub || rng.random_bool((spec.activity * mult).min(1.0));
            days.push(DayTruth {
                user: names[u].clone(),
                day: date,
                stance: p.align.is_none().then_some(stance),
                community: community[u],
                active,
                switch_day: p.switch_day.map(|s| spec.day(s)),
            });
            if !active {
                continue;
            }
            let posts = 1 + extra.as_ref().map_or(0, |e| e.sample(&mut rng) as usize);
            for _ in 0..posts {
                drafts.push(Draft {
                    author: u,
                    ts: timestamp_in(&mut rng, date),
                    repost_of: None,
                    class: Some(class_of(stance)),
                });
            }
            let own = community[u].index();
            let mut targets: Vec<usize> = Vec::new();
            for (c, prob) in [(own, spec.network.p_in), (1 - own, spec.network.p_out)] {
                let pool = &members[c];
                let k = if prob > 0.0 && !pool.is_empty() {
                    Binomial::new(pool.len() as u64, prob)
                        .map_err(|e| Error::Config(format!("repost probability: {e}")))?
                        .sample(&mut rng) as usize
                } else {
                    0
                };
                targets.extend((0..k).map(|_| *pool.choose(&mut rng).expect("non-empty pool")));
            }
            if !p.hub && rng.random_bool(spec.network.hub_repost_prob) {
                if let Some(h) = hub_ids[own].choose(&mut rng) {
                    targets.push(*h);
                }
            }
            for t in targets.into_iter().filter(|&t| t != u) {
                drafts.push(Draft {
                    author: u,
                    ts: timestamp_in(&mut rng, date),
                    repost_of: Some(t),
                    class: Some(class_of(stance)),
                });
            }
        }
    }

    // Neutral and off-topic draws, then the exact Anti counts of aligned users.
    let mut by_author: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, dr) in drafts.iter_mut().enumerate() {
        if rng.random_bool(spec.text.offtopic_prob) {
            dr.class = None;
        } else if rng.random_bool(spec.text.neutral_prob) {
            dr.class = Some(StanceClass::Neutral);
        }
        by_author[dr.author].push(i);
    }
    for (u, p) in plan.iter().enumerate() {
        let Some((x, _)) = p.align else { continue };
        let mut idx: Vec<usize> = by_author[u]
            .iter()
            .copied()
            .filter(|&i| matches!(drafts[i].class, Some(StanceClass::Pro | StanceClass::Anti)))
            .collect();
        let anti = (x * idx.len() as f64).round() as usize;
        idx.shuffle(&mut rng);
        for (j, &i) in idx.iter().enumerate() {
            drafts[i].class = Some(if j < anti { StanceClass::Anti } else { StanceClass::Pro });
        }
    }

    let mut tweets = Vec::with_capacity(drafts.len());
    let mut tweet_classes = BTreeMap::new();
    for (i, dr) in drafts.iter().enumerate() {
        let id = format!("t{i:08}");
        let class = dr.class.unwrap_or(StanceClass::Neutral);
        let mut text = tweet_text(&mut rng, &vocab, &spec.text, class, dr.class.is_some());
        if let Some(t) = dr.repost_of {
            text = format!("RT @{} {text}", names[t]);
        }
        if let Some(c) = dr.class {
            tweet_classes.insert(id.clone(), c);
        }
        let repost_of = dr.repost_of.map(|t| names[t].clone());
        tweets.push(Tweet::new(id, names[dr.author].clone(), dr.ts, text, repost_of)?);
    }
    let (corpus, _) = Corpus::new(tweets);

    let users = plan
        .iter()
        .enumerate()
        .map(|(u, p)| UserTruth {
            user: user_id(u),
            base_stance: p.side,
            base_community: p.community(0),
            switch_day: p.switch_day.map(|s| spec.day(s)),
            hub: p.hub,
            anti_share: p.align.map(|a| a.0),
            islamist_share: p.align.map(|a| a.1),
        })
        .collect();
    Ok(Scenario {
        spec: spec.clone(),
        corpus,
        truth: GroundTruth {
            users,
            days,
            tweet_classes,
        },
    })
}

/// Two-block directed graph: every ordered pair gets an arc with probability
/// `p_in` inside a block and `p_out` across. Nodes `n000..` with the first
/// `n / 2` in the Secular block.
pub fn planted_partition(n: usize, p_in: f64, p_out: f64, seed: u64) -> Result<(GraphSnapshot, Labeling)> {
    if !(0.0 <= p_out && p_out < p_in && p_in <= 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 <= p_out < p_in <= 1, got {p_in}, {p_out}")));
    }
    let mut rng = rng::stream(seed, "synth/planted");
    let name = |i: usize| format!("n{i:03}");
    let block = |i: usize| if i < n / 2 { Leaning::Secular } else { Leaning::Islamist };
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let p = if block(i) == block(j) { p_in } else { p_out };
            if i != j && rng.random_bool(p) {
                arcs.push((name(i), name(j), 1));
            }
        }
    }
    let day = NaiveDate::from_ymd_opt(2013, 7, 3).expect("valid date");
    let g = GraphSnapshot::from_edges(day, arcs);
    let truth = (0..n).map(|i| (name(i), block(i))).collect();
    Ok((g, truth))
}

/// Labeled tweets with class shares `weights` (Pro, Neutral, Anti), every
/// tweet carrying at least one marker of its class.
pub fn separable_examples(n: usize, weights: [f64; 3], seed: u64) -> Result<Vec<(Tweet, StanceClass)>> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::InvalidArgument("class weights must be >= 0 with a positive sum".into()));
    }
    let mut rng = rng::stream(seed, "synth/separable");
    let vocab = Vocabulary::new(&VocabSpec::default());
    let text = TextSpec {
        ensure_marker: true,
        ..TextSpec::default()
    };
    let mut classes: Vec<StanceClass> = Vec::with_capacity(n);
    let mut acc = 0.0;
    for (c, w) in StanceClass::ALL.iter().zip(weights) {
        acc += w / total;
        let upto = ((acc * n as f64).round() as usize).min(n);
        classes.extend(std::iter::repeat_n(*c, upto - classes.len()));
    }
    classes.shuffle(&mut rng);
    let day = NaiveDate::from_ymd_opt(2013, 7, 1).expect("valid date");
    classes
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let t = Tweet::new(
                format!("s{i:06}"),
                format!("u{:04}", i % 97),
                timestamp_in(&mut rng, day),
                tweet_text(&mut rng, &vocab, &text, c, true),
                None,
            )?;
            Ok((t, c))
        })
        .collect()
}

/// Files written by [`write_scenario`], relative to its directory.
pub const SCENARIO_FILES: [&str; 10] = [
    "spec.json",
    "tweets.jsonl",
    "gold.csv",
    "pro_seeds.txt",
    "anti_seeds.txt",
    "network_seeds.csv",
    "queries.txt",
    "truth_users.csv",
    "truth_days.csv",
    "config.json",
];

/// Write a scenario as pipeline inputs plus ground-truth tables, and a
/// pipeline config pointing at them. Returns the written paths.
pub fn write_scenario(s: &Scenario, dir: &Path) -> Result<Vec<PathBuf>> {
    let spec = &s.spec;
    let vocab = Vocabulary::new(&spec.vocab);
    let p = |f: &str| dir.join(f);
    io::write_json(&p("spec.json"), spec)?;
    io::save_jsonl(&s.corpus, &p("tweets.jsonl"))?;

    let mut rng: ChaCha8Rng = rng::stream(spec.seed, "synth/gold");
    let mut gold: Vec<(&String, &StanceClass)> = s.truth.tweet_classes.iter().collect();
    gold.shuffle(&mut rng);
    gold.truncate(spec.gold_size);
    gold.sort();
    io::write_csv_with_header(&p("gold.csv"), &["tweet_id", "class"], gold.iter().map(|(id, c)| (id, c.as_str())))?;

    for (side, f) in [(Side::Pro, "pro_seeds.txt"), (Side::Anti, "anti_seeds.txt")] {
        let mut body = String::new();
        for t in vocab.seed_hashtags(side, spec.seed_hashtags) {
            writeln!(body, "{t}").expect("string write");
        }
        write_text(&p(f), &body)?;
    }
    io::write_csv_with_header(
        &p("network_seeds.csv"),
        &["author_id", "leaning"],
        s.truth.network_seeds().into_iter().map(|(u, l)| (u, l.index())),
    )?;
    write_text(&p("queries.txt"), &format!("{}\n", spec.text.topic_term))?;
    io::write_csv_with_header(
        &p("truth_users.csv"),
        &["user", "base_stance", "base_community", "switch_day", "hub", "anti_share", "islamist_share"],
        s.truth.users.iter().map(|u| {
            (
                &u.user,
                side_str(u.base_stance),
                u.base_community.index(),
                u.switch_day,
                u.hub,
                u.anti_share,
                u.islamist_share,
            )
        }),
    )?;
    io::write_csv_with_header(
        &p("truth_days.csv"),
        &["user", "day", "stance", "community", "switch_day", "active"],
        s.truth.days.iter().map(|d| {
            (
                &d.user,
                d.day,
                d.stance.map_or("mixed", side_str),
                d.community.index(),
                d.switch_day,
                d.active,
            )
        }),
    )?;
    let cfg = crate::pipeline::PipelineConfig::for_scenario(spec);
    io::write_json(&p("config.json"), &cfg)?;
    Ok(SCENARIO_FILES.iter().map(|f| p(f)).collect())
}

fn side_str(s: Side) -> &'static str {
    match s {
        Side::Pro => "pro",
        Side::Anti => "anti",
    }
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    use std::io::Write;
    let mut w = io::create(path)?;
    w.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
