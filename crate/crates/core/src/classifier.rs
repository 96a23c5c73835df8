//! Three-class linear stance classifier over unigram, bigram and hashtag
//! counts, trained with a Crammer-Singer multi-class hinge loss.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::corpus::text::is_hashtag;
use crate::corpus::{Corpus, Tweet};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StanceClass {
    Pro,
    Neutral,
    Anti,
}

impl StanceClass {
    /// Fixed order; also the argmax tie-break order.
    pub const ALL: [StanceClass; 3] = [StanceClass::Pro, StanceClass::Neutral, StanceClass::Anti];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> StanceClass {
        Self::ALL[i]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StanceClass::Pro => "pro",
            StanceClass::Neutral => "neutral",
            StanceClass::Anti => "anti",
        }
    }
}

impl fmt::Display for StanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StanceClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pro" | "0" => Ok(StanceClass::Pro),
            "neutral" | "1" => Ok(StanceClass::Neutral),
            "anti" | "2" => Ok(StanceClass::Anti),
            other => Err(Error::InvalidArgument(format!("unknown stance class {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Count each hashtag as a unigram token as well as an `H:` feature.
    pub hashtags_as_unigrams: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            hashtags_as_unigrams: true,
        }
    }
}

/// Sparse namespaced feature counts: `U:tok`, `B:tok tok`, `H:#tag`.
pub type FeatureVector = BTreeMap<String, u32>;

pub fn features_of_tokens<S: AsRef<str>>(tokens: &[S], cfg: FeatureConfig) -> FeatureVector {
    let mut fv = FeatureVector::new();
    for t in tokens {
        let t = t.as_ref();
        let tag = is_hashtag(t);
        if tag {
            *fv.entry(format!("H:{t}")).or_default() += 1;
        }
        if !tag || cfg.hashtags_as_unigrams {
            *fv.entry(format!("U:{t}")).or_default() += 1;
        }
    }
    for w in tokens.windows(2) {
        *fv.entry(format!("B:{} {}", w[0].as_ref(), w[1].as_ref())).or_default() += 1;
    }
    fv
}

pub fn extract_features(t: &Tweet) -> FeatureVector {
    features_of_tokens(&t.tokens().to_vec(), FeatureConfig::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// L2 regularization strength.
    pub reg: f64,
    pub features: FeatureConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            reg: 1e-4,
            features: FeatureConfig::default(),
        }
    }
}

pub(crate) type Sparse = Vec<(u32, f64)>;

fn encode(fv: &FeatureVector, index: &FxHashMap<String, u32>) -> Sparse {
    fv.iter()
        .filter_map(|(k, v)| index.get(k).map(|id| (*id, f64::from(*v))))
        .collect()
}

fn dot(w: &[f64], x: &Sparse) -> f64 {
    x.iter().map(|(j, v)| w[*j as usize] * v).sum()
}

/// Highest-scoring class; earlier classes win ties.
fn argmax(scores: &[f64; 3]) -> usize {
    let mut best = 0;
    for c in 1..3 {
        if scores[c] > scores[best] {
            best = c;
        }
    }
    best
}

/// Most violating competitor of class `y`.
fn rival(scores: &[f64; 3], y: usize) -> usize {
    let mut best = usize::MAX;
    for c in 0..3 {
        if c != y && (best == usize::MAX || scores[c] > scores[best]) {
            best = c;
        }
    }
    best
}

/// Regularized multi-class hinge objective
/// `reg/2 * |W|^2 + mean_i max(0, 1 + max_{r != y_i} w_r.x_i - w_{y_i}.x_i)`.
#[cfg(test)]
pub(crate) fn objective(weights: &[Vec<f64>; 3], data: &[(Sparse, usize)], reg: f64) -> f64 {
    let norm: f64 = weights.iter().flatten().map(|w| w * w).sum();
    let loss: f64 = data
        .iter()
        .map(|(x, y)| {
            let s = [dot(&weights[0], x), dot(&weights[1], x), dot(&weights[2], x)];
            let r = rival(&s, *y);
            (1.0 + s[r] - s[*y]).max(0.0)
        })
        .sum();
    0.5 * reg * norm + loss / data.len() as f64
}

#[cfg(test)]
pub(crate) fn subgradient(weights: &[Vec<f64>; 3], data: &[(Sparse, usize)], reg: f64) -> [Vec<f64>; 3] {
    let mut g = [
        weights[0].iter().map(|w| reg * w).collect::<Vec<_>>(),
        weights[1].iter().map(|w| reg * w).collect(),
        weights[2].iter().map(|w| reg * w).collect(),
    ];
    let n = data.len() as f64;
    for (x, y) in data {
        let s = [dot(&weights[0], x), dot(&weights[1], x), dot(&weights[2], x)];
        let r = rival(&s, *y);
        if 1.0 + s[r] - s[*y] > 0.0 {
            for (j, v) in x {
                g[r][*j as usize] += v / n;
                g[*y][*j as usize] -= v / n;
            }
        }
    }
    g
}

/// A trained linear scorer with its frozen vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct StanceModel {
    vocabulary: Vec<String>,
    index: FxHashMap<String, u32>,
    by_token: TokenIndex,
    weights: [Vec<f64>; 3],
    seed: u64,
    config: TrainConfig,
    train_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TokenEntry {
    token: u32,
    unigram: Option<u32>,
    hashtag: Option<u32>,
}

/// Vocabulary keyed by token, with bigrams keyed by token pairs, so scoring
/// never has to assemble feature strings.
#[derive(Debug, Clone, Default, PartialEq)]
struct TokenIndex {
    tokens: FxHashMap<String, TokenEntry>,
    bigrams: FxHashMap<(u32, u32), u32>,
}

impl TokenIndex {
    fn new(vocabulary: &[String]) -> TokenIndex {
        let mut ix = TokenIndex::default();
        fn token(ix: &mut TokenIndex, t: &str) -> u32 {
            let next = ix.tokens.len() as u32;
            ix.tokens
                .entry(t.to_owned())
                .or_insert(TokenEntry {
                    token: next,
                    unigram: None,
                    hashtag: None,
                })
                .token
        }
        for (id, f) in vocabulary.iter().enumerate() {
            let id = id as u32;
            if let Some(t) = f.strip_prefix("U:") {
                token(&mut ix, t);
                ix.tokens.get_mut(t).expect("just inserted").unigram = Some(id);
            } else if let Some(t) = f.strip_prefix("H:") {
                token(&mut ix, t);
                ix.tokens.get_mut(t).expect("just inserted").hashtag = Some(id);
            } else if let Some((a, b)) = f.strip_prefix("B:").and_then(|p| p.split_once(' ')) {
                let pair = (token(&mut ix, a), token(&mut ix, b));
                ix.bigrams.insert(pair, id);
            }
        }
        ix
    }
}

const MODEL_FORMAT: &str = "polardyn.stance-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    classes: Vec<StanceClass>,
    seed: u64,
    config: TrainConfig,
    train_accuracy: f64,
    vocabulary: Vec<String>,
    weights: Vec<Vec<f64>>,
}

impl StanceModel {
    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn contains_feature(&self, f: &str) -> bool {
        self.index.contains_key(f)
    }

    pub fn weights(&self, class: StanceClass) -> &[f64] {
        &self.weights[class.index()]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn config(&self) -> TrainConfig {
        self.config
    }

    pub fn train_accuracy(&self) -> f64 {
        self.train_accuracy
    }

    /// Same result as `scores_of(&extract_features(t))`, without building the
    /// feature map. Ids follow sorted feature order, so sorting the matched ids
    /// reproduces the map's summation order exactly.
    pub fn scores(&self, t: &Tweet) -> [f64; 3] {
        let tokens = t.tokens();
        let mut ids = Vec::with_capacity(3 * tokens.len());
        let mut seq: Vec<Option<u32>> = Vec::with_capacity(tokens.len());
        for tok in tokens.iter() {
            let e = self.by_token.tokens.get(tok);
            seq.push(e.map(|e| e.token));
            let tag = is_hashtag(tok);
            if tag {
                ids.extend(e.and_then(|e| e.hashtag));
            }
            if !tag || self.config.features.hashtags_as_unigrams {
                ids.extend(e.and_then(|e| e.unigram));
            }
        }
        for w in seq.windows(2) {
            if let [Some(a), Some(b)] = *w {
                ids.extend(self.by_token.bigrams.get(&(a, b)).copied());
            }
        }
        ids.sort_unstable();
        let mut x: Sparse = Vec::with_capacity(ids.len());
        for id in ids {
            match x.last_mut() {
                Some((last, n)) if *last == id => *n += 1.0,
                _ => x.push((id, 1.0)),
            }
        }
        [dot(&self.weights[0], &x), dot(&self.weights[1], &x), dot(&self.weights[2], &x)]
    }

    pub fn scores_of(&self, fv: &FeatureVector) -> [f64; 3] {
        let x = encode(fv, &self.index);
        [dot(&self.weights[0], &x), dot(&self.weights[1], &x), dot(&self.weights[2], &x)]
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            classes: StanceClass::ALL.to_vec(),
            seed: self.seed,
            config: self.config,
            train_accuracy: self.train_accuracy,
            vocabulary: self.vocabulary.clone(),
            weights: self.weights.to_vec(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(src)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Data(format!(
                "unsupported model file {} v{}",
                file.format, file.version
            )));
        }
        if file.classes != StanceClass::ALL {
            return Err(Error::Data("model class order mismatch".into()));
        }
        let [w0, w1, w2]: [Vec<f64>; 3] = file
            .weights
            .try_into()
            .map_err(|_| Error::Data("model must carry three weight vectors".into()))?;
        let v = file.vocabulary.len();
        if w0.len() != v || w1.len() != v || w2.len() != v {
            return Err(Error::Data("weight length differs from vocabulary size".into()));
        }
        let index = file
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect::<FxHashMap<_, _>>();
        if index.len() != v {
            return Err(Error::Data("duplicate vocabulary entry".into()));
        }
        Ok(StanceModel {
            by_token: TokenIndex::new(&file.vocabulary),
            vocabulary: file.vocabulary,
            index,
            weights: [w0, w1, w2],
            seed: file.seed,
            config: file.config,
            train_accuracy: file.train_accuracy,
        })
    }
}

/// Vocabulary and encoded design matrix of one training set.
pub(crate) struct Design {
    pub vocabulary: Vec<String>,
    pub index: FxHashMap<String, u32>,
    pub rows: Vec<(Sparse, usize)>,
}

pub(crate) fn design<T: Borrow<Tweet>>(data: &[(T, StanceClass)], cfg: FeatureConfig) -> Design {
    let fvs: Vec<FeatureVector> = data
        .iter()
        .map(|(t, _)| features_of_tokens(&t.borrow().tokens().to_vec(), cfg))
        .collect();
    let vocab: BTreeSet<&String> = fvs.iter().flat_map(|f| f.keys()).collect();
    let vocabulary: Vec<String> = vocab.into_iter().cloned().collect();
    let index: FxHashMap<String, u32> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, f)| (f.clone(), i as u32))
        .collect();
    let rows = fvs
        .iter()
        .zip(data)
        .map(|(fv, (_, y))| (encode(fv, &index), y.index()))
        .collect();
    Design {
        vocabulary,
        index,
        rows,
    }
}

/// Stochastic subgradient descent on the regularized Crammer-Singer hinge
/// objective with step size `1 / (reg * t)`. Examples are visited in an order
/// reshuffled every epoch from `seed`.
pub(crate) fn fit(rows: &[(Sparse, usize)], dim: usize, seed: u64, cfg: &TrainConfig) -> [Vec<f64>; 3] {
    let mut v = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
    // Weights are `scale * v`, so the shrink step is O(1).
    let mut scale = 1.0f64;
    let mut rng = rng::stream(seed, "classifier.train");
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut step = 0u64;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            step += 1;
            let (x, y) = &rows[i];
            let eta = 1.0 / (cfg.reg * step as f64);
            let s = [
                scale * dot(&v[0], x),
                scale * dot(&v[1], x),
                scale * dot(&v[2], x),
            ];
            let r = rival(&s, *y);
            let violated = 1.0 + s[r] - s[*y] > 0.0;
            scale *= 1.0 - eta * cfg.reg;
            if scale <= 0.0 {
                for w in v.iter_mut() {
                    w.iter_mut().for_each(|x| *x = 0.0);
                }
                scale = 1.0;
            }
            if violated {
                let g = eta / scale;
                for (j, val) in x {
                    v[*y][*j as usize] += g * val;
                    v[r][*j as usize] -= g * val;
                }
            }
            if scale < 1e-9 {
                for w in v.iter_mut() {
                    w.iter_mut().for_each(|x| *x *= scale);
                }
                scale = 1.0;
            }
        }
    }
    for w in v.iter_mut() {
        w.iter_mut().for_each(|x| *x *= scale);
    }
    v
}

fn check_classes<T>(data: &[(T, StanceClass)]) -> std::result::Result<(), StanceClass> {
    for c in StanceClass::ALL {
        if !data.iter().any(|(_, y)| *y == c) {
            return Err(c);
        }
    }
    Ok(())
}

/// Train on `data`; the vocabulary is built from `data` alone.
pub fn train<T: Borrow<Tweet>>(data: &[(T, StanceClass)], seed: u64, cfg: &TrainConfig) -> Result<StanceModel> {
    if let Err(c) = check_classes(data) {
        return Err(Error::InvalidArgument(format!("training data has no {c} example")));
    }
    if !(cfg.reg > 0.0) || cfg.epochs == 0 {
        return Err(Error::InvalidArgument("reg must be > 0 and epochs >= 1".into()));
    }
    let d = design(data, cfg.features);
    let weights = fit(&d.rows, d.vocabulary.len(), seed, cfg);
    let mut model = StanceModel {
        by_token: TokenIndex::new(&d.vocabulary),
        vocabulary: d.vocabulary,
        index: d.index,
        weights,
        seed,
        config: *cfg,
        train_accuracy: 0.0,
    };
    let correct = d
        .rows
        .iter()
        .filter(|(x, y)| {
            let s = [dot(&model.weights[0], x), dot(&model.weights[1], x), dot(&model.weights[2], x)];
            argmax(&s) == *y
        })
        .count();
    model.train_accuracy = correct as f64 / d.rows.len() as f64;
    Ok(model)
}

/// Argmax class; out-of-vocabulary features are ignored and ties go to the
/// earlier class in Pro, Neutral, Anti order.
pub fn predict(m: &StanceModel, t: &Tweet) -> StanceClass {
    StanceClass::from_index(argmax(&m.scores(t)))
}

pub fn classify_corpus(c: &Corpus, m: &StanceModel) -> Vec<StanceClass> {
    c.tweets().par_iter().map(|t| predict(m, t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub folds: usize,
    pub seed: u64,
    pub examples: usize,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Sample standard deviation of the fold accuracies.
    pub std_accuracy: f64,
    /// Pooled counts over all test folds; rows are truth, columns guesses.
    pub confusion_counts: [[usize; 3]; 3],
    /// Row-normalized `confusion_counts`.
    pub confusion: [[f64; 3]; 3],
}

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub test: Vec<usize>,
    pub model: StanceModel,
    pub accuracy: f64,
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin,
/// continuing the deal across classes so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[StanceClass], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = rng::stream(seed, "classifier.folds");
    let mut folds = vec![Vec::new(); k];
    let mut p = 0;
    for c in StanceClass::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|i| labels[*i] == c).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[p % k].push(i);
            p += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

pub fn mean_and_sample_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Stratified k-fold cross-validation; every fold gets a fresh vocabulary
/// built from its own training split.
pub fn cross_validate_detailed<T: Borrow<Tweet> + Sync>(
    data: &[(T, StanceClass)],
    k: usize,
    seed: u64,
    cfg: &TrainConfig,
) -> Result<(EvalReport, Vec<FoldOutcome>)> {
    if k < 2 || data.len() < k {
        return Err(Error::InvalidArgument(format!(
            "cross-validation needs k >= 2 and at least k examples (k={k}, n={})",
            data.len()
        )));
    }
    let labels: Vec<StanceClass> = data.iter().map(|(_, y)| *y).collect();
    let folds = stratified_folds(&labels, k, seed);
    let outcomes: Vec<Result<(FoldOutcome, [[usize; 3]; 3])>> = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let mut in_test = vec![false; data.len()];
            test.iter().for_each(|i| in_test[*i] = true);
            let train_set: Vec<(&Tweet, StanceClass)> = data
                .iter()
                .zip(&in_test)
                .filter(|(_, t)| !**t)
                .map(|((tw, y), _)| (tw.borrow(), *y))
                .collect();
            if let Err(c) = check_classes(&train_set) {
                return Err(Error::Data(format!("fold {f}: class {c} absent from the training split")));
            }
            let model = train(&train_set, rng::stream_seed(seed, &format!("fold{f}")), cfg)?;
            let mut cm = [[0usize; 3]; 3];
            for &i in test {
                let (t, y) = &data[i];
                cm[y.index()][predict(&model, t.borrow()).index()] += 1;
            }
            let correct: usize = (0..3).map(|c| cm[c][c]).sum();
            let accuracy = correct as f64 / test.len() as f64;
            Ok((
                FoldOutcome {
                    test: test.clone(),
                    model,
                    accuracy,
                },
                cm,
            ))
        })
        .collect();
    let mut confusion_counts = [[0usize; 3]; 3];
    let mut fold_outcomes = Vec::with_capacity(k);
    for o in outcomes {
        let (fo, cm) = o?;
        for r in 0..3 {
            for c in 0..3 {
                confusion_counts[r][c] += cm[r][c];
            }
        }
        fold_outcomes.push(fo);
    }
    let fold_accuracies: Vec<f64> = fold_outcomes.iter().map(|f| f.accuracy).collect();
    let (mean_accuracy, std_accuracy) = mean_and_sample_std(&fold_accuracies);
    let mut confusion = [[0.0; 3]; 3];
    for r in 0..3 {
        let total: usize = confusion_counts[r].iter().sum();
        for c in 0..3 {
            confusion[r][c] = confusion_counts[r][c] as f64 / total as f64;
        }
    }
    Ok((
        EvalReport {
            folds: k,
            seed,
            examples: data.len(),
            fold_accuracies,
            mean_accuracy,
            std_accuracy,
            confusion_counts,
            confusion,
        },
        fold_outcomes,
    ))
}

pub fn cross_validate<T: Borrow<Tweet> + Sync>(
    data: &[(T, StanceClass)],
    k: usize,
    seed: u64,
    cfg: &TrainConfig,
) -> Result<EvalReport> {
    cross_validate_detailed(data, k, seed, cfg).map(|(r, _)| r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyStance {
    pub day: NaiveDate,
    /// Tweets per class in Pro, Neutral, Anti order.
    pub counts: [usize; 3],
    /// `None` on days without tweets.
    pub fractions: Option<[f64; 3]>,
}

/// Per-day class shares from precomputed predictions (aligned with `c`).
pub fn daily_proportions_from_predictions(c: &Corpus, preds: &[StanceClass]) -> Result<Vec<DailyStance>> {
    let Some((first, last)) = c.day_range() else {
        return Err(Error::InvalidArgument("daily proportions of an empty corpus".into()));
    };
    if preds.len() != c.len() {
        return Err(Error::InvalidArgument("prediction count differs from corpus size".into()));
    }
    Ok(first
        .iter_days()
        .take_while(|d| *d <= last)
        .map(|day| {
            let mut counts = [0usize; 3];
            for &i in c.day_positions(day) {
                counts[preds[i].index()] += 1;
            }
            let n: usize = counts.iter().sum();
            let fractions = (n > 0).then(|| counts.map(|k| k as f64 / n as f64));
            DailyStance { day, counts, fractions }
        })
        .collect())
}

pub fn daily_stance_proportions(c: &Corpus, m: &StanceModel) -> Result<Vec<DailyStance>> {
    daily_proportions_from_predictions(c, &classify_corpus(c, m))
}

/// Gold labels from a `tweet_id,class` CSV.
pub fn read_gold(reader: impl std::io::Read) -> Result<Vec<(String, StanceClass)>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (Some(id), Some(class)) = (rec.get(0), rec.get(1)) else {
            return Err(Error::Record {
                line: i + 2,
                reason: "expected tweet_id,class".into(),
            });
        };
        let class = class.parse().map_err(|e: Error| Error::Record {
            line: i + 2,
            reason: e.to_string(),
        })?;
        out.push((id.to_owned(), class));
    }
    Ok(out)
}

/// Join gold labels with corpus tweets by id; unknown ids are skipped.
pub fn gold_examples<'a>(c: &'a Corpus, gold: &[(String, StanceClass)]) -> Vec<(&'a Tweet, StanceClass)> {
    let by_id: FxHashMap<&str, &Tweet> = c.tweets().iter().map(|t| (t.id(), t)).collect();
    let mut missing = 0;
    let out = gold
        .iter()
        .filter_map(|(id, y)| match by_id.get(id.as_str()) {
            Some(t) => Some((*t, *y)),
            None => {
                missing += 1;
                None
            }
        })
        .collect();
    if missing > 0 {
        log::warn!("{missing} gold ids not found in the corpus");
    }
    out
}
