use std::collections::BTreeSet;

use chrono::{NaiveDate, TimeZone, Utc};
use polardyn::classifier::{
    classify_corpus, cross_validate, daily_proportions_from_predictions, predict, train, StanceClass, StanceModel,
    TrainConfig,
};
use polardyn::corpus::{Corpus, Tweet};
use polardyn::synthgen::{separable_examples, tweet_text, TextSpec, VocabSpec, Vocabulary};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn noisy_text() -> TextSpec {
    TextSpec {
        marker_prob: 0.1,
        ensure_marker: false,
        ..TextSpec::default()
    }
}

#[test]
fn marker_counts_follow_binomial() {
    let vocab = Vocabulary::new(&VocabSpec::default());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 5000;
    for (class, p) in [(StanceClass::Pro, 0.1), (StanceClass::Anti, 0.3), (StanceClass::Neutral, 0.05)] {
        let text = TextSpec { marker_prob: p, ..noisy_text() };
        let markers: BTreeSet<&str> = vocab.markers(class).iter().map(String::as_str).collect();
        let mut hits = 0usize;
        for _ in 0..n {
            let s = tweet_text(&mut rng, &vocab, &text, class, false);
            let toks: Vec<&str> = s.split(' ').collect();
            assert_eq!(toks.len(), text.words_per_tweet);
            hits += toks.iter().filter(|t| markers.contains(*t)).count();
        }
        let trials = (n * text.words_per_tweet) as f64;
        let (mean, sd) = (trials * p, (trials * p * (1.0 - p)).sqrt());
        assert!((hits as f64 - mean).abs() <= 3.0 * sd, "{class:?}: {hits} markers, expected {mean} +- {sd}");
    }
}

#[test]
fn on_topic_text_carries_the_term_once() {
    let vocab = Vocabulary::new(&VocabSpec::default());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let text = TextSpec::default();
    for _ in 0..500 {
        let s = tweet_text(&mut rng, &vocab, &text, StanceClass::Anti, true);
        assert_eq!(s.split(' ').filter(|t| *t == text.topic_term).count(), 1);
        assert!(s.split(' ').any(|t| vocab.anti.iter().any(|m| m == t)), "ensure_marker places a marker");
    }
}

fn noisy_examples(n: usize, seed: u64) -> Vec<(Tweet, StanceClass)> {
    let vocab = Vocabulary::new(&VocabSpec::default());
    let text = noisy_text();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let c = StanceClass::ALL[i % 3];
            let ts = Utc.with_ymd_and_hms(2013, 7, 1, (i % 24) as u32, (i / 24 % 60) as u32, 0).unwrap();
            let t = Tweet::new(format!("n{i:05}"), format!("u{}", i % 50), ts, tweet_text(&mut rng, &vocab, &text, c, true), None);
            (t.unwrap(), c)
        })
        .collect()
}

#[test]
fn confusion_rows_and_accuracy_agree_with_counts() {
    let data = noisy_examples(600, 1);
    let r = cross_validate(&data, 5, 4, &TrainConfig::default()).unwrap();
    let total: usize = r.confusion_counts.iter().flatten().sum();
    assert_eq!(total, data.len(), "every example is tested once");
    for (row, counts) in r.confusion.iter().zip(&r.confusion_counts) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(counts.iter().sum::<usize>(), 200);
    }
    // folds are stratified and equal-sized, so the mean fold accuracy is the pooled one
    let pooled = (0..3).map(|c| r.confusion_counts[c][c]).sum::<usize>() as f64 / total as f64;
    assert!((r.mean_accuracy - pooled).abs() < 1e-12, "{} vs {pooled}", r.mean_accuracy);
    assert!(pooled < 1.0, "noisy text should cost some accuracy");
    assert!(pooled > 0.5);
}

#[test]
fn json_round_trip_keeps_every_prediction() {
    let train_set = separable_examples(900, [1.0, 1.0, 1.0], 2).unwrap();
    let m = train(&train_set, 6, &TrainConfig::default()).unwrap();
    let back = StanceModel::from_json(&m.to_json().unwrap()).unwrap();
    let probe = noisy_examples(1000, 3);
    for (t, _) in &probe {
        assert_eq!(predict(&m, t), predict(&back, t), "{}", t.id());
        assert_eq!(m.scores(t), back.scores(t));
    }
}

#[test]
fn planted_daily_split_is_recovered() {
    let train_set = separable_examples(900, [1.0, 1.0, 1.0], 5).unwrap();
    let m = train(&train_set, 7, &TrainConfig::default()).unwrap();
    let vocab = Vocabulary::new(&VocabSpec::default());
    let text = TextSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let first = NaiveDate::from_ymd_opt(2013, 7, 1).unwrap();
    let mut tweets = Vec::new();
    for d in 0..5u32 {
        for i in 0..400u32 {
            let c = if i < 280 { StanceClass::Pro } else { StanceClass::Anti };
            let ts = Utc.with_ymd_and_hms(2013, 7, 1 + d, i % 24, i / 24 % 60, 0).unwrap();
            tweets.push(Tweet::new(format!("d{d}-{i:03}"), format!("u{i}"), ts, tweet_text(&mut rng, &vocab, &text, c, true), None).unwrap());
        }
    }
    let c = Corpus::new(tweets).0;
    let days = daily_proportions_from_predictions(&c, &classify_corpus(&c, &m)).unwrap();
    assert_eq!(days.len(), 5);
    assert_eq!(days[0].day, first);
    for d in &days {
        let f = d.fractions.unwrap();
        assert_eq!(d.counts.iter().sum::<usize>(), 400);
        assert!((f[0] - 0.7).abs() <= 0.05 && (f[2] - 0.3).abs() <= 0.05, "{}: {f:?}", d.day);
    }
}
