use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use polardyn::classifier::StanceClass;
use polardyn::corpus::{Corpus, Tweet};
use polardyn::dynamics::{
    content_switches_from_predictions, leaning_histogram, network_switch_ratio, soft_labels, SwitchVerdict,
};
use polardyn::netdyn::{Labeling, Leaning, SnapshotLabels};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2013, 6, 21).unwrap()
}

/// One chronological tweet per prediction, per user.
fn corpus_of(users: &[(String, Vec<StanceClass>)]) -> (Corpus, Vec<StanceClass>) {
    let mut tweets = Vec::new();
    let mut class_of = BTreeMap::new();
    for (u, seq) in users {
        for (k, c) in seq.iter().enumerate() {
            let id = format!("{u}-{k:03}");
            let ts = Utc.with_ymd_and_hms(2013, 7, 1, 0, 0, 0).unwrap() + Duration::minutes(k as i64);
            tweets.push(Tweet::new(id.clone(), u.as_str(), ts, "x", None).unwrap());
            class_of.insert(id, *c);
        }
    }
    let c = Corpus::new(tweets).0;
    let preds = c.tweets().iter().map(|t| class_of[t.id()]).collect();
    (c, preds)
}

fn random_seq(rng: &mut ChaCha8Rng, len: usize) -> Vec<StanceClass> {
    (0..len)
        .map(|_| match rng.random_range(0..10) {
            0 => StanceClass::Neutral,
            1..=4 => StanceClass::Pro,
            _ => StanceClass::Anti,
        })
        .collect()
}

#[test]
fn verdict_ignores_middle_third() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..300 {
        let len: usize = rng.random_range(5..40);
        let mut seq: Vec<StanceClass> = (0..len).map(|_| if rng.random_bool(0.5) { StanceClass::Pro } else { StanceClass::Anti }).collect();
        let user = vec![("u".to_string(), seq.clone())];
        let (c, p) = corpus_of(&user);
        let before = content_switches_from_predictions(&c, &p, 3).unwrap().users[0].verdict;
        let (head, tail) = (len.div_ceil(3), len / 3);
        for s in seq.iter_mut().take(len - tail).skip(head) {
            *s = if rng.random_bool(0.5) { StanceClass::Pro } else { StanceClass::Anti };
        }
        let (c, p) = corpus_of(&[("u".to_string(), seq)]);
        let after = content_switches_from_predictions(&c, &p, 3).unwrap().users[0].verdict;
        assert_eq!(before, after, "trial {trial}, length {len}");
    }
}

/// Verdict from a direct count over the user's Pro/Anti sequence.
fn oracle_verdict(seq: &[StanceClass]) -> SwitchVerdict {
    let s: Vec<bool> = seq.iter().filter(|c| **c != StanceClass::Neutral).map(|c| *c == StanceClass::Anti).collect();
    let k = s.len();
    let first: Vec<bool> = s[..(k + 2) / 3].to_vec();
    let last: Vec<bool> = s[k - k / 3..].to_vec();
    let anti = |v: &[bool]| 2 * v.iter().filter(|x| **x).count();
    let (a, b) = (anti(&first), anti(&last));
    if a < first.len() && b > last.len() {
        SwitchVerdict::ProToAnti
    } else if a > first.len() && b < last.len() {
        SwitchVerdict::AntiToPro
    } else {
        SwitchVerdict::NoSwitch
    }
}

#[test]
fn switch_fraction_is_non_increasing_when_switchers_are_light() {
    let mut users = Vec::new();
    // stable users: 4 per length from 5 to 30
    for len in 5..=30 {
        for k in 0..4 {
            let c = if k % 2 == 0 { StanceClass::Pro } else { StanceClass::Anti };
            users.push((format!("s{len:02}{k}"), vec![c; len]));
        }
    }
    // switchers thin out as length grows: 20 - len of them for each length below 20
    for len in 5..20 {
        for k in 0..(20 - len) {
            let mut seq = vec![StanceClass::Pro; len];
            for s in seq.iter_mut().skip(len / 2) {
                *s = StanceClass::Anti;
            }
            users.push((format!("w{len:02}{k:02}"), seq));
        }
    }
    // neutral tweets must not count toward the threshold
    for (_, seq) in users.iter_mut().step_by(5) {
        seq.extend([StanceClass::Neutral; 3]);
    }
    let (c, p) = corpus_of(&users);
    let mut prev = f64::INFINITY;
    for n in 3..=30 {
        let r = content_switches_from_predictions(&c, &p, n).unwrap();
        let kept: Vec<&(String, Vec<StanceClass>)> = users
            .iter()
            .filter(|(_, s)| s.iter().filter(|c| **c != StanceClass::Neutral).count() >= n)
            .collect();
        let switched = kept.iter().filter(|(_, s)| oracle_verdict(s) != SwitchVerdict::NoSwitch).count();
        assert_eq!(r.users_examined, kept.len(), "n {n}");
        assert_eq!(r.pro_to_anti + r.anti_to_pro, switched, "n {n}");
        assert!(r.switch_fraction <= prev + 1e-15, "n {n}: {} after {prev}", r.switch_fraction);
        prev = r.switch_fraction;
    }
}

#[test]
fn random_users_match_oracle_verdicts() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let users: Vec<(String, Vec<StanceClass>)> = (0..400)
        .map(|i| {
            let len = rng.random_range(1..45);
            (format!("u{i:03}"), random_seq(&mut rng, len))
        })
        .collect();
    let (c, p) = corpus_of(&users);
    for n in [5, 10, 15, 20] {
        let r = content_switches_from_predictions(&c, &p, n).unwrap();
        let got: BTreeMap<&str, SwitchVerdict> = r.users.iter().map(|u| (u.user.as_str(), u.verdict)).collect();
        let want: BTreeMap<&str, SwitchVerdict> = users
            .iter()
            .filter(|(_, s)| s.iter().filter(|c| **c != StanceClass::Neutral).count() >= n)
            .map(|(u, s)| (u.as_str(), oracle_verdict(s)))
            .collect();
        assert_eq!(got, want, "n {n}");
    }
}

fn random_history(rng: &mut ChaCha8Rng, days: i64, users: usize) -> Vec<SnapshotLabels> {
    (0..days)
        .map(|d| SnapshotLabels {
            day: start() + Duration::days(d),
            entries: (0..users)
                .filter_map(|u| {
                    if !rng.random_bool(0.6) {
                        return None;
                    }
                    let l = if rng.random_bool(0.3 + 0.4 * (u % 2) as f64) { Leaning::Islamist } else { Leaning::Secular };
                    Some((format!("u{u:03}"), l, rng.random_range(0..9)))
                })
                .collect(),
        })
        .collect()
}

#[test]
fn soft_labels_equal_direct_tabulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let history = random_history(&mut rng, 20, 150);
    let (t0, tf) = (start() + Duration::days(3), start() + Duration::days(15));
    let tbl = soft_labels(&history, t0, tf).unwrap();
    let mut want: BTreeMap<String, (usize, usize, u64)> = BTreeMap::new();
    for s in &history {
        if s.day < t0 || s.day > tf {
            continue;
        }
        for (u, l, r) in &s.entries {
            let e = want.entry(u.clone()).or_default();
            e.0 += 1;
            if *l == Leaning::Islamist {
                e.1 += 1;
            }
            e.2 += r;
        }
    }
    assert_eq!(tbl.snapshots, 13);
    assert_eq!(tbl.users.len(), want.len());
    for (u, (present, isl, reposts)) in &want {
        let s = &tbl.users[u];
        assert_eq!(s.snapshots_present, *present);
        assert_eq!(s.islamist, *isl);
        assert_eq!(s.l, *isl as f64 / *present as f64);
        assert_eq!(s.strength, *reposts as f64 / *present as f64);
    }
}

#[test]
fn histogram_matches_bruteforce_bins() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let history = random_history(&mut rng, 12, 300);
    let tbl = soft_labels(&history, start(), start() + Duration::days(11)).unwrap();
    for bw in [0.05, 0.1, 0.2, 0.3, 1.0] {
        let bins = leaning_histogram(&tbl, bw).unwrap();
        assert_eq!(bins.iter().map(|b| b.users).sum::<usize>(), tbl.users.len());
        assert_eq!(bins.last().unwrap().hi, 1.0);
        for (k, b) in bins.iter().enumerate() {
            let last = k + 1 == bins.len();
            let members: Vec<f64> = tbl
                .users
                .values()
                .filter(|s| {
                    // l values here are ratios of small integers; compare on a fine integer grid
                    let scaled = (s.l * 1e6).round();
                    let (lo, hi) = ((b.lo * 1e6).round(), (b.hi * 1e6).round());
                    scaled >= lo && (scaled < hi || (last && scaled <= hi))
                })
                .map(|s| s.strength)
                .collect();
            assert_eq!(b.users, members.len(), "bw {bw} bin {k}");
            let mean = (!members.is_empty()).then(|| members.iter().sum::<f64>() / members.len() as f64);
            assert_eq!(b.mean_strength, mean, "bw {bw} bin {k}");
        }
    }
}

#[test]
fn switch_ratio_matches_count_and_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..50 {
        let mk = |rng: &mut ChaCha8Rng| -> Labeling {
            (0..400)
                .filter_map(|u| {
                    let l = if rng.random_bool(0.5) { Leaning::Secular } else { Leaning::Islamist };
                    rng.random_bool(0.8).then(|| (format!("u{u:03}"), l))
                })
                .collect()
        };
        let (a, b) = (mk(&mut rng), mk(&mut rng));
        let common: Vec<&String> = a.keys().filter(|u| b.contains_key(*u)).collect();
        let s2i = common.iter().filter(|u| a[**u] == Leaning::Secular && b[**u] == Leaning::Islamist).count();
        let i2s = common.iter().filter(|u| a[**u] == Leaning::Islamist && b[**u] == Leaning::Secular).count();
        let ab = network_switch_ratio(&a, &b).unwrap();
        let ba = network_switch_ratio(&b, &a).unwrap();
        assert_eq!(ab.common, common.len());
        assert_eq!(ab.changed, s2i + i2s);
        assert_eq!(ab.ratio, (s2i + i2s) as f64 / common.len() as f64);
        assert_eq!(ab.ratio, ba.ratio);
        assert_eq!(ab.secular_to_islamist, ba.islamist_to_secular);
        assert_eq!(ab.islamist_to_secular, ba.secular_to_islamist);
    }
}
