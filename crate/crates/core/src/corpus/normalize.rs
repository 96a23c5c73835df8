//! Rule-driven text normalization.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One normalization step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rule {
    /// Character-class folding, e.g. letter variants onto one canonical letter.
    Fold { map: BTreeMap<char, char> },
    /// Codepoints deleted outright (diacritics, tatweel, zero-width marks).
    RemoveMarks { chars: BTreeSet<char> },
    /// Decorative codepoints replaced by a plain string.
    Replace { map: BTreeMap<char, String> },
    /// Runs of one character longer than `max_run` are cut to `max_run`.
    CompressElongation { max_run: usize },
}

impl Rule {
    fn apply(&self, text: &str) -> String {
        match self {
            Rule::Fold { map } => text.chars().map(|c| *map.get(&c).unwrap_or(&c)).collect(),
            Rule::RemoveMarks { chars } => text.chars().filter(|c| !chars.contains(c)).collect(),
            Rule::Replace { map } => {
                let mut out = String::with_capacity(text.len());
                for c in text.chars() {
                    match map.get(&c) {
                        Some(s) => out.push_str(s),
                        None => out.push(c),
                    }
                }
                out
            }
            Rule::CompressElongation { max_run } => compress_runs(text, *max_run),
        }
    }
}

fn compress_runs(text: &str, max_run: usize) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev = None;
    let mut run = 0usize;
    for c in text.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= max_run {
            out.push(c);
        }
    }
    out
}

/// An ordered, validated list of normalization rules.
///
/// Validation guarantees idempotence: no rule may produce a character that any
/// rule rewrites, and elongation compression may only appear at the tail of the
/// list (removals can otherwise create new runs).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRules", into = "RawRules")]
pub struct NormalizationRules {
    rules: Vec<Rule>,
}

#[derive(Serialize, Deserialize)]
struct RawRules {
    rules: Vec<Rule>,
}

impl TryFrom<RawRules> for NormalizationRules {
    type Error = Error;

    fn try_from(raw: RawRules) -> Result<Self> {
        NormalizationRules::new(raw.rules)
    }
}

impl From<NormalizationRules> for RawRules {
    fn from(r: NormalizationRules) -> Self {
        RawRules { rules: r.rules }
    }
}

impl NormalizationRules {
    pub fn new(rules: Vec<Rule>) -> Result<Self> {
        let mut rewritten = BTreeSet::new();
        let mut produced = BTreeSet::new();
        let mut seen_compression = false;
        for (i, rule) in rules.iter().enumerate() {
            match rule {
                Rule::Fold { map } => {
                    for (&k, &v) in map.iter().filter(|(k, v)| k != v) {
                        rewritten.insert(k);
                        produced.insert(v);
                    }
                }
                Rule::RemoveMarks { chars } => rewritten.extend(chars.iter().copied()),
                Rule::Replace { map } => {
                    for (&k, v) in map {
                        rewritten.insert(k);
                        produced.extend(v.chars());
                    }
                }
                Rule::CompressElongation { max_run } => {
                    if *max_run == 0 {
                        return Err(Error::InvalidArgument(format!(
                            "rule {i}: elongation max_run must be >= 1"
                        )));
                    }
                    seen_compression = true;
                    continue;
                }
            }
            if seen_compression {
                return Err(Error::InvalidArgument(format!(
                    "rule {i}: character rules may not follow elongation compression"
                )));
            }
        }
        if let Some(c) = produced.intersection(&rewritten).next() {
            return Err(Error::InvalidArgument(format!(
                "character {c:?} (U+{:04X}) is both produced and rewritten by the rule list",
                *c as u32
            )));
        }
        Ok(NormalizationRules { rules })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn apply(&self, text: &str) -> String {
        let mut cur = text.to_owned();
        for rule in &self.rules {
            cur = rule.apply(&cur);
        }
        cur
    }

    pub fn from_json(src: &str) -> Result<Self> {
        Ok(serde_json::from_str(src)?)
    }

    /// Example rules for social-media Arabic: alef/yeh/teh-marbuta folding,
    /// harakat and tatweel removal, elongation cut to two.
    pub fn social_arabic() -> Self {
        let fold = [
            ('\u{0623}', '\u{0627}'),
            ('\u{0625}', '\u{0627}'),
            ('\u{0622}', '\u{0627}'),
            ('\u{0671}', '\u{0627}'),
            ('\u{0649}', '\u{064A}'),
            ('\u{0629}', '\u{0647}'),
        ];
        let marks = ('\u{064B}'..='\u{0652}').chain(['\u{0640}', '\u{0670}']);
        let decorative = [
            ('\u{FDF2}', "\u{0627}\u{0644}\u{0644}\u{0647}".to_owned()),
            ('\u{200D}', String::new()),
        ];
        NormalizationRules::new(vec![
            Rule::Fold {
                map: fold.into_iter().collect(),
            },
            Rule::RemoveMarks {
                chars: marks.collect(),
            },
            Rule::Replace {
                map: decorative.into_iter().collect(),
            },
            Rule::CompressElongation { max_run: 2 },
        ])
        .expect("built-in rules are well formed")
    }
}

/// Apply `rules` in order to `text`.
pub fn normalize_text(text: &str, rules: &NormalizationRules) -> String {
    rules.apply(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn compress(r: usize) -> NormalizationRules {
        NormalizationRules::new(vec![Rule::CompressElongation { max_run: r }]).unwrap()
    }

    #[test]
    fn elongation_compressed_to_run_length() {
        assert_eq!(normalize_text("cooooool", &compress(2)), "cool");
        assert_eq!(normalize_text("cooooool", &compress(1)), "col");
        assert_eq!(normalize_text("", &compress(1)), "");
    }

    #[test]
    fn marks_removed() {
        let rules = NormalizationRules::new(vec![Rule::RemoveMarks {
            chars: ['\u{064E}'].into_iter().collect(),
        }])
        .unwrap();
        assert_eq!(normalize_text("\u{0643}\u{064E}\u{062A}\u{064E}\u{0628}", &rules), "\u{0643}\u{062A}\u{0628}");
    }

    #[test]
    fn already_normalized_text_unchanged() {
        let rules = NormalizationRules::social_arabic();
        let once = normalize_text("\u{0623}\u{0647}\u{0644}\u{0627}\u{064B}\u{064B} ooops", &rules);
        assert_eq!(normalize_text(&once, &rules), once);
    }

    #[test]
    fn rejects_chained_fold() {
        let err = NormalizationRules::new(vec![Rule::Fold {
            map: [('a', 'b'), ('b', 'c')].into_iter().collect(),
        }]);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_rule_after_compression() {
        let err = NormalizationRules::new(vec![
            Rule::CompressElongation { max_run: 2 },
            Rule::RemoveMarks {
                chars: ['x'].into_iter().collect(),
            },
        ]);
        assert!(err.is_err());
        assert!(NormalizationRules::new(vec![Rule::CompressElongation { max_run: 0 }]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let rules = NormalizationRules::social_arabic();
        let json = serde_json::to_string(&rules).unwrap();
        assert_eq!(NormalizationRules::from_json(&json).unwrap(), rules);
        let bad = r#"{"rules":[{"kind":"fold","map":{"a":"b","b":"a"}}]}"#;
        assert!(NormalizationRules::from_json(bad).is_err());
    }

    fn arb_rules() -> impl Strategy<Value = NormalizationRules> {
        // Small alphabet so collisions between rules are common.
        let alphabet: Vec<char> = "abcdeéx\u{064B}\u{0640} ".chars().collect();
        let pick = proptest::sample::select(alphabet);
        let rule = prop_oneof![
            proptest::collection::btree_map(pick.clone(), pick.clone(), 0..4)
                .prop_map(|map| Rule::Fold { map }),
            proptest::collection::btree_set(pick.clone(), 0..3).prop_map(|chars| Rule::RemoveMarks { chars }),
            proptest::collection::btree_map(pick.clone(), "[a-e]{0,3}", 0..3)
                .prop_map(|map| Rule::Replace { map }),
        ];
        (proptest::collection::vec(rule, 0..4), proptest::option::of(1usize..4)).prop_filter_map(
            "ill-formed",
            |(mut rules, r)| {
                if let Some(r) = r {
                    rules.push(Rule::CompressElongation { max_run: r });
                }
                NormalizationRules::new(rules).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn idempotent(rules in arb_rules(), text in "[abcdeéx\u{064B}\u{0640} ]{0,40}|\\PC{0,30}") {
            let once = normalize_text(&text, &rules);
            prop_assert_eq!(normalize_text(&once, &rules), once);
        }
    }
}
