//! Whitespace tokenization shared by queries, lexicons and features.

const EXTRA_PUNCT: &[char] = &[
    '\u{060C}', '\u{061B}', '\u{061F}', '\u{066A}', '\u{066B}', '\u{066C}', '\u{06D4}', '\u{2026}',
    '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}', '\u{00AB}', '\u{00BB}', '\u{2013}', '\u{2014}',
    '\u{00BF}', '\u{00A1}', '\u{3001}', '\u{3002}', '\u{FF01}', '\u{FF0C}', '\u{FF1F}',
];

fn is_strippable(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_punctuation() && c != '#' && c != '@';
    }
    EXTRA_PUNCT.contains(&c)
}

/// Canonical form of one whitespace-delimited chunk, or `None` if nothing is left.
pub fn canonical_token(raw: &str) -> Option<String> {
    let mut out = String::new();
    push_canonical(raw, &mut out).then_some(out)
}

/// Append the canonical form of `raw` to `buf`; false if nothing is left.
fn push_canonical(raw: &str, buf: &mut String) -> bool {
    let t = raw.trim_matches(is_strippable);
    if t.is_empty() {
        return false;
    }
    if t.bytes().all(|b| b.is_ascii() && !b.is_ascii_uppercase()) {
        buf.push_str(t);
    } else {
        buf.push_str(&t.to_lowercase());
    }
    true
}

/// Split on Unicode whitespace, strip edge punctuation (keeping `#` and `@`),
/// lowercase.
pub fn tokenize(text: &str) -> Vec<String> {
    Tokens::new(text).iter().map(str::to_owned).collect()
}

// The ASCII members of Unicode White_Space are U+0009..=U+000D and U+0020.
fn is_ascii_space(b: u8) -> bool {
    matches!(b, b'\t'..=b'\r' | b' ')
}

fn is_ascii_strippable(b: u8) -> bool {
    b.is_ascii_punctuation() && b != b'#' && b != b'@'
}

/// The tokens of one text, stored back to back in a single buffer.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tokens {
    buf: String,
    ends: Vec<u32>,
}

impl Tokens {
    /// Same tokens as [`tokenize`].
    pub fn new(text: &str) -> Tokens {
        let mut t = Tokens {
            buf: String::with_capacity(text.len()),
            ends: Vec::with_capacity(text.len() / 4 + 1),
        };
        if !text.is_ascii() {
            for chunk in text.split_whitespace() {
                if push_canonical(chunk, &mut t.buf) {
                    t.ends.push(t.buf.len() as u32);
                }
            }
            return t;
        }
        // Byte scan; every boundary below is an ASCII position.
        let b = text.as_bytes();
        let mut i = 0;
        while i < b.len() {
            while i < b.len() && is_ascii_space(b[i]) {
                i += 1;
            }
            let mut lo = i;
            while i < b.len() && !is_ascii_space(b[i]) {
                i += 1;
            }
            let mut hi = i;
            while lo < hi && is_ascii_strippable(b[lo]) {
                lo += 1;
            }
            while hi > lo && is_ascii_strippable(b[hi - 1]) {
                hi -= 1;
            }
            if lo < hi {
                t.buf.extend(b[lo..hi].iter().map(|c| char::from(c.to_ascii_lowercase())));
                t.ends.push(t.buf.len() as u32);
            }
        }
        t
    }

    pub fn len(&self) -> usize {
        self.ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ends.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&str> {
        let end = *self.ends.get(i)? as usize;
        let start = if i == 0 { 0 } else { self.ends[i - 1] as usize };
        Some(&self.buf[start..end])
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &str> + Clone + '_ {
        (0..self.len()).map(|i| self.get(i).expect("index in range"))
    }

    pub fn to_vec(&self) -> Vec<&str> {
        self.iter().collect()
    }
}

pub fn is_hashtag(token: &str) -> bool {
    token.starts_with('#') && token.chars().any(|c| c != '#')
}

/// In-order `#`-prefixed tokens of `text`.
pub fn extract_hashtags(text: &str) -> Vec<String> {
    tokenize(text).into_iter().filter(|t| is_hashtag(t)).collect()
}
