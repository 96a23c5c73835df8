//! Boolean query language used to filter the corpus.
//!
//! ```text
//! expr   := or
//! or     := and ('OR' and)*
//! and    := unary ('AND' unary)*
//! unary  := 'NOT' unary | '(' expr ')' | phrase | term
//! phrase := '"' token* '"'
//! ```
//!
//! `AND`, `OR` and `NOT` are keywords only in uppercase. Leaves are stored in
//! canonical token form (normalized, punctuation-stripped, lowercased).

use std::fmt;

use super::normalize::NormalizationRules;
use super::text::tokenize;
use super::tweet::Tweet;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Query {
    Term(String),
    Phrase(Vec<String>),
    And(Box<Query>, Box<Query>),
    Or(Box<Query>, Box<Query>),
    Not(Box<Query>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("query syntax error at byte {offset}: {message}; expected one of {}", expected.join(", "))]
pub struct QuerySyntaxError {
    pub offset: usize,
    pub message: String,
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    And,
    Or,
    Not,
    Word(String),
    Quoted(String),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, QuerySyntaxError> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '(' {
            chars.next();
            out.push((i, Tok::LParen));
        } else if c == ')' {
            chars.next();
            out.push((i, Tok::RParen));
        } else if c == '"' {
            chars.next();
            let start = i + 1;
            let mut end = None;
            for (j, d) in chars.by_ref() {
                if d == '"' {
                    end = Some(j);
                    break;
                }
            }
            let Some(end) = end else {
                return Err(QuerySyntaxError {
                    offset: i,
                    message: "unterminated phrase".into(),
                    expected: vec!["'\"'".into()],
                });
            };
            out.push((i, Tok::Quoted(src[start..end].to_owned())));
        } else {
            let mut end = src.len();
            while let Some(&(j, d)) = chars.peek() {
                if d.is_whitespace() || d == '(' || d == ')' || d == '"' {
                    end = j;
                    break;
                }
                chars.next();
            }
            let word = &src[i..end];
            let tok = match word {
                "AND" => Tok::And,
                "OR" => Tok::Or,
                "NOT" => Tok::Not,
                w => Tok::Word(w.to_owned()),
            };
            out.push((i, tok));
        }
    }
    Ok(out)
}

const OPERAND: [&str; 4] = ["term", "phrase", "'NOT'", "'('"];

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    rules: &'a NormalizationRules,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> QuerySyntaxError {
        QuerySyntaxError {
            offset: self.offset(),
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn or(&mut self) -> Result<Query, QuerySyntaxError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let rhs = self.and()?;
            lhs = Query::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Query, QuerySyntaxError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Query::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Query, QuerySyntaxError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("unexpected end of query", &OPERAND));
        };
        match tok {
            Tok::Not => {
                self.pos += 1;
                Ok(Query::Not(Box::new(self.unary()?)))
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.error("unbalanced parenthesis", &["')'", "'AND'", "'OR'"]));
                }
                self.pos += 1;
                Ok(inner)
            }
            Tok::Word(w) => {
                let leaf = self.leaf(&w, false)?;
                self.pos += 1;
                Ok(leaf)
            }
            Tok::Quoted(s) => {
                let leaf = self.leaf(&s, true)?;
                self.pos += 1;
                Ok(leaf)
            }
            Tok::RParen | Tok::And | Tok::Or => Err(self.error("expected an operand", &OPERAND)),
        }
    }

    fn leaf(&self, raw: &str, quoted: bool) -> Result<Query, QuerySyntaxError> {
        let mut toks = tokenize(&self.rules.apply(raw));
        match toks.len() {
            0 => Err(self.error(format!("{raw:?} is empty after normalization"), &["non-empty term"])),
            1 if !quoted => Ok(Query::Term(toks.pop().unwrap())),
            _ => Ok(Query::Phrase(toks)),
        }
    }
}

/// Parse `src`, normalizing leaves with `rules`.
pub fn parse_query(src: &str, rules: &NormalizationRules) -> Result<Query, QuerySyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
        rules,
    };
    if p.toks.is_empty() {
        return Err(p.error("empty query", &OPERAND));
    }
    let q = p.or()?;
    if p.pos < p.toks.len() {
        return Err(p.error("trailing input", &["'AND'", "'OR'", "end of query"]));
    }
    Ok(q)
}

impl Query {
    pub fn term(t: &str) -> Query {
        Query::Term(t.to_owned())
    }

    pub fn and(a: Query, b: Query) -> Query {
        Query::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Query, b: Query) -> Query {
        Query::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Query) -> Query {
        Query::Not(Box::new(a))
    }

    /// Evaluate against an already tokenized text.
    pub fn matches<S: AsRef<str>>(&self, tokens: &[S]) -> bool {
        match self {
            Query::Term(t) => tokens.iter().any(|x| x.as_ref() == t),
            Query::Phrase(p) => {
                !p.is_empty() && tokens.windows(p.len()).any(|w| w.iter().zip(p).all(|(a, b)| a.as_ref() == b))
            }
            Query::And(a, b) => a.matches(tokens) && b.matches(tokens),
            Query::Or(a, b) => a.matches(tokens) || b.matches(tokens),
            Query::Not(a) => !a.matches(tokens),
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&Query> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Query>) {
        match self {
            Query::Term(_) | Query::Phrase(_) => out.push(self),
            Query::And(a, b) | Query::Or(a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
            Query::Not(a) => a.collect_leaves(out),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Query::Or(..) => 1,
            Query::And(..) => 2,
            _ => 3,
        }
    }
}

/// Evaluate `q` against a normalized tweet.
pub fn eval_query(q: &Query, t: &Tweet) -> bool {
    q.matches(&t.tokens().to_vec())
}

fn write_child(f: &mut fmt::Formatter<'_>, q: &Query, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({q})")
    } else {
        write!(f, "{q}")
    }
}

impl fmt::Display for Query {
    /// Minimal parenthesization; re-parsing yields the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Term(t) => f.write_str(t),
            Query::Phrase(p) => write!(f, "\"{}\"", p.join(" ")),
            Query::Or(a, b) => {
                write_child(f, a, false)?;
                f.write_str(" OR ")?;
                write_child(f, b, b.precedence() <= 1)
            }
            Query::And(a, b) => {
                write_child(f, a, a.precedence() < 2)?;
                f.write_str(" AND ")?;
                write_child(f, b, b.precedence() <= 2)
            }
            Query::Not(a) => {
                f.write_str("NOT ")?;
                write_child(f, a, a.precedence() < 3)
            }
        }
    }
}
