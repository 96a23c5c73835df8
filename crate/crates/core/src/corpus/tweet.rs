use chrono::{DateTime, NaiveDate, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Serialize};

use super::normalize::NormalizationRules;
use super::text::{is_hashtag, Tokens};
use crate::{Error, Result};

/// One timestamped post.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tweet {
    id: String,
    author_id: String,
    timestamp: DateTime<Utc>,
    text: String,
    repost_of: Option<String>,
    tokens: Tokens,
}

/// On-disk shape shared by the JSON Lines and CSV formats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub author_id: String,
    pub timestamp: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repost_of: Option<String>,
}

impl Tweet {
    pub fn new(
        id: impl Into<String>,
        author_id: impl Into<String>,
        timestamp: DateTime<Utc>,
        text: impl Into<String>,
        repost_of: Option<String>,
    ) -> Result<Self> {
        let id = id.into();
        let author_id = author_id.into();
        if id.is_empty() {
            return Err(Error::InvalidArgument("tweet id is empty".into()));
        }
        if author_id.is_empty() {
            return Err(Error::InvalidArgument(format!("tweet {id}: author_id is empty")));
        }
        let repost_of = repost_of.filter(|r| !r.is_empty());
        if repost_of.as_deref() == Some(author_id.as_str()) {
            return Err(Error::InvalidArgument(format!("tweet {id}: self-repost by {author_id}")));
        }
        let text = text.into();
        let tokens = Tokens::new(&text);
        Ok(Tweet {
            id,
            author_id,
            timestamp: timestamp.with_nanosecond(0).unwrap_or(timestamp),
            text,
            repost_of,
            tokens,
        })
    }

    pub fn from_record(rec: TweetRecord) -> Result<Self> {
        let ts = DateTime::parse_from_rfc3339(rec.timestamp.trim())
            .map_err(|e| Error::InvalidArgument(format!("tweet {}: bad timestamp {:?}: {e}", rec.id, rec.timestamp)))?
            .with_timezone(&Utc);
        Tweet::new(rec.id, rec.author_id, ts, rec.text, rec.repost_of)
    }

    pub fn to_record(&self) -> TweetRecord {
        TweetRecord {
            id: self.id.clone(),
            author_id: self.author_id.clone(),
            timestamp: self.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
            text: self.text.clone(),
            repost_of: self.repost_of.clone(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn author_id(&self) -> &str {
        &self.author_id
    }

    pub fn timestamp(&self) -> DateTime<Utc> {
        self.timestamp
    }

    /// UTC calendar day.
    pub fn day(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn repost_of(&self) -> Option<&str> {
        self.repost_of.as_deref()
    }

    pub fn tokens(&self) -> &Tokens {
        &self.tokens
    }

    pub fn hashtags(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().filter(|t| is_hashtag(t))
    }

    /// Copy with normalized text and re-derived tokens.
    pub fn normalized(&self, rules: &NormalizationRules) -> Tweet {
        let text = rules.apply(&self.text);
        let tokens = Tokens::new(&text);
        Tweet {
            text,
            tokens,
            ..self.clone()
        }
    }
}
