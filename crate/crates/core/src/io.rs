//! File formats: tweet JSON Lines / CSV, term lists, CSV helpers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::corpus::{Corpus, IngestStats, Tweet, TweetRecord};
use crate::{Error, Result};

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn push_record(rec: TweetRecord, line: usize, out: &mut Vec<Tweet>, rejected: &mut usize) -> Result<()> {
    match Tweet::from_record(rec) {
        Ok(t) => out.push(t),
        Err(Error::InvalidArgument(reason)) if reason.contains("self-repost") => {
            log::debug!("line {line}: {reason}");
            *rejected += 1;
        }
        Err(e) => {
            return Err(Error::Record {
                line,
                reason: e.to_string(),
            })
        }
    }
    Ok(())
}

/// Parse JSON Lines tweets. Self-reposts are skipped and counted.
pub fn read_jsonl(reader: impl BufRead) -> Result<(Vec<Tweet>, usize)> {
    let mut out = Vec::new();
    let mut rejected = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TweetRecord = serde_json::from_str(&line).map_err(|e| Error::Record {
            line: i + 1,
            reason: e.to_string(),
        })?;
        push_record(rec, i + 1, &mut out, &mut rejected)?;
    }
    Ok((out, rejected))
}

/// Parse CSV tweets with a header row `id,author_id,timestamp,text,repost_of`.
pub fn read_csv_tweets(reader: impl Read) -> Result<(Vec<Tweet>, usize)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    let mut rejected = 0;
    for (i, rec) in rdr.deserialize::<TweetRecord>().enumerate() {
        let rec = rec.map_err(|e| Error::Record {
            line: i + 2,
            reason: e.to_string(),
        })?;
        push_record(rec, i + 2, &mut out, &mut rejected)?;
    }
    Ok((out, rejected))
}

/// Read one or more tweet files (`.csv` by extension, JSON Lines otherwise)
/// into a corpus.
pub fn load_corpus<P: AsRef<Path>>(paths: &[P]) -> Result<(Corpus, IngestStats)> {
    let mut all = Vec::new();
    let mut rejected = 0;
    for p in paths {
        let p = p.as_ref();
        let (tweets, rej) = if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            read_csv_tweets(open(p)?)
        } else {
            read_jsonl(open(p)?)
        }
        .map_err(|e| match e {
            Error::Record { line, reason } => Error::Data(format!("{}:{line}: {reason}", p.display())),
            e => e,
        })?;
        all.extend(tweets);
        rejected += rej;
    }
    let (corpus, mut stats) = Corpus::new(all);
    stats.records += rejected;
    stats.rejected = rejected;
    Ok((corpus, stats))
}

pub fn write_jsonl(corpus: &Corpus, mut w: impl Write) -> Result<()> {
    for t in corpus.tweets() {
        serde_json::to_writer(&mut w, &t.to_record())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    write_jsonl(corpus, create(path)?)
}

/// One term per line; blank lines and `#`-comment lines that contain
/// whitespace are ignored. Terms are canonicalized like tweet tokens.
pub fn parse_term_list(src: &str) -> Vec<String> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !(l.starts_with('#') && l.contains(char::is_whitespace)))
        .filter_map(crate::corpus::text::canonical_token)
        .collect()
}

/// Serialize rows to CSV with a header.
pub fn write_csv_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_with_header<T: Serialize>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
