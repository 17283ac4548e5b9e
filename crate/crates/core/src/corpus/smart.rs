//! SMART test collection records (`.I`/`.W` markers) and relevance judgments.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

/// A document or query as read from a collection file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
}

/// Sections whose text is appended to the record body.
const TEXT_SECTIONS: &[char] = &['T', 'A', 'B', 'W'];
/// Sections that appear in some collections (CACM, CISI) and carry no text.
const SKIPPED_SECTIONS: &[char] = &['N', 'X', 'K', 'C'];

/// `.I 12` -> `Some(('I', "12"))`; `.W` -> `Some(('W', ""))`.
fn marker(line: &str) -> Option<(char, &str)> {
    let rest = line.strip_prefix('.')?;
    let mut chars = rest.chars();
    let tag = chars.next()?;
    if !tag.is_ascii_uppercase() {
        return None;
    }
    let tail = chars.as_str();
    if !tail.is_empty() && !tail.starts_with(char::is_whitespace) {
        return None;
    }
    Some((tag, tail.trim()))
}

/// Collapses numeric ids so that `007` and `7` name the same record.
pub(crate) fn canonical_id(id: &str) -> String {
    if !id.is_empty() && id.bytes().all(|b| b.is_ascii_digit()) {
        let trimmed = id.trim_start_matches('0');
        if trimmed.is_empty() {
            "0".into()
        } else {
            trimmed.into()
        }
    } else {
        id.into()
    }
}

/// Parses SMART formatted text. `origin` only labels error messages.
pub fn parse_smart_str(text: &str, origin: &Path) -> Result<Vec<RawDocument>> {
    let mut records: Vec<RawDocument> = Vec::new();
    // true while inside a section whose lines belong to the body
    let mut in_text = false;
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        match marker(line) {
            Some(('I', id)) => {
                if id.is_empty() {
                    return Err(Error::parse(origin, lineno, ".I marker without an id"));
                }
                records.push(RawDocument {
                    id: canonical_id(id),
                    text: String::new(),
                });
                in_text = false;
            }
            Some((tag, tail)) => {
                if records.is_empty() {
                    return Err(Error::parse(origin, lineno, format!(".{tag} before first .I")));
                }
                if TEXT_SECTIONS.contains(&tag) {
                    in_text = true;
                    if !tail.is_empty() {
                        push_text(records.last_mut().unwrap(), tail);
                    }
                } else if SKIPPED_SECTIONS.contains(&tag) {
                    in_text = false;
                } else {
                    return Err(Error::parse(origin, lineno, format!("unknown marker .{tag}")));
                }
            }
            None => {
                let Some(record) = records.last_mut() else {
                    if line.trim().is_empty() {
                        continue;
                    }
                    return Err(Error::parse(origin, lineno, "text before first .I"));
                };
                if in_text {
                    push_text(record, line);
                }
            }
        }
    }
    Ok(records)
}

fn push_text(record: &mut RawDocument, line: &str) {
    let line = line.trim();
    if line.is_empty() {
        return;
    }
    if !record.text.is_empty() {
        record.text.push(' ');
    }
    record.text.push_str(line);
}

fn read(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    // some of the classic collections contain stray Latin-1 bytes
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

pub fn parse_smart_collection(path: &Path) -> Result<Vec<RawDocument>> {
    parse_smart_str(&read(path)?, path)
}

pub fn parse_smart_queries(path: &Path) -> Result<Vec<RawDocument>> {
    parse_smart_str(&read(path)?, path)
}

/// Column layout of a judgments file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QrelsLayout {
    /// `query_id doc_id [ignored...]`
    #[default]
    Pairs,
    /// `query_id iteration doc_id relevance`; rows with relevance <= 0 are dropped.
    Trec,
}

/// Relevant documents per query. `D` is an external id (`String`) straight
/// from a file, or a row index once resolved against a collection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelevanceJudgments<D: Ord = usize> {
    relevant: BTreeMap<String, BTreeSet<D>>,
}

impl<D: Ord> Default for RelevanceJudgments<D> {
    fn default() -> Self {
        Self {
            relevant: BTreeMap::new(),
        }
    }
}

impl<D: Ord + Clone> RelevanceJudgments<D> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: impl Into<String>, doc: D) {
        self.relevant.entry(query.into()).or_default().insert(doc);
    }

    pub fn relevant(&self, query: &str) -> Option<&BTreeSet<D>> {
        self.relevant.get(query)
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.relevant.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.relevant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relevant.is_empty()
    }

    pub fn n_pairs(&self) -> usize {
        self.relevant.values().map(BTreeSet::len).sum()
    }
}

impl RelevanceJudgments<String> {
    /// Maps external document ids to row indices of a collection whose
    /// documents carry `doc_ids` in row order. Unknown ids are an error.
    pub fn resolve(&self, doc_ids: &[String]) -> Result<RelevanceJudgments<usize>> {
        let index: HashMap<&str, usize> = doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut out = RelevanceJudgments::new();
        for (q, docs) in &self.relevant {
            for d in docs {
                let row = index.get(d.as_str()).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "judgment for query {q} names unknown document {d}"
                    ))
                })?;
                out.insert(q.clone(), *row);
            }
        }
        Ok(out)
    }
}

pub fn parse_qrels_str(
    text: &str,
    layout: QrelsLayout,
    origin: &Path,
) -> Result<RelevanceJudgments<String>> {
    let mut judgments = RelevanceJudgments::new();
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            continue;
        }
        let (query, doc) = match layout {
            QrelsLayout::Pairs => {
                if cols.len() < 2 {
                    return Err(Error::parse(origin, lineno, "expected `query_id doc_id`"));
                }
                (cols[0], cols[1])
            }
            QrelsLayout::Trec => {
                if cols.len() < 4 {
                    return Err(Error::parse(
                        origin,
                        lineno,
                        "expected `query_id iteration doc_id relevance`",
                    ));
                }
                let rel: f64 = cols[3]
                    .parse()
                    .map_err(|_| Error::parse(origin, lineno, "relevance is not a number"))?;
                if rel <= 0.0 {
                    continue;
                }
                (cols[0], cols[2])
            }
        };
        judgments.insert(canonical_id(query), canonical_id(doc));
    }
    Ok(judgments)
}

pub fn parse_qrels(path: &Path, layout: QrelsLayout) -> Result<RelevanceJudgments<String>> {
    parse_qrels_str(&read(path)?, layout, path)
}
