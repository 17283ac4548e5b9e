use std::collections::HashMap;

use crate::error::{Error, Result};

/// Bijection between term strings and dense ids assigned in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vocabulary from terms listed in id order. Duplicates are rejected.
    pub fn from_terms<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self::new();
        for term in terms {
            let term = term.into();
            if vocab.index.contains_key(&term) {
                return Err(Error::InvalidArgument(format!("duplicate term {term:?}")));
            }
            vocab.intern(&term);
        }
        Ok(vocab)
    }

    /// Returns the id of `term`, assigning the next free id if unseen.
    pub fn intern(&mut self, term: &str) -> usize {
        if let Some(&id) = self.index.get(term) {
            return id;
        }
        let id = self.terms.len();
        self.terms.push(term.to_owned());
        self.index.insert(term.to_owned(), id);
        id
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> Option<&str> {
        self.terms.get(id).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maps tokens to a sparse term-count vector sorted by term id.
    /// Tokens outside the vocabulary are dropped.
    pub fn count_known<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<(usize, u32)> {
        let mut counts: HashMap<usize, u32> = HashMap::new();
        for t in tokens {
            if let Some(id) = self.id(t.as_ref()) {
                *counts.entry(id).or_default() += 1;
            }
        }
        let mut v: Vec<_> = counts.into_iter().collect();
        v.sort_unstable();
        v
    }
}

/// One nonzero cell `n(d, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Entry {
    pub doc: usize,
    pub term: usize,
    pub count: u32,
}

/// Sparse `N x M` table of co-occurrence counts.
///
/// Entries are kept sorted by `(doc, term)` with no duplicates and no zero
/// counts; `row_start` indexes the first entry of every document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    n_docs: usize,
    n_terms: usize,
    entries: Vec<Entry>,
    row_start: Vec<usize>,
    total: u64,
}

impl CountMatrix {
    /// Validates and sorts `entries`.
    pub fn new(n_docs: usize, n_terms: usize, mut entries: Vec<Entry>) -> Result<Self> {
        for e in &entries {
            if e.doc >= n_docs || e.term >= n_terms {
                return Err(Error::InvalidCounts(format!(
                    "cell ({}, {}) outside {n_docs} x {n_terms}",
                    e.doc, e.term
                )));
            }
            if e.count == 0 {
                return Err(Error::InvalidCounts(format!(
                    "zero count stored at ({}, {})",
                    e.doc, e.term
                )));
            }
        }
        entries.sort_unstable_by_key(|e| (e.doc, e.term));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].doc, w[0].term) == (w[1].doc, w[1].term))
        {
            return Err(Error::InvalidCounts(format!(
                "duplicate cell ({}, {})",
                w[0].doc, w[0].term
            )));
        }
        Ok(Self::from_sorted(n_docs, n_terms, entries))
    }

    /// Builds from a dense row-major table; zero cells are skipped.
    pub fn from_dense(rows: &[Vec<u32>]) -> Result<Self> {
        let n_docs = rows.len();
        let n_terms = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_terms) {
            return Err(Error::InvalidCounts("ragged dense table".into()));
        }
        let entries = rows
            .iter()
            .enumerate()
            .flat_map(|(doc, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(move |(term, &count)| Entry { doc, term, count })
            })
            .collect();
        Ok(Self::from_sorted(n_docs, n_terms, entries))
    }

    pub(crate) fn from_sorted(n_docs: usize, n_terms: usize, entries: Vec<Entry>) -> Self {
        let mut row_start = vec![0; n_docs + 1];
        for e in &entries {
            row_start[e.doc + 1] += 1;
        }
        for d in 0..n_docs {
            row_start[d + 1] += row_start[d];
        }
        let total = entries.iter().map(|e| u64::from(e.count)).sum();
        Self {
            n_docs,
            n_terms,
            entries,
            row_start,
            total,
        }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn row(&self, doc: usize) -> &[Entry] {
        &self.entries[self.row_start[doc]..self.row_start[doc + 1]]
    }

    pub fn get(&self, doc: usize, term: usize) -> u32 {
        let row = self.row(doc);
        row.binary_search_by_key(&term, |e| e.term)
            .map_or(0, |i| row[i].count)
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.n_docs)
            .map(|d| self.row(d).iter().map(|e| u64::from(e.count)).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.n_terms];
        for e in &self.entries {
            sums[e.term] += u64::from(e.count);
        }
        sums
    }

    /// Sparse `(term, count)` vector of one document.
    pub fn row_vector(&self, doc: usize) -> Vec<(usize, u32)> {
        self.row(doc).iter().map(|e| (e.term, e.count)).collect()
    }

    /// Cell-wise sum of two tables of identical shape.
    pub fn merge(&self, other: &CountMatrix) -> Result<CountMatrix> {
        if (self.n_docs, self.n_terms) != (other.n_docs, other.n_terms) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.n_docs, self.n_terms, other.n_docs, other.n_terms
            )));
        }
        let mut merged = Vec::with_capacity(self.nnz() + other.nnz());
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        loop {
            let next = match (a.peek(), b.peek()) {
                (Some(x), Some(y)) => match (x.doc, x.term).cmp(&(y.doc, y.term)) {
                    std::cmp::Ordering::Less => *a.next().unwrap(),
                    std::cmp::Ordering::Greater => *b.next().unwrap(),
                    std::cmp::Ordering::Equal => {
                        let y = *b.next().unwrap();
                        let mut x = *a.next().unwrap();
                        x.count += y.count;
                        x
                    }
                },
                (Some(_), None) => *a.next().unwrap(),
                (None, Some(_)) => *b.next().unwrap(),
                (None, None) => break,
            };
            merged.push(next);
        }
        Ok(Self::from_sorted(self.n_docs, self.n_terms, merged))
    }
}

/// Counts term occurrences per document. Empty documents are kept as zero rows.
pub fn build_counts<S: AsRef<str>>(docs: &[Vec<S>]) -> Result<(Vocabulary, CountMatrix)> {
    let mut vocab = Vocabulary::new();
    let mut entries = Vec::new();
    for (doc, tokens) in docs.iter().enumerate() {
        let mut row: HashMap<usize, u32> = HashMap::new();
        for t in tokens {
            *row.entry(vocab.intern(t.as_ref())).or_default() += 1;
        }
        let mut row: Vec<_> = row.into_iter().collect();
        row.sort_unstable();
        entries.extend(row.into_iter().map(|(term, count)| Entry { doc, term, count }));
    }
    if entries.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let counts = CountMatrix::from_sorted(docs.len(), vocab.len(), entries);
    Ok((vocab, counts))
}
