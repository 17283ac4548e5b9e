//! Tab separated files: `doc<TAB>term<TAB>count` triples, `term_id<TAB>term`
//! vocabularies and `row<TAB>external_id` document id lists.

use std::fmt::Write as _;
use std::path::Path;

use super::counts::{CountMatrix, Entry, Vocabulary};
use crate::error::{Error, Result};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn field<'a>(cols: &mut impl Iterator<Item = &'a str>, path: &Path, line: usize, what: &str) -> Result<&'a str> {
    cols.next()
        .ok_or_else(|| Error::parse(path, line, format!("missing {what}")))
}

fn number<N: std::str::FromStr>(s: &str, path: &Path, line: usize, what: &str) -> Result<N> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("bad {what} {s:?}")))
}

/// Writes the triple file. The first line is a `#` header carrying the shape
/// so that trailing empty documents and unused terms survive a round trip.
pub fn save_counts(path: &Path, counts: &CountMatrix) -> Result<()> {
    let mut out = format!("# {} {}\n", counts.n_docs(), counts.n_terms());
    for e in counts.entries() {
        writeln!(out, "{}\t{}\t{}", e.doc, e.term, e.count).unwrap();
    }
    write(path, &out)
}

/// Reads a triple file. Without a `# N M` header the shape is inferred from
/// the largest ids present.
pub fn load_counts(path: &Path) -> Result<CountMatrix> {
    let text = read(path)?;
    let mut shape: Option<(usize, usize)> = None;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if let Some(header) = line.strip_prefix('#') {
            let mut cols = header.split_whitespace();
            if let (Some(n), Some(m)) = (cols.next(), cols.next()) {
                if let (Ok(n), Ok(m)) = (n.parse(), m.parse()) {
                    shape = Some((n, m));
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let doc = number(field(&mut cols, path, lineno, "doc id")?, path, lineno, "doc id")?;
        let term = number(field(&mut cols, path, lineno, "term id")?, path, lineno, "term id")?;
        let count = number(field(&mut cols, path, lineno, "count")?, path, lineno, "count")?;
        entries.push(Entry { doc, term, count });
    }
    let (n, m) = shape.unwrap_or_else(|| {
        (
            entries.iter().map(|e| e.doc + 1).max().unwrap_or(0),
            entries.iter().map(|e| e.term + 1).max().unwrap_or(0),
        )
    });
    CountMatrix::new(n, m, entries)
}

pub fn save_vocab(path: &Path, vocab: &Vocabulary) -> Result<()> {
    let mut out = String::new();
    for (id, term) in vocab.terms().iter().enumerate() {
        writeln!(out, "{id}\t{term}").unwrap();
    }
    write(path, &out)
}

/// Reads a vocabulary; ids must be listed densely in ascending order.
pub fn load_vocab(path: &Path) -> Result<Vocabulary> {
    let text = read(path)?;
    let mut vocab = Vocabulary::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
        let lineno = i + 1;
        let (id, term) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, lineno, "expected `term_id<TAB>term`"))?;
        let id: usize = number(id, path, lineno, "term id")?;
        if id != vocab.len() {
            return Err(Error::parse(path, lineno, format!("expected term id {}", vocab.len())));
        }
        if vocab.id(term).is_some() {
            return Err(Error::parse(path, lineno, format!("duplicate term {term:?}")));
        }
        vocab.intern(term);
    }
    Ok(vocab)
}

pub fn save_doc_ids(path: &Path, ids: &[String]) -> Result<()> {
    let mut out = String::new();
    for (row, id) in ids.iter().enumerate() {
        writeln!(out, "{row}\t{id}").unwrap();
    }
    write(path, &out)
}

pub fn load_doc_ids(path: &Path) -> Result<Vec<String>> {
    let text = read(path)?;
    let mut ids = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
        let (row, id) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected `row<TAB>id`"))?;
        let row: usize = number(row, path, i + 1, "row")?;
        if row != ids.len() {
            return Err(Error::parse(path, i + 1, format!("expected row {}", ids.len())));
        }
        ids.push(id.to_owned());
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("plsa-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn triples_round_trip_keeps_shape() {
        let counts = CountMatrix::from_dense(&[vec![0, 2, 0], vec![1, 0, 0], vec![0, 0, 0]]).unwrap();
        let p = tmp("counts.tsv");
        save_counts(&p, &counts).unwrap();
        assert_eq!(load_counts(&p).unwrap(), counts);
    }

    #[test]
    fn headerless_triples_infer_shape() {
        let p = tmp("bare.tsv");
        std::fs::write(&p, "0\t1\t3\n2\t0\t1\n").unwrap();
        let c = load_counts(&p).unwrap();
        assert_eq!((c.n_docs(), c.n_terms(), c.total()), (3, 2, 4));
    }

    #[test]
    fn bad_triple_names_line() {
        let p = tmp("bad.tsv");
        std::fs::write(&p, "0\t1\t3\n0\tx\t1\n").unwrap();
        assert!(matches!(load_counts(&p), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn vocab_round_trip() {
        let v = Vocabulary::from_terms(["alpha", "beta", "gamma"]).unwrap();
        let p = tmp("vocab.tsv");
        save_vocab(&p, &v).unwrap();
        assert_eq!(load_vocab(&p).unwrap(), v);
    }
}
