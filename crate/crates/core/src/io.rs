//! Plain-text persistence for fitted models and SVD bases.
//!
//! A container file looks like
//!
//! ```text
//! plsa-container 1
//! kind aspect-model
//! scalar f64
//! meta beta 0.9
//! block prior 1 4
//! 0.25 0.25 0.25 0.25
//! block doc_given_z 3 4
//! ...
//! ```
//!
//! Values are written with the shortest representation that parses back to
//! the same number, so a save/load cycle is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::lsa::SvdDecomposition;
use crate::model::AspectModel;
use crate::scalar::Scalar;

const MAGIC: &str = "plsa-container";
const VERSION: u32 = 1;
pub const KIND_MODEL: &str = "aspect-model";
pub const KIND_SVD: &str = "svd";

#[derive(Debug, Clone, PartialEq)]
pub struct Container<T> {
    pub kind: String,
    /// Free-form `key value` pairs, in key order.
    pub meta: BTreeMap<String, String>,
    pub blocks: Vec<(String, DenseMatrix<T>)>,
}

impl<T: Scalar> Container<T> {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            meta: BTreeMap::new(),
            blocks: Vec::new(),
        }
    }

    pub fn block(&self, name: &str) -> Result<&DenseMatrix<T>> {
        self.blocks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::Format(format!("missing block `{name}`")))
    }

    fn take_block(&mut self, name: &str) -> Result<DenseMatrix<T>> {
        let i = self
            .blocks
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| Error::Format(format!("missing block `{name}`")))?;
        Ok(self.blocks.swap_remove(i).1)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} {VERSION}\nkind {}\nscalar {}\n", self.kind, T::NAME);
        for (k, v) in &self.meta {
            writeln!(out, "meta {k} {v}").unwrap();
        }
        for (name, m) in &self.blocks {
            writeln!(out, "block {name} {} {}", m.rows(), m.cols()).unwrap();
            for r in 0..m.rows() {
                let line: Vec<String> = m.row(r).iter().map(|x| x.to_string()).collect();
                writeln!(out, "{}", line.join(" ")).unwrap();
            }
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(path, 0, format!("unexpected end of file, expected {what}")))
        };
        let (n, header) = next("header")?;
        match header.split_once(' ') {
            Some((MAGIC, v)) if v.trim() == VERSION.to_string() => {}
            Some((MAGIC, v)) => return Err(Error::parse(path, n, format!("unsupported version {v}"))),
            _ => return Err(Error::parse(path, n, "not a plsa container")),
        }
        let (n, kind) = next("kind")?;
        let kind = kind
            .strip_prefix("kind ")
            .ok_or_else(|| Error::parse(path, n, "expected `kind`"))?;
        let (n, scalar) = next("scalar")?;
        match scalar.strip_prefix("scalar ") {
            Some(s) if s.trim() == T::NAME => {}
            Some(s) => {
                return Err(Error::parse(path, n, format!("stored as {}, requested {}", s.trim(), T::NAME)));
            }
            None => return Err(Error::parse(path, n, "expected `scalar`")),
        }
        let mut out = Container::new(kind.trim());
        let mut current: Option<(String, usize, usize, Vec<T>)> = None;
        let finish = |cur: Option<(String, usize, usize, Vec<T>)>, out: &mut Container<T>, n: usize| -> Result<()> {
            if let Some((name, rows, cols, values)) = cur {
                if values.len() != rows * cols {
                    return Err(Error::parse(
                        path,
                        n,
                        format!("block `{name}` holds {} values, expected {}", values.len(), rows * cols),
                    ));
                }
                out.blocks.push((name, DenseMatrix::from_vec(rows, cols, values)));
            }
            Ok(())
        };
        let mut last = 0;
        for (n, line) in lines {
            last = n;
            if let Some(rest) = line.strip_prefix("meta ") {
                if current.is_some() {
                    return Err(Error::parse(path, n, "meta after first block"));
                }
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                out.meta.insert(k.to_string(), v.to_string());
            } else if let Some(rest) = line.strip_prefix("block ") {
                finish(current.take(), &mut out, n)?;
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [name, rows, cols] = parts[..] else {
                    return Err(Error::parse(path, n, "expected `block NAME ROWS COLS`"));
                };
                let dim = |s: &str| s.parse::<usize>().map_err(|e| Error::parse(path, n, e.to_string()));
                let (rows, cols) = (dim(rows)?, dim(cols)?);
                current = Some((name.to_string(), rows, cols, Vec::with_capacity(rows * cols)));
            } else if line.trim().is_empty() {
                continue;
            } else {
                let Some((_, _, _, values)) = current.as_mut() else {
                    return Err(Error::parse(path, n, "values outside a block"));
                };
                for tok in line.split_whitespace() {
                    values.push(
                        tok.parse::<T>()
                            .map_err(|_| Error::parse(path, n, format!("bad number `{tok}`")))?,
                    );
                }
            }
        }
        finish(current, &mut out, last)?;
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Format(format!("expected a {kind} container, found {}", self.kind)));
        }
        Ok(())
    }
}

pub fn model_container<T: Scalar>(model: &AspectModel<T>, meta: &[(&str, String)]) -> Container<T> {
    let mut c = Container::new(KIND_MODEL);
    for (k, v) in meta {
        c.meta.insert((*k).to_string(), v.clone());
    }
    c.blocks.push((
        "prior".into(),
        DenseMatrix::from_vec(1, model.k(), model.prior().to_vec()),
    ));
    c.blocks.push(("doc_given_z".into(), model.doc_matrix()));
    c.blocks.push(("word_given_z".into(), model.word_matrix()));
    c
}

pub fn model_from_container<T: Scalar>(mut c: Container<T>) -> Result<AspectModel<T>> {
    c.expect_kind(KIND_MODEL)?;
    let prior = c.take_block("prior")?;
    if prior.rows() != 1 {
        return Err(Error::Format("prior block must have one row".into()));
    }
    let docs = c.take_block("doc_given_z")?;
    let words = c.take_block("word_given_z")?;
    AspectModel::new(prior.into_vec(), docs, words)
}

/// Writes a model with optional metadata such as the temperature it was
/// selected at.
pub fn save_model<T: Scalar>(model: &AspectModel<T>, meta: &[(&str, String)], path: &Path) -> Result<()> {
    model_container(model, meta).save(path)
}

/// Reads a model and its metadata.
pub fn load_model<T: Scalar>(path: &Path) -> Result<(AspectModel<T>, BTreeMap<String, String>)> {
    let c = Container::<T>::load(path)?;
    let meta = c.meta.clone();
    Ok((model_from_container(c)?, meta))
}

pub fn save_svd<T: Scalar>(svd: &SvdDecomposition<T>, path: &Path) -> Result<()> {
    let mut c = Container::new(KIND_SVD);
    c.blocks.push((
        "sigma".into(),
        DenseMatrix::from_vec(1, svd.sigma.len(), svd.sigma.clone()),
    ));
    c.blocks.push(("u".into(), svd.u.clone()));
    c.blocks.push(("v".into(), svd.v.clone()));
    c.save(path)
}

pub fn load_svd<T: Scalar>(path: &Path) -> Result<SvdDecomposition<T>> {
    let mut c = Container::<T>::load(path)?;
    c.expect_kind(KIND_SVD)?;
    let sigma = c.take_block("sigma")?.into_vec();
    let u = c.take_block("u")?;
    let v = c.take_block("v")?;
    if u.cols() != sigma.len() || v.cols() != sigma.len() {
        return Err(Error::Format("singular vector blocks disagree with sigma".into()));
    }
    Ok(SvdDecomposition { u, sigma, v })
}
