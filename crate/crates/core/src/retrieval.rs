//! Document scoring (term matching, LSI, PLSI, PLSI*) and the
//! precision-recall evaluation harness.

use std::fmt::Write as _;

use log::warn;

use crate::corpus::{CountMatrix, RelevanceJudgments};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::lsa::SvdDecomposition;
use crate::model::{AspectModel, LatentRepresentation, PROB_FLOOR};
use crate::scalar::Scalar;
use crate::trainer::{fold_in, FoldInConfig};

/// Number of recall levels (10% ... 90%) precision is interpolated at.
pub const RECALL_LEVELS: usize = 9;

/// Sparse `(term, count)` vector sorted by term.
pub type TermVector = [(usize, u32)];

/// Cosine of two raw term-frequency vectors.
pub fn cosine_score<T: Scalar>(doc: &TermVector, query: &TermVector) -> Result<T> {
    let sq = |v: &TermVector| v.iter().map(|&(_, c)| u64::from(c) * u64::from(c)).sum::<u64>();
    let (nd, nq) = (sq(doc), sq(query));
    if nd == 0 || nq == 0 {
        return Err(Error::ZeroVector);
    }
    let (mut i, mut j, mut num) = (0, 0, 0u64);
    while i < doc.len() && j < query.len() {
        match doc[i].0.cmp(&query[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                num += u64::from(doc[i].1) * u64::from(query[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    Ok(T::of(num as f64) / (T::of(nd as f64).sqrt() * T::of(nq as f64).sqrt()))
}

/// Cosine of two dense vectors.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", a.len(), b.len())));
    }
    let dot = a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y);
    let na = a.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    let nb = b.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    if na == T::zero() || nb == T::zero() {
        return Err(Error::ZeroVector);
    }
    Ok(dot / (na * nb))
}

/// Similarity between two factor-space representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LatentSimilarity {
    #[default]
    Cosine,
    Dot,
    /// `exp(-(KL(p||q) + KL(q||p)) / 2)`, zero weights floored.
    SymmetrizedKl,
}

impl LatentSimilarity {
    pub fn score<T: Scalar>(self, a: &[T], b: &[T]) -> Result<T> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(format!("{} vs {} factors", a.len(), b.len())));
        }
        match self {
            LatentSimilarity::Cosine => cosine(a, b),
            LatentSimilarity::Dot => Ok(a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)),
            LatentSimilarity::SymmetrizedKl => {
                let floor = T::of(PROB_FLOOR);
                let kl = a.iter().zip(b).fold(T::zero(), |s, (&p, &q)| {
                    let (p, q) = (p.max(floor), q.max(floor));
                    s + (p - q) * (p.ln() - q.ln())
                });
                Ok((-kl / T::of(2.0)).exp())
            }
        }
    }
}

/// Cosine between two mixing-weight vectors.
pub fn latent_score<T: Scalar>(doc: &LatentRepresentation<T>, query: &LatentRepresentation<T>) -> Result<T> {
    LatentSimilarity::Cosine.score(doc.as_slice(), query.as_slice())
}

/// `lambda * cos + (1 - lambda) * latent`.
pub fn combined_score<T: Scalar>(lambda: T, cos: T, latent: T) -> T {
    if lambda == T::one() {
        return cos;
    }
    if lambda == T::zero() {
        return latent;
    }
    lambda * cos + (T::one() - lambda) * latent
}

/// Uniform average of per-model latent similarities, combined with the term
/// matching score. `pairs` holds one `(document, query)` representation
/// pair per model.
pub fn plsi_star_score<T: Scalar>(
    pairs: &[(&LatentRepresentation<T>, &LatentRepresentation<T>)],
    lambda: T,
    cos: T,
    similarity: LatentSimilarity,
) -> Result<T> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("PLSI* needs at least one model".into()));
    }
    let mut scores = pairs
        .iter()
        .map(|(d, q)| similarity.score(d.as_slice(), q.as_slice()))
        .collect::<Result<Vec<T>>>()?;
    // summing in sorted order makes the mean independent of model order
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let total = scores.into_iter().fold(T::zero(), |s, x| s + x);
    Ok(combined_score(lambda, cos, total / T::of_usize(pairs.len())))
}

/// Scores a `(document, query)` pair; both are row indices.
pub trait Scorer<T>: Sync {
    fn score(&self, doc: usize, query: usize) -> Result<T>;
}

/// Raw term-frequency cosine.
pub struct CosineScorer<'a> {
    docs: &'a CountMatrix,
    doc_vectors: Vec<Vec<(usize, u32)>>,
    queries: &'a [Vec<(usize, u32)>],
}

impl<'a> CosineScorer<'a> {
    pub fn new(docs: &'a CountMatrix, queries: &'a [Vec<(usize, u32)>]) -> Self {
        let doc_vectors = (0..docs.n_docs()).map(|d| docs.row_vector(d)).collect();
        Self {
            docs,
            doc_vectors,
            queries,
        }
    }

    pub fn n_docs(&self) -> usize {
        self.docs.n_docs()
    }
}

impl<T: Scalar> Scorer<T> for CosineScorer<'_> {
    fn score(&self, doc: usize, query: usize) -> Result<T> {
        cosine_score(&self.doc_vectors[doc], &self.queries[query])
    }
}

/// PLSI with one model, PLSI* with several: factor-space similarity
/// averaged uniformly over models and mixed with the cosine score.
pub struct PlsiScorer<'a, T> {
    cosine: CosineScorer<'a>,
    lambda: T,
    similarity: LatentSimilarity,
    /// `[model][doc]`, `None` for documents without mass.
    doc_reps: Vec<Vec<Option<LatentRepresentation<T>>>>,
    /// `[model][query]`, `None` for queries that cannot be folded in.
    query_reps: Vec<Vec<Option<LatentRepresentation<T>>>>,
}

impl<'a, T: Scalar> PlsiScorer<'a, T> {
    /// Document representations are `P(z|d)` of the trained models; queries
    /// are folded in with `fold`.
    pub fn new(
        models: &[AspectModel<T>],
        docs: &'a CountMatrix,
        queries: &'a [Vec<(usize, u32)>],
        lambda: T,
        similarity: LatentSimilarity,
        fold: &FoldInConfig<T>,
    ) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::InvalidArgument("PLSI needs at least one model".into()));
        }
        if !(lambda >= T::zero() && lambda <= T::one()) {
            return Err(Error::InvalidArgument(format!("lambda {lambda} outside [0, 1]")));
        }
        for m in models {
            if m.n_docs() != docs.n_docs() || m.n_terms() != docs.n_terms() {
                return Err(Error::DimensionMismatch(format!(
                    "model is {}x{}, collection is {}x{}",
                    m.n_docs(),
                    m.n_terms(),
                    docs.n_docs(),
                    docs.n_terms()
                )));
            }
        }
        let doc_reps = models
            .iter()
            .map(|m| (0..m.n_docs()).map(|d| m.doc_mixture(d).ok()).collect())
            .collect();
        let query_reps = models
            .iter()
            .map(|m| queries.iter().map(|q| fold_in(m, q, fold).ok()).collect())
            .collect();
        Ok(Self {
            cosine: CosineScorer::new(docs, queries),
            lambda,
            similarity,
            doc_reps,
            query_reps,
        })
    }

    /// Builds from precomputed representations, `[model][row]`.
    pub fn from_representations(
        docs: &'a CountMatrix,
        queries: &'a [Vec<(usize, u32)>],
        lambda: T,
        similarity: LatentSimilarity,
        doc_reps: Vec<Vec<Option<LatentRepresentation<T>>>>,
        query_reps: Vec<Vec<Option<LatentRepresentation<T>>>>,
    ) -> Self {
        Self {
            cosine: CosineScorer::new(docs, queries),
            lambda,
            similarity,
            doc_reps,
            query_reps,
        }
    }
}

impl<T: Scalar> Scorer<T> for PlsiScorer<'_, T> {
    fn score(&self, doc: usize, query: usize) -> Result<T> {
        let cos: T = if self.lambda > T::zero() {
            self.cosine.score(doc, query)?
        } else {
            T::zero()
        };
        if self.lambda == T::one() {
            return Ok(cos);
        }
        let mut pairs = Vec::with_capacity(self.doc_reps.len());
        for (docs, queries) in self.doc_reps.iter().zip(&self.query_reps) {
            let d = docs[doc].as_ref().ok_or(Error::ZeroMassDocument(doc))?;
            let q = queries[query].as_ref().ok_or(Error::UnmatchableQuery)?;
            pairs.push((d, q));
        }
        plsi_star_score(&pairs, self.lambda, cos, self.similarity)
    }
}

/// LSI: cosine in `U diag(sigma)` coordinates, mixed with term matching.
pub struct LsiScorer<'a, T> {
    cosine: CosineScorer<'a>,
    lambda: T,
    doc_coords: DenseMatrix<T>,
    query_coords: Vec<Option<Vec<T>>>,
}

impl<'a, T: Scalar> LsiScorer<'a, T> {
    pub fn new(
        decomp: &SvdDecomposition<T>,
        docs: &'a CountMatrix,
        queries: &'a [Vec<(usize, u32)>],
        lambda: T,
    ) -> Result<Self> {
        if decomp.u.rows() != docs.n_docs() || decomp.v.rows() != docs.n_terms() {
            return Err(Error::DimensionMismatch("decomposition does not match the collection".into()));
        }
        Ok(Self {
            cosine: CosineScorer::new(docs, queries),
            lambda,
            doc_coords: decomp.doc_coords(),
            query_coords: queries.iter().map(|q| decomp.fold_in(q).ok()).collect(),
        })
    }
}

impl<T: Scalar> Scorer<T> for LsiScorer<'_, T> {
    fn score(&self, doc: usize, query: usize) -> Result<T> {
        let cos: T = self.cosine.score(doc, query)?;
        if self.lambda == T::one() {
            return Ok(cos);
        }
        let q = self.query_coords[query].as_ref().ok_or(Error::UnmatchableQuery)?;
        // a latent vector of zero length carries no information
        let latent = cosine(self.doc_coords.row(doc), q).unwrap_or(T::zero());
        Ok(combined_score(self.lambda, cos, latent))
    }
}

/// Documents of one query by descending score, ties by ascending row.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList<T> {
    pub query_id: String,
    pub hits: Vec<(usize, T)>,
}

impl<T: Scalar> RankedList<T> {
    pub fn new(query_id: impl Into<String>, scores: Vec<T>) -> Self {
        let mut hits: Vec<(usize, T)> = scores.into_iter().enumerate().collect();
        hits.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        Self {
            query_id: query_id.into(),
            hits,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalRun<T> {
    pub lists: Vec<RankedList<T>>,
    pub judgments: RelevanceJudgments<usize>,
}

impl<T: Scalar> RetrievalRun<T> {
    /// `query_id doc_id rank score` lines, ranks starting at 1.
    pub fn to_run_file(&self, doc_ids: &[String]) -> String {
        let mut out = String::new();
        for list in &self.lists {
            for (rank, &(doc, score)) in list.hits.iter().enumerate() {
                writeln!(out, "{} {} {} {}", list.query_id, doc_ids[doc], rank + 1, score).unwrap();
            }
        }
        out
    }
}

/// Ranks all `n_docs` documents for query row `query`. A pair the scorer
/// cannot score gets `-inf`.
pub fn rank_query<T: Scalar, S: Scorer<T> + ?Sized>(scorer: &S, n_docs: usize, query: usize, id: &str) -> RankedList<T> {
    let mut failed = 0usize;
    let scores = (0..n_docs)
        .map(|d| {
            scorer.score(d, query).unwrap_or_else(|_| {
                failed += 1;
                T::neg_infinity()
            })
        })
        .collect();
    if failed > 0 {
        warn!("query {id}: {failed} documents could not be scored");
    }
    RankedList::new(id, scores)
}

/// [`rank_query`] for every query, `query_ids` giving the query rows in order.
pub fn rank_all<T: Scalar, S: Scorer<T> + ?Sized>(
    scorer: &S,
    n_docs: usize,
    query_ids: &[String],
    judgments: RelevanceJudgments<usize>,
) -> RetrievalRun<T> {
    let lists = query_ids
        .iter()
        .enumerate()
        .map(|(q, id)| rank_query(scorer, n_docs, q, id))
        .collect();
    RetrievalRun { lists, judgments }
}

/// Interpolated precision of one query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPrecision<T> {
    pub query_id: String,
    /// At recall 0.1, 0.2, ..., 0.9.
    pub precision: [T; RECALL_LEVELS],
    pub average: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrSummary<T> {
    pub per_query: Vec<QueryPrecision<T>>,
    /// Mean over queries at every recall level.
    pub curve: [T; RECALL_LEVELS],
    /// Mean over the nine levels, then over queries.
    pub average_precision: T,
    /// Queries left out because they have no relevant document.
    pub excluded: Vec<String>,
}

/// Interpolated precision at each recall level for a ranking, given which
/// ranks hold relevant documents and how many relevant documents exist.
fn interpolate<T: Scalar>(hits: &[(usize, T)], relevant: &std::collections::BTreeSet<usize>) -> [T; RECALL_LEVELS] {
    let total = relevant.len();
    // (relevant found so far, rank) at every relevant position
    let points: Vec<(usize, usize)> = hits
        .iter()
        .enumerate()
        .filter(|(_, (d, _))| relevant.contains(d))
        .enumerate()
        .map(|(found, (rank, _))| (found + 1, rank + 1))
        .collect();
    let mut out = [T::zero(); RECALL_LEVELS];
    for (i, level) in out.iter_mut().enumerate() {
        let tenths = i + 1;
        *level = points
            .iter()
            .filter(|&&(found, _)| found * 10 >= tenths * total)
            .map(|&(found, rank)| T::of_usize(found) / T::of_usize(rank))
            .fold(T::zero(), T::max);
    }
    out
}

pub fn precision_recall<T: Scalar>(run: &RetrievalRun<T>) -> PrSummary<T> {
    let mut per_query = Vec::new();
    let mut excluded = Vec::new();
    for list in &run.lists {
        match run.judgments.relevant(&list.query_id).filter(|r| !r.is_empty()) {
            None => {
                warn!("query {} has no relevant documents; excluded", list.query_id);
                excluded.push(list.query_id.clone());
            }
            Some(relevant) => {
                let precision = interpolate(&list.hits, relevant);
                let average = precision.iter().copied().sum::<T>() / T::of_usize(RECALL_LEVELS);
                per_query.push(QueryPrecision {
                    query_id: list.query_id.clone(),
                    precision,
                    average,
                });
            }
        }
    }
    let mut curve = [T::zero(); RECALL_LEVELS];
    let mut average_precision = T::zero();
    if !per_query.is_empty() {
        let n = T::of_usize(per_query.len());
        for (i, c) in curve.iter_mut().enumerate() {
            *c = per_query.iter().map(|q| q.precision[i]).sum::<T>() / n;
        }
        average_precision = per_query.iter().map(|q| q.average).sum::<T>() / n;
    }
    PrSummary {
        per_query,
        curve,
        average_precision,
        excluded,
    }
}

impl<T: Scalar> PrSummary<T> {
    /// Recall levels against mean interpolated precision, then the average.
    pub fn to_table(&self) -> String {
        let mut out = String::from("recall\tprecision\n");
        for (i, p) in self.curve.iter().enumerate() {
            writeln!(out, "0.{}\t{p}", i + 1).unwrap();
        }
        writeln!(out, "average\t{}", self.average_precision).unwrap();
        writeln!(out, "queries\t{}", self.per_query.len()).unwrap();
        out
    }

    /// Two columns, `recall precision`, one line per level.
    pub fn plot_data(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.curve.iter().enumerate() {
            writeln!(out, "0.{} {p}", i + 1).unwrap();
        }
        out
    }
}
