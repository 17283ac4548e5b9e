//! The aspect model `P(d, w) = sum_z P(z) P(d|z) P(w|z)` and every quantity
//! that can be read off a fixed parameter set.
//!
//! Parameters are stored in the symmetric form only. `P(d)`, `P(z|d)` and
//! `P(w|d)` are derived on demand by Bayes' rule. The two conditional tables
//! are kept entity-major (`N x K` and `M x K`), i.e. the matrices whose
//! product with `diag(P(z))` gives the joint table.

use rand::Rng;

use crate::corpus::CountMatrix;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};
use crate::scalar::{sum, xlogx, Scalar};

/// Probabilities below this are clamped inside logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// Default cap on the number of cells [`AspectModel::joint_matrix`] will materialize.
pub const DEFAULT_MAX_DENSE_CELLS: usize = 10_000_000;

/// Largest deviation from 1 accepted for a distribution's total mass.
pub fn normalization_tolerance<T: Scalar>() -> T {
    T::of(1e-10).max(T::epsilon() * T::of(1024.0))
}

/// Posterior over factors for one `(d, w)` observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorRow<T>(pub Vec<T>);

/// Mixing weights `P(z|x)` of a document or folded-in query.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentRepresentation<T>(pub Vec<T>);

impl<T: Scalar> PosteriorRow<T> {
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn entropy(&self) -> T {
        -self.0.iter().map(|&p| xlogx(p)).fold(T::zero(), |a, b| a + b)
    }
}

impl<T: Scalar> LatentRepresentation<T> {
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }
}

/// Which probability a perplexity is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// `P(w|d)`: a document-specific unigram model.
    WordGivenDoc,
    /// `P(d, w)`.
    Joint,
}

/// Tempered posteriors for every nonzero cell of a count table, stored
/// row-major in entry order.
#[derive(Debug, Clone, PartialEq)]
pub struct Posteriors<T> {
    k: usize,
    values: Vec<T>,
}

impl<T: Scalar> Posteriors<T> {
    pub fn new(k: usize, values: Vec<T>) -> Self {
        assert!(k > 0 && values.len().is_multiple_of(k));
        Self { k, values }
    }

    pub fn cell(&self, i: usize) -> &[T] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn cell_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AspectModel<T> {
    k: usize,
    n_docs: usize,
    n_terms: usize,
    prior: Vec<T>,
    /// `[d * k + z] = P(d|z)`
    doc_given_z: Vec<T>,
    /// `[w * k + z] = P(w|z)`
    word_given_z: Vec<T>,
}

fn check_columns<T: Scalar>(what: &str, table: &[T], rows: usize, k: usize) -> Result<()> {
    let tol = normalization_tolerance::<T>();
    if table.iter().any(|&x| !(x >= T::zero()) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what} has a negative or non-finite entry")));
    }
    for z in 0..k {
        let s: T = (0..rows).fold(T::zero(), |s, r| s + table[r * k + z]);
        if (s - T::one()).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "{what} column {z} sums to {s}, not 1"
            )));
        }
    }
    Ok(())
}

/// Normalizes each of the `k` interleaved columns of `table` in place.
/// Returns the factors whose column had no mass; those are set to uniform.
pub(crate) fn normalize_columns<T: Scalar>(table: &mut [T], rows: usize, k: usize) -> Vec<usize> {
    let mut sums = vec![T::zero(); k];
    for r in 0..rows {
        for (s, &x) in sums.iter_mut().zip(&table[r * k..(r + 1) * k]) {
            *s += x;
        }
    }
    let uniform = T::one() / T::of_usize(rows);
    let mut degenerate = Vec::new();
    for (z, &s) in sums.iter().enumerate() {
        if s > T::zero() {
            for r in 0..rows {
                table[r * k + z] /= s;
            }
        } else {
            degenerate.push(z);
            for r in 0..rows {
                table[r * k + z] = uniform;
            }
        }
    }
    degenerate
}

impl<T: Scalar> AspectModel<T> {
    /// Assembles a model from `P(z)` (length `K`), `P(d|z)` as an `N x K`
    /// matrix and `P(w|z)` as an `M x K` matrix. Every distribution is checked.
    pub fn new(
        prior: Vec<T>,
        doc_given_z: DenseMatrix<T>,
        word_given_z: DenseMatrix<T>,
    ) -> Result<Self> {
        let k = prior.len();
        if k == 0 || doc_given_z.cols() != k || word_given_z.cols() != k {
            return Err(Error::DimensionMismatch(format!(
                "prior has {k} factors, conditionals have {} and {}",
                doc_given_z.cols(),
                word_given_z.cols()
            )));
        }
        if doc_given_z.rows() == 0 || word_given_z.rows() == 0 {
            return Err(Error::InvalidArgument("model needs at least one document and one term".into()));
        }
        check_columns("prior", &prior, k, 1)?;
        check_columns("P(d|z)", doc_given_z.as_slice(), doc_given_z.rows(), k)?;
        check_columns("P(w|z)", word_given_z.as_slice(), word_given_z.rows(), k)?;
        Ok(Self {
            k,
            n_docs: doc_given_z.rows(),
            n_terms: word_given_z.rows(),
            prior,
            doc_given_z: doc_given_z.into_vec(),
            word_given_z: word_given_z.into_vec(),
        })
    }

    /// Skips validation; callers normalize the tables themselves.
    pub(crate) fn from_raw(
        k: usize,
        n_docs: usize,
        n_terms: usize,
        prior: Vec<T>,
        doc_given_z: Vec<T>,
        word_given_z: Vec<T>,
    ) -> Self {
        debug_assert_eq!(prior.len(), k);
        debug_assert_eq!(doc_given_z.len(), n_docs * k);
        debug_assert_eq!(word_given_z.len(), n_terms * k);
        Self {
            k,
            n_docs,
            n_terms,
            prior,
            doc_given_z,
            word_given_z,
        }
    }

    /// Random starting point: every entry is `1 + u`, `u ~ U[0, 1)`, before
    /// normalization, so no parameter is zero and no two factors coincide.
    pub fn init(k: usize, n_docs: usize, n_terms: usize, seed: u64) -> Result<Self> {
        if k < 1 || n_docs < 1 || n_terms < 1 {
            return Err(Error::InvalidArgument(format!(
                "need K, N, M >= 1 (got {k}, {n_docs}, {n_terms})"
            )));
        }
        let mut rng = stream(seed, Stream::Init);
        let mut draw = |len: usize| -> Vec<T> {
            (0..len).map(|_| T::of(1.0 + rng.random::<f64>())).collect()
        };
        let mut prior = draw(k);
        let mut doc_given_z = draw(n_docs * k);
        let mut word_given_z = draw(n_terms * k);
        normalize_columns(&mut prior, k, 1);
        normalize_columns(&mut doc_given_z, n_docs, k);
        normalize_columns(&mut word_given_z, n_terms, k);
        Ok(Self::from_raw(k, n_docs, n_terms, prior, doc_given_z, word_given_z))
    }

    /// Single-factor model with `P(d)` and `P(w)` proportional to the
    /// marginal counts: the marginal independence baseline.
    pub fn unigram_baseline(counts: &CountMatrix) -> Result<Self> {
        if counts.total() == 0 {
            return Err(Error::EmptyCorpus);
        }
        let total = T::of(counts.total() as f64);
        let docs = counts.row_sums().iter().map(|&c| T::of(c as f64) / total).collect();
        let words = counts.col_sums().iter().map(|&c| T::of(c as f64) / total).collect();
        Ok(Self::from_raw(
            1,
            counts.n_docs(),
            counts.n_terms(),
            vec![T::one()],
            docs,
            words,
        ))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn prior(&self) -> &[T] {
        &self.prior
    }

    /// `P(d|z)` for all factors.
    pub fn doc_row(&self, d: usize) -> &[T] {
        &self.doc_given_z[d * self.k..(d + 1) * self.k]
    }

    /// `P(w|z)` for all factors.
    pub fn word_row(&self, w: usize) -> &[T] {
        &self.word_given_z[w * self.k..(w + 1) * self.k]
    }

    pub fn doc_given_z(&self, d: usize, z: usize) -> T {
        self.doc_given_z[d * self.k + z]
    }

    pub fn word_given_z(&self, w: usize, z: usize) -> T {
        self.word_given_z[w * self.k + z]
    }

    /// `P(d|z)` as an `N x K` matrix.
    pub fn doc_matrix(&self) -> DenseMatrix<T> {
        DenseMatrix::from_vec(self.n_docs, self.k, self.doc_given_z.clone())
    }

    /// `P(w|z)` as an `M x K` matrix.
    pub fn word_matrix(&self) -> DenseMatrix<T> {
        DenseMatrix::from_vec(self.n_terms, self.k, self.word_given_z.clone())
    }

    pub(crate) fn word_table(&self) -> &[T] {
        &self.word_given_z
    }

    /// Checks every normalization invariant.
    pub fn validate(&self) -> Result<()> {
        check_columns("prior", &self.prior, self.k, 1)?;
        check_columns("P(d|z)", &self.doc_given_z, self.n_docs, self.k)?;
        check_columns("P(w|z)", &self.word_given_z, self.n_terms, self.k)
    }

    /// Largest absolute difference between any two corresponding parameters.
    pub fn max_param_diff(&self, other: &Self) -> T {
        assert_eq!((self.k, self.n_docs, self.n_terms), (other.k, other.n_docs, other.n_terms));
        let diff = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()));
        diff(&self.prior, &other.prior)
            .max(diff(&self.doc_given_z, &other.doc_given_z))
            .max(diff(&self.word_given_z, &other.word_given_z))
    }

    pub fn check_counts(&self, counts: &CountMatrix) -> Result<()> {
        if (counts.n_docs(), counts.n_terms()) != (self.n_docs, self.n_terms) {
            return Err(Error::DimensionMismatch(format!(
                "model is {}x{}, counts are {}x{}",
                self.n_docs,
                self.n_terms,
                counts.n_docs(),
                counts.n_terms()
            )));
        }
        Ok(())
    }

    fn check_cell(&self, d: usize, w: usize) -> Result<()> {
        if d >= self.n_docs || w >= self.n_terms {
            return Err(Error::InvalidArgument(format!(
                "cell ({d}, {w}) outside {}x{}",
                self.n_docs, self.n_terms
            )));
        }
        Ok(())
    }

    /// `P(d) = sum_z P(z) P(d|z)`.
    pub fn doc_prob(&self, d: usize) -> T {
        self.doc_row(d)
            .iter()
            .zip(&self.prior)
            .fold(T::zero(), |s, (&pd, &pz)| s + pz * pd)
    }

    /// `P(d, w)` from the symmetric parameterization.
    pub fn joint_prob(&self, d: usize, w: usize) -> T {
        let (dr, wr) = (self.doc_row(d), self.word_row(w));
        (0..self.k).fold(T::zero(), |s, z| s + self.prior[z] * dr[z] * wr[z])
    }

    /// Writes `P(z) P(d|z) P(w|z)` for every factor into `out`.
    pub(crate) fn joint_terms(&self, d: usize, w: usize, out: &mut [T]) {
        let (dr, wr) = (self.doc_row(d), self.word_row(w));
        for z in 0..self.k {
            out[z] = self.prior[z] * dr[z] * wr[z];
        }
    }

    /// Tempered posterior written into `out`; returns `ln sum_z [P(z)P(d|z)P(w|z)]^beta`.
    ///
    /// Factors whose joint term is exactly zero get zero weight for every
    /// `beta`, including `beta = 0`.
    pub(crate) fn posterior_into(&self, d: usize, w: usize, beta: T, out: &mut [T]) -> Result<T> {
        let k = self.k;
        self.joint_terms(d, w, out);
        if beta == T::one() {
            let s = sum(out);
            // below this a product that underflowed could shift the result by more than an ulp
            if s > T::min_positive_value() / T::epsilon() {
                for p in out.iter_mut() {
                    *p /= s;
                }
                return Ok(s.ln());
            }
        }
        let (dr, wr) = (self.doc_row(d), self.word_row(w));
        let mut max = T::neg_infinity();
        for z in 0..k {
            let positive = self.prior[z] > T::zero() && dr[z] > T::zero() && wr[z] > T::zero();
            out[z] = if positive {
                beta * (self.prior[z].ln() + dr[z].ln() + wr[z].ln())
            } else {
                T::neg_infinity()
            };
            max = max.max(out[z]);
        }
        if max == T::neg_infinity() {
            return Err(Error::UnreachableObservation { doc: d, term: w });
        }
        for p in out.iter_mut() {
            *p = if *p == T::neg_infinity() {
                T::zero()
            } else {
                (*p - max).exp()
            };
        }
        let s = sum(out);
        for p in out.iter_mut() {
            *p /= s;
        }
        Ok(max + s.ln())
    }

    /// `P~(z; d, w) ∝ [P(z) P(d|z) P(w|z)]^beta`; the ordinary posterior at `beta = 1`.
    pub fn posterior(&self, d: usize, w: usize, beta: T) -> Result<PosteriorRow<T>> {
        self.check_cell(d, w)?;
        if !(beta >= T::zero()) {
            return Err(Error::InvalidArgument(format!("beta {beta} must be >= 0")));
        }
        let mut out = vec![T::zero(); self.k];
        self.posterior_into(d, w, beta, &mut out)?;
        Ok(PosteriorRow(out))
    }

    /// Tempered posteriors for every nonzero cell of `counts`.
    pub fn posteriors(&self, counts: &CountMatrix, beta: T) -> Result<Posteriors<T>> {
        self.check_counts(counts)?;
        let mut post = Posteriors::new(self.k, vec![T::zero(); counts.nnz() * self.k]);
        for (i, e) in counts.entries().iter().enumerate() {
            self.posterior_into(e.doc, e.term, beta, post.cell_mut(i))?;
        }
        Ok(post)
    }

    /// `P(z|d)` by Bayes' rule.
    pub fn doc_mixture(&self, d: usize) -> Result<LatentRepresentation<T>> {
        if d >= self.n_docs {
            return Err(Error::InvalidArgument(format!("document {d} out of range")));
        }
        let pd = self.doc_prob(d);
        if !(pd > T::zero()) {
            return Err(Error::ZeroMassDocument(d));
        }
        let dr = self.doc_row(d);
        Ok(LatentRepresentation(
            (0..self.k).map(|z| self.prior[z] * dr[z] / pd).collect(),
        ))
    }

    /// `P(w|d) = sum_z P(w|z) P(z|d)` for every term.
    pub fn word_given_doc(&self, d: usize) -> Result<Vec<T>> {
        let mix = self.doc_mixture(d)?;
        Ok((0..self.n_terms)
            .map(|w| {
                self.word_row(w)
                    .iter()
                    .zip(mix.as_slice())
                    .fold(T::zero(), |s, (&pw, &pz)| s + pw * pz)
            })
            .collect())
    }

    /// The full `N x M` joint table `P(d|z) diag(P(z)) P(w|z)^t`.
    pub fn joint_matrix(&self, max_cells: usize) -> Result<DenseMatrix<T>> {
        let cells = self.n_docs.saturating_mul(self.n_terms);
        if cells > max_cells {
            return Err(Error::TooLarge {
                cells,
                limit: max_cells,
            });
        }
        let mut out = DenseMatrix::zeros(self.n_docs, self.n_terms);
        for d in 0..self.n_docs {
            for w in 0..self.n_terms {
                out[(d, w)] = self.joint_prob(d, w);
            }
        }
        Ok(out)
    }

    /// `sum n(d,w) ln P(d,w)` in nats, with probabilities floored at [`PROB_FLOOR`].
    pub fn log_likelihood(&self, counts: &CountMatrix) -> Result<T> {
        self.check_counts(counts)?;
        let floor = T::of(PROB_FLOOR);
        Ok(counts.entries().iter().fold(T::zero(), |acc, e| {
            acc + T::of(f64::from(e.count)) * self.joint_prob(e.doc, e.term).max(floor).ln()
        }))
    }

    /// `sum n(d,w) ln P(w|d)` in nats, floored like [`Self::log_likelihood`].
    pub fn conditional_log_likelihood(&self, counts: &CountMatrix) -> Result<T> {
        self.check_counts(counts)?;
        let floor = T::of(PROB_FLOOR);
        let mut acc = T::zero();
        for d in 0..counts.n_docs() {
            let row = counts.row(d);
            if row.is_empty() {
                continue;
            }
            let pd = self.doc_prob(d);
            for e in row {
                let q = if pd > T::zero() {
                    self.joint_prob(d, e.term) / pd
                } else {
                    T::zero()
                };
                acc += T::of(f64::from(e.count)) * q.max(floor).ln();
            }
        }
        Ok(acc)
    }

    /// `exp(-sum n ln Q / sum n)` with `Q` chosen by `conditioning`.
    pub fn perplexity(&self, counts: &CountMatrix, conditioning: Conditioning) -> Result<T> {
        if counts.total() == 0 {
            return Err(Error::EmptyCorpus);
        }
        let ll = match conditioning {
            Conditioning::WordGivenDoc => self.conditional_log_likelihood(counts)?,
            Conditioning::Joint => self.log_likelihood(counts)?,
        };
        Ok((-ll / T::of(counts.total() as f64)).exp())
    }

    /// Free energy of the variational posteriors `post` (aligned with the
    /// entries of `counts`) at inverse temperature `beta`.
    pub fn free_energy(&self, counts: &CountMatrix, post: &Posteriors<T>, beta: T) -> Result<T> {
        self.check_counts(counts)?;
        if post.len() != counts.nnz() || post.k != self.k {
            return Err(Error::DimensionMismatch(format!(
                "{} posterior rows of width {} for {} cells and {} factors",
                post.len(),
                post.k,
                counts.nnz(),
                self.k
            )));
        }
        if !(beta > T::zero()) {
            return Err(Error::InvalidArgument(format!("beta {beta} must be > 0")));
        }
        let mut energy = T::zero();
        let mut entropy = T::zero();
        for (i, e) in counts.entries().iter().enumerate() {
            let n = T::of(f64::from(e.count));
            let (dr, wr) = (self.doc_row(e.doc), self.word_row(e.term));
            let mut cell_energy = T::zero();
            let mut cell_entropy = T::zero();
            for (z, &p) in post.cell(i).iter().enumerate() {
                if p == T::zero() {
                    continue;
                }
                if !(self.prior[z] > T::zero() && dr[z] > T::zero() && wr[z] > T::zero()) {
                    return Err(Error::UndefinedFreeEnergy);
                }
                cell_energy += p * (self.prior[z].ln() + dr[z].ln() + wr[z].ln());
                cell_entropy += xlogx(p);
            }
            energy += n * cell_energy;
            entropy += n * cell_entropy;
        }
        Ok(-beta * energy + entropy)
    }

    /// Free energy at its minimum over posteriors,
    /// `-sum n ln sum_z [P(z)P(d|z)P(w|z)]^beta`.
    pub fn tempered_free_energy(&self, counts: &CountMatrix, beta: T) -> Result<T> {
        self.check_counts(counts)?;
        let mut scratch = vec![T::zero(); self.k];
        let mut f = T::zero();
        for e in counts.entries() {
            let log_norm = self.posterior_into(e.doc, e.term, beta, &mut scratch)?;
            f -= T::of(f64::from(e.count)) * log_norm;
        }
        Ok(f)
    }

    /// The `count` most probable terms of factor `z`, ties broken by term id.
    pub fn top_words(&self, z: usize, count: usize) -> Vec<(usize, T)> {
        assert!(z < self.k, "factor {z} out of range");
        let mut words: Vec<(usize, T)> = (0..self.n_terms).map(|w| (w, self.word_given_z(w, z))).collect();
        words.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        words.truncate(count);
        words
    }
}
