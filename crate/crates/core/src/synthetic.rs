//! Corpora sampled from a known aspect model, with the generating
//! parameters kept alongside so that fitted models can be compared to them.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::corpus::{CountMatrix, Entry, RelevanceJudgments};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::model::{AspectModel, PROB_FLOOR};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_docs: usize,
    pub n_terms: usize,
    pub n_factors: usize,
    pub tokens_per_doc: usize,
    /// Symmetric Dirichlet concentration of the per-document mixtures.
    pub doc_concentration: f64,
    /// Symmetric Dirichlet concentration of the factor word distributions.
    pub word_concentration: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_docs: 200,
            n_terms: 50,
            n_factors: 4,
            tokens_per_doc: 100,
            doc_concentration: 0.3,
            word_concentration: 0.2,
            seed: 0,
        }
    }
}

/// A sampled corpus and the parameters that generated it.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub counts: CountMatrix,
    /// `N x K` mixing weights `P(z|d)`.
    pub mixtures: DenseMatrix<f64>,
    /// `M x K` factor word distributions `P(w|z)`.
    pub factors: DenseMatrix<f64>,
}

fn dirichlet<R: Rng>(rng: &mut R, len: usize, concentration: f64) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
    loop {
        let draw: Vec<f64> = (0..len).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draw.iter().sum();
        if total > 0.0 {
            return draw.into_iter().map(|x| x / total).collect();
        }
    }
}

/// Index drawn from the discrete distribution `probs`.
fn categorical<R: Rng>(rng: &mut R, probs: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.enumerate() {
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

impl SyntheticCorpus {
    pub fn generate(config: &GeneratorConfig) -> Result<Self> {
        let GeneratorConfig {
            n_docs,
            n_terms,
            n_factors: k,
            tokens_per_doc,
            ..
        } = *config;
        if n_docs == 0 || n_terms == 0 || k == 0 || tokens_per_doc == 0 {
            return Err(Error::InvalidArgument("generator sizes must be positive".into()));
        }
        let mut rng = stream(config.seed, Stream::Synthetic);
        let mut factors = DenseMatrix::zeros(n_terms, k);
        for z in 0..k {
            for (w, p) in dirichlet(&mut rng, n_terms, config.word_concentration).into_iter().enumerate() {
                factors[(w, z)] = p;
            }
        }
        let mut mixtures = DenseMatrix::zeros(n_docs, k);
        let mut entries = Vec::new();
        for d in 0..n_docs {
            let theta = dirichlet(&mut rng, k, config.doc_concentration);
            mixtures.row_mut(d).copy_from_slice(&theta);
            let mut row = vec![0u32; n_terms];
            for _ in 0..tokens_per_doc {
                let z = categorical(&mut rng, theta.iter().copied());
                let w = categorical(&mut rng, (0..n_terms).map(|w| factors[(w, z)]));
                row[w] += 1;
            }
            entries.extend(
                row.iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(term, &count)| Entry { doc: d, term, count }),
            );
        }
        Ok(Self {
            counts: CountMatrix::new(n_docs, n_terms, entries)?,
            mixtures,
            factors,
        })
    }

    /// The generating parameters as an aspect model, with `P(d)`
    /// proportional to document length.
    pub fn true_model(&self) -> Result<AspectModel<f64>> {
        let (n, k) = (self.mixtures.rows(), self.mixtures.cols());
        let lengths = self.counts.row_sums();
        let total: f64 = lengths.iter().map(|&l| l as f64).sum();
        let mut joint = DenseMatrix::zeros(n, k);
        for d in 0..n {
            for z in 0..k {
                joint[(d, z)] = lengths[d] as f64 / total * self.mixtures[(d, z)];
            }
        }
        let prior: Vec<f64> = (0..k).map(|z| joint.column(z).iter().sum()).collect();
        let mut doc_given_z = DenseMatrix::zeros(n, k);
        for d in 0..n {
            for z in 0..k {
                doc_given_z[(d, z)] = if prior[z] > 0.0 { joint[(d, z)] / prior[z] } else { 1.0 / n as f64 };
            }
        }
        AspectModel::new(prior, doc_given_z, self.factors.clone())
    }

    /// Perplexity `model` would reach, in expectation, on unseen tokens drawn
    /// from the generator: the cross entropy between the true `P(w|d)` and
    /// the model's, each document weighted by its observed length.
    pub fn expected_perplexity(&self, model: &AspectModel<f64>) -> Result<f64> {
        let (n, m, k) = (self.mixtures.rows(), self.factors.rows(), self.mixtures.cols());
        if model.n_docs() != n || model.n_terms() != m {
            return Err(Error::DimensionMismatch(format!(
                "model is {}x{}, generator is {n}x{m}",
                model.n_docs(),
                model.n_terms()
            )));
        }
        let lengths = self.counts.row_sums();
        let (mut cross, mut tokens) = (0.0, 0.0);
        for d in 0..n {
            let predicted = model.word_given_doc(d)?;
            let weight = lengths[d] as f64;
            for (w, &q) in predicted.iter().enumerate() {
                let p: f64 = (0..k).map(|z| self.mixtures[(d, z)] * self.factors[(w, z)]).sum();
                if p > 0.0 {
                    cross -= weight * p * q.max(PROB_FLOOR).ln();
                }
            }
            tokens += weight;
        }
        Ok((cross / tokens).exp())
    }

    /// Index of the largest mixing weight of document `d`.
    pub fn dominant_factor(&self, d: usize) -> usize {
        argmax(self.mixtures.row(d))
    }

    /// Builds retrieval queries: `per_factor` short documents drawn from
    /// each single factor, each judged relevant to every collection
    /// document whose dominant factor matches. Query ids are `q<factor>_<i>`.
    pub fn topical_queries(
        &self,
        per_factor: usize,
        tokens_per_query: usize,
        seed: u64,
    ) -> (Vec<(String, Vec<(usize, u32)>)>, RelevanceJudgments<usize>) {
        let (m, k) = (self.factors.rows(), self.factors.cols());
        let mut rng = stream(seed, Stream::Evaluation);
        let mut queries = Vec::new();
        let mut judgments = RelevanceJudgments::new();
        for z in 0..k {
            for i in 0..per_factor {
                let id = format!("q{z}_{i}");
                let mut row = vec![0u32; m];
                for _ in 0..tokens_per_query {
                    row[categorical(&mut rng, (0..m).map(|w| self.factors[(w, z)]))] += 1;
                }
                let sparse = row
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(w, &c)| (w, c))
                    .collect();
                for d in 0..self.mixtures.rows() {
                    if self.dominant_factor(d) == z {
                        judgments.insert(id.clone(), d);
                    }
                }
                queries.push((id, sparse));
            }
        }
        (queries, judgments)
    }
}

fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}
