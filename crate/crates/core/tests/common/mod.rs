//! Shared fixtures and brute-force reference computations for the
//! integration tests. The oracles work on dense copies of the parameters
//! with plain loops over every `(d, w, z)`.

#![allow(dead_code)]

use plsa::corpus::{CountMatrix, Entry};
use plsa::dense::DenseMatrix;
use plsa::model::AspectModel;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random sparse counts with `1..=max_n` docs, `1..=max_m` terms and at
/// most `max_nnz` nonzero cells, each holding 1 to 5.
pub fn random_counts(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize, max_nnz: usize) -> CountMatrix {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_m);
    let cells = rng.random_range(1..=max_nnz.min(n * m));
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..cells {
        seen.insert((rng.random_range(0..n), rng.random_range(0..m)));
    }
    let entries = seen
        .into_iter()
        .map(|(doc, term)| Entry {
            doc,
            term,
            count: rng.random_range(1..=5),
        })
        .collect();
    CountMatrix::new(n, m, entries).unwrap()
}

fn simplex_columns(rng: &mut ChaCha8Rng, rows: usize, k: usize) -> DenseMatrix<f64> {
    let mut m = DenseMatrix::zeros(rows, k);
    for z in 0..k {
        let draws: Vec<f64> = (0..rows).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = draws.iter().sum();
        for (r, x) in draws.into_iter().enumerate() {
            m[(r, z)] = x / total;
        }
    }
    m
}

/// Random strictly positive model.
pub fn random_model(rng: &mut ChaCha8Rng, k: usize, n: usize, m: usize) -> AspectModel<f64> {
    let prior = simplex_columns(rng, k, 1).into_vec();
    AspectModel::new(prior, simplex_columns(rng, n, k), simplex_columns(rng, m, k)).unwrap()
}

pub struct Dense {
    pub prior: Vec<f64>,
    pub docs: DenseMatrix<f64>,
    pub words: DenseMatrix<f64>,
}

impl Dense {
    pub fn of(model: &AspectModel<f64>) -> Self {
        Self {
            prior: model.prior().to_vec(),
            docs: model.doc_matrix(),
            words: model.word_matrix(),
        }
    }

    pub fn joint(&self, d: usize, w: usize) -> f64 {
        let mut p = 0.0;
        for z in 0..self.prior.len() {
            p += self.prior[z] * self.docs[(d, z)] * self.words[(w, z)];
        }
        p
    }

    /// Posterior at `beta` computed straight from the definition.
    pub fn posterior(&self, d: usize, w: usize, beta: f64) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.prior.len())
            .map(|z| (self.prior[z] * self.docs[(d, z)] * self.words[(w, z)]).powf(beta))
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    }

    pub fn log_likelihood(&self, counts: &CountMatrix) -> f64 {
        let mut ll = 0.0;
        for d in 0..counts.n_docs() {
            for w in 0..counts.n_terms() {
                let n = counts.get(d, w);
                if n > 0 {
                    ll += f64::from(n) * self.joint(d, w).ln();
                }
            }
        }
        ll
    }

    /// `-beta sum n sum_z q log(P(z)P(d|z)P(w|z)) + sum n sum_z q log q`
    /// with `q` taken from `posterior(d, w)`.
    pub fn free_energy(&self, counts: &CountMatrix, beta: f64, posterior: impl Fn(usize, usize) -> Vec<f64>) -> f64 {
        let mut f = 0.0;
        for d in 0..counts.n_docs() {
            for w in 0..counts.n_terms() {
                let n = counts.get(d, w);
                if n == 0 {
                    continue;
                }
                let q = posterior(d, w);
                for z in 0..self.prior.len() {
                    if q[z] > 0.0 {
                        let log_joint = (self.prior[z] * self.docs[(d, z)] * self.words[(w, z)]).ln();
                        f += f64::from(n) * (-beta * q[z] * log_joint + q[z] * q[z].ln());
                    }
                }
            }
        }
        f
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}
