//! Fitting aspect models: EM with early stopping, tempered EM, and fold-in
//! of unseen queries with the factors held fixed.

use std::fmt::{self, Write as _};

use log::{debug, warn};

use crate::corpus::{split_heldout, CountMatrix, SplitPair};
use crate::error::{Error, Result};
use crate::model::{normalize_columns, AspectModel, Conditioning, LatentRepresentation};
use crate::scalar::{sum, Scalar};

/// Schedule parameters for [`fit_em`] and [`fit_tem`].
#[derive(Debug, Clone, PartialEq)]
pub struct TemConfig<T> {
    /// Multiplicative decay applied to `beta` between runs.
    pub eta: T,
    /// Tempering stops once `beta` would fall below this.
    pub beta_min: T,
    pub max_iters_per_beta: usize,
    /// Relative held-out perplexity gain that still counts as an improvement.
    pub improvement_tol: T,
    pub max_total_iters: usize,
    pub seed: u64,
    /// Share of training tokens set aside to drive early stopping.
    pub heldout_fraction: f64,
}

impl<T: Scalar> Default for TemConfig<T> {
    fn default() -> Self {
        Self {
            eta: T::of(0.9),
            beta_min: T::of(0.5),
            max_iters_per_beta: 100,
            improvement_tol: T::of(1e-4),
            max_total_iters: 1000,
            seed: 0,
            heldout_fraction: 0.1,
        }
    }
}

impl<T: Scalar> TemConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.eta > T::zero() && self.eta < T::one()) {
            return bad(format!("eta {} outside (0, 1)", self.eta));
        }
        if !(self.beta_min > T::zero() && self.beta_min <= T::one()) {
            return bad(format!("beta_min {} outside (0, 1]", self.beta_min));
        }
        if !(self.improvement_tol > T::zero()) {
            return bad(format!("improvement_tol {} must be > 0", self.improvement_tol));
        }
        if self.max_iters_per_beta == 0 || self.max_total_iters == 0 {
            return bad("iteration limits must be >= 1".into());
        }
        if !(self.heldout_fraction > 0.0 && self.heldout_fraction < 1.0) {
            return bad(format!("heldout_fraction {} outside (0, 1)", self.heldout_fraction));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoppingReason {
    HeldoutDeterioration,
    BetaFloor,
    IterationCap,
}

impl fmt::Display for StoppingReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StoppingReason::HeldoutDeterioration => "heldout-deterioration",
            StoppingReason::BetaFloor => "beta-floor",
            StoppingReason::IterationCap => "iteration-cap",
        })
    }
}

/// State after one E+M sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T> {
    pub iteration: usize,
    pub beta: T,
    pub train_perplexity: T,
    pub heldout_perplexity: T,
    /// Free energy of the new parameters at `beta`, minimized over posteriors.
    pub free_energy: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace<T> {
    pub records: Vec<TraceRecord<T>>,
    pub stopping_reason: StoppingReason,
    /// Iteration whose parameters were returned.
    pub best_iteration: usize,
}

impl<T: Scalar> TrainTrace<T> {
    pub fn best(&self) -> &TraceRecord<T> {
        self.records
            .iter()
            .find(|r| r.iteration == self.best_iteration)
            .expect("best iteration is recorded")
    }

    /// Tab separated table, one iteration per line, ready for plotting.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# stopping_reason={} best_iteration={}", self.stopping_reason, self.best_iteration).unwrap();
        writeln!(out, "iter\tbeta\ttrain_ppx\theldout_ppx\tfree_energy").unwrap();
        for r in &self.records {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.iteration, r.beta, r.train_perplexity, r.heldout_perplexity, r.free_energy
            )
            .unwrap();
        }
        out
    }
}

/// Result of [`fit_em`] or [`fit_tem`].
#[derive(Debug, Clone)]
pub struct Fit<T> {
    pub model: AspectModel<T>,
    pub trace: TrainTrace<T>,
    /// The internal train/held-out split used for early stopping.
    pub split: SplitPair,
}

/// Output of [`em_step`].
#[derive(Debug, Clone)]
pub struct EmStep<T> {
    pub model: AspectModel<T>,
    /// Factors that received no posterior mass and were reset to uniform.
    pub degenerate: Vec<usize>,
    /// Free energy of the input parameters at the step's `beta`.
    pub free_energy: T,
}

/// One fused E and M sweep at inverse temperature `beta`.
///
/// Tempered posteriors are computed cell by cell and immediately folded into
/// the three accumulators; nothing of size `nnz x K` is stored.
pub fn em_step<T: Scalar>(model: &AspectModel<T>, counts: &CountMatrix, beta: T) -> Result<EmStep<T>> {
    model.check_counts(counts)?;
    if !(beta > T::zero()) {
        return Err(Error::InvalidArgument(format!("beta {beta} must be > 0")));
    }
    let (k, n, m) = (model.k(), model.n_docs(), model.n_terms());
    let tempered = beta != T::one();

    // per-entity factors of the joint term, already raised to beta
    let mut doc_part = Vec::with_capacity(n * k);
    for d in 0..n {
        for (z, &p) in model.doc_row(d).iter().enumerate() {
            let v = model.prior()[z] * p;
            doc_part.push(if tempered { v.powf(beta) } else { v });
        }
    }
    let word_part: Vec<T> = if tempered {
        model.word_table().iter().map(|&p| p.powf(beta)).collect()
    } else {
        model.word_table().to_vec()
    };

    let mut acc_prior = vec![T::zero(); k];
    let mut acc_doc = vec![T::zero(); n * k];
    let mut acc_word = vec![T::zero(); m * k];
    let mut post = vec![T::zero(); k];
    let mut free_energy = T::zero();
    let threshold = T::min_positive_value() / T::epsilon();

    for e in counts.entries() {
        let dp = &doc_part[e.doc * k..(e.doc + 1) * k];
        let wp = &word_part[e.term * k..(e.term + 1) * k];
        for z in 0..k {
            post[z] = dp[z] * wp[z];
        }
        let s = sum(&post);
        let log_norm = if s > threshold {
            for p in post.iter_mut() {
                *p /= s;
            }
            s.ln()
        } else {
            model.posterior_into(e.doc, e.term, beta, &mut post)?
        };
        let count = T::of(f64::from(e.count));
        free_energy -= count * log_norm;
        let ad = &mut acc_doc[e.doc * k..(e.doc + 1) * k];
        for z in 0..k {
            ad[z] += count * post[z];
        }
        let aw = &mut acc_word[e.term * k..(e.term + 1) * k];
        for z in 0..k {
            let v = count * post[z];
            aw[z] += v;
            acc_prior[z] += v;
        }
    }

    normalize_columns(&mut acc_prior, k, 1);
    let mut degenerate = normalize_columns(&mut acc_doc, n, k);
    degenerate.extend(normalize_columns(&mut acc_word, m, k));
    degenerate.sort_unstable();
    degenerate.dedup();
    if !degenerate.is_empty() {
        warn!("factors {degenerate:?} received no mass; conditionals reset to uniform");
    }
    Ok(EmStep {
        model: AspectModel::from_raw(k, n, m, acc_prior, acc_doc, acc_word),
        degenerate,
        free_energy,
    })
}

struct Runner<'a, T> {
    config: &'a TemConfig<T>,
    train: &'a CountMatrix,
    heldout: &'a CountMatrix,
    records: Vec<TraceRecord<T>>,
    best: Option<(AspectModel<T>, T, usize)>,
}

enum Outcome {
    /// Held-out perplexity stopped improving at this beta.
    Stalled,
    BetaCap,
    TotalCap,
}

impl<T: Scalar> Runner<'_, T> {
    fn iterations(&self) -> usize {
        self.records.len()
    }

    fn best_ppx(&self) -> T {
        self.best.as_ref().map_or(T::infinity(), |b| b.1)
    }

    fn improves(&self, new: T, reference: T) -> bool {
        new < reference * (T::one() - self.config.improvement_tol)
    }

    fn step(&mut self, model: &AspectModel<T>, beta: T) -> Result<(AspectModel<T>, T)> {
        let next = em_step(model, self.train, beta)?.model;
        let heldout = next.perplexity(self.heldout, Conditioning::WordGivenDoc)?;
        let record = TraceRecord {
            iteration: self.iterations() + 1,
            beta,
            train_perplexity: next.perplexity(self.train, Conditioning::WordGivenDoc)?,
            heldout_perplexity: heldout,
            free_energy: next.tempered_free_energy(self.train, beta)?,
        };
        debug!(
            "iter {} beta {} train {} heldout {}",
            record.iteration, beta, record.train_perplexity, heldout
        );
        if heldout < self.best_ppx() {
            self.best = Some((next.clone(), heldout, record.iteration));
        }
        self.records.push(record);
        Ok((next, heldout))
    }

    /// Iterates at fixed `beta` from `model` while held-out perplexity keeps
    /// improving on the previous iterate. `previous` is the held-out
    /// perplexity `model` is compared against first.
    fn run(&mut self, mut model: AspectModel<T>, beta: T, mut previous: T, done_at_beta: usize) -> Result<Outcome> {
        let mut at_beta = done_at_beta;
        loop {
            if self.iterations() >= self.config.max_total_iters {
                return Ok(Outcome::TotalCap);
            }
            if at_beta >= self.config.max_iters_per_beta {
                return Ok(Outcome::BetaCap);
            }
            let (next, ppx) = self.step(&model, beta)?;
            at_beta += 1;
            if !self.improves(ppx, previous) {
                return Ok(Outcome::Stalled);
            }
            model = next;
            previous = ppx;
        }
    }

    fn finish(self, reason: StoppingReason, split: SplitPair) -> Fit<T> {
        let (model, _, best_iteration) = self.best.expect("at least one iteration ran");
        Fit {
            model,
            trace: TrainTrace {
                records: self.records,
                stopping_reason: reason,
                best_iteration,
            },
            split,
        }
    }
}

fn prepare<T: Scalar>(counts: &CountMatrix, k: usize, config: &TemConfig<T>) -> Result<(SplitPair, AspectModel<T>)> {
    if counts.total() == 0 {
        return Err(Error::EmptyCorpus);
    }
    config.validate()?;
    let split = split_heldout(counts, config.heldout_fraction, config.seed)?;
    if split.train.total() == 0 || split.heldout.total() == 0 {
        return Err(Error::InvalidArgument(format!(
            "corpus of {} tokens is too small for a {} held-out split",
            counts.total(),
            config.heldout_fraction
        )));
    }
    let model = AspectModel::init(k, counts.n_docs(), counts.n_terms(), config.seed)?;
    Ok((split, model))
}

/// EM at `beta = 1`, stopped as soon as held-out conditional perplexity
/// fails to improve by `improvement_tol`. Returns the best model on the
/// held-out tokens.
pub fn fit_em<T: Scalar>(counts: &CountMatrix, k: usize, config: &TemConfig<T>) -> Result<Fit<T>> {
    fit_at_beta(counts, k, T::one(), config)
}

/// Tempered EM held at a single `beta` from a random start, stopped early
/// on held-out perplexity like [`fit_em`]. Sweeping `beta` with this traces
/// held-out perplexity as a function of temperature.
pub fn fit_at_beta<T: Scalar>(counts: &CountMatrix, k: usize, beta: T, config: &TemConfig<T>) -> Result<Fit<T>> {
    if !(beta > T::zero() && beta <= T::one()) {
        return Err(Error::InvalidArgument(format!("beta {beta} outside (0, 1]")));
    }
    let (split, init) = prepare(counts, k, config)?;
    let mut runner = Runner {
        config,
        train: &split.train,
        heldout: &split.heldout,
        records: Vec::new(),
        best: None,
    };
    let reason = match runner.run(init, beta, T::infinity(), 0)? {
        Outcome::Stalled => StoppingReason::HeldoutDeterioration,
        Outcome::BetaCap | Outcome::TotalCap => StoppingReason::IterationCap,
    };
    Ok(runner.finish(reason, split.clone()))
}

/// Tempered EM with the inverse schedule:
///
/// 1. EM with early stopping at `beta = 1`;
/// 2. `beta <- eta * beta` and one tempered iteration from the best model so far;
/// 3. keep iterating at this `beta` while held-out perplexity improves, then back to 2;
/// 4. stop once lowering `beta` brings no improvement, or `beta < beta_min`.
pub fn fit_tem<T: Scalar>(counts: &CountMatrix, k: usize, config: &TemConfig<T>) -> Result<Fit<T>> {
    let (split, init) = prepare(counts, k, config)?;
    let mut runner = Runner {
        config,
        train: &split.train,
        heldout: &split.heldout,
        records: Vec::new(),
        best: None,
    };
    if let Outcome::TotalCap = runner.run(init, T::one(), T::infinity(), 0)? {
        return Ok(runner.finish(StoppingReason::IterationCap, split.clone()));
    }
    let mut beta = T::one();
    let reason = loop {
        let lowered = beta * config.eta;
        if lowered < config.beta_min {
            break StoppingReason::BetaFloor;
        }
        beta = lowered;
        if runner.iterations() >= config.max_total_iters {
            break StoppingReason::IterationCap;
        }
        let (start, reference, _) = runner.best.clone().expect("EM phase ran");
        let (next, ppx) = runner.step(&start, beta)?;
        if !runner.improves(ppx, reference) {
            break StoppingReason::HeldoutDeterioration;
        }
        if let Outcome::TotalCap = runner.run(next, beta, ppx, 1)? {
            break StoppingReason::IterationCap;
        }
    };
    Ok(runner.finish(reason, split.clone()))
}

/// Settings for [`fold_in`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldInConfig<T> {
    pub beta: T,
    pub max_iters: usize,
    /// Stop once no mixing weight moves by more than this.
    pub tol: T,
}

impl<T: Scalar> Default for FoldInConfig<T> {
    fn default() -> Self {
        Self {
            beta: T::one(),
            max_iters: 50,
            tol: T::of(1e-6),
        }
    }
}

/// Estimates `P(z|q)` for a query given as sparse `(term, count)` pairs,
/// keeping every trained parameter fixed. Terms outside the model, or with
/// zero probability under every factor, are ignored.
pub fn fold_in<T: Scalar>(
    model: &AspectModel<T>,
    query: &[(usize, u32)],
    config: &FoldInConfig<T>,
) -> Result<LatentRepresentation<T>> {
    let k = model.k();
    let query: Vec<(&[T], T)> = query
        .iter()
        .filter(|&&(w, n)| n > 0 && w < model.n_terms())
        .map(|&(w, n)| (model.word_row(w), T::of(f64::from(n))))
        .filter(|(row, _)| row.iter().any(|&p| p > T::zero()))
        .collect();
    if query.is_empty() {
        return Err(Error::UnmatchableQuery);
    }
    let mut weights = vec![T::one() / T::of_usize(k); k];
    let mut acc = vec![T::zero(); k];
    let mut post = vec![T::zero(); k];
    for _ in 0..config.max_iters {
        acc.iter_mut().for_each(|a| *a = T::zero());
        for &(row, n) in &query {
            tempered_mixture_posterior(&weights, row, config.beta, &mut post);
            for z in 0..k {
                acc[z] += n * post[z];
            }
        }
        let total = sum(&acc);
        let mut change = T::zero();
        for z in 0..k {
            let next = acc[z] / total;
            change = change.max((next - weights[z]).abs());
            weights[z] = next;
        }
        if change < config.tol {
            break;
        }
    }
    Ok(LatentRepresentation(weights))
}

/// `out ∝ [weights_z * row_z]^beta`; at least one term must be positive.
fn tempered_mixture_posterior<T: Scalar>(weights: &[T], row: &[T], beta: T, out: &mut [T]) {
    if beta == T::one() {
        for z in 0..out.len() {
            out[z] = weights[z] * row[z];
        }
        let s = sum(out);
        if s > T::min_positive_value() / T::epsilon() {
            out.iter_mut().for_each(|p| *p /= s);
            return;
        }
    }
    let mut max = T::neg_infinity();
    for z in 0..out.len() {
        out[z] = if weights[z] > T::zero() && row[z] > T::zero() {
            beta * (weights[z].ln() + row[z].ln())
        } else {
            T::neg_infinity()
        };
        max = max.max(out[z]);
    }
    for p in out.iter_mut() {
        *p = if *p == T::neg_infinity() { T::zero() } else { (*p - max).exp() };
    }
    let s = sum(out);
    out.iter_mut().for_each(|p| *p /= s);
}
