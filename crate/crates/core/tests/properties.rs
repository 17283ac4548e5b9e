mod common;

use plsa::corpus::{CountMatrix, RelevanceJudgments};
use plsa::dense::DenseMatrix;
use plsa::lsa::truncated_svd;
use plsa::model::{AspectModel, LatentRepresentation};
use plsa::retrieval::{
    combined_score, cosine_score, plsi_star_score, precision_recall, LatentSimilarity, RankedList, RetrievalRun,
};
use plsa::trainer::{em_step, fold_in, FoldInConfig};
use proptest::prelude::*;

use common::{entropy, random_counts, random_model, rel_diff, rng, Dense};

fn corpus_and_model(seed: u64, k: usize) -> (CountMatrix, AspectModel<f64>) {
    let mut r = rng(seed);
    let counts = random_counts(&mut r, 12, 15, 80);
    let model = random_model(&mut r, k, counts.n_docs(), counts.n_terms());
    (counts, model)
}

fn sparse(v: &[u32]) -> Vec<(usize, u32)> {
    v.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i, c)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn em_never_lowers_likelihood(seed in any::<u64>(), k in 1usize..5) {
        let (counts, mut model) = corpus_and_model(seed, k);
        let mut ll = model.log_likelihood(&counts).unwrap();
        for _ in 0..20 {
            model = em_step(&model, &counts, 1.0).unwrap().model;
            model.validate().unwrap();
            let next = model.log_likelihood(&counts).unwrap();
            prop_assert!(next >= ll - 1e-9 * ll.abs().max(1.0));
            ll = next;
        }
    }

    #[test]
    fn tempered_steps_descend_free_energy(seed in any::<u64>(), k in 1usize..5, beta in 0.3f64..1.0) {
        let (counts, mut model) = corpus_and_model(seed, k);
        let mut f = model.tempered_free_energy(&counts, beta).unwrap();
        for _ in 0..15 {
            let step = em_step(&model, &counts, beta).unwrap();
            prop_assert!(rel_diff(step.free_energy, f) < 1e-12);
            model = step.model;
            let next = model.tempered_free_energy(&counts, beta).unwrap();
            prop_assert!(next <= f + 1e-9 * f.abs().max(1.0));
            f = next;
        }
    }

    #[test]
    fn asymmetric_and_symmetric_forms_agree(seed in any::<u64>(), k in 1usize..5) {
        let (counts, model) = corpus_and_model(seed, k);
        for d in 0..counts.n_docs() {
            let words = model.word_given_doc(d).unwrap();
            let mix = model.doc_mixture(d).unwrap();
            prop_assert!((mix.0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (w, &q) in words.iter().enumerate() {
                prop_assert!((q * model.doc_prob(d) - model.joint_prob(d, w)).abs() < 1e-14);
                // P(w|d) lies in the convex hull of the factor distributions
                let hull: f64 = (0..k).map(|z| mix.0[z] * model.word_given_z(w, z)).sum();
                prop_assert!((hull - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn posterior_entropy_falls_with_beta(seed in any::<u64>(), k in 2usize..7, lo in 0.0f64..1.0, hi in 0.0f64..1.0) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let mut r = rng(seed);
        let model = random_model(&mut r, k, 3, 4);
        for d in 0..3 {
            for w in 0..4 {
                let a = entropy(&model.posterior(d, w, lo).unwrap().0);
                let b = entropy(&model.posterior(d, w, hi).unwrap().0);
                prop_assert!(b <= a + 1e-12);
            }
        }
    }

    #[test]
    fn posteriors_match_oracle(seed in any::<u64>(), k in 1usize..5, beta in 0.0f64..=1.0) {
        let (counts, model) = corpus_and_model(seed, k);
        let oracle = Dense::of(&model);
        for e in counts.entries() {
            let got = model.posterior(e.doc, e.term, beta).unwrap().0;
            for (a, b) in got.iter().zip(oracle.posterior(e.doc, e.term, beta)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fold_in_ignores_count_scale(seed in any::<u64>(), k in 1usize..5, scale in 2u32..6) {
        let mut r = rng(seed);
        let model = random_model(&mut r, k, 4, 6);
        let query = vec![(0, 1), (2, 3), (5, 1)];
        let scaled: Vec<_> = query.iter().map(|&(w, c)| (w, c * scale)).collect();
        let config = FoldInConfig { max_iters: 2000, tol: 1e-13, ..Default::default() };
        let a = fold_in(&model, &query, &config).unwrap();
        let b = fold_in(&model, &scaled, &config).unwrap();
        for (x, y) in a.0.iter().zip(&b.0) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn cosine_symmetric_and_scale_free(
        d in prop::collection::vec(0u32..6, 6),
        q in prop::collection::vec(0u32..6, 6),
        alpha in 1u32..10,
    ) {
        let (ds, qs) = (sparse(&d), sparse(&q));
        prop_assume!(!ds.is_empty() && !qs.is_empty());
        let s: f64 = cosine_score(&ds, &qs).unwrap();
        prop_assert!((0.0..=1.0 + 1e-15).contains(&s));
        prop_assert!((s - cosine_score::<f64>(&qs, &ds).unwrap()).abs() < 1e-12);
        let scaled: Vec<_> = ds.iter().map(|&(w, c)| (w, c * alpha)).collect();
        prop_assert!((s - cosine_score::<f64>(&scaled, &qs).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn combination_is_monotone(lambda in 0.01f64..0.99, a in 0.0f64..1.0, b in 0.0f64..1.0, bump in 0.0f64..0.5) {
        prop_assert!(combined_score(lambda, a + bump, b) >= combined_score(lambda, a, b));
        prop_assert!(combined_score(lambda, a, b + bump) >= combined_score(lambda, a, b));
    }

    #[test]
    fn ensemble_of_copies_equals_single(
        d in prop::collection::vec(0.01f64..1.0, 3),
        q in prop::collection::vec(0.01f64..1.0, 3),
        copies in 1usize..6,
        lambda in 0.0f64..=1.0,
        cos in 0.0f64..=1.0,
    ) {
        let (d, q) = (LatentRepresentation(d), LatentRepresentation(q));
        let single = plsi_star_score(&[(&d, &q)], lambda, cos, LatentSimilarity::Cosine).unwrap();
        let many = vec![(&d, &q); copies];
        let avg = plsi_star_score(&many, lambda, cos, LatentSimilarity::Cosine).unwrap();
        prop_assert!((single - avg).abs() < 1e-12);
    }

    #[test]
    fn ensemble_ignores_model_order(reps in prop::collection::vec(prop::collection::vec(0.01f64..1.0, 3), 2..6), cos in 0.0f64..1.0) {
        let reps: Vec<LatentRepresentation<f64>> = reps.into_iter().map(LatentRepresentation).collect();
        let q = LatentRepresentation(vec![0.2, 0.3, 0.5]);
        let forward: Vec<_> = reps.iter().map(|d| (d, &q)).collect();
        let backward: Vec<_> = reps.iter().rev().map(|d| (d, &q)).collect();
        prop_assert_eq!(
            plsi_star_score(&forward, 0.5, cos, LatentSimilarity::Cosine).unwrap(),
            plsi_star_score(&backward, 0.5, cos, LatentSimilarity::Cosine).unwrap()
        );
    }

    #[test]
    fn interpolated_precision_never_rises(scores in prop::collection::vec(0.0f64..1.0, 5..40), picks in prop::collection::vec(any::<bool>(), 40)) {
        let mut j = RelevanceJudgments::new();
        for (d, _) in scores.iter().enumerate().filter(|&(d, _)| picks[d]) {
            j.insert("q", d);
        }
        prop_assume!(!j.is_empty());
        let pr = precision_recall(&RetrievalRun { lists: vec![RankedList::new("q", scores)], judgments: j });
        let curve = pr.per_query[0].precision;
        for w in curve.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        prop_assert!(curve.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn svd_values_are_a_prefix_of_the_full_spectrum(
        seed in any::<u64>(),
        rows in 2usize..6,
        cols in 2usize..7,
    ) {
        use rand::Rng;
        let mut r = rng(seed);
        let dense: Vec<Vec<u32>> = (0..rows).map(|_| (0..cols).map(|_| r.random_range(0..6)).collect()).collect();
        prop_assume!(dense.iter().flatten().any(|&x| x > 0));
        let counts = CountMatrix::from_dense(&dense).unwrap();
        let full = nalgebra::DMatrix::from_fn(rows, cols, |i, j| f64::from(dense[i][j])).singular_values();
        let k = r.random_range(1..=rows.min(cols));
        let svd = truncated_svd::<f64>(&counts, k).unwrap();
        for i in 0..k {
            prop_assert!((svd.sigma[i] - full[i]).abs() < 1e-8);
        }
        prop_assert!(svd.max_residual(&counts) < 1e-8);
        for w in svd.sigma.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }
}

#[test]
fn folding_in_a_training_row_reproduces_its_coordinates() {
    use rand::Rng;
    let mut r = rng(77);
    for _ in 0..20 {
        let dense: Vec<Vec<u32>> = (0..5).map(|_| (0..7).map(|_| r.random_range(0..5)).collect()).collect();
        let counts = CountMatrix::from_dense(&dense).unwrap();
        let rank = nalgebra::DMatrix::from_fn(5, 7, |i, j| f64::from(dense[i][j])).rank(1e-9);
        let svd = truncated_svd::<f64>(&counts, rank).unwrap();
        let coords = svd.doc_coords();
        for (d, row) in dense.iter().enumerate() {
            let q = sparse(row);
            if q.is_empty() {
                continue;
            }
            let folded = svd.fold_in(&q).unwrap();
            for (a, b) in folded.iter().zip(coords.row(d)) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn orthogonal_query_folds_to_zero() {
    let counts = CountMatrix::from_dense(&[vec![1, 2, 0], vec![2, 4, 0]]).unwrap();
    let svd = truncated_svd::<f64>(&counts, 1).unwrap();
    let folded = svd.fold_in(&[(2, 3)]).unwrap();
    assert!(folded.iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn eckart_young_on_random_matrices() {
    use rand::Rng;
    let mut r = rng(91);
    for _ in 0..10 {
        let dense: Vec<Vec<u32>> = (0..4).map(|_| (0..4).map(|_| r.random_range(0..8)).collect()).collect();
        let counts = CountMatrix::from_dense(&dense).unwrap();
        let a = DenseMatrix::from_rows(&dense.iter().map(|row| row.iter().map(|&x| f64::from(x)).collect()).collect::<Vec<_>>());
        for k in 1..4 {
            let best = truncated_svd::<f64>(&counts, k).unwrap().reconstruct().frobenius_distance(&a);
            for _ in 0..1000 {
                let left = DenseMatrix::from_vec(4, k, (0..4 * k).map(|_| r.random_range(-3.0..3.0)).collect());
                let right = DenseMatrix::from_vec(k, 4, (0..4 * k).map(|_| r.random_range(-3.0..3.0)).collect());
                assert!(left.matmul(&right).frobenius_distance(&a) >= best - 1e-9);
            }
        }
    }
}
