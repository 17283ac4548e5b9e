use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plsa::corpus::{load_counts, save_counts, split_heldout, CountMatrix};
use plsa::io::{load_model, save_model};
use plsa::model::Conditioning;
use plsa::retrieval::cosine_score;
use plsa::rng::{stream, Stream};
use plsa::synthetic::{GeneratorConfig, SyntheticCorpus};
use plsa::AspectModel;
use rand_distr::{Distribution, Normal};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn plsa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plsa")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = plsa(args);
    assert!(
        out.status.success(),
        "plsa {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

/// Ingests the SMART fixture into `dir/c`.
fn ingest_tiny(dir: &Path) -> PathBuf {
    let out = dir.join("c");
    ok(&[
        "ingest",
        "--format",
        "smart",
        "--stopwords",
        s(&fixture("stopwords.txt")),
        "-o",
        s(&out),
        s(&fixture("tiny.all")),
    ]);
    out
}

#[test]
fn ingest_reports_shape() {
    let tmp = TempDir::new().unwrap();
    let out = ok(&["ingest", "--format", "smart", "-o", s(tmp.path()), s(&fixture("tiny.all"))]);
    assert!(out.starts_with("N=18 "), "{out}");
    let counts = load_counts(&tmp.path().join("counts.txt")).unwrap();
    assert_eq!(counts.n_docs(), 18);
    assert!(tmp.path().join("manifest.json").exists());
}

#[test]
fn raw_ingest_counts_tokens() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("docs.txt");
    std::fs::write(&input, "a b a\nb\n").unwrap();
    let out = ok(&["ingest", "--format", "raw", "-o", s(&tmp.path().join("c")), s(&input)]);
    assert_eq!(out.trim(), "N=2 M=2 tokens=4");
    assert_eq!(read(&tmp.path().join("c/counts.txt")), "# 2 2\n0\t0\t2\n0\t1\t1\n1\t1\t1\n");
    assert_eq!(read(&tmp.path().join("c/vocab.txt")), "0\ta\n1\tb\n");
}

#[test]
fn triples_round_trip() {
    let tmp = TempDir::new().unwrap();
    let first = ingest_tiny(tmp.path());
    let second = tmp.path().join("again");
    ok(&[
        "ingest",
        "--format",
        "triples",
        "--vocab",
        s(&first.join("vocab.txt")),
        "-o",
        s(&second),
        s(&first.join("counts.txt")),
    ]);
    assert_eq!(read(&first.join("counts.txt")), read(&second.join("counts.txt")));
    assert_eq!(read(&first.join("vocab.txt")), read(&second.join("vocab.txt")));
}

#[test]
fn training_is_byte_deterministic_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let c = ingest_tiny(tmp.path());
    let counts = c.join("counts.txt");
    for (dir, threads) in [("a", "1"), ("b", "4")] {
        ok(&[
            "train",
            "--threads",
            threads,
            "--counts",
            s(&counts),
            "--k",
            "2,3,4",
            "--mode",
            "em",
            "--seed",
            "9",
            "-o",
            s(&tmp.path().join(dir)),
        ]);
    }
    for k in 2..=4 {
        let name = format!("model-k{k}.txt");
        assert_eq!(read(&tmp.path().join("a").join(&name)), read(&tmp.path().join("b").join(&name)));
    }
}

#[test]
fn tem_trace_starts_at_one_and_descends() {
    let tmp = TempDir::new().unwrap();
    let c = ingest_tiny(tmp.path());
    ok(&["train", "--counts", s(&c.join("counts.txt")), "--k", "6", "--mode", "tem", "-o", s(&tmp.path().join("m"))]);
    let trace = read(&tmp.path().join("m/trace-k6.tsv"));
    let betas: Vec<f64> = trace
        .lines()
        .skip(2)
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(betas[0], 1.0);
    assert!(betas.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn single_factor_model_is_the_unigram() {
    let tmp = TempDir::new().unwrap();
    let c = ingest_tiny(tmp.path());
    ok(&["train", "--counts", s(&c.join("counts.txt")), "--k", "1", "--seed", "4", "-o", s(&tmp.path().join("m"))]);
    let (model, _) = load_model::<f64>(&tmp.path().join("m/model-k1.txt")).unwrap();
    let counts = load_counts(&c.join("counts.txt")).unwrap();
    let train = split_heldout(&counts, 0.1, 4).unwrap().train;
    let unigram = AspectModel::unigram_baseline(&train).unwrap();
    assert!(model.max_param_diff(&unigram) <= 1e-10);
}

#[test]
fn perplexity_of_unigram_on_uniform_counts() {
    let tmp = TempDir::new().unwrap();
    let (n, m) = (3, 5);
    let counts = CountMatrix::from_dense(&vec![vec![1; m]; n]).unwrap();
    let path = tmp.path().join("uniform.txt");
    save_counts(&path, &counts).unwrap();
    ok(&["unigram", "--counts", s(&path), "-o", s(&tmp.path().join("u"))]);
    let model = tmp.path().join("u/unigram.txt");
    let value = |out: String| -> f64 { out.split_whitespace().nth(1).unwrap().parse().unwrap() };
    let conditional = value(ok(&["perplexity", "--conditional", "--model", s(&model), "--counts", s(&path)]));
    assert!((conditional - m as f64).abs() < 1e-9);
    // joint = conditional * exp(document entropy) with uniform P(d)
    let joint = value(ok(&["perplexity", "--model", s(&model), "--counts", s(&path)]));
    assert!((joint - (n * m) as f64).abs() < 1e-9);
}

#[test]
fn perplexity_reports_reduction_against_baseline() {
    let tmp = TempDir::new().unwrap();
    let c = ingest_tiny(tmp.path());
    ok(&["split", "--counts", s(&c.join("counts.txt")), "--seed", "2", "-o", s(&tmp.path().join("s"))]);
    let (train, heldout) = (tmp.path().join("s/train.txt"), tmp.path().join("s/heldout.txt"));
    ok(&["unigram", "--counts", s(&train), "-o", s(&tmp.path().join("u"))]);
    ok(&["train", "--counts", s(&train), "--k", "3", "-o", s(&tmp.path().join("m"))]);
    let out = ok(&[
        "perplexity",
        "--conditional",
        "--model",
        s(&tmp.path().join("m/model-k3.txt")),
        "--baseline",
        s(&tmp.path().join("u/unigram.txt")),
        "--counts",
        s(&heldout),
        "-o",
        s(&tmp.path().join("p")),
    ]);
    let fields: Vec<f64> = out.lines().map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap()).collect();
    let [ppx, base, reduction] = fields[..] else { panic!("{out}") };
    assert!((reduction - base / ppx).abs() < 1e-12);
    let (model, _) = load_model::<f64>(&tmp.path().join("m/model-k3.txt")).unwrap();
    let direct = model.perplexity(&load_counts(&heldout).unwrap(), Conditioning::WordGivenDoc).unwrap();
    assert_eq!(ppx, direct);
}

#[test]
fn baseline_only_ranks_by_cosine() {
    let tmp = TempDir::new().unwrap();
    let c = ingest_tiny(tmp.path());
    let queries = tmp.path().join("q.txt");
    std::fs::write(&queries, "heart blood\norbit rocket moon\n").unwrap();
    ok(&[
        "query",
        "--baseline-only",
        "--counts",
        s(&c.join("counts.txt")),
        "--queries",
        s(&queries),
        "--query-format",
        "raw",
        "-o",
        s(&tmp.path().join("r")),
    ]);
    let counts = load_counts(&c.join("counts.txt")).unwrap();
    let vocab = plsa::corpus::load_vocab(&c.join("vocab.txt")).unwrap();
    let q = vocab.count_known(&["orbit", "rocket", "moon"]);
    let mut expected: Vec<(usize, f64)> = (0..counts.n_docs())
        .map(|d| (d, cosine_score(&counts.row_vector(d), &q).unwrap()))
        .collect();
    expected.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let run = read(&tmp.path().join("r/run.txt"));
    let got: Vec<(String, f64)> = run
        .lines()
        .filter(|l| l.starts_with("2 "))
        .map(|l| {
            let f: Vec<&str> = l.split(' ').collect();
            (f[1].to_string(), f[3].parse().unwrap())
        })
        .collect();
    assert_eq!(got.len(), counts.n_docs());
    for ((id, score), (d, want)) in got.iter().zip(&expected) {
        assert_eq!(*id, (d + 1).to_string());
        assert_eq!(score, want);
    }
}

/// Synthetic collection with topical queries, written as ingest output.
fn synthetic_collection(dir: &Path, corpus: &SyntheticCorpus) -> PathBuf {
    let raw = dir.join("raw");
    std::fs::create_dir_all(&raw).unwrap();
    save_counts(&raw.join("counts.txt"), &corpus.counts).unwrap();
    let out = dir.join("c");
    ok(&["ingest", "--format", "triples", "-o", s(&out), s(&raw.join("counts.txt"))]);
    let (queries, judgments) = corpus.topical_queries(4, 5, 5);
    let mut qtext = String::new();
    let mut qrels = String::new();
    for (i, (id, terms)) in queries.iter().enumerate() {
        let words: Vec<String> = terms
            .iter()
            .flat_map(|&(w, c)| std::iter::repeat_n(format!("w{w}"), c as usize))
            .collect();
        qtext.push_str(&words.join(" "));
        qtext.push('\n');
        for d in judgments.relevant(id).unwrap() {
            qrels.push_str(&format!("{} {}\n", i + 1, d + 1));
        }
    }
    std::fs::write(out.join("queries.txt"), qtext).unwrap();
    std::fs::write(out.join("qrels.txt"), qrels).unwrap();
    out
}

/// The generating model with independent log-normal noise on `P(d|z)`.
fn noisy_model(truth: &AspectModel, sigma: f64, seed: u64) -> AspectModel {
    let mut rng = stream(seed, Stream::Evaluation);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut docs = truth.doc_matrix();
    for z in 0..truth.k() {
        let mut total = 0.0;
        for d in 0..truth.n_docs() {
            docs[(d, z)] *= noise.sample(&mut rng).exp();
            total += docs[(d, z)];
        }
        for d in 0..truth.n_docs() {
            docs[(d, z)] /= total;
        }
    }
    AspectModel::new(truth.prior().to_vec(), docs, truth.word_matrix()).unwrap()
}

fn query_models(c: &Path, models: &[PathBuf], out: &Path) -> f64 {
    let mut args: Vec<String> = vec!["query".into(), "--counts".into(), s(&c.join("counts.txt")).into()];
    for m in models {
        args.push("--model".into());
        args.push(s(m).into());
    }
    for a in [
        "--queries",
        s(&c.join("queries.txt")),
        "--query-format",
        "raw",
        "--qrels",
        s(&c.join("qrels.txt")),
        "-o",
        s(out),
    ] {
        args.push(a.into());
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let line = ok(&refs);
    line.trim().rsplit('=').next().unwrap().parse().unwrap()
}

#[test]
fn ensemble_matches_or_beats_best_single_model_and_ignores_order() {
    let tmp = TempDir::new().unwrap();
    let corpus = SyntheticCorpus::generate(&GeneratorConfig {
        n_docs: 120,
        n_terms: 60,
        n_factors: 4,
        tokens_per_doc: 40,
        doc_concentration: 0.3,
        word_concentration: 0.1,
        seed: 1,
    })
    .unwrap();
    let c = synthetic_collection(tmp.path(), &corpus);
    let truth = corpus.true_model().unwrap();
    let models: Vec<PathBuf> = (0..5)
        .map(|i| {
            let path = tmp.path().join(format!("model-{i}.txt"));
            save_model(&noisy_model(&truth, 1.0, 100 + i), &[], &path).unwrap();
            path
        })
        .collect();
    let best_single = models
        .iter()
        .enumerate()
        .map(|(i, m)| query_models(&c, std::slice::from_ref(m), &tmp.path().join(format!("single{i}"))))
        .fold(0.0, f64::max);
    let ensemble = query_models(&c, &models, &tmp.path().join("all"));
    assert!(ensemble >= best_single, "ensemble {ensemble} < best single {best_single}");

    let mut shuffled = models.clone();
    shuffled.rotate_left(2);
    shuffled.swap(0, 4);
    query_models(&c, &shuffled, &tmp.path().join("shuffled"));
    assert_eq!(read(&tmp.path().join("all/run.txt")), read(&tmp.path().join("shuffled/run.txt")));
}

#[test]
fn topics_table() {
    let tmp = TempDir::new().unwrap();
    let c = ingest_tiny(tmp.path());
    ok(&["train", "--counts", s(&c.join("counts.txt")), "--k", "1,3", "-o", s(&tmp.path().join("m"))]);
    let vocab = c.join("vocab.txt");
    let one = ok(&["topics", "--model", s(&tmp.path().join("m/model-k1.txt")), "--vocab", s(&vocab), "--top", "3"]);
    let counts = load_counts(&c.join("counts.txt")).unwrap();
    let col = split_heldout(&counts, 0.1, 0).unwrap().train.col_sums();
    let (top, _) = col.iter().enumerate().fold((0, 0), |b, (w, &n)| if n > b.1 { (w, n) } else { b });
    let names = plsa::corpus::load_vocab(&vocab).unwrap();
    assert_eq!(one.lines().nth(1).unwrap().split('\t').nth(1).unwrap(), names.term(top).unwrap());

    let three = ok(&["topics", "--model", s(&tmp.path().join("m/model-k3.txt")), "--vocab", s(&vocab), "--top", "1000"]);
    let mut rows = Vec::new();
    for line in three.lines() {
        if line.starts_with("factor") {
            rows.push(Vec::new());
        } else {
            rows.last_mut().unwrap().push(line.split('\t').nth(2).unwrap().parse::<f64>().unwrap());
        }
    }
    assert_eq!(rows.len(), 3);
    for probs in rows {
        assert_eq!(probs.len(), counts.n_terms());
        assert!(probs.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn lsi_query_and_replay() {
    let tmp = TempDir::new().unwrap();
    let c = ingest_tiny(tmp.path());
    ok(&["lsa", "--counts", s(&c.join("counts.txt")), "--k", "3", "-o", s(&tmp.path().join("l"))]);
    let out = ok(&[
        "query",
        "--lsi",
        s(&tmp.path().join("l/svd-k3.txt")),
        "--counts",
        s(&c.join("counts.txt")),
        "--queries",
        s(&fixture("tiny.qry")),
        "--stopwords",
        s(&fixture("stopwords.txt")),
        "--qrels",
        s(&fixture("tiny.rel")),
        "-o",
        s(&tmp.path().join("q")),
    ]);
    assert!(out.contains("average_precision="));
    let manifest = tmp.path().join("q/manifest.json");
    assert!(ok(&["replay", s(&manifest)]).contains("reproduced 4 outputs of `query`"));

    // a tampered output is reported
    let lsa_manifest = tmp.path().join("l/manifest.json");
    let before = read(&lsa_manifest);
    std::fs::write(tmp.path().join("l/svd-k3.txt"), "junk").unwrap();
    std::fs::write(&lsa_manifest, before.replace("svd-k3.txt\": \"", "svd-k3.txt\": \"0")).unwrap();
    let replay = plsa(&["replay", s(&lsa_manifest)]);
    assert_eq!(replay.status.code(), Some(3));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(plsa(&["train", "--bogus"]).status.code(), Some(2));
    let missing = tmp.path().join("nope.txt");
    assert_eq!(plsa(&["train", "--counts", s(&missing), "--k", "2", "-o", s(tmp.path())]).status.code(), Some(3));
    let empty = tmp.path().join("empty.txt");
    std::fs::write(&empty, "\n\n").unwrap();
    assert_eq!(plsa(&["ingest", "-o", s(&tmp.path().join("e")), s(&empty)]).status.code(), Some(3));
    let c = ingest_tiny(tmp.path());
    let bad_eta = plsa(&["train", "--counts", s(&c.join("counts.txt")), "--k", "2", "--eta", "1.5", "-o", s(tmp.path())]);
    assert_eq!(bad_eta.status.code(), Some(2));
}

#[test]
fn dimension_mismatch_is_a_data_error() {
    let tmp = TempDir::new().unwrap();
    let c = ingest_tiny(tmp.path());
    let other = tmp.path().join("other.txt");
    save_counts(&other, &CountMatrix::from_dense(&[vec![1, 2], vec![0, 1]]).unwrap()).unwrap();
    ok(&["train", "--counts", s(&other), "--k", "1", "--heldout", "0.3", "-o", s(&tmp.path().join("m"))]);
    let out = plsa(&[
        "query",
        "--model",
        s(&tmp.path().join("m/model-k1.txt")),
        "--counts",
        s(&c.join("counts.txt")),
        "--queries",
        s(&fixture("tiny.qry")),
        "-o",
        s(&tmp.path().join("q")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}
