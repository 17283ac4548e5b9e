use std::fmt::Write as _;
use std::path::PathBuf;

use plsa::corpus::{
    load_counts, load_doc_ids, load_stopwords, load_vocab, parse_qrels, parse_smart_queries, tokenize, QrelsLayout,
    RelevanceJudgments,
};
use plsa::io::{load_model, load_svd};
use plsa::retrieval::{
    precision_recall, rank_query, CosineScorer, LatentSimilarity, LsiScorer, PlsiScorer, RetrievalRun, Scorer,
};
use plsa::trainer::{fold_in, FoldInConfig};
use rayon::prelude::*;

use super::{create_dir, sibling, write_file};
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::{QrelsFormat, QueryArgs, QueryFormat, Similarity};

fn read_queries(args: &QueryArgs) -> Result<(Vec<String>, Vec<String>)> {
    Ok(match args.query_format {
        QueryFormat::Smart => parse_smart_queries(&args.queries)?
            .into_iter()
            .map(|q| (q.id, q.text))
            .unzip(),
        QueryFormat::Raw => {
            let text = std::fs::read_to_string(&args.queries).map_err(|e| CliError::io(&args.queries, e))?;
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .enumerate()
                .map(|(i, l)| ((i + 1).to_string(), l.to_string()))
                .unzip()
        }
    })
}

pub fn run(args: &QueryArgs, argv: &[String]) -> Result<()> {
    if !args.baseline_only && args.model.is_empty() && args.lsi.is_none() {
        return Err(CliError::Usage("give --model, --lsi or --baseline-only".into()));
    }
    if !(0.0..=1.0).contains(&args.lambda) {
        return Err(CliError::Usage(format!("--lambda {} outside [0, 1]", args.lambda)));
    }
    let vocab_path = args.vocab.clone().unwrap_or_else(|| sibling(&args.counts, "vocab.txt"));
    let docs_path = args.docs.clone().unwrap_or_else(|| sibling(&args.counts, "docs.txt"));
    let counts = load_counts(&args.counts)?;
    let vocab = load_vocab(&vocab_path)?;
    let doc_ids = load_doc_ids(&docs_path)?;
    if vocab.len() != counts.n_terms() || doc_ids.len() != counts.n_docs() {
        return Err(plsa::Error::DimensionMismatch(format!(
            "counts are {}x{}, vocabulary has {} terms and the id list {} documents",
            counts.n_docs(),
            counts.n_terms(),
            vocab.len(),
            doc_ids.len()
        ))
        .into());
    }
    let stopwords = args.stopwords.as_deref().map(load_stopwords).transpose()?;
    let (query_ids, texts) = read_queries(args)?;
    let queries: Vec<Vec<(usize, u32)>> = texts
        .iter()
        .map(|t| vocab.count_known(&tokenize(t, stopwords.as_ref())))
        .collect();
    let judgments = match &args.qrels {
        Some(path) => {
            let layout = match args.qrels_format {
                QrelsFormat::Pairs => QrelsLayout::Pairs,
                QrelsFormat::Trec => QrelsLayout::Trec,
            };
            parse_qrels(path, layout)?.resolve(&doc_ids)?
        }
        None => RelevanceJudgments::new(),
    };

    let similarity = match args.similarity {
        Similarity::Cosine => LatentSimilarity::Cosine,
        Similarity::Dot => LatentSimilarity::Dot,
        Similarity::Kl => LatentSimilarity::SymmetrizedKl,
    };
    let mut inputs = vec![args.counts.clone(), vocab_path, docs_path, args.queries.clone()];
    inputs.extend(args.qrels.iter().cloned());
    inputs.extend(args.stopwords.iter().cloned());
    let scorer: Box<dyn Scorer<f64> + '_> = if args.baseline_only {
        Box::new(CosineScorer::new(&counts, &queries))
    } else if let Some(path) = &args.lsi {
        inputs.push(path.clone());
        let svd = load_svd::<f64>(path)?;
        Box::new(LsiScorer::new(&svd, &counts, &queries, args.lambda)?)
    } else {
        inputs.extend(args.model.iter().cloned());
        Box::new(plsi_scorer(args, &counts, &queries, similarity)?)
    };

    let lists = (0..queries.len())
        .into_par_iter()
        .map(|q| rank_query(scorer.as_ref(), counts.n_docs(), q, &query_ids[q]))
        .collect();
    let run = RetrievalRun { lists, judgments };

    create_dir(&args.out)?;
    let mut outputs: Vec<PathBuf> = vec![args.out.join("run.txt")];
    write_file(&outputs[0], &run.to_run_file(&doc_ids))?;
    if args.qrels.is_some() {
        let pr = precision_recall(&run);
        let mut per_query = String::from("query\taverage\n");
        for q in &pr.per_query {
            writeln!(per_query, "{}\t{}", q.query_id, q.average).unwrap();
        }
        for (name, text) in [
            ("pr.tsv", pr.to_table()),
            ("pr-plot.dat", pr.plot_data()),
            ("pr-queries.tsv", per_query),
        ] {
            let path = args.out.join(name);
            write_file(&path, &text)?;
            outputs.push(path);
        }
        println!(
            "queries={} judged={} average_precision={}",
            queries.len(),
            pr.per_query.len(),
            pr.average_precision
        );
    } else {
        println!("queries={}", queries.len());
    }
    RunManifest::new("query", argv, args)?.write(&args.out, &inputs, &outputs)?;
    Ok(())
}

/// Document mixtures and folded-in queries for every model, each query
/// folded in at the temperature its model was selected at unless
/// `--fold-beta` overrides it.
fn plsi_scorer<'a>(
    args: &QueryArgs,
    counts: &'a plsa::corpus::CountMatrix,
    queries: &'a [Vec<(usize, u32)>],
    similarity: LatentSimilarity,
) -> Result<PlsiScorer<'a, f64>> {
    let mut models = Vec::new();
    for path in &args.model {
        let (model, meta) = load_model::<f64>(path)?;
        if model.n_docs() != counts.n_docs() || model.n_terms() != counts.n_terms() {
            return Err(plsa::Error::DimensionMismatch(format!(
                "{} is {}x{}, the collection {}x{}",
                path.display(),
                model.n_docs(),
                model.n_terms(),
                counts.n_docs(),
                counts.n_terms()
            ))
            .into());
        }
        let beta = match args.fold_beta {
            Some(b) => b,
            None => meta.get("beta").and_then(|b| b.parse().ok()).unwrap_or(1.0),
        };
        models.push((model, beta));
    }
    type Reps = Vec<Option<plsa::LatentRepresentation>>;
    let (doc_reps, query_reps): (Vec<Reps>, Vec<Reps>) = models
        .par_iter()
        .map(|(model, beta)| {
            let config = FoldInConfig {
                beta: *beta,
                ..Default::default()
            };
            let docs = (0..model.n_docs()).map(|d| model.doc_mixture(d).ok()).collect();
            let folded = queries.iter().map(|q| fold_in(model, q, &config).ok()).collect();
            (docs, folded)
        })
        .unzip();
    Ok(PlsiScorer::from_representations(
        counts,
        queries,
        args.lambda,
        similarity,
        doc_reps,
        query_reps,
    ))
}
