use std::fmt::Write as _;

use plsa::corpus::{load_counts, load_vocab};
use plsa::io::load_model;
use plsa::model::Conditioning;

use super::{create_dir, write_file};
use crate::error::Result;
use crate::manifest::RunManifest;
use crate::{PerplexityArgs, TopicsArgs};

pub fn perplexity(args: &PerplexityArgs, argv: &[String]) -> Result<()> {
    let counts = load_counts(&args.counts)?;
    let conditioning = if args.conditional {
        Conditioning::WordGivenDoc
    } else {
        Conditioning::Joint
    };
    let (model, _) = load_model::<f64>(&args.model)?;
    let value = model.perplexity(&counts, conditioning)?;
    let mut report = format!("perplexity {value}\n");
    if let Some(path) = &args.baseline {
        let (baseline, _) = load_model::<f64>(path)?;
        let reference = baseline.perplexity(&counts, conditioning)?;
        writeln!(report, "baseline {reference}\nreduction {}", reference / value).unwrap();
    }
    print!("{report}");
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        let path = dir.join("perplexity.txt");
        write_file(&path, &report)?;
        let mut inputs = vec![args.model.clone(), args.counts.clone()];
        inputs.extend(args.baseline.iter().cloned());
        RunManifest::new("perplexity", argv, args)?.write(dir, &inputs, &[path])?;
    }
    Ok(())
}

pub fn topics(args: &TopicsArgs, argv: &[String]) -> Result<()> {
    let (model, _) = load_model::<f64>(&args.model)?;
    let vocab = load_vocab(&args.vocab)?;
    if vocab.len() != model.n_terms() {
        return Err(plsa::Error::DimensionMismatch(format!(
            "vocabulary has {} terms, model has {}",
            vocab.len(),
            model.n_terms()
        ))
        .into());
    }
    let mut table = String::new();
    for z in 0..model.k() {
        writeln!(table, "factor {z}\tprior {}", model.prior()[z]).unwrap();
        for (w, p) in model.top_words(z, args.top) {
            writeln!(table, "\t{}\t{p}", vocab.term(w).expect("term id in range")).unwrap();
        }
    }
    print!("{table}");
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        let path = dir.join("topics.txt");
        write_file(&path, &table)?;
        RunManifest::new("topics", argv, args)?.write(dir, &[args.model.clone(), args.vocab.clone()], &[path])?;
    }
    Ok(())
}
