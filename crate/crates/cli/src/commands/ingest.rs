use std::collections::HashSet;
use std::path::PathBuf;

use plsa::corpus::{
    build_counts, load_counts, load_stopwords, load_vocab, parse_smart_collection, save_counts, save_doc_ids,
    save_vocab, tokenize, Vocabulary,
};

use super::create_dir;
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::{IngestArgs, InputFormat};

pub fn run(args: &IngestArgs, argv: &[String]) -> Result<()> {
    let stopwords = args.stopwords.as_deref().map(load_stopwords).transpose()?;
    let (vocab, counts, ids) = match args.format {
        InputFormat::Triples => {
            let [input] = args.inputs.as_slice() else {
                return Err(CliError::Usage("--format triples takes exactly one input".into()));
            };
            let counts = load_counts(input)?;
            let vocab = match &args.vocab {
                Some(path) => load_vocab(path)?,
                None => Vocabulary::from_terms((0..counts.n_terms()).map(|w| format!("w{w}")))?,
            };
            if vocab.len() != counts.n_terms() {
                return Err(plsa::Error::DimensionMismatch(format!(
                    "vocabulary has {} terms, counts have {}",
                    vocab.len(),
                    counts.n_terms()
                ))
                .into());
            }
            let ids = (1..=counts.n_docs()).map(|i| i.to_string()).collect();
            (vocab, counts, ids)
        }
        InputFormat::Raw | InputFormat::Smart => {
            let mut ids = Vec::new();
            let mut texts = Vec::new();
            for input in &args.inputs {
                if args.format == InputFormat::Smart {
                    for doc in parse_smart_collection(input)? {
                        ids.push(doc.id);
                        texts.push(doc.text);
                    }
                } else {
                    let text = std::fs::read_to_string(input).map_err(|e| CliError::io(input, e))?;
                    for line in text.lines().filter(|l| !l.trim().is_empty()) {
                        ids.push((ids.len() + 1).to_string());
                        texts.push(line.to_string());
                    }
                }
            }
            let mut seen = HashSet::new();
            if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
                return Err(plsa::Error::InvalidCounts(format!("document id {dup} appears twice")).into());
            }
            let tokens: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t, stopwords.as_ref())).collect();
            let (vocab, counts) = build_counts(&tokens)?;
            (vocab, counts, ids)
        }
    };

    create_dir(&args.out)?;
    let outputs: Vec<PathBuf> = ["counts.txt", "vocab.txt", "docs.txt"].iter().map(|f| args.out.join(f)).collect();
    save_counts(&outputs[0], &counts)?;
    save_vocab(&outputs[1], &vocab)?;
    save_doc_ids(&outputs[2], &ids)?;
    let mut inputs = args.inputs.clone();
    inputs.extend(args.stopwords.iter().cloned());
    inputs.extend(args.vocab.iter().cloned());
    RunManifest::new("ingest", argv, args)?.write(&args.out, &inputs, &outputs)?;
    println!("N={} M={} tokens={}", counts.n_docs(), counts.n_terms(), counts.total());
    Ok(())
}
