use plsa::corpus::{load_counts, save_counts, split_heldout};
use plsa::io::save_model;
use plsa::AspectModel;

use super::create_dir;
use crate::error::Result;
use crate::manifest::RunManifest;
use crate::{SplitArgs, UnigramArgs};

pub fn split(args: &SplitArgs, argv: &[String]) -> Result<()> {
    let counts = load_counts(&args.counts)?;
    let pair = split_heldout(&counts, args.fraction, args.seed)?;
    create_dir(&args.out)?;
    let outputs = vec![args.out.join("train.txt"), args.out.join("heldout.txt")];
    save_counts(&outputs[0], &pair.train)?;
    save_counts(&outputs[1], &pair.heldout)?;
    RunManifest::new("split", argv, args)?.write(&args.out, std::slice::from_ref(&args.counts), &outputs)?;
    println!("train={} heldout={}", pair.train.total(), pair.heldout.total());
    Ok(())
}

pub fn unigram(args: &UnigramArgs, argv: &[String]) -> Result<()> {
    let counts = load_counts(&args.counts)?;
    let model = AspectModel::unigram_baseline(&counts)?;
    create_dir(&args.out)?;
    let path = args.out.join("unigram.txt");
    save_model(&model, &[("mode", "unigram".into())], &path)?;
    RunManifest::new("unigram", argv, args)?.write(&args.out, std::slice::from_ref(&args.counts), &[path])?;
    Ok(())
}
