use std::path::PathBuf;

use plsa::corpus::load_counts;
use plsa::io::{save_model, save_svd};
use plsa::lsa::{truncated_svd_with, SvdOptions};
use plsa::trainer::{fit_em, fit_tem};
use plsa::{Fit, SvdDecomposition, TemConfig};
use rayon::prelude::*;

use super::{create_dir, write_file};
use crate::error::Result;
use crate::manifest::RunManifest;
use crate::{LsaArgs, Mode, TrainArgs};

pub fn run(args: &TrainArgs, argv: &[String]) -> Result<()> {
    let counts = load_counts(&args.counts)?;
    let config = TemConfig {
        eta: args.eta,
        beta_min: args.beta_min,
        max_iters_per_beta: args.max_iters_per_beta,
        improvement_tol: args.tol,
        max_total_iters: args.max_iters,
        seed: args.seed,
        heldout_fraction: args.heldout,
    };
    config.validate()?;
    let fits: Vec<plsa::Result<Fit>> = args
        .k
        .par_iter()
        .map(|&k| match args.mode {
            Mode::Em => fit_em(&counts, k, &config),
            Mode::Tem => fit_tem(&counts, k, &config),
        })
        .collect();

    create_dir(&args.out)?;
    let mut outputs: Vec<PathBuf> = Vec::new();
    for (&k, fit) in args.k.iter().zip(fits) {
        let fit = fit?;
        let best = fit.trace.best();
        let mode = match args.mode {
            Mode::Em => "em",
            Mode::Tem => "tem",
        };
        let meta = [
            ("mode", mode.to_string()),
            ("seed", args.seed.to_string()),
            ("beta", best.beta.to_string()),
            ("best_iteration", fit.trace.best_iteration.to_string()),
            ("heldout_perplexity", best.heldout_perplexity.to_string()),
            ("stopping_reason", fit.trace.stopping_reason.to_string()),
        ];
        let model_path = args.out.join(format!("model-k{k}.txt"));
        save_model(&fit.model, &meta, &model_path)?;
        let trace_path = args.out.join(format!("trace-k{k}.tsv"));
        write_file(&trace_path, &fit.trace.to_table())?;
        println!(
            "k={k} mode={mode} iterations={} best_beta={} heldout_ppx={} stop={}",
            fit.trace.records.len(),
            best.beta,
            best.heldout_perplexity,
            fit.trace.stopping_reason
        );
        outputs.push(model_path);
        outputs.push(trace_path);
    }
    RunManifest::new("train", argv, args)?.write(&args.out, std::slice::from_ref(&args.counts), &outputs)?;
    Ok(())
}

pub fn lsa(args: &LsaArgs, argv: &[String]) -> Result<()> {
    let counts = load_counts(&args.counts)?;
    let options = SvdOptions {
        tol: args.tol,
        seed: args.seed,
    };
    let decomps: Vec<plsa::Result<SvdDecomposition>> =
        args.k.par_iter().map(|&k| truncated_svd_with(&counts, k, &options)).collect();
    create_dir(&args.out)?;
    let mut outputs = Vec::new();
    for (&k, svd) in args.k.iter().zip(decomps) {
        let svd = svd?;
        let path = args.out.join(format!("svd-k{k}.txt"));
        save_svd(&svd, &path)?;
        println!(
            "k={k} sigma_max={} sigma_min={} residual={:e}",
            svd.sigma[0],
            svd.sigma[k - 1],
            svd.max_residual(&counts)
        );
        outputs.push(path);
    }
    RunManifest::new("lsa", argv, args)?.write(&args.out, std::slice::from_ref(&args.counts), &outputs)?;
    Ok(())
}
