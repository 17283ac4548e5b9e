use rand::Rng;

use super::counts::{CountMatrix, Entry};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// Occurrence-level partition of a count table.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: CountMatrix,
    pub heldout: CountMatrix,
    pub seed: u64,
    pub fraction: f64,
}

/// Sends every token occurrence to the held-out side independently with
/// probability `fraction`. A cell's count may end up split across both sides.
pub fn split_heldout(counts: &CountMatrix, fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "held-out fraction {fraction} outside (0, 1)"
        )));
    }
    let mut rng = stream(seed, Stream::Split);
    let mut train = Vec::with_capacity(counts.nnz());
    let mut heldout = Vec::new();
    for e in counts.entries() {
        let held = (0..e.count)
            .filter(|_| rng.random::<f64>() < fraction)
            .count() as u32;
        if held > 0 {
            heldout.push(Entry { count: held, ..*e });
        }
        if held < e.count {
            train.push(Entry {
                count: e.count - held,
                ..*e
            });
        }
    }
    let (n, m) = (counts.n_docs(), counts.n_terms());
    Ok(SplitPair {
        train: CountMatrix::from_sorted(n, m, train),
        heldout: CountMatrix::from_sorted(n, m, heldout),
        seed,
        fraction,
    })
}
