//! Probabilistic latent semantic analysis.
//!
//! The aspect model explains each observed `(document, word)` pair by a
//! hidden factor `z`:
//!
//! ```text
//! P(d, w) = sum_z P(z) P(d|z) P(w|z)
//! ```
//!
//! This crate fits it with EM and tempered EM, folds unseen queries into
//! the factor space, and provides a truncated-SVD latent semantic indexing
//! baseline plus the retrieval and perplexity harnesses used to compare
//! the two. All numeric code is generic over [`Scalar`] (`f32` or `f64`);
//! the aliases at the crate root pick `f64`.

pub mod corpus;
pub mod dense;
pub mod error;
pub mod io;
pub mod lsa;
pub mod model;
pub mod retrieval;
pub mod rng;
pub mod scalar;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type AspectModel = model::AspectModel<f64>;
pub type AspectModelF32 = model::AspectModel<f32>;
pub type LatentRepresentation = model::LatentRepresentation<f64>;
pub type PosteriorRow = model::PosteriorRow<f64>;
pub type TemConfig = trainer::TemConfig<f64>;
pub type TrainTrace = trainer::TrainTrace<f64>;
pub type Fit = trainer::Fit<f64>;
pub type SvdDecomposition = lsa::SvdDecomposition<f64>;
pub type PrSummary = retrieval::PrSummary<f64>;
pub type RetrievalRun = retrieval::RetrievalRun<f64>;
pub type DenseMatrix = dense::DenseMatrix<f64>;


