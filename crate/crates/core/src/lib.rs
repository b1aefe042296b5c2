//! Statistical inference for graphs observed through a noisy
//! edge-assessment channel.
//!
//! A true graph follows a stochastic blockmodel. Instead of seeing its
//! edges, an observer pays to assess a fraction of the potential edges
//! at a chosen quality level, receives a scalar feature per assessed
//! pair, and thresholds that feature to declare edge or non-edge. This
//! crate computes, exactly and by simulation, how well the block label
//! of a held-out vertex can be recovered from such an observation, and
//! finds the quantity/quality operating point that minimizes the
//! misclassification probability.
//!
//! Module map:
//! - [`special`]: log-gamma, binomial pmf/cdf, incomplete beta, normal CDF.
//! - [`model`]: blockmodel, feature family, assessment channel, the
//!   effective block matrix of the observed graph.
//! - [`exact`]: exact misclassification probability by enumeration,
//!   its balanced two-block closed form, and the normal approximation.
//! - [`optimize`]: error surfaces over the (quality, threshold) grid
//!   and the alternative design criteria.
//! - [`sim`]: graph sampling, observation channels, vertex classifiers,
//!   estimation, Monte Carlo and leave-one-out harnesses.
//! - [`embed`]: eigensolver, adjacency spectral embedding, linear
//!   discriminant, and the embedding-pipeline Monte Carlo.

pub mod embed;
pub mod error;
pub mod exact;
pub mod model;
pub mod optimize;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
pub use special::Probability;
