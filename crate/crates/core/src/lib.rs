//! Distributional Shapley data valuation.
//!
//! The crate values training points by their expected marginal contribution
//! to a performance potential `U` over random i.i.d. datasets of size up to a
//! horizon `m`. It contains:
//!
//! * [`data`], [`rng`], [`potential`], [`value`]: shared domain types.
//! * [`potentials`]: built-in potentials (mean estimation with its closed-form
//!   value, logistic regression, k-NN and ridge accuracy).
//! * [`exact`]: brute-force oracles used to check every estimator.
//! * [`estimator`]: the Monte Carlo estimators with cardinality importance
//!   sampling, subsampling plus interpolation, and horizon-prefix extraction.
//! * [`interpolate`]: nearest-neighbour value interpolation.
//! * [`tmc`]: truncated Monte Carlo permutation sampling for fixed datasets.
//! * [`evalharness`]: point removal, cost/recovery and pricing experiments.
//! * [`synth`]: seeded synthetic fixtures.

pub mod data;
pub mod error;
pub mod estimator;
pub mod evalharness;
pub mod exact;
pub mod interpolate;
pub mod potential;
pub mod potentials;
pub mod rng;
pub mod synth;
pub mod tmc;
pub mod value;

pub use data::{sample_subset, standardize, DataPoint, Dataset, Label, LabelKind, Standardizer};
pub use error::{Error, Result};
pub use potential::Potential;
pub use rng::{RandomSource, Stream};
pub use value::{ValueEstimate, ValueTable};
