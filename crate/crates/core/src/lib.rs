//! Algorithms for small imbalanced tabular classification problems.
//!
//! Everything here is pure computation over in-memory data and builds
//! without `std`; file formats, reports and the command line live in the
//! `vinum` crate. Enabling the `std` feature lets grid search, forest
//! training and permutation importance run on a rayon pool. Results do not
//! depend on the number of workers because every randomized task draws from
//! its own seeded stream (see [`rng`]).
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod data;
pub mod error;
pub mod importance;
pub mod knn;
pub mod math;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod preprocess;
pub mod rng;
pub mod sampling;
pub mod svm;
pub mod tree;
pub mod tuning;

pub use data::{Dataset, QualityClass, RawDataset};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{ModelFamily, ParamValue, TrainConfig, TrainedModel};

pub(crate) mod par;
