//! Unsupervised random forests over mixed-type tabular data with informative
//! (missing-not-at-random) gaps.
//!
//! The crate is `no_std` + `alloc`. The `std` feature (on by default) only
//! enables rayon-backed parallel tree fitting and distance accumulation; every
//! result is identical with or without it.
//!
//! Pipeline: a [`data::Dataset`] is fitted into a [`forest::MuralForest`];
//! the forest yields a forest-averaged tree metric ([`distance`]), from which
//! Gaussian affinities and a diffusion operator follow. Cohorts of rows are
//! compared with tree-sliced Wasserstein distances ([`transport`]).

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod data;
pub mod distance;
mod error;
pub mod forest;
pub mod metrics;
pub mod transport;

pub use error::{Error, Result};
