//! Accuracy markets: competing classifiers, market shares and
//! best-response dynamics.

// `!(a < b)` is how NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod cli;
pub mod config;
pub mod data_io;
pub mod dataset;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod learners;
pub mod market;
pub mod output;
pub mod threshold;
pub mod verify;

pub use classifier::Classifier;
pub use dataset::{Dataset, DatasetId};
pub use error::{Error, Result};
