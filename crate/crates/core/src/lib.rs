//! Exact, desk-scale machinery for the probability-quality trade-off in
//! aligned language models.

// `!(x > 0.0)` is how NaN gets rejected along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptors;
pub mod alignment;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod imha;
pub mod lm;
pub mod numeric;
pub mod rng;
pub mod stats;
pub mod typicality;

pub use error::{Error, Result};
