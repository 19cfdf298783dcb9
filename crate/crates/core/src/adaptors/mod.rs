//! Sampling adaptors and the models they induce.

pub mod adapted;
pub mod transform;

pub use adapted::{AdaptedModel, GlobalNormalizer, SAMPLE_CAP};
pub use transform::{Composition, Scaling, TransformFunction, Truncation};
