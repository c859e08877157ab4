#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

//! Rate-privacy and estimation-privacy tradeoffs for the additive Gaussian
//! privacy filter `Z = √γ·Y + N`.

#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod estimators;
pub mod models;
pub mod numerics;
pub mod tradeoff;

pub use error::{Error, Result};
