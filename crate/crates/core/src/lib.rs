// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Quadrature nodes and series coefficients are kept as published.
#![allow(clippy::excessive_precision)]

pub mod analytics;
pub mod cli;
pub mod error;
pub mod model;
pub mod optimize;
pub mod quadrature;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
