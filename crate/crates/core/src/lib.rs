// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod env;
pub mod error;
pub mod eval;
pub mod models;
pub mod rng;
pub mod udrl;

pub use error::{Result, UdrlError};
