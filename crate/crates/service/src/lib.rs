//! Model files, run manifests, the `udrl` command line and the HTTP API.

pub mod api;
pub mod cli;
pub mod error;
mod fsutil;
pub mod manifest;
pub mod model_io;

pub use error::{Result, ServiceError};
pub use fsutil::write_atomic;
