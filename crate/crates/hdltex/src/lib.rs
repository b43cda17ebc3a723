//! Files, persistence and the command line for two-level hierarchical text
//! classification. The algorithms live in [`hdltex_core`]; this crate adds
//!
//! * [`tsv`]: the three-column corpus format and the WOS release layout,
//! * [`embeddings`]: GloVe-style vector files,
//! * [`config`]: `key = value` experiment files,
//! * [`container`]: checksummed binary model files,
//! * [`train`]: child models trained on a thread pool,
//! * [`report`] and [`cli`]: output formats and the `hdltex` command.

pub mod cli;
pub mod config;
pub mod container;
pub mod embeddings;
mod error;
pub mod report;
pub mod train;
pub mod tsv;

pub use error::{Error, Result};
pub use hdltex_core;
