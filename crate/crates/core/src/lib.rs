//! Fill-in-the-middle example construction, repository context retrieval,
//! token-budgeted prompt assembly, benchmark curation and completion scoring.

pub mod config;
pub mod context;
pub mod dataset;
pub mod error;
pub mod evalrun;
pub mod exec;
pub mod fim;
pub mod lexing;
pub mod metrics;
pub mod similarity;

pub use error::{Error, Result};
pub use exec::Execution;
