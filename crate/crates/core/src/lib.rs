//! Error-correcting tournaments and filter-tree reductions from multiclass
//! and cost-sensitive classification to binary classification.

pub mod analysis;
pub mod bench;
pub mod cli;
pub mod data;
pub mod domain;
pub mod error;
pub mod learners;
pub mod reductions;
pub mod tournaments;

pub use error::{Error, Result};
