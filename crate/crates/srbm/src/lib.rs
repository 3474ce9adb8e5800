//! File formats, MNIST loading and the command pipeline for the subspace RBM.

pub mod check;
pub mod commands;
pub mod config;
pub mod error;
pub mod idx;
pub mod mnist;
pub mod model_file;
pub mod pgm;
pub mod report;

pub use error::{Error, Result};
