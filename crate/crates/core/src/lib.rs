//! Subspace restricted Boltzmann machine.
//!
//! A third-order Boltzmann machine over binary visible units `x`, binary gate
//! units `h` and binary subspace units `S` (one group of `K` subspace units per
//! gate). This crate holds everything that is pure computation:
//!
//! - [`model`]: parameters, the energy, the closed-form conditionals and the
//!   free energy,
//! - [`sampler`]: the three-phase block-Gibbs sampler (`h | x`, then
//!   `S | x, h`, then `x | h, S`),
//! - [`trainer`]: contrastive-divergence updates and the early-stopping loop,
//! - [`rbm`]: a plain binary RBM used as a baseline,
//! - [`oracle`]: brute-force enumeration for tiny models,
//! - [`data`], [`eval`], [`logreg`]: dataset splits and the evaluation metrics.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, IDX loading and
//! the command-line pipeline live in the `srbm` crate.
#![no_std]

extern crate alloc;

pub mod data;
pub mod error;
pub mod eval;
pub mod logreg;
pub mod math;
pub mod model;
pub mod oracle;
pub mod rbm;
pub mod sampler;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{ActivationCache, ModelParams, Shape};
pub use rbm::RbmParams;
pub use sampler::{ChainRng, GibbsState};
pub use trainer::{CdModel, GradientStats, TrainConfig};
