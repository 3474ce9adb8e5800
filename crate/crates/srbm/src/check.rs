//! Faulty closed forms used to confirm the oracle sweep detects errors.

use srbm_core::math::{sigmoid, softplus};
use srbm_core::oracle::check::{ClosedForms, ModelCore};
use srbm_core::trainer::GradientStats;
use srbm_core::{ModelParams, Result};

/// Named faults selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// `p(h_j = 1 | x)` without the `−K ln 2` term.
    DropGatePenalty,
}

impl Mutation {
    pub const NAMES: [&'static str; 1] = ["drop-gate-penalty"];

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "drop-gate-penalty" => Some(Mutation::DropGatePenalty),
            _ => None,
        }
    }
}

/// The real closed forms except for one injected fault.
#[derive(Debug, Clone, Copy)]
pub struct Mutated(pub Mutation);

impl ClosedForms for Mutated {
    fn prob_h_given_x(&self, p: &ModelParams, x: &[u8]) -> Result<Vec<f64>> {
        match self.0 {
            Mutation::DropGatePenalty => {
                let cache = p.activations(x)?;
                Ok(cache
                    .rows()
                    .zip(p.c())
                    .map(|(a, c)| sigmoid(c + a.iter().map(|&v| softplus(v)).sum::<f64>()))
                    .collect())
            }
        }
    }

    fn prob_s_given_xh(&self, p: &ModelParams, x: &[u8], h: &[u8]) -> Result<Vec<f64>> {
        ModelCore.prob_s_given_xh(p, x, h)
    }

    fn prob_x_given_hs(&self, p: &ModelParams, h: &[u8], s: &[u8]) -> Result<Vec<f64>> {
        ModelCore.prob_x_given_hs(p, h, s)
    }

    fn log_unnorm_p_x_given_h(&self, p: &ModelParams, x: &[u8], h: &[u8]) -> Result<f64> {
        ModelCore.log_unnorm_p_x_given_h(p, x, h)
    }

    fn free_energy(&self, p: &ModelParams, x: &[u8]) -> Result<f64> {
        ModelCore.free_energy(p, x)
    }

    fn positive_stats(&self, p: &ModelParams, x: &[u8]) -> Result<GradientStats> {
        ModelCore.positive_stats(p, x)
    }
}
