//! Enumeration oracle for the RBM baseline.

use alloc::vec;
use alloc::vec::Vec;

use super::{decode, encode, EnumBudget};
use crate::error::{check_len, Error, Result};
use crate::math::{self, log_sum_exp};
use crate::rbm::RbmParams;

fn reference_energy(p: &RbmParams, x: &[u8], h: &[u8]) -> f64 {
    let (d, m) = (p.visible(), p.hidden());
    let mut e = 0.0;
    for i in 0..d {
        for j in 0..m {
            e -= p.w()[i * m + j] * f64::from(x[i]) * f64::from(h[j]);
        }
        e -= p.b()[i] * f64::from(x[i]);
    }
    for j in 0..m {
        e -= p.c()[j] * f64::from(h[j]);
    }
    e
}

/// Log-weights of every `(x, h)`, flat index `x_idx · 2^M + h_idx`.
#[derive(Debug, Clone)]
pub struct RbmJointTable {
    visible: usize,
    hidden: usize,
    log_weights: Vec<f64>,
    xs: Vec<Vec<u8>>,
    hs: Vec<Vec<u8>>,
}

impl RbmJointTable {
    pub fn new(p: &RbmParams, budget: EnumBudget) -> Result<Self> {
        budget.check(p.visible() + p.hidden())?;
        let xs: Vec<Vec<u8>> = (0..1usize << p.visible()).map(|n| decode(n, p.visible())).collect();
        let hs: Vec<Vec<u8>> = (0..1usize << p.hidden()).map(|n| decode(n, p.hidden())).collect();
        let mut log_weights = Vec::with_capacity(xs.len() * hs.len());
        for x in &xs {
            for h in &hs {
                log_weights.push(-reference_energy(p, x, h));
            }
        }
        Ok(Self {
            visible: p.visible(),
            hidden: p.hidden(),
            log_weights,
            xs,
            hs,
        })
    }

    #[inline]
    fn at(&self, x: usize, h: usize) -> f64 {
        self.log_weights[x * self.hs.len() + h]
    }

    pub fn num_x(&self) -> usize {
        self.xs.len()
    }

    pub fn num_h(&self) -> usize {
        self.hs.len()
    }

    pub fn x(&self, idx: usize) -> &[u8] {
        &self.xs[idx]
    }

    pub fn h(&self, idx: usize) -> &[u8] {
        &self.hs[idx]
    }

    pub fn log_partition(&self) -> f64 {
        log_sum_exp(&self.log_weights)
    }

    pub fn prob_h_given_x(&self, x: usize) -> Vec<f64> {
        let entries = (0..self.hs.len()).map(|h| (self.at(x, h), self.hs[h].as_slice()));
        super::normalised_means(entries, self.hidden)
    }

    pub fn prob_x_given_h(&self, h: usize) -> Vec<f64> {
        let entries = (0..self.xs.len()).map(|x| (self.at(x, h), self.xs[x].as_slice()));
        super::normalised_means(entries, self.visible)
    }

    /// Expected `[x hᵀ, x, h]` over the configurations with visible index `x`,
    /// or over everything.
    fn expected_stats(&self, x: Option<usize>) -> Vec<f64> {
        let xs: Vec<usize> = match x {
            Some(x) => vec![x],
            None => (0..self.xs.len()).collect(),
        };
        let (d, m) = (self.visible, self.hidden);
        let max = xs
            .iter()
            .flat_map(|&xi| (0..self.hs.len()).map(move |h| (xi, h)))
            .map(|(xi, h)| self.at(xi, h))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut g = vec![0.0; d * m + d + m];
        let mut total = 0.0;
        for &xi in &xs {
            for h in 0..self.hs.len() {
                let w = math::exp(self.at(xi, h) - max);
                total += w;
                let (xv, hv) = (&self.xs[xi], &self.hs[h]);
                for i in 0..d {
                    for j in 0..m {
                        g[i * m + j] += w * f64::from(xv[i] * hv[j]);
                    }
                    g[d * m + i] += w * f64::from(xv[i]);
                }
                for j in 0..m {
                    g[d * m + d + j] += w * f64::from(hv[j]);
                }
            }
        }
        g.iter_mut().for_each(|v| *v /= total);
        g
    }

    /// `Σ_n log p(x_n)` and its gradient in `[W, b, c]` order.
    pub fn loglik_and_grad(&self, data: &[&[u8]]) -> Result<(f64, Vec<f64>)> {
        if data.is_empty() {
            return Err(Error::Empty("data"));
        }
        let log_z = self.log_partition();
        let model = self.expected_stats(None);
        let mut ll = 0.0;
        let mut grad = vec![0.0; model.len()];
        for x in data {
            check_len("visible vector", self.visible, x.len())?;
            let idx = encode(x);
            let row: Vec<f64> = (0..self.hs.len()).map(|h| self.at(idx, h)).collect();
            ll += log_sum_exp(&row) - log_z;
            for ((g, c), m) in grad.iter_mut().zip(self.expected_stats(Some(idx))).zip(&model) {
                *g += c - m;
            }
        }
        Ok((ll, grad))
    }
}

pub fn rbm_exact_loglik_and_grad(data: &[&[u8]], p: &RbmParams, budget: EnumBudget) -> Result<(f64, Vec<f64>)> {
    RbmJointTable::new(p, budget)?.loglik_and_grad(data)
}
