//! Brute-force ground truth for tiny models.
//!
//! Everything here is computed by enumerating every joint configuration and
//! summing `exp(-E)` in log space. The energy is re-evaluated with a plain
//! triple loop ([`reference_energy`]) rather than through the model's own
//! routines, so agreement with the closed forms in [`crate::model`] is a real
//! cross-check.

// Index loops mirror the sums they compute.
#![allow(clippy::needless_range_loop)]

pub mod check;
pub mod rbm;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::math::{self, log_sum_exp};
use crate::model::{ModelParams, Shape};
use crate::trainer::GradientStats;

/// Largest joint configuration space the oracle will enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumBudget {
    pub max_total_bits: usize,
}

impl Default for EnumBudget {
    fn default() -> Self {
        Self { max_total_bits: 20 }
    }
}

impl EnumBudget {
    pub fn check(&self, bits: usize) -> Result<()> {
        if bits > self.max_total_bits {
            Err(Error::BudgetExceeded {
                bits,
                max: self.max_total_bits,
            })
        } else {
            Ok(())
        }
    }
}

/// Bit `t` of `index` becomes entry `t`.
pub fn decode(index: usize, len: usize) -> Vec<u8> {
    (0..len).map(|t| ((index >> t) & 1) as u8).collect()
}

/// Inverse of [`decode`].
pub fn encode(bits: &[u8]) -> usize {
    bits.iter().enumerate().map(|(t, &b)| usize::from(b != 0) << t).sum()
}

/// `E(x, h, S)` written out term by term from the definition.
pub fn reference_energy(p: &ModelParams, x: &[u8], h: &[u8], s: &[u8]) -> f64 {
    let shape = p.shape();
    let (d, m, k) = (shape.visible(), shape.gates(), shape.subspace());
    let mut e = 0.0;
    for i in 0..d {
        for j in 0..m {
            for kk in 0..k {
                e -= p.weight(i, j, kk) * f64::from(x[i]) * f64::from(h[j]) * f64::from(s[j * k + kk]);
            }
        }
    }
    for i in 0..d {
        e -= p.b()[i] * f64::from(x[i]);
    }
    for j in 0..m {
        e -= p.c()[j] * f64::from(h[j]);
    }
    for j in 0..m {
        for kk in 0..k {
            e -= f64::from(h[j]) * p.d()[j * k + kk] * f64::from(s[j * k + kk]);
        }
    }
    e
}

/// Probabilities `Σ_{c ∈ sel} w_c / Σ_c w_c` for several selectors at once,
/// given log-weights and the 0/1 features of each configuration.
fn normalised_means<'a, I>(entries: I, features: usize) -> Vec<f64>
where
    I: Iterator<Item = (f64, &'a [u8])> + Clone,
{
    let max = entries.clone().map(|(lw, _)| lw).fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    let mut sums = vec![0.0; features];
    for (lw, bits) in entries {
        let w = math::exp(lw - max);
        total += w;
        for (s, &b) in sums.iter_mut().zip(bits) {
            if b != 0 {
                *s += w;
            }
        }
    }
    sums.into_iter().map(|s| s / total).collect()
}

/// Log-weights `-E(x, h, S)` for every joint configuration.
///
/// The flat index is `(x_idx · 2^M + h_idx) · 2^(MK) + s_idx`.
#[derive(Debug, Clone)]
pub struct JointTable {
    shape: Shape,
    log_weights: Vec<f64>,
    xs: Vec<Vec<u8>>,
    hs: Vec<Vec<u8>>,
    ss: Vec<Vec<u8>>,
}

impl JointTable {
    pub fn new(p: &ModelParams, budget: EnumBudget) -> Result<Self> {
        let shape = p.shape();
        budget.check(shape.total_bits())?;
        let xs: Vec<Vec<u8>> = (0..1usize << shape.visible()).map(|n| decode(n, shape.visible())).collect();
        let hs: Vec<Vec<u8>> = (0..1usize << shape.gates()).map(|n| decode(n, shape.gates())).collect();
        let ss: Vec<Vec<u8>> = (0..1usize << shape.hidden_pairs())
            .map(|n| decode(n, shape.hidden_pairs()))
            .collect();
        let mut log_weights = Vec::with_capacity(xs.len() * hs.len() * ss.len());
        for x in &xs {
            for h in &hs {
                for s in &ss {
                    log_weights.push(-reference_energy(p, x, h, s));
                }
            }
        }
        Ok(Self {
            shape,
            log_weights,
            xs,
            hs,
            ss,
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn num_x(&self) -> usize {
        self.xs.len()
    }

    pub fn num_h(&self) -> usize {
        self.hs.len()
    }

    pub fn num_s(&self) -> usize {
        self.ss.len()
    }

    pub fn x(&self, idx: usize) -> &[u8] {
        &self.xs[idx]
    }

    pub fn h(&self, idx: usize) -> &[u8] {
        &self.hs[idx]
    }

    pub fn s(&self, idx: usize) -> &[u8] {
        &self.ss[idx]
    }

    #[inline]
    fn at(&self, x: usize, h: usize, s: usize) -> f64 {
        self.log_weights[(x * self.hs.len() + h) * self.ss.len() + s]
    }

    /// `log Z`.
    pub fn log_partition(&self) -> f64 {
        log_sum_exp(&self.log_weights)
    }

    /// `Z = exp(max) · Σ exp(-E - max)`; exact when every energy is zero.
    pub fn partition(&self) -> f64 {
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        math::exp(max) * self.log_weights.iter().map(|lw| math::exp(lw - max)).sum::<f64>()
    }

    /// `log Σ_{h,S} exp(-E(x, h, S)) = -F(x)` for one visible index.
    pub fn log_unnorm_marginal_x(&self, x: usize) -> f64 {
        let block = self.hs.len() * self.ss.len();
        log_sum_exp(&self.log_weights[x * block..(x + 1) * block])
    }

    /// `log p(x)` for every visible configuration.
    pub fn log_marginal_x(&self) -> Vec<f64> {
        let log_z = self.log_partition();
        (0..self.xs.len()).map(|x| self.log_unnorm_marginal_x(x) - log_z).collect()
    }

    /// `p(h_j = 1 | x)`.
    pub fn prob_h_given_x(&self, x: usize) -> Vec<f64> {
        let entries = (0..self.hs.len()).flat_map(move |h| (0..self.ss.len()).map(move |s| (self.at(x, h, s), self.hs[h].as_slice())));
        normalised_means(entries, self.shape.gates())
    }

    /// `p(s_jk = 1 | x, h)`.
    pub fn prob_s_given_xh(&self, x: usize, h: usize) -> Vec<f64> {
        let entries = (0..self.ss.len()).map(move |s| (self.at(x, h, s), self.ss[s].as_slice()));
        normalised_means(entries, self.shape.hidden_pairs())
    }

    /// `p(x_i = 1 | h, S)`.
    pub fn prob_x_given_hs(&self, h: usize, s: usize) -> Vec<f64> {
        let entries = (0..self.xs.len()).map(move |x| (self.at(x, h, s), self.xs[x].as_slice()));
        normalised_means(entries, self.shape.visible())
    }

    /// `p(x | h)` over every visible configuration, `S` summed out.
    pub fn prob_x_given_h(&self, h: usize) -> Vec<f64> {
        let logs: Vec<f64> = (0..self.xs.len())
            .map(|x| {
                let row: Vec<f64> = (0..self.ss.len()).map(|s| self.at(x, h, s)).collect();
                log_sum_exp(&row)
            })
            .collect();
        let norm = log_sum_exp(&logs);
        logs.into_iter().map(|l| math::exp(l - norm)).collect()
    }

    /// Expectation of `-∂E/∂θ` over the configurations selected by `x`
    /// (one visible index) or over everything (`None`).
    pub fn expected_stats(&self, x: Option<usize>) -> GradientStats {
        let xs: Vec<usize> = match x {
            Some(x) => vec![x],
            None => (0..self.xs.len()).collect(),
        };
        let mut max = f64::NEG_INFINITY;
        for &xi in &xs {
            for h in 0..self.hs.len() {
                for s in 0..self.ss.len() {
                    max = max.max(self.at(xi, h, s));
                }
            }
        }
        let shape = self.shape;
        let (d, m, k) = (shape.visible(), shape.gates(), shape.subspace());
        let mut g = GradientStats::zeros(shape);
        let mut total = 0.0;
        for &xi in &xs {
            let xv = &self.xs[xi];
            for h in 0..self.hs.len() {
                let hv = &self.hs[h];
                for s in 0..self.ss.len() {
                    let sv = &self.ss[s];
                    let w = math::exp(self.at(xi, h, s) - max);
                    total += w;
                    for i in 0..d {
                        for j in 0..m {
                            for kk in 0..k {
                                g.gw[(i * m + j) * k + kk] += w * f64::from(xv[i] * hv[j] * sv[j * k + kk]);
                            }
                        }
                        g.gb[i] += w * f64::from(xv[i]);
                    }
                    for j in 0..m {
                        g.gc[j] += w * f64::from(hv[j]);
                        for kk in 0..k {
                            g.gd[j * k + kk] += w * f64::from(hv[j] * sv[j * k + kk]);
                        }
                    }
                }
            }
        }
        g.scale(1.0 / total);
        g
    }
}

/// `Z` summed over every joint configuration.
pub fn partition_function(p: &ModelParams, budget: EnumBudget) -> Result<f64> {
    Ok(JointTable::new(p, budget)?.partition())
}

pub fn log_partition_function(p: &ModelParams, budget: EnumBudget) -> Result<f64> {
    Ok(JointTable::new(p, budget)?.log_partition())
}

/// Every conditional of the model, tabulated by summing the joint.
#[derive(Debug, Clone)]
pub struct ExactConditionals {
    /// `prob_h[x_idx][j] = p(h_j = 1 | x)`.
    pub prob_h: Vec<Vec<f64>>,
    /// `prob_s[x_idx · 2^M + h_idx][jk] = p(s_jk = 1 | x, h)`.
    pub prob_s: Vec<Vec<f64>>,
    /// `prob_x[h_idx · 2^(MK) + s_idx][i] = p(x_i = 1 | h, S)`.
    pub prob_x: Vec<Vec<f64>>,
}

pub fn exact_conditionals(p: &ModelParams, budget: EnumBudget) -> Result<ExactConditionals> {
    let t = JointTable::new(p, budget)?;
    Ok(conditionals_from(&t))
}

pub fn conditionals_from(t: &JointTable) -> ExactConditionals {
    let prob_h = (0..t.num_x()).map(|x| t.prob_h_given_x(x)).collect();
    let mut prob_s = Vec::with_capacity(t.num_x() * t.num_h());
    for x in 0..t.num_x() {
        for h in 0..t.num_h() {
            prob_s.push(t.prob_s_given_xh(x, h));
        }
    }
    let mut prob_x = Vec::with_capacity(t.num_h() * t.num_s());
    for h in 0..t.num_h() {
        for s in 0..t.num_s() {
            prob_x.push(t.prob_x_given_hs(h, s));
        }
    }
    ExactConditionals { prob_h, prob_s, prob_x }
}

/// `Σ_n log p(x_n)` and its gradient: clamped minus model expectations of
/// `-∂E/∂θ`, summed over the data.
pub fn exact_loglik_and_grad(data: &[&[u8]], p: &ModelParams, budget: EnumBudget) -> Result<(f64, GradientStats)> {
    let t = JointTable::new(p, budget)?;
    loglik_and_grad_from(&t, data)
}

pub fn loglik_and_grad_from(t: &JointTable, data: &[&[u8]]) -> Result<(f64, GradientStats)> {
    if data.is_empty() {
        return Err(Error::Empty("data"));
    }
    let shape = t.shape();
    let log_z = t.log_partition();
    let model = t.expected_stats(None);
    let mut ll = 0.0;
    let mut grad = GradientStats::zeros(shape);
    for x in data {
        check_len("visible vector", shape.visible(), x.len())?;
        let idx = encode(x);
        ll += t.log_unnorm_marginal_x(idx) - log_z;
        grad.add_scaled(1.0, &t.expected_stats(Some(idx)));
        grad.add_scaled(-1.0, &model);
    }
    Ok((ll, grad))
}

/// Exact log-likelihood only.
pub fn exact_loglik(data: &[&[u8]], p: &ModelParams, budget: EnumBudget) -> Result<f64> {
    let t = JointTable::new(p, budget)?;
    let log_z = t.log_partition();
    let mut ll = 0.0;
    for x in data {
        check_len("visible vector", p.shape().visible(), x.len())?;
        ll += t.log_unnorm_marginal_x(encode(x)) - log_z;
    }
    Ok(ll)
}

/// Central differences of `f` in every parameter coordinate.
pub fn finite_diff_grad<F>(p: &ModelParams, epsilon: f64, mut f: F) -> GradientStats
where
    F: FnMut(&ModelParams) -> f64,
{
    let shape = p.shape();
    let mut flat = Vec::with_capacity(shape.parameter_count());
    let mut probe = p.clone();
    for idx in 0..shape.parameter_count() {
        let orig = *probe.iter().nth(idx).expect("index within parameter count");
        set_param(&mut probe, idx, orig + epsilon);
        let up = f(&probe);
        set_param(&mut probe, idx, orig - epsilon);
        let down = f(&probe);
        set_param(&mut probe, idx, orig);
        flat.push((up - down) / (2.0 * epsilon));
    }
    GradientStats::from_flat(shape, &flat).expect("one entry per parameter")
}

fn set_param(p: &mut ModelParams, idx: usize, value: f64) {
    *p.iter_mut().nth(idx).expect("index within parameter count") = value;
}
