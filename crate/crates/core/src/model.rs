//! Parameters and closed-form probabilities of the subspace RBM.
//!
//! The energy of a joint configuration is
//!
//! ```text
//! E(x, h, S) = -Σ_ijk W_ijk x_i h_j s_jk - Σ_i b_i x_i - Σ_j c_j h_j - Σ_jk D_jk h_j s_jk
//! ```
//!
//! Binary vectors are passed as `&[u8]` slices holding 0 or 1. The subspace
//! matrix `S` (and anything else shaped `M × K`) is flattened row-major, so
//! entry `(j, k)` sits at `j * K + k`. The weight tensor is stored with the
//! visible index outermost: `W[i][j][k]` sits at `(i * M + j) * K + k`, which
//! makes each visible unit's `M·K` weights one contiguous row.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_finite, check_len, Error, Result};
use crate::math::{self, dot, gate_penalty, log_add_exp, sigmoid, softplus};

/// Layer sizes: visible units, gate units, subspace units per gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    visible: usize,
    gates: usize,
    subspace: usize,
}

impl Shape {
    pub fn new(visible: usize, gates: usize, subspace: usize) -> Result<Self> {
        if visible == 0 {
            return Err(Error::InvalidShape("visible units must be positive"));
        }
        if gates == 0 {
            return Err(Error::InvalidShape("gate units must be positive"));
        }
        if subspace == 0 {
            return Err(Error::InvalidShape("subspace units must be positive"));
        }
        Ok(Self { visible, gates, subspace })
    }

    #[inline]
    pub fn visible(&self) -> usize {
        self.visible
    }

    #[inline]
    pub fn gates(&self) -> usize {
        self.gates
    }

    #[inline]
    pub fn subspace(&self) -> usize {
        self.subspace
    }

    /// Number of subspace units over all gates, `M·K`.
    #[inline]
    pub fn hidden_pairs(&self) -> usize {
        self.gates * self.subspace
    }

    #[inline]
    pub fn weight_len(&self) -> usize {
        self.visible * self.gates * self.subspace
    }

    /// Binary variables in a joint configuration, `D + M + M·K`.
    pub fn total_bits(&self) -> usize {
        self.visible + self.gates + self.hidden_pairs()
    }

    /// Number of real parameters, `D·M·K + D + M + M·K`.
    pub fn parameter_count(&self) -> usize {
        self.weight_len() + self.visible + self.gates + self.hidden_pairs()
    }
}

/// Full parameter set `{W, b, c, D}` of a subspace RBM.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    shape: Shape,
    w: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
}

impl ModelParams {
    /// All parameters zero.
    pub fn zeros(shape: Shape) -> Self {
        Self {
            shape,
            w: vec![0.0; shape.weight_len()],
            b: vec![0.0; shape.visible],
            c: vec![0.0; shape.gates],
            d: vec![0.0; shape.hidden_pairs()],
        }
    }

    /// Builds a parameter set from flat buffers, checking lengths and finiteness.
    pub fn from_parts(shape: Shape, w: Vec<f64>, b: Vec<f64>, c: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        check_len("W", shape.weight_len(), w.len())?;
        check_len("b", shape.visible, b.len())?;
        check_len("c", shape.gates, c.len())?;
        check_len("D", shape.hidden_pairs(), d.len())?;
        check_finite("W", &w)?;
        check_finite("b", &b)?;
        check_finite("c", &c)?;
        check_finite("D", &d)?;
        Ok(Self { shape, w, b, c, d })
    }

    /// Training initialisation: `W` and `D` drawn i.i.d. from `N(0, std²)`,
    /// biases zero.
    pub fn init_normal<R: Rng + ?Sized>(shape: Shape, std: f64, rng: &mut R) -> Result<Self> {
        let normal =
            Normal::new(0.0, std).map_err(|_| Error::InvalidConfig("initial weight std must be finite and non-negative".into()))?;
        let mut p = Self::zeros(shape);
        for v in p.w.iter_mut() {
            *v = normal.sample(rng);
        }
        for v in p.d.iter_mut() {
            *v = normal.sample(rng);
        }
        Ok(p)
    }

    /// Every parameter drawn from `N(0, std²)`; used to build random test models.
    pub fn random_normal<R: Rng + ?Sized>(shape: Shape, std: f64, rng: &mut R) -> Result<Self> {
        let normal = Normal::new(0.0, std).map_err(|_| Error::InvalidConfig("std must be finite and non-negative".into()))?;
        let mut p = Self::zeros(shape);
        for v in p.w.iter_mut().chain(&mut p.b).chain(&mut p.c).chain(&mut p.d) {
            *v = normal.sample(rng);
        }
        Ok(p)
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.shape
    }

    #[inline]
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    #[inline]
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    #[inline]
    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Subspace biases `D`, `M × K` row-major.
    #[inline]
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn w_mut(&mut self) -> &mut [f64] {
        &mut self.w
    }

    pub fn b_mut(&mut self) -> &mut [f64] {
        &mut self.b
    }

    pub fn c_mut(&mut self) -> &mut [f64] {
        &mut self.c
    }

    pub fn d_mut(&mut self) -> &mut [f64] {
        &mut self.d
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize, k: usize) -> f64 {
        let s = self.shape;
        self.w[(i * s.gates + j) * s.subspace + k]
    }

    /// The `M·K` weights attached to visible unit `i`.
    #[inline]
    pub fn weight_row(&self, i: usize) -> &[f64] {
        let n = self.shape.hidden_pairs();
        &self.w[i * n..(i + 1) * n]
    }

    /// Parameters visited as `W`, `b`, `c`, `D` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.w.iter().chain(&self.b).chain(&self.c).chain(&self.d)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w.iter_mut().chain(&mut self.b).chain(&mut self.c).chain(&mut self.d)
    }

    pub fn check_finite(&self) -> Result<()> {
        check_finite("W", &self.w)?;
        check_finite("b", &self.b)?;
        check_finite("c", &self.c)?;
        check_finite("D", &self.d)
    }

    fn check_visible(&self, x: &[u8]) -> Result<()> {
        check_len("visible vector", self.shape.visible, x.len())
    }

    fn check_gates(&self, h: &[u8]) -> Result<()> {
        check_len("gate vector", self.shape.gates, h.len())
    }

    fn check_subspace(&self, s: &[u8]) -> Result<()> {
        check_len("subspace matrix", self.shape.hidden_pairs(), s.len())
    }

    /// Energy `E(x, h, S)` of a joint configuration.
    pub fn energy(&self, x: &[u8], h: &[u8], s: &[u8]) -> Result<f64> {
        self.check_visible(x)?;
        self.check_gates(h)?;
        self.check_subspace(s)?;
        let k_len = self.shape.subspace;
        let gated: Vec<f64> = s.iter().enumerate().map(|(jk, &sv)| f64::from(h[jk / k_len] * sv)).collect();
        let mut e = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0 {
                e -= dot(self.weight_row(i), &gated) + self.b[i];
            }
        }
        for (j, &hj) in h.iter().enumerate() {
            if hj != 0 {
                e -= self.c[j];
            }
        }
        e -= dot(&self.d, &gated);
        Ok(e)
    }

    /// Pre-gate subspace inputs `a_jk = Σ_i W_ijk x_i + D_jk`.
    pub fn activations(&self, x: &[u8]) -> Result<ActivationCache> {
        self.check_visible(x)?;
        let mut a = self.d.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0 {
                math::add_assign(self.weight_row(i), &mut a);
            }
        }
        Ok(ActivationCache {
            subspace: self.shape.subspace,
            a,
        })
    }

    /// `p(x_i = 1 | h, S)` for every visible unit.
    pub fn prob_x_given_hs(&self, h: &[u8], s: &[u8]) -> Result<Vec<f64>> {
        self.check_gates(h)?;
        self.check_subspace(s)?;
        let k_len = self.shape.subspace;
        let gated: Vec<f64> = s.iter().enumerate().map(|(jk, &sv)| f64::from(h[jk / k_len] * sv)).collect();
        Ok(self.visible_means(&gated))
    }

    /// `sigmoid(b_i + Σ_jk W_ijk g_jk)` for an arbitrary (possibly fractional)
    /// gated subspace pattern `g`.
    pub(crate) fn visible_means(&self, gated: &[f64]) -> Vec<f64> {
        (0..self.shape.visible)
            .map(|i| sigmoid(self.b[i] + dot(self.weight_row(i), gated)))
            .collect()
    }

    /// `p(s_jk = 1 | x, h_j)`, `M × K` row-major. Rows of closed gates are 0.5.
    pub fn prob_s_given_xh(&self, x: &[u8], h: &[u8]) -> Result<Vec<f64>> {
        self.check_gates(h)?;
        let cache = self.activations(x)?;
        Ok(cache.prob_s(h))
    }

    /// `p(h_j = 1 | x)` with the subspace units summed out.
    pub fn prob_h_given_x(&self, x: &[u8]) -> Result<Vec<f64>> {
        let cache = self.activations(x)?;
        Ok(self.prob_h_from(&cache))
    }

    /// Gate probabilities from precomputed activations.
    pub fn prob_h_from(&self, cache: &ActivationCache) -> Vec<f64> {
        let penalty = gate_penalty(self.shape.subspace);
        cache
            .rows()
            .zip(&self.c)
            .map(|(row, &cj)| {
                let evidence: f64 = row.iter().map(|&a| softplus(a)).sum();
                sigmoid(cj - penalty + evidence)
            })
            .collect()
    }

    /// Log of the unnormalised `p(x | h)` with `S` summed out:
    /// `Σ_i b_i x_i + Σ_j c_j h_j + Σ_jk log(1 + exp(h_j a_jk))`.
    pub fn log_unnorm_p_x_given_h(&self, x: &[u8], h: &[u8]) -> Result<f64> {
        self.check_gates(h)?;
        let cache = self.activations(x)?;
        let mut total = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0 {
                total += self.b[i];
            }
        }
        for (j, (row, &hj)) in cache.rows().zip(h).enumerate() {
            if hj != 0 {
                total += self.c[j];
                total += row.iter().map(|&a| softplus(a)).sum::<f64>();
            } else {
                total += self.shape.subspace as f64 * core::f64::consts::LN_2;
            }
        }
        Ok(total)
    }

    /// Free energy `F(x) = -log Σ_{h,S} exp(-E(x, h, S))`, so `p(x) ∝ exp(-F(x))`.
    pub fn free_energy(&self, x: &[u8]) -> Result<f64> {
        let cache = self.activations(x)?;
        Ok(self.free_energy_from(x, &cache))
    }

    pub(crate) fn free_energy_from(&self, x: &[u8], cache: &ActivationCache) -> f64 {
        let closed = gate_penalty(self.shape.subspace);
        let mut f = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0 {
                f -= self.b[i];
            }
        }
        for (row, &cj) in cache.rows().zip(&self.c) {
            let open = cj + row.iter().map(|&a| softplus(a)).sum::<f64>();
            f -= log_add_exp(closed, open);
        }
        f
    }
}

/// Subspace inputs `a_jk = Σ_i W_ijk x_i + D_jk` for one visible vector,
/// `M × K` row-major. Shared by every conditional that depends on `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationCache {
    subspace: usize,
    a: Vec<f64>,
}

impl ActivationCache {
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.a[j * self.subspace + k]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    /// One row of `K` inputs per gate.
    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.a.chunks_exact(self.subspace)
    }

    /// `p(s_jk = 1 | x, h_j) = sigmoid(h_j a_jk)`.
    pub fn prob_s(&self, h: &[u8]) -> Vec<f64> {
        self.a
            .iter()
            .enumerate()
            .map(|(jk, &a)| if h[jk / self.subspace] != 0 { sigmoid(a) } else { 0.5 })
            .collect()
    }

    /// `sigmoid(a_jk)`: the subspace posterior given an open gate.
    pub fn open_gate_prob_s(&self) -> Vec<f64> {
        self.a.iter().map(|&a| sigmoid(a)).collect()
    }
}
