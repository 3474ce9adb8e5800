//! Binary-binary RBM baseline with CD-k training.
//!
//! `E(x, h) = -Σ_ij W_ij x_i h_j - Σ_i b_i x_i - Σ_j c_j h_j`, with `W` stored
//! row-major as `D × M`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

use crate::error::{check_finite, check_len, Error, Result};
use crate::math::{self, dot, log_add_exp, sigmoid};
use crate::sampler::{bernoulli_vec, ChainRng};
use crate::trainer::{apply_delta, CdModel, StatsMode, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    visible: usize,
    hidden: usize,
    w: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl RbmParams {
    pub fn zeros(visible: usize, hidden: usize) -> Result<Self> {
        if visible == 0 || hidden == 0 {
            return Err(Error::InvalidShape("RBM layers must be non-empty"));
        }
        Ok(Self {
            visible,
            hidden,
            w: vec![0.0; visible * hidden],
            b: vec![0.0; visible],
            c: vec![0.0; hidden],
        })
    }

    pub fn from_parts(visible: usize, hidden: usize, w: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(visible, hidden)?;
        check_len("W", visible * hidden, w.len())?;
        check_len("b", visible, b.len())?;
        check_len("c", hidden, c.len())?;
        check_finite("W", &w)?;
        check_finite("b", &b)?;
        check_finite("c", &c)?;
        p.w = w;
        p.b = b;
        p.c = c;
        Ok(p)
    }

    /// `W ~ N(0, std²)`, biases zero.
    pub fn init_normal<R: Rng + ?Sized>(visible: usize, hidden: usize, std: f64, rng: &mut R) -> Result<Self> {
        let normal =
            Normal::new(0.0, std).map_err(|_| Error::InvalidConfig("initial weight std must be finite and non-negative".into()))?;
        let mut p = Self::zeros(visible, hidden)?;
        p.w.iter_mut().for_each(|v| *v = normal.sample(rng));
        Ok(p)
    }

    /// Every parameter drawn from `N(0, std²)`.
    pub fn random_normal<R: Rng + ?Sized>(visible: usize, hidden: usize, std: f64, rng: &mut R) -> Result<Self> {
        let normal = Normal::new(0.0, std).map_err(|_| Error::InvalidConfig("std must be finite and non-negative".into()))?;
        let mut p = Self::zeros(visible, hidden)?;
        for v in p.w.iter_mut().chain(&mut p.b).chain(&mut p.c) {
            *v = normal.sample(rng);
        }
        Ok(p)
    }

    pub fn visible(&self) -> usize {
        self.visible
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
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

    pub fn parameter_count(&self) -> usize {
        self.w.len() + self.visible + self.hidden
    }

    /// Parameters in storage order (`W`, `b`, `c`).
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.w.iter().chain(&self.b).chain(&self.c)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w.iter_mut().chain(&mut self.b).chain(&mut self.c)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.hidden..(i + 1) * self.hidden]
    }

    fn hidden_input(&self, x: &[u8]) -> Result<Vec<f64>> {
        check_len("visible vector", self.visible, x.len())?;
        let mut input = self.c.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0 {
                math::add_assign(self.row(i), &mut input);
            }
        }
        Ok(input)
    }

    /// `p(h_j = 1 | x) = sigmoid(Σ_i W_ij x_i + c_j)`.
    pub fn prob_h_given_x(&self, x: &[u8]) -> Result<Vec<f64>> {
        Ok(self.hidden_input(x)?.into_iter().map(sigmoid).collect())
    }

    /// `p(x_i = 1 | h) = sigmoid(Σ_j W_ij h_j + b_i)`.
    pub fn prob_x_given_h(&self, h: &[u8]) -> Result<Vec<f64>> {
        check_len("hidden vector", self.hidden, h.len())?;
        let hf: Vec<f64> = h.iter().map(|&v| f64::from(v)).collect();
        Ok(self.visible_means(&hf))
    }

    fn visible_means(&self, h: &[f64]) -> Vec<f64> {
        (0..self.visible).map(|i| sigmoid(self.b[i] + dot(self.row(i), h))).collect()
    }

    pub fn energy(&self, x: &[u8], h: &[u8]) -> Result<f64> {
        check_len("visible vector", self.visible, x.len())?;
        check_len("hidden vector", self.hidden, h.len())?;
        let hf: Vec<f64> = h.iter().map(|&v| f64::from(v)).collect();
        let mut e = -dot(&self.c, &hf);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0 {
                e -= self.b[i] + dot(self.row(i), &hf);
            }
        }
        Ok(e)
    }

    /// `F(x) = -Σ_i b_i x_i - Σ_j softplus(Σ_i W_ij x_i + c_j)`.
    pub fn free_energy(&self, x: &[u8]) -> Result<f64> {
        let input = self.hidden_input(x)?;
        let mut f = -input.iter().map(|&a| log_add_exp(0.0, a)).sum::<f64>();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0 {
                f -= self.b[i];
            }
        }
        Ok(f)
    }

    pub fn sample_h_given_x<R: RngCore + ?Sized>(&self, x: &[u8], rng: &mut R) -> Result<Vec<u8>> {
        Ok(bernoulli_vec(&self.prob_h_given_x(x)?, rng))
    }

    pub fn sample_x_given_h<R: RngCore + ?Sized>(&self, h: &[u8], rng: &mut R) -> Result<Vec<u8>> {
        Ok(bernoulli_vec(&self.prob_x_given_h(h)?, rng))
    }

    /// `k` alternating sweeps `h ~ p(h | x)`, `x ~ p(x | h)` from `x0`.
    /// Returns the final `(x, h)`.
    pub fn gibbs_chain<R: RngCore + ?Sized>(&self, x0: &[u8], steps: usize, rng: &mut R) -> Result<(Vec<u8>, Vec<u8>)> {
        if steps == 0 {
            return Err(Error::InvalidConfig("a Gibbs chain needs at least one step".into()));
        }
        let mut x = x0.to_vec();
        let mut h = Vec::new();
        for _ in 0..steps {
            h = self.sample_h_given_x(&x, rng)?;
            x = self.sample_x_given_h(&h, rng)?;
        }
        Ok((x, h))
    }

    /// Mean over the batch of `x p(h | x)ᵀ` at the data minus the same at the
    /// end of a `cd_steps` chain. Gradient order: `W`, `b`, `c`.
    pub fn cd_direction(&self, batch: &[&[u8]], cfg: &TrainConfig, rng: &mut ChainRng) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::Empty("minibatch"));
        }
        let mut g = vec![0.0; self.parameter_count()];
        for x in batch {
            let q = self.prob_h_given_x(x)?;
            let h_data = match cfg.stats {
                StatsMode::RaoBlackwell => q,
                StatsMode::Sampled => bernoulli_vec(&q, rng).into_iter().map(f64::from).collect(),
            };
            self.accumulate(&mut g, x, &h_data, 1.0);
            let (x_end, h_end) = self.gibbs_chain(x, cfg.cd_steps, rng)?;
            let h_model: Vec<f64> = match cfg.stats {
                StatsMode::RaoBlackwell => self.prob_h_given_x(&x_end)?,
                StatsMode::Sampled => h_end.into_iter().map(f64::from).collect(),
            };
            self.accumulate(&mut g, &x_end, &h_model, -1.0);
        }
        let inv = 1.0 / batch.len() as f64;
        g.iter_mut().for_each(|v| *v *= inv);
        Ok(g)
    }

    fn accumulate(&self, g: &mut [f64], x: &[u8], h: &[f64], sign: f64) {
        let (gw, rest) = g.split_at_mut(self.w.len());
        let (gb, gc) = rest.split_at_mut(self.visible);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0 {
                math::axpy(sign, h, &mut gw[i * self.hidden..(i + 1) * self.hidden]);
                gb[i] += sign;
            }
        }
        math::axpy(sign, h, gc);
    }

    /// One CD update, returning the new parameters.
    pub fn cd_update(&self, batch: &[&[u8]], cfg: &TrainConfig, rng: &mut ChainRng) -> Result<Self> {
        let mut next = self.clone();
        next.cd_step(batch, cfg, rng)?;
        Ok(next)
    }
}

impl CdModel for RbmParams {
    fn visible_units(&self) -> usize {
        self.visible
    }

    fn gate_units(&self) -> usize {
        self.hidden
    }

    fn cd_step(&mut self, batch: &[&[u8]], cfg: &TrainConfig, rng: &mut ChainRng) -> Result<()> {
        let g = self.cd_direction(batch, cfg, rng)?;
        let (gw, rest) = g.split_at(self.w.len());
        let (gb, gc) = rest.split_at(self.visible);
        let lr = cfg.learning_rate;
        apply_delta(&mut self.w, gw, lr, "W")?;
        apply_delta(&mut self.b, gb, lr, "b")?;
        apply_delta(&mut self.c, gc, lr, "c")
    }

    fn reconstruct(&self, x: &[u8]) -> Result<Vec<f64>> {
        let q = self.prob_h_given_x(x)?;
        Ok(self.visible_means(&q))
    }

    fn gate_probabilities(&self, x: &[u8]) -> Result<Vec<f64>> {
        self.prob_h_given_x(x)
    }

    fn check_finite(&self) -> Result<()> {
        check_finite("W", &self.w)?;
        check_finite("b", &self.b)?;
        check_finite("c", &self.c)
    }
}
