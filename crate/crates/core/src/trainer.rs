//! Contrastive-divergence training.
//!
//! The log-likelihood gradient of an energy model is the expectation of
//! `-∂E/∂θ` with the data clamped minus the same expectation under the model.
//! CD-k replaces the model expectation by the statistics of a k-sweep Gibbs
//! chain started at the data point. By default both expectations over the
//! hidden units are computed in closed form given the visible vector
//! (Rao-Blackwellised); [`StatsMode::Sampled`] uses the raw sampled states.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::error::{check_len, Error, Result};
use crate::eval;
use crate::math::{self, sigmoid};
use crate::model::{ActivationCache, ModelParams, Shape};
use crate::sampler::{self, chain_rng, ChainRng, GibbsState};

/// Gradient-shaped statistics over the parameters `{W, b, c, D}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientStats {
    shape: Shape,
    pub gw: Vec<f64>,
    pub gb: Vec<f64>,
    pub gc: Vec<f64>,
    pub gd: Vec<f64>,
}

impl GradientStats {
    pub fn zeros(shape: Shape) -> Self {
        Self {
            shape,
            gw: vec![0.0; shape.weight_len()],
            gb: vec![0.0; shape.visible()],
            gc: vec![0.0; shape.gates()],
            gd: vec![0.0; shape.hidden_pairs()],
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Entries in parameter storage order (`W`, `b`, `c`, `D`).
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.gw.iter().chain(&self.gb).chain(&self.gc).chain(&self.gd)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.gw.iter_mut().chain(&mut self.gb).chain(&mut self.gc).chain(&mut self.gd)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }

    pub fn from_flat(shape: Shape, flat: &[f64]) -> Result<Self> {
        check_len("flat gradient", shape.parameter_count(), flat.len())?;
        let mut g = Self::zeros(shape);
        for (dst, src) in g.iter_mut().zip(flat) {
            *dst = *src;
        }
        Ok(g)
    }

    pub fn scale(&mut self, factor: f64) {
        self.iter_mut().for_each(|v| *v *= factor);
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: f64, other: &GradientStats) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += factor * b;
        }
    }

    pub fn dot(&self, other: &GradientStats) -> f64 {
        self.iter().zip(other.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.dot(self))
    }

    pub fn cosine(&self, other: &GradientStats) -> f64 {
        self.dot(other) / (self.norm() * other.norm())
    }

    /// Adds `sign` times the clamped expectations of `-∂E/∂θ` under
    /// `p(h, S | x)`: with `q_j = p(h_j = 1 | x)` and `r_jk = sigmoid(a_jk)`,
    /// `E[h_j s_jk] = q_j r_jk`.
    fn accumulate_clamped(&mut self, p: &ModelParams, x: &[u8], cache: &ActivationCache, sign: f64) {
        let q = p.prob_h_from(cache);
        let k_len = self.shape.subspace();
        let gated: Vec<f64> = cache
            .open_gate_prob_s()
            .iter()
            .enumerate()
            .map(|(jk, r)| q[jk / k_len] * r)
            .collect();
        let n = self.shape.hidden_pairs();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0 {
                math::axpy(sign, &gated, &mut self.gw[i * n..(i + 1) * n]);
                self.gb[i] += sign;
            }
        }
        math::axpy(sign, &q, &mut self.gc);
        math::axpy(sign, &gated, &mut self.gd);
    }

    /// Adds `sign` times `-∂E/∂θ` at one joint configuration.
    fn accumulate_state(&mut self, x: &[u8], h: &[u8], s: &[u8], sign: f64) {
        let k_len = self.shape.subspace();
        let gated: Vec<f64> = s.iter().enumerate().map(|(jk, &sv)| f64::from(h[jk / k_len] * sv)).collect();
        let n = self.shape.hidden_pairs();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0 {
                math::axpy(sign, &gated, &mut self.gw[i * n..(i + 1) * n]);
                self.gb[i] += sign;
            }
        }
        for (gc, &hj) in self.gc.iter_mut().zip(h) {
            *gc += sign * f64::from(hj);
        }
        math::axpy(sign, &gated, &mut self.gd);
    }
}

/// Clamped (data-phase) statistics for one visible vector.
pub fn positive_stats(p: &ModelParams, x: &[u8]) -> Result<GradientStats> {
    let cache = p.activations(x)?;
    let mut g = GradientStats::zeros(p.shape());
    g.accumulate_clamped(p, x, &cache, 1.0);
    Ok(g)
}

/// Model-phase statistics at the end of a chain: the clamped formulas
/// evaluated at the chain's final visible vector.
pub fn negative_stats(p: &ModelParams, state: &GibbsState) -> Result<GradientStats> {
    check_len("gate vector", p.shape().gates(), state.h.len())?;
    check_len("subspace matrix", p.shape().hidden_pairs(), state.s.len())?;
    positive_stats(p, &state.x)
}

/// `-∂E/∂θ` at one joint configuration.
pub fn state_stats(p: &ModelParams, state: &GibbsState) -> Result<GradientStats> {
    let shape = p.shape();
    check_len("visible vector", shape.visible(), state.x.len())?;
    check_len("gate vector", shape.gates(), state.h.len())?;
    check_len("subspace matrix", shape.hidden_pairs(), state.s.len())?;
    let mut g = GradientStats::zeros(shape);
    g.accumulate_state(&state.x, &state.h, &state.s, 1.0);
    Ok(g)
}

/// How the expectations in the CD update are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StatsMode {
    /// Closed-form expectations over the hidden units given the visible vector.
    #[default]
    RaoBlackwell,
    /// Raw sampled `(x, h, S)` states.
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub minibatch_size: usize,
    pub cd_steps: usize,
    /// Epochs without a validation improvement before training stops.
    pub lookahead: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub stats: StatsMode,
    /// Standard deviation of the initial weights.
    pub init_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            minibatch_size: 10,
            cd_steps: 1,
            lookahead: 10,
            max_epochs: 1000,
            seed: 0,
            stats: StatsMode::RaoBlackwell,
            init_std: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidConfig("learning rate must be finite and non-negative".into()));
        }
        if self.minibatch_size == 0 {
            return Err(Error::InvalidConfig("minibatch size must be positive".into()));
        }
        if self.cd_steps == 0 {
            return Err(Error::InvalidConfig("CD steps must be positive".into()));
        }
        if self.lookahead == 0 {
            return Err(Error::InvalidConfig("lookahead must be positive".into()));
        }
        if !(self.init_std.is_finite() && self.init_std >= 0.0) {
            return Err(Error::InvalidConfig("initial weight std must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// A model trainable by the shared minibatch/early-stopping loop.
pub trait CdModel: Clone {
    fn visible_units(&self) -> usize;

    fn gate_units(&self) -> usize;

    /// One in-place CD update on a minibatch.
    fn cd_step(&mut self, batch: &[&[u8]], cfg: &TrainConfig, rng: &mut ChainRng) -> Result<()>;

    /// Deterministic mean-field reconstruction of `x`.
    fn reconstruct(&self, x: &[u8]) -> Result<Vec<f64>>;

    /// `p(h_j = 1 | x)` for every gate (hidden) unit.
    fn gate_probabilities(&self, x: &[u8]) -> Result<Vec<f64>>;

    fn check_finite(&self) -> Result<()>;
}

/// Adds `delta` to `params` after checking that the result stays finite, so a
/// failed update leaves the parameters untouched.
pub(crate) fn apply_delta(params: &mut [f64], delta: &[f64], scale: f64, what: &'static str) -> Result<()> {
    for (index, (p, d)) in params.iter().zip(delta).enumerate() {
        if !(p + scale * d).is_finite() {
            return Err(Error::NonFinite { what, index });
        }
    }
    for (p, d) in params.iter_mut().zip(delta) {
        let step = scale * d;
        if step != 0.0 {
            *p += step;
        }
    }
    Ok(())
}

fn cd_statistics(p: &ModelParams, batch: &[&[u8]], cfg: &TrainConfig, rng: &mut ChainRng) -> Result<GradientStats> {
    if batch.is_empty() {
        return Err(Error::Empty("minibatch"));
    }
    let mut acc = GradientStats::zeros(p.shape());
    for x in batch {
        let cache = p.activations(x)?;
        match cfg.stats {
            StatsMode::RaoBlackwell => {
                acc.accumulate_clamped(p, x, &cache, 1.0);
                let end = sampler::gibbs_chain(p, x, cfg.cd_steps, rng)?;
                let end_cache = p.activations(&end.x)?;
                acc.accumulate_clamped(p, &end.x, &end_cache, -1.0);
            }
            StatsMode::Sampled => {
                let h = sampler::bernoulli_vec(&p.prob_h_from(&cache), rng);
                let s = sampler::bernoulli_vec(&cache.prob_s(&h), rng);
                acc.accumulate_state(x, &h, &s, 1.0);
                let end = sampler::gibbs_chain(p, x, cfg.cd_steps, rng)?;
                acc.accumulate_state(&end.x, &end.h, &end.s, -1.0);
            }
        }
    }
    Ok(acc)
}

/// Mean over the batch of positive minus negative statistics, without the
/// learning rate.
pub fn cd_direction(p: &ModelParams, batch: &[&[u8]], cfg: &TrainConfig, rng: &mut ChainRng) -> Result<GradientStats> {
    let mut g = cd_statistics(p, batch, cfg, rng)?;
    g.scale(1.0 / batch.len() as f64);
    Ok(g)
}

/// One CD-k step: `θ ← θ + lr · mean(positive − negative)`.
pub fn cd_update(p: &ModelParams, batch: &[&[u8]], cfg: &TrainConfig, rng: &mut ChainRng) -> Result<ModelParams> {
    let mut next = p.clone();
    next.cd_step(batch, cfg, rng)?;
    Ok(next)
}

impl CdModel for ModelParams {
    fn visible_units(&self) -> usize {
        self.shape().visible()
    }

    fn gate_units(&self) -> usize {
        self.shape().gates()
    }

    fn cd_step(&mut self, batch: &[&[u8]], cfg: &TrainConfig, rng: &mut ChainRng) -> Result<()> {
        let g = cd_statistics(self, batch, cfg, rng)?;
        let scale = cfg.learning_rate / batch.len() as f64;
        apply_delta(self.w_mut(), &g.gw, scale, "W")?;
        apply_delta(self.b_mut(), &g.gb, scale, "b")?;
        apply_delta(self.c_mut(), &g.gc, scale, "c")?;
        apply_delta(self.d_mut(), &g.gd, scale, "D")
    }

    fn reconstruct(&self, x: &[u8]) -> Result<Vec<f64>> {
        let cache = self.activations(x)?;
        let q = self.prob_h_from(&cache);
        let k_len = self.shape().subspace();
        let gated: Vec<f64> = cache
            .as_slice()
            .iter()
            .enumerate()
            .map(|(jk, &a)| q[jk / k_len] * sigmoid(a))
            .collect();
        Ok(self.visible_means(&gated))
    }

    fn gate_probabilities(&self, x: &[u8]) -> Result<Vec<f64>> {
        self.prob_h_given_x(x)
    }

    fn check_finite(&self) -> Result<()> {
        ModelParams::check_finite(self)
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_recon: f64,
    pub valid_recon: f64,
}

/// Early-stopping bookkeeping on the validation reconstruction error.
#[derive(Debug, Clone)]
pub struct EarlyStopState<M> {
    pub best_validation_error: f64,
    pub best_epoch: usize,
    pub best_params: M,
    pub epochs_since_best: usize,
}

impl<M: Clone> EarlyStopState<M> {
    /// Records an epoch and returns `true` when training should stop.
    pub fn observe(&mut self, epoch: usize, valid_error: f64, params: &M, lookahead: usize) -> bool {
        if valid_error < self.best_validation_error {
            self.best_validation_error = valid_error;
            self.best_epoch = epoch;
            self.best_params = params.clone();
            self.epochs_since_best = 0;
        } else {
            self.epochs_since_best += 1;
        }
        self.epochs_since_best >= lookahead
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    /// Snapshot with the lowest validation reconstruction error (or the initial
    /// parameters when no epoch ran).
    pub model: M,
    pub log: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

pub fn train<M: CdModel>(train: &Dataset, valid: &Dataset, p0: M, cfg: &TrainConfig) -> Result<TrainOutcome<M>> {
    train_with_observer(train, valid, p0, cfg, |_| {})
}

/// Minibatch CD training with early stopping. `observer` sees each epoch's
/// record as soon as it is computed, before the stopping decision.
///
/// Minibatch order is reshuffled every epoch from stream 0 of `cfg.seed`; the
/// Gibbs chains draw from stream 1.
pub fn train_with_observer<M, F>(train: &Dataset, valid: &Dataset, p0: M, cfg: &TrainConfig, mut observer: F) -> Result<TrainOutcome<M>>
where
    M: CdModel,
    F: FnMut(&EpochRecord),
{
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if valid.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    check_len("training examples", p0.visible_units(), train.dim())?;
    check_len("validation examples", p0.visible_units(), valid.dim())?;
    if cfg.minibatch_size > train.len() {
        return Err(Error::InvalidConfig(alloc::format!(
            "minibatch size {} exceeds the {} training examples",
            cfg.minibatch_size,
            train.len()
        )));
    }
    p0.check_finite()?;

    let mut shuffle_rng = chain_rng(cfg.seed, sampler::SHUFFLE_STREAM);
    let mut chain = chain_rng(cfg.seed, sampler::CHAIN_STREAM);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut model = p0.clone();
    let mut log = Vec::new();
    let mut stop = EarlyStopState {
        best_validation_error: f64::INFINITY,
        best_epoch: 0,
        best_params: p0,
        epochs_since_best: 0,
    };
    let mut stopped_early = false;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(cfg.minibatch_size) {
            let batch: Vec<&[u8]> = chunk.iter().map(|&n| train.example(n)).collect();
            model.cd_step(&batch, cfg, &mut chain)?;
        }
        model.check_finite()?;
        let record = EpochRecord {
            epoch,
            train_recon: eval::reconstruction_error(&model, train)?,
            valid_recon: eval::reconstruction_error(&model, valid)?,
        };
        observer(&record);
        log.push(record);
        if stop.observe(epoch, record.valid_recon, &model, cfg.lookahead) {
            stopped_early = true;
            break;
        }
    }

    let best_epoch = if log.is_empty() { None } else { Some(stop.best_epoch) };
    Ok(TrainOutcome {
        model: stop.best_params,
        log,
        best_epoch,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Split;

    #[test]
    fn positive_stats_zero_model() {
        let p = ModelParams::zeros(Shape::new(3, 2, 2).unwrap());
        let g = positive_stats(&p, &[1, 0, 1]).unwrap();
        for i in 0..3 {
            let xi = [1.0, 0.0, 1.0][i];
            assert!(g.gw[i * 4..(i + 1) * 4].iter().all(|&v| v == 0.25 * xi));
        }
        assert_eq!(g.gb, vec![1.0, 0.0, 1.0]);
        assert_eq!(g.gc, vec![0.5, 0.5]);
        assert!(g.gd.iter().all(|&v| v == 0.25));

        let empty = positive_stats(&p, &[0, 0, 0]).unwrap();
        assert!(empty.gw.iter().all(|&v| v == 0.0));
        assert!(empty.gb.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn negative_stats_equal_positive_at_data() {
        let mut rng = chain_rng(1, 0);
        let p = ModelParams::random_normal(Shape::new(4, 2, 3).unwrap(), 1.0, &mut rng).unwrap();
        let x = vec![1, 0, 1, 1];
        let state = GibbsState {
            x: x.clone(),
            h: vec![1, 0],
            s: vec![0; 6],
        };
        assert_eq!(negative_stats(&p, &state).unwrap(), positive_stats(&p, &x).unwrap());
        let zero = ModelParams::zeros(Shape::new(4, 2, 3).unwrap());
        assert!(negative_stats(&zero, &state).unwrap().gc.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut rng = chain_rng(2, 0);
        let p = ModelParams::random_normal(Shape::new(5, 2, 2).unwrap(), 1.0, &mut rng).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let batch: [&[u8]; 2] = [&[1, 0, 1, 0, 1], &[0, 0, 1, 1, 1]];
        for stats in [StatsMode::RaoBlackwell, StatsMode::Sampled] {
            let cfg = TrainConfig { stats, ..cfg.clone() };
            let next = cd_update(&p, &batch, &cfg, &mut chain_rng(3, 1)).unwrap();
            assert!(next.iter().zip(p.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn update_is_reproducible() {
        let p = ModelParams::zeros(Shape::new(4, 3, 2).unwrap());
        let batch: [&[u8]; 1] = [&[1, 1, 0, 1]];
        let cfg = TrainConfig::default();
        let a = cd_update(&p, &batch, &cfg, &mut chain_rng(10, 1)).unwrap();
        let b = cd_update(&p, &batch, &cfg, &mut chain_rng(10, 1)).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a, p);
    }

    #[test]
    fn empty_batch_rejected() {
        let p = ModelParams::zeros(Shape::new(2, 1, 1).unwrap());
        assert_eq!(
            cd_update(&p, &[], &TrainConfig::default(), &mut chain_rng(0, 0)).unwrap_err(),
            Error::Empty("minibatch")
        );
    }

    #[test]
    fn non_finite_update_aborts() {
        let p = ModelParams::zeros(Shape::new(2, 1, 1).unwrap());
        let cfg = TrainConfig {
            learning_rate: f64::INFINITY,
            ..TrainConfig::default()
        };
        let batch: [&[u8]; 1] = [&[1, 1]];
        assert!(matches!(
            cd_update(&p, &batch, &cfg, &mut chain_rng(0, 1)),
            Err(Error::NonFinite { .. })
        ));

        let mut params = [1.0, f64::MAX];
        assert_eq!(
            apply_delta(&mut params, &[1.0, 1.0], f64::MAX, "W"),
            Err(Error::NonFinite { what: "W", index: 1 })
        );
        assert_eq!(params, [1.0, f64::MAX]);
    }

    #[test]
    fn zero_epochs_returns_initial_params() {
        let d = Dataset::unlabelled(3, &[vec![1, 0, 1], vec![0, 1, 1]], Split::Train).unwrap();
        let p0 = ModelParams::random_normal(Shape::new(3, 2, 2).unwrap(), 0.1, &mut chain_rng(0, 0)).unwrap();
        let cfg = TrainConfig {
            max_epochs: 0,
            minibatch_size: 1,
            ..TrainConfig::default()
        };
        let out = train(&d, &d, p0.clone(), &cfg).unwrap();
        assert_eq!(out.model, p0);
        assert!(out.log.is_empty());
        assert_eq!(out.best_epoch, None);
    }

    #[test]
    fn train_rejects_bad_inputs() {
        let d = Dataset::unlabelled(3, &[vec![1, 0, 1]], Split::Train).unwrap();
        let empty = Dataset::unlabelled(3, &[], Split::Validation).unwrap();
        let p0 = ModelParams::zeros(Shape::new(3, 1, 1).unwrap());
        assert_eq!(
            train(
                &d,
                &empty,
                p0.clone(),
                &TrainConfig {
                    minibatch_size: 1,
                    ..TrainConfig::default()
                }
            )
            .unwrap_err(),
            Error::Empty("validation set")
        );
        assert!(matches!(
            train(&d, &d, p0.clone(), &TrainConfig::default()),
            Err(Error::InvalidConfig(_))
        ));
        let wrong = ModelParams::zeros(Shape::new(4, 1, 1).unwrap());
        assert!(matches!(
            train(
                &d,
                &d,
                wrong,
                &TrainConfig {
                    minibatch_size: 1,
                    ..TrainConfig::default()
                }
            ),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn early_stop_counts_and_keeps_best() {
        let mut s = EarlyStopState {
            best_validation_error: f64::INFINITY,
            best_epoch: 0,
            best_params: 0u32,
            epochs_since_best: 0,
        };
        assert!(!s.observe(1, 5.0, &1, 2));
        assert!(!s.observe(2, 4.0, &2, 2));
        assert!(!s.observe(3, 4.5, &3, 2));
        assert!(s.observe(4, 4.0, &4, 2));
        assert_eq!((s.best_epoch, s.best_params, s.epochs_since_best), (2, 2, 2));
    }
}
