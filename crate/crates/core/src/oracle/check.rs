//! Agreement sweep between the closed-form model routines and enumeration.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::{encode, loglik_and_grad_from, EnumBudget, JointTable};
use crate::error::Result;
use crate::math;
use crate::model::{ModelParams, Shape};
use crate::sampler::{bernoulli_vec, chain_rng};
use crate::trainer::{self, GradientStats};

/// The closed-form routines under test. [`ModelCore`] forwards to the real
/// implementation; other implementations let a caller inject deliberate
/// faults to confirm that the sweep notices them.
pub trait ClosedForms {
    fn prob_h_given_x(&self, p: &ModelParams, x: &[u8]) -> Result<Vec<f64>>;
    fn prob_s_given_xh(&self, p: &ModelParams, x: &[u8], h: &[u8]) -> Result<Vec<f64>>;
    fn prob_x_given_hs(&self, p: &ModelParams, h: &[u8], s: &[u8]) -> Result<Vec<f64>>;
    fn log_unnorm_p_x_given_h(&self, p: &ModelParams, x: &[u8], h: &[u8]) -> Result<f64>;
    fn free_energy(&self, p: &ModelParams, x: &[u8]) -> Result<f64>;
    fn positive_stats(&self, p: &ModelParams, x: &[u8]) -> Result<GradientStats>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ModelCore;

impl ClosedForms for ModelCore {
    fn prob_h_given_x(&self, p: &ModelParams, x: &[u8]) -> Result<Vec<f64>> {
        p.prob_h_given_x(x)
    }

    fn prob_s_given_xh(&self, p: &ModelParams, x: &[u8], h: &[u8]) -> Result<Vec<f64>> {
        p.prob_s_given_xh(x, h)
    }

    fn prob_x_given_hs(&self, p: &ModelParams, h: &[u8], s: &[u8]) -> Result<Vec<f64>> {
        p.prob_x_given_hs(h, s)
    }

    fn log_unnorm_p_x_given_h(&self, p: &ModelParams, x: &[u8], h: &[u8]) -> Result<f64> {
        p.log_unnorm_p_x_given_h(x, h)
    }

    fn free_energy(&self, p: &ModelParams, x: &[u8]) -> Result<f64> {
        p.free_energy(x)
    }

    fn positive_stats(&self, p: &ModelParams, x: &[u8]) -> Result<GradientStats> {
        trainer::positive_stats(p, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute error on conditional and marginal probabilities.
    pub probability: f64,
    /// `|Σ_x p(x) − 1|`.
    pub normalisation: f64,
    /// Absolute error on clamped expectations.
    pub stats: f64,
    /// Relative error between the exact gradient and central differences.
    pub gradient_rel: f64,
    /// Denominator floor of the relative gradient error, so coordinates whose
    /// gradient is essentially zero are judged on absolute error.
    pub gradient_floor: f64,
    pub fd_epsilon: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            probability: 1e-10,
            normalisation: 1e-12,
            stats: 1e-10,
            gradient_rel: 1e-6,
            gradient_floor: 1e-2,
            fd_epsilon: 1e-5,
        }
    }
}

pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Worst observed error of one check on one model.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub check: &'static str,
    pub error: f64,
    pub tolerance: f64,
    pub location: String,
}

impl Discrepancy {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

#[derive(Debug, Default)]
struct Worst {
    error: f64,
    location: String,
}

impl Worst {
    fn update(&mut self, error: f64, location: impl FnOnce() -> String) {
        // NaN must count as a failure.
        let worse = error.is_nan() || error > self.error || (self.location.is_empty() && error >= self.error);
        if worse && !self.error.is_nan() {
            self.error = error;
            self.location = location();
        }
    }

    fn finish(self, check: &'static str, tolerance: f64) -> Discrepancy {
        Discrepancy {
            check,
            error: self.error,
            tolerance,
            location: self.location,
        }
    }
}

pub const CHECK_PROB_H: &str = "p(h|x)";
pub const CHECK_PROB_S: &str = "p(S|x,h)";
pub const CHECK_PROB_X: &str = "p(x|h,S)";
pub const CHECK_X_GIVEN_H: &str = "p(x|h) with S summed out";
pub const CHECK_FREE_ENERGY: &str = "p(x) from free energy";
pub const CHECK_NORMALISATION: &str = "sum of p(x)";
pub const CHECK_POSITIVE_STATS: &str = "clamped statistics";
pub const CHECK_GRADIENT: &str = "log-likelihood gradient vs finite differences";

/// Runs every check on one model. `data` feeds the gradient check.
pub fn check_model(
    p: &ModelParams,
    data: &[&[u8]],
    forms: &dyn ClosedForms,
    tol: &Tolerances,
    budget: EnumBudget,
) -> Result<Vec<Discrepancy>> {
    let t = JointTable::new(p, budget)?;
    let log_z = t.log_partition();
    let mut out = Vec::new();

    let mut worst = Worst::default();
    for x in 0..t.num_x() {
        let closed = forms.prob_h_given_x(p, t.x(x))?;
        let exact = t.prob_h_given_x(x);
        for (j, (a, b)) in closed.iter().zip(&exact).enumerate() {
            worst.update((a - b).abs(), || format!("x={:?} j={}", t.x(x), j));
        }
    }
    out.push(worst.finish(CHECK_PROB_H, tol.probability));

    let mut worst = Worst::default();
    for x in 0..t.num_x() {
        for h in 0..t.num_h() {
            let closed = forms.prob_s_given_xh(p, t.x(x), t.h(h))?;
            let exact = t.prob_s_given_xh(x, h);
            for (jk, (a, b)) in closed.iter().zip(&exact).enumerate() {
                worst.update((a - b).abs(), || format!("x={:?} h={:?} jk={}", t.x(x), t.h(h), jk));
            }
        }
    }
    out.push(worst.finish(CHECK_PROB_S, tol.probability));

    let mut worst = Worst::default();
    for h in 0..t.num_h() {
        for s in 0..t.num_s() {
            let closed = forms.prob_x_given_hs(p, t.h(h), t.s(s))?;
            let exact = t.prob_x_given_hs(h, s);
            for (i, (a, b)) in closed.iter().zip(&exact).enumerate() {
                worst.update((a - b).abs(), || format!("h={:?} S={:?} i={}", t.h(h), t.s(s), i));
            }
        }
    }
    out.push(worst.finish(CHECK_PROB_X, tol.probability));

    let mut worst = Worst::default();
    for h in 0..t.num_h() {
        let logs = (0..t.num_x())
            .map(|x| forms.log_unnorm_p_x_given_h(p, t.x(x), t.h(h)))
            .collect::<Result<Vec<f64>>>()?;
        let norm = math::log_sum_exp(&logs);
        let exact = t.prob_x_given_h(h);
        for (x, (l, e)) in logs.iter().zip(&exact).enumerate() {
            worst.update((math::exp(l - norm) - e).abs(), || format!("h={:?} x={:?}", t.h(h), t.x(x)));
        }
    }
    out.push(worst.finish(CHECK_X_GIVEN_H, tol.probability));

    let mut worst = Worst::default();
    let exact_marginal = t.log_marginal_x();
    let mut total = 0.0;
    for x in 0..t.num_x() {
        let px = math::exp(-forms.free_energy(p, t.x(x))? - log_z);
        total += px;
        worst.update((px - math::exp(exact_marginal[x])).abs(), || format!("x={:?}", t.x(x)));
    }
    out.push(worst.finish(CHECK_FREE_ENERGY, tol.probability));
    let mut norm = Worst::default();
    norm.update((total - 1.0).abs(), || format!("sum={total}"));
    out.push(norm.finish(CHECK_NORMALISATION, tol.normalisation));

    let mut worst = Worst::default();
    for x in 0..t.num_x() {
        let closed = forms.positive_stats(p, t.x(x))?;
        let exact = t.expected_stats(Some(x));
        for (idx, (a, b)) in closed.iter().zip(exact.iter()).enumerate() {
            worst.update((a - b).abs(), || format!("x={:?} parameter={}", t.x(x), idx));
        }
    }
    out.push(worst.finish(CHECK_POSITIVE_STATS, tol.stats));

    if !data.is_empty() {
        let (_, grad) = loglik_and_grad_from(&t, data)?;
        let fd = super::finite_diff_grad(p, tol.fd_epsilon, |q| {
            let tq = JointTable::new(q, budget).expect("same shape as the checked model");
            let lz = tq.log_partition();
            data.iter().map(|x| tq.log_unnorm_marginal_x(encode(x)) - lz).sum()
        });
        let mut worst = Worst::default();
        for (idx, (a, b)) in grad.iter().zip(fd.iter()).enumerate() {
            worst.update(relative_error(*a, *b, tol.gradient_floor), || {
                format!("parameter={idx} exact={a} fd={b}")
            });
        }
        out.push(worst.finish(CHECK_GRADIENT, tol.gradient_rel));
    }
    Ok(out)
}

/// Result of checking one random model.
#[derive(Debug, Clone)]
pub struct ModelCheck {
    pub trial: u64,
    pub shape: Shape,
    pub results: Vec<Discrepancy>,
}

impl ModelCheck {
    pub fn passed(&self) -> bool {
        self.results.iter().all(Discrepancy::passed)
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub seed: u64,
    pub models: Vec<ModelCheck>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.models.iter().all(ModelCheck::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = (&ModelCheck, &Discrepancy)> {
        self.models
            .iter()
            .flat_map(|m| m.results.iter().filter(|d| !d.passed()).map(move |d| (m, d)))
    }

    /// Largest error of a named check across all models.
    pub fn worst(&self, check: &str) -> Option<f64> {
        self.models
            .iter()
            .flat_map(|m| m.results.iter())
            .filter(|d| d.check == check)
            .map(|d| d.error)
            .fold(None, |acc, e| Some(acc.map_or(e, |a: f64| if e.is_nan() { e } else { a.max(e) })))
    }
}

/// Largest sizes drawn by [`random_tiny_model`].
pub const MAX_TINY_VISIBLE: usize = 5;
pub const MAX_TINY_GATES: usize = 2;
pub const MAX_TINY_SUBSPACE: usize = 3;

/// A random model with at most 5 visible units, 2 gates and 3 subspace units
/// per gate, every parameter `N(0, 1)`, plus three random data vectors.
pub fn random_tiny_model(seed: u64, trial: u64) -> (ModelParams, Vec<alloc::vec::Vec<u8>>) {
    let mut rng = chain_rng(seed, trial);
    let shape = Shape::new(
        rng.random_range(1..=MAX_TINY_VISIBLE),
        rng.random_range(1..=MAX_TINY_GATES),
        rng.random_range(1..=MAX_TINY_SUBSPACE),
    )
    .expect("sizes are positive");
    let p = ModelParams::random_normal(shape, 1.0, &mut rng).expect("unit std is valid");
    let half = alloc::vec![0.5; shape.visible()];
    let data = (0..3).map(|_| bernoulli_vec(&half, &mut rng)).collect();
    (p, data)
}

/// Checks `trials` random tiny models drawn from `seed`.
pub fn sweep(seed: u64, trials: u64, forms: &dyn ClosedForms, tol: &Tolerances) -> Result<SweepReport> {
    let mut models = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let (p, data) = random_tiny_model(seed, trial);
        let rows: Vec<&[u8]> = data.iter().map(Vec::as_slice).collect();
        let results = check_model(&p, &rows, forms, tol, EnumBudget::default())?;
        models.push(ModelCheck {
            trial,
            shape: p.shape(),
            results,
        });
    }
    Ok(SweepReport { seed, models })
}
