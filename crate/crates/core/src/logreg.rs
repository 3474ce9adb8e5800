//! Multinomial logistic regression with an ℓ2 penalty, fitted by full-batch
//! gradient descent.
//!
//! The objective is the mean cross-entropy plus `λ/2 · ‖W‖²`; biases are not
//! penalised. Step sizes come from Armijo backtracking.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::NUM_CLASSES;
use crate::error::{check_finite, check_len, Error, Result};
use crate::math::{self, dot};

/// Row-major `rows × cols` matrix of real features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("feature matrix", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.cols..(n + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Penalty strengths tried when selecting the classifier.
pub const LAMBDA_GRID: [f64; 3] = [0.0, 0.01, 0.1];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegOptions {
    pub max_iterations: usize,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
}

impl Default for LogRegOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    features: usize,
    /// `features × 10`, row-major.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub lambda: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

impl LogRegModel {
    pub fn zeros(features: usize, lambda: f64) -> Self {
        Self {
            features,
            weights: vec![0.0; features * NUM_CLASSES],
            biases: vec![0.0; NUM_CLASSES],
            lambda,
            iterations: 0,
            grad_norm: f64::NAN,
            converged: false,
        }
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn logits(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        logits(&self.weights, &self.biases, x)
    }

    /// Highest-scoring class, ties going to the lowest index.
    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.logits(x))
    }

    /// Flat parameters: weights then biases.
    pub fn parameters(&self) -> Vec<f64> {
        self.weights.iter().chain(&self.biases).copied().collect()
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = c;
        }
    }
    best
}

fn logits(weights: &[f64], biases: &[f64], x: &[f64]) -> [f64; NUM_CLASSES] {
    let mut z = [0.0; NUM_CLASSES];
    z.copy_from_slice(biases);
    for (f, &xf) in x.iter().enumerate() {
        if xf != 0.0 {
            math::axpy(xf, &weights[f * NUM_CLASSES..(f + 1) * NUM_CLASSES], &mut z);
        }
    }
    z
}

fn validate(features: &FeatureMatrix, labels: &[u8]) -> Result<()> {
    if features.rows() == 0 {
        return Err(Error::Empty("feature matrix"));
    }
    check_len("labels", features.rows(), labels.len())?;
    check_finite("features", features.as_slice())?;
    if let Some(n) = labels.iter().position(|&l| usize::from(l) >= NUM_CLASSES) {
        return Err(Error::InvalidData(format!("label {} at row {} is not a digit", labels[n], n)));
    }
    Ok(())
}

/// Objective value at flat parameters `theta` (weights then biases).
pub fn objective(theta: &[f64], features: &FeatureMatrix, labels: &[u8], lambda: f64) -> f64 {
    let split = features.cols() * NUM_CLASSES;
    let (w, b) = theta.split_at(split);
    let mut loss = 0.0;
    for (n, &y) in labels.iter().enumerate() {
        let z = logits(w, b, features.row(n));
        loss += math::log_sum_exp(&z) - z[usize::from(y)];
    }
    loss / labels.len() as f64 + 0.5 * lambda * dot(w, w)
}

/// Objective value and its gradient at `theta`.
pub fn objective_and_grad(theta: &[f64], features: &FeatureMatrix, labels: &[u8], lambda: f64) -> (f64, Vec<f64>) {
    let split = features.cols() * NUM_CLASSES;
    let (w, b) = theta.split_at(split);
    let mut grad = vec![0.0; theta.len()];
    let mut loss = 0.0;
    let inv_n = 1.0 / labels.len() as f64;
    for (n, &y) in labels.iter().enumerate() {
        let x = features.row(n);
        let z = logits(w, b, x);
        let lse = math::log_sum_exp(&z);
        loss += lse - z[usize::from(y)];
        let mut residual = [0.0; NUM_CLASSES];
        for c in 0..NUM_CLASSES {
            residual[c] = (math::exp(z[c] - lse) - if c == usize::from(y) { 1.0 } else { 0.0 }) * inv_n;
        }
        let (gw, gb) = grad.split_at_mut(split);
        for (f, &xf) in x.iter().enumerate() {
            if xf != 0.0 {
                math::axpy(xf, &residual, &mut gw[f * NUM_CLASSES..(f + 1) * NUM_CLASSES]);
            }
        }
        math::add_assign(&residual, gb);
    }
    for (g, &wv) in grad[..split].iter_mut().zip(w) {
        *g += lambda * wv;
    }
    (loss * inv_n + 0.5 * lambda * dot(w, w), grad)
}

/// Fits the classifier from zero weights. Hitting the iteration cap is not an
/// error; the result reports `converged = false` and the final gradient norm.
pub fn train_logreg(features: &FeatureMatrix, labels: &[u8], lambda: f64, options: &LogRegOptions) -> Result<LogRegModel> {
    validate(features, labels)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidConfig("λ must be finite and non-negative".into()));
    }
    let mut model = LogRegModel::zeros(features.cols(), lambda);
    let mut theta = model.parameters();
    let (mut value, mut grad) = objective_and_grad(&theta, features, labels, lambda);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut grad_norm = math::sqrt(dot(&grad, &grad));
    let mut trial = vec![0.0; theta.len()];
    while iterations < options.max_iterations && grad_norm >= options.tolerance {
        let sq = grad_norm * grad_norm;
        let mut accepted = false;
        for _ in 0..60 {
            for ((t, &th), &g) in trial.iter_mut().zip(&theta).zip(&grad) {
                *t = th - step * g;
            }
            let candidate = objective(&trial, features, labels, lambda);
            if candidate <= value - 1e-4 * step * sq {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        core::mem::swap(&mut theta, &mut trial);
        let (v, g) = objective_and_grad(&theta, features, labels, lambda);
        value = v;
        grad = g;
        grad_norm = math::sqrt(dot(&grad, &grad));
        iterations += 1;
        step = (step * 2.0).min(1e4);
    }
    check_finite("logistic regression parameters", &theta)?;
    let split = features.cols() * NUM_CLASSES;
    model.weights = theta[..split].to_vec();
    model.biases = theta[split..].to_vec();
    model.iterations = iterations;
    model.grad_norm = grad_norm;
    model.converged = grad_norm < options.tolerance;
    Ok(model)
}

/// Percentage of rows whose predicted class differs from the label.
pub fn classification_error(model: &LogRegModel, features: &FeatureMatrix, labels: &[u8]) -> Result<f64> {
    validate(features, labels)?;
    check_len("feature columns", model.features(), features.cols())?;
    let wrong = labels
        .iter()
        .enumerate()
        .filter(|&(n, &y)| model.predict(features.row(n)) != usize::from(y))
        .count();
    Ok(100.0 * wrong as f64 / labels.len() as f64)
}

#[derive(Debug, Clone)]
pub struct LambdaSelection {
    pub model: LogRegModel,
    /// `(λ, validation error %)` for every candidate, in grid order.
    pub candidates: Vec<(f64, f64)>,
}

/// Fits one classifier per `λ` and keeps the one with the lowest validation
/// error (the first in grid order on ties).
pub fn select_logreg(
    train: (&FeatureMatrix, &[u8]),
    valid: (&FeatureMatrix, &[u8]),
    grid: &[f64],
    options: &LogRegOptions,
) -> Result<LambdaSelection> {
    if grid.is_empty() {
        return Err(Error::Empty("λ grid"));
    }
    let mut best: Option<(LogRegModel, f64)> = None;
    let mut candidates = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let model = train_logreg(train.0, train.1, lambda, options)?;
        let err = classification_error(&model, valid.0, valid.1)?;
        candidates.push((lambda, err));
        if best.as_ref().is_none_or(|(_, e)| err < *e) {
            best = Some((model, err));
        }
    }
    let (model, _) = best.expect("grid is non-empty");
    Ok(LambdaSelection { model, candidates })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_one_dimensional() {
        let xs = [0.1, 0.2, 0.3, 0.7, 0.8, 0.9];
        let labels = [2u8, 2, 2, 5, 5, 5];
        let f = FeatureMatrix::new(6, 1, xs.to_vec()).unwrap();
        let m = train_logreg(&f, &labels, 0.0, &LogRegOptions::default()).unwrap();
        assert_eq!(classification_error(&m, &f, &labels).unwrap(), 0.0);
    }

    #[test]
    fn heavy_penalty_predicts_the_prior() {
        let xs = [0.1, 0.2, 0.3, 0.7, 0.8];
        let labels = [2u8, 2, 2, 5, 5];
        let f = FeatureMatrix::new(5, 1, xs.to_vec()).unwrap();
        let m = train_logreg(&f, &labels, 1e6, &LogRegOptions::default()).unwrap();
        assert!(dot(&m.weights, &m.weights).sqrt() < 1e-5);
        for &x in &xs {
            assert_eq!(m.predict(&[x]), 2);
        }
    }

    #[test]
    fn zero_model_predicts_class_zero() {
        let labels: Vec<u8> = (0..100).map(|n| (n % 10) as u8).collect();
        let f = FeatureMatrix::new(100, 3, vec![0.5; 300]).unwrap();
        let m = LogRegModel::zeros(3, 0.0);
        assert_eq!(classification_error(&m, &f, &labels).unwrap(), 90.0);
    }

    #[test]
    fn objective_gradient_matches_finite_differences() {
        let f = FeatureMatrix::new(4, 2, vec![0.1, 0.9, 0.4, 0.3, 0.8, 0.2, 0.5, 0.5]).unwrap();
        let labels = [0u8, 3, 3, 7];
        let theta: Vec<f64> = (0..30).map(|i| ((i * 7 % 11) as f64 - 5.0) * 0.1).collect();
        let (value, grad) = objective_and_grad(&theta, &f, &labels, 0.05);
        assert!((value - objective(&theta, &f, &labels, 0.05)).abs() < 1e-14);
        let eps = 1e-6;
        for i in 0..theta.len() {
            let mut up = theta.clone();
            up[i] += eps;
            let mut down = theta.clone();
            down[i] -= eps;
            let fd = (objective(&up, &f, &labels, 0.05) - objective(&down, &f, &labels, 0.05)) / (2.0 * eps);
            assert!((fd - grad[i]).abs() <= 1e-4 * grad[i].abs().max(1e-3), "coordinate {i}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        let f = FeatureMatrix::new(2, 1, vec![0.0, f64::NAN]).unwrap();
        assert!(train_logreg(&f, &[0, 1], 0.0, &LogRegOptions::default()).is_err());
        let f = FeatureMatrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(train_logreg(&f, &[0, 12], 0.0, &LogRegOptions::default()).is_err());
        assert!(train_logreg(&f, &[0], 0.0, &LogRegOptions::default()).is_err());
        assert!(FeatureMatrix::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn selection_prefers_lowest_validation_error() {
        let xs: Vec<f64> = (0..40).map(|n| n as f64 / 40.0).collect();
        let labels: Vec<u8> = (0..40).map(|n| if n < 20 { 1 } else { 4 }).collect();
        let f = FeatureMatrix::new(40, 1, xs).unwrap();
        let sel = select_logreg((&f, &labels), (&f, &labels), &[1e6, 0.0], &LogRegOptions::default()).unwrap();
        assert_eq!(sel.candidates.len(), 2);
        assert_eq!(sel.model.lambda, 0.0);
        assert!(sel.candidates[1].1 <= sel.candidates[0].1);
    }
}
