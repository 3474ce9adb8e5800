//! Evaluation metrics: reconstruction error, classification error on gate
//! features, and the mean number of active gates.

use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{Dataset, SplitSpec};
use crate::error::{check_len, Error, Result};
use crate::logreg::{self, FeatureMatrix, LogRegOptions};
use crate::trainer::CdModel;

/// Mean over examples of `Σ_i (x_i − m_i)²`, where `m` is the model's
/// deterministic mean-field reconstruction.
pub fn reconstruction_error<M: CdModel>(model: &M, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    model.check_finite()?;
    check_len("examples", model.visible_units(), data.dim())?;
    let mut total = 0.0;
    for x in data.examples() {
        let m = model.reconstruct(x)?;
        total += x
            .iter()
            .zip(&m)
            .map(|(&xi, &mi)| {
                let d = f64::from(xi) - mi;
                d * d
            })
            .sum::<f64>();
    }
    Ok(total / data.len() as f64)
}

/// One row of gate probabilities `p(h_j = 1 | x)` per example.
pub fn gate_features<M: CdModel>(model: &M, data: &Dataset) -> Result<FeatureMatrix> {
    check_len("examples", model.visible_units(), data.dim())?;
    let mut values = Vec::with_capacity(data.len() * model.gate_units());
    for x in data.examples() {
        values.extend(model.gate_probabilities(x)?);
    }
    FeatureMatrix::new(data.len(), model.gate_units(), values)
}

/// Mean number of gates with `p(h_j = 1 | x) > 0.5`.
pub fn mean_active_units<M: CdModel>(model: &M, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    check_len("examples", model.visible_units(), data.dim())?;
    let mut active = 0usize;
    for x in data.examples() {
        active += model.gate_probabilities(x)?.iter().filter(|&&q| q > 0.5).count();
    }
    Ok(active as f64 / data.len() as f64)
}

/// Active-unit count computed from an existing feature matrix.
pub fn mean_active_from_features(features: &FeatureMatrix) -> f64 {
    if features.rows() == 0 {
        return 0.0;
    }
    let active = features.as_slice().iter().filter(|&&q| q > 0.5).count();
    active as f64 / features.rows() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub model_id: String,
    pub split_spec: SplitSpec,
    pub gates: usize,
    /// Subspace units per gate; `None` for the RBM baseline.
    pub subspace: Option<usize>,
    pub recon_error: f64,
    /// Percentage in `[0, 100]`.
    pub classification_error: f64,
    pub mean_active_units: f64,
    pub selected_lambda: f64,
    /// `(λ, validation error %)` for each candidate penalty.
    pub lambda_candidates: Vec<(f64, f64)>,
}

/// Test-set metrics for a trained model. The classifier is trained on the
/// training-set gate features and its penalty chosen on the validation set.
pub fn evaluate<M: CdModel>(
    model: &M,
    train: &Dataset,
    valid: &Dataset,
    test: &Dataset,
    lambda_grid: &[f64],
    options: &LogRegOptions,
) -> Result<Evaluation> {
    let recon_error = reconstruction_error(model, test)?;
    let train_f = gate_features(model, train)?;
    let valid_f = gate_features(model, valid)?;
    let test_f = gate_features(model, test)?;
    let selection = logreg::select_logreg((&train_f, train.labels()), (&valid_f, valid.labels()), lambda_grid, options)?;
    let classification_error = logreg::classification_error(&selection.model, &test_f, test.labels())?;
    Ok(Evaluation {
        recon_error,
        classification_error,
        mean_active_units: mean_active_from_features(&test_f),
        selection,
    })
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub recon_error: f64,
    pub classification_error: f64,
    pub mean_active_units: f64,
    pub selection: logreg::LambdaSelection,
}
