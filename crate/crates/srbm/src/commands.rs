//! The command pipeline behind the `srbm` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use srbm_core::data::{Splits, NUM_CLASSES};
use srbm_core::eval::{evaluate, MetricsReport};
use srbm_core::oracle::check::{sweep, ModelCore, SweepReport, Tolerances};
use srbm_core::sampler::{chain_rng, INIT_STREAM};
use srbm_core::trainer::{train_with_observer, CdModel, TrainConfig, TrainOutcome};
use srbm_core::{ModelParams, RbmParams, Shape};

use crate::check::{Mutated, Mutation};
use crate::config::{ExperimentConfig, ModelKind};
use crate::error::{Error, Result};
use crate::mnist::load_splits;
use crate::model_file::{read_model, write_model, SavedModel};
use crate::pgm::{rbm_filters, subspace_filters, write_pgm};
use crate::report::{metrics_csv, TrainLog};

pub const MODEL_FILE: &str = "model.bin";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SPLITS_FILE: &str = "splits.csv";

/// Initial parameters for a run, drawn from the init stream of the seed.
pub fn initial_model(cfg: &ExperimentConfig, visible: usize) -> Result<SavedModel> {
    let mut rng = chain_rng(cfg.seed(), INIT_STREAM);
    let std = cfg.train.init_std;
    Ok(match cfg.kind {
        ModelKind::Subspace => {
            let shape = Shape::new(visible, cfg.gates, cfg.subspace)?;
            SavedModel::Subspace(ModelParams::init_normal(shape, std, &mut rng)?)
        }
        ModelKind::Rbm => SavedModel::Rbm(RbmParams::init_normal(visible, cfg.gates, std, &mut rng)?),
    })
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub model_path: PathBuf,
    pub log_path: PathBuf,
    pub manifest_path: PathBuf,
    pub epochs_run: usize,
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
    pub wall_seconds: f64,
}

fn train_logged<M: CdModel>(splits: &Splits, p0: M, cfg: &TrainConfig, log: &mut TrainLog) -> Result<TrainOutcome<M>> {
    let mut last = Instant::now();
    let mut log_error = None;
    let outcome = train_with_observer(&splits.train, &splits.validation, p0, cfg, |record| {
        let now = Instant::now();
        if log_error.is_none() {
            log_error = log.append(record, (now - last).as_secs_f64()).err();
        }
        last = now;
    });
    if let Some(e) = log_error {
        return Err(e);
    }
    Ok(outcome?)
}

fn write_manifest(path: &Path, cfg: &ExperimentConfig, status: &str, lines: &[String], wall_seconds: f64) -> Result<()> {
    let mut text = cfg.to_text();
    text += &format!("# status = {status}\n");
    for line in lines {
        text += &format!("# {line}\n");
    }
    text += &format!("# wall_seconds = {wall_seconds:.3}\n");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Trains a model and writes the model file, the per-epoch log and a run
/// manifest (the effective configuration plus run facts) into `cfg.out_dir`.
/// On a numerical failure the log so far and a manifest are still written.
pub fn cmd_train(cfg: &ExperimentConfig, warn: &mut dyn FnMut(&str)) -> Result<TrainSummary> {
    let start = Instant::now();
    cfg.validate()?;
    if cfg.kind == ModelKind::Rbm && cfg.subspace_set {
        warn("K is ignored for model kind rbm");
    }
    let splits = load_splits(&cfg.data_dir, &cfg.split)?;
    let p0 = initial_model(cfg, splits.train.dim())?;
    train_into(cfg, &splits, p0, start)
}

/// The output half of [`cmd_train`]: trains `p0` on prepared splits and
/// writes the run files. `start` is when the run began, for the manifest.
pub fn train_into(cfg: &ExperimentConfig, splits: &Splits, p0: SavedModel, start: Instant) -> Result<TrainSummary> {
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let model_path = out.join(MODEL_FILE);
    let log_path = out.join(TRAIN_LOG_FILE);
    let manifest_path = out.join(MANIFEST_FILE);
    let mut log = TrainLog::create(&log_path)?;

    let result = match p0 {
        SavedModel::Subspace(p) => train_logged(splits, p, &cfg.train, &mut log)
            .map(|o| (SavedModel::Subspace(o.model), o.log.len(), o.best_epoch, o.stopped_early)),
        SavedModel::Rbm(p) => {
            train_logged(splits, p, &cfg.train, &mut log).map(|o| (SavedModel::Rbm(o.model), o.log.len(), o.best_epoch, o.stopped_early))
        }
    };
    let (model, epochs_run, best_epoch, stopped_early) = match result {
        Ok(r) => r,
        Err(e) => {
            write_manifest(&manifest_path, cfg, &format!("failed: {e}"), &[], start.elapsed().as_secs_f64())?;
            return Err(e);
        }
    };
    write_model(&model_path, &model)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let facts = [
        format!("epochs_run = {epochs_run}"),
        format!("best_epoch = {}", best_epoch.map_or_else(|| "none".to_string(), |e| e.to_string())),
        format!("stopped_early = {stopped_early}"),
    ];
    write_manifest(&manifest_path, cfg, "ok", &facts, wall_seconds)?;
    Ok(TrainSummary {
        model_path,
        log_path,
        manifest_path,
        epochs_run,
        best_epoch,
        stopped_early,
        wall_seconds,
    })
}

fn visible_units(model: &SavedModel) -> usize {
    match model {
        SavedModel::Subspace(p) => p.shape().visible(),
        SavedModel::Rbm(p) => p.visible(),
    }
}

/// Evaluates a saved model on the splits described by `cfg` and writes the
/// one-line CSV report to `cfg.out_dir`.
pub fn cmd_eval(model_path: &Path, cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let model = read_model(model_path)?;
    let splits = load_splits(&cfg.data_dir, &cfg.split)?;
    if visible_units(&model) != splits.train.dim() {
        return Err(Error::format(
            model_path,
            format!("model has {} visible units, data has {}", visible_units(&model), splits.train.dim()),
        ));
    }
    let (
        Splits {
            train, validation, test, ..
        },
        grid,
        opts,
    ) = (&splits, &cfg.lambda_grid, &cfg.logreg);
    let (evaluation, gates, subspace) = match &model {
        SavedModel::Subspace(p) => (
            evaluate(p, train, validation, test, grid, opts)?,
            p.shape().gates(),
            Some(p.shape().subspace()),
        ),
        SavedModel::Rbm(p) => (evaluate(p, train, validation, test, grid, opts)?, p.hidden(), None),
    };
    let report = MetricsReport {
        model_id: model_path.display().to_string(),
        split_spec: cfg.split,
        gates,
        subspace,
        recon_error: evaluation.recon_error,
        classification_error: evaluation.classification_error,
        mean_active_units: evaluation.mean_active_units,
        selected_lambda: evaluation.selection.model.lambda,
        lambda_candidates: evaluation.selection.candidates,
    };
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join(METRICS_FILE);
    fs::write(&path, metrics_csv(&report)).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

/// Writes the filter grid of a saved model as a PGM image; returns its size.
pub fn cmd_export_filters(model_path: &Path, out_path: &Path) -> Result<(usize, usize)> {
    let image = match read_model(model_path)? {
        SavedModel::Subspace(p) => subspace_filters(&p)?,
        SavedModel::Rbm(p) => rbm_filters(&p)?,
    };
    write_pgm(out_path, &image)?;
    Ok((image.width, image.height))
}

pub fn cmd_oracle_check(seed: u64, trials: u64, mutation: Option<Mutation>) -> Result<SweepReport> {
    let tol = Tolerances::default();
    Ok(match mutation {
        None => sweep(seed, trials, &ModelCore, &tol)?,
        Some(m) => sweep(seed, trials, &Mutated(m), &tol)?,
    })
}

/// Builds the splits, writes their row indices to `cfg.out_dir` and returns
/// the per-digit counts of the training set.
pub fn cmd_prepare_data(cfg: &ExperimentConfig) -> Result<(Splits, [usize; NUM_CLASSES])> {
    cfg.validate()?;
    let splits = load_splits(&cfg.data_dir, &cfg.split)?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut text = String::from("split,row,label\n");
    for (name, rows, data) in [
        ("train", &splits.train_indices, &splits.train),
        ("validation", &splits.validation_indices, &splits.validation),
    ] {
        for (row, label) in rows.iter().zip(data.labels()) {
            text += &format!("{name},{row},{label}\n");
        }
    }
    for (row, label) in splits.test.labels().iter().enumerate() {
        text += &format!("test,{row},{label}\n");
    }
    let path = out.join(SPLITS_FILE);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    let hist = splits.train.label_histogram();
    Ok((splits, hist))
}
