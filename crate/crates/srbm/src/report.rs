//! Text outputs: metrics, training log and run manifest.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use srbm_core::eval::MetricsReport;
use srbm_core::trainer::EpochRecord;

use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "model_id,kind,M,K,per_digit,seed,recon_error,classification_error,mean_active_units,selected_lambda";

pub fn metrics_csv_line(r: &MetricsReport) -> String {
    let (kind, k) = match r.subspace {
        Some(k) => ("subspace", k.to_string()),
        None => ("rbm", String::new()),
    };
    format!(
        "{},{kind},{},{k},{},{},{},{},{},{}",
        r.model_id,
        r.gates,
        r.split_spec.per_digit_train,
        r.split_spec.seed,
        r.recon_error,
        r.classification_error,
        r.mean_active_units,
        r.selected_lambda
    )
}

pub fn metrics_csv(r: &MetricsReport) -> String {
    format!("{METRICS_HEADER}\n{}\n", metrics_csv_line(r))
}

pub fn metrics_table(r: &MetricsReport) -> String {
    let mut s = String::new();
    let k = r.subspace.map_or_else(|| "-".to_string(), |k| k.to_string());
    s += &format!("model                  {}\n", r.model_id);
    s += &format!("kind                   {}\n", if r.subspace.is_some() { "subspace" } else { "rbm" });
    s += &format!("M / K                  {} / {k}\n", r.gates);
    s += &format!("training examples      {}\n", r.split_spec.train_size());
    s += &format!("seed                   {}\n", r.split_spec.seed);
    s += &format!("reconstruction error   {:.4}\n", r.recon_error);
    s += &format!("classification error   {:.2}%\n", r.classification_error);
    s += &format!("mean active units      {:.2}\n", r.mean_active_units);
    s += &format!("selected lambda        {}\n", r.selected_lambda);
    for (lambda, err) in &r.lambda_candidates {
        s += &format!("  lambda {lambda:<8} validation error {err:.2}%\n");
    }
    s
}

pub const TRAIN_LOG_HEADER: &str = "epoch,train_recon,valid_recon,epoch_seconds";

/// Append-only training log, flushed after every epoch so an aborted run
/// keeps everything written before the failure.
#[derive(Debug)]
pub struct TrainLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl TrainLog {
    pub fn create(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .write(true)
            .create(true)
            .truncate(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let mut log = Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        log.line(TRAIN_LOG_HEADER)?;
        Ok(log)
    }

    fn line(&mut self, text: &str) -> Result<()> {
        writeln!(self.out, "{text}")
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn append(&mut self, record: &EpochRecord, seconds: f64) -> Result<()> {
        let line = format!("{},{},{},{seconds:.3}", record.epoch, record.train_recon, record.valid_recon);
        self.line(&line)
    }
}
