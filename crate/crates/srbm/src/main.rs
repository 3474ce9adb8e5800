use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};

use srbm::check::Mutation;
use srbm::commands;
use srbm::config::{ExperimentConfig, ModelKind, Overrides};
use srbm::report::{metrics_csv_line, metrics_table};
use srbm::{Error, Result};

#[derive(Parser)]
#[command(name = "srbm", version, about = "Subspace restricted Boltzmann machines on MNIST")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write model.bin, train_log.csv and manifest.txt.
    Train(Common),
    /// Report reconstruction error, classification error and active units.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write the filters of a 784-visible model as a PGM image.
    ExportFilters {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the closed forms against exact enumeration on random tiny models.
    OracleCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        /// Inject a known fault; the check is then expected to fail.
        #[arg(long, value_parser = PossibleValuesParser::new(Mutation::NAMES))]
        mutate: Option<String>,
    },
    /// Load MNIST, build the splits and write their row indices.
    PrepareData(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = PossibleValuesParser::new(["rbm", "subspace"]))]
    model_kind: Option<String>,
    /// Gate (hidden) units.
    #[arg(long = "M")]
    gates: Option<usize>,
    /// Subspace units per gate.
    #[arg(long = "K")]
    subspace: Option<usize>,
    #[arg(long, value_parser = PossibleValuesParser::new(["10", "100", "1000"]))]
    per_digit: Option<String>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_epochs: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply(&Overrides {
            seed: self.seed,
            kind: self
                .model_kind
                .as_deref()
                .map(|k| k.parse::<ModelKind>().expect("restricted by clap")),
            gates: self.gates,
            subspace: self.subspace,
            per_digit: self.per_digit.as_deref().map(|n| n.parse().expect("restricted by clap")),
            data_dir: self.data_dir.clone(),
            out_dir: self.out.clone(),
            max_epochs: self.max_epochs,
        });
        Ok(cfg)
    }
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Train(common) => {
            let cfg = common.resolve()?;
            let s = commands::cmd_train(&cfg, &mut |w| eprintln!("warning: {w}"))?;
            println!(
                "trained {} epochs (best {}), wrote {}",
                s.epochs_run,
                s.best_epoch.map_or_else(|| "none".to_string(), |e| e.to_string()),
                s.model_path.display()
            );
        }
        Command::Eval { model, common } => {
            let cfg = common.resolve()?;
            let report = commands::cmd_eval(&model, &cfg)?;
            print!("{}", metrics_table(&report));
            println!("{}", metrics_csv_line(&report));
        }
        Command::ExportFilters { model, out } => {
            let (w, h) = commands::cmd_export_filters(&model, &out)?;
            println!("wrote {w}x{h} image to {}", out.display());
        }
        Command::OracleCheck { seed, trials, mutate } => {
            let mutation = mutate.as_deref().map(|m| Mutation::from_name(m).expect("restricted by clap"));
            let report = commands::cmd_oracle_check(seed, trials, mutation)?;
            let mut failed = 0;
            for (model, d) in report.failures() {
                failed += 1;
                println!(
                    "FAIL seed {} trial {} (D={} M={} K={}): {} error {:e} > {:e} at {}",
                    report.seed,
                    model.trial,
                    model.shape.visible(),
                    model.shape.gates(),
                    model.shape.subspace(),
                    d.check,
                    d.error,
                    d.tolerance,
                    d.location
                );
            }
            println!("{} models checked, {failed} failures", report.models.len());
            return Ok(report.passed());
        }
        Command::PrepareData(common) => {
            let cfg = common.resolve()?;
            let (splits, hist) = commands::cmd_prepare_data(&cfg)?;
            println!(
                "train {} validation {} test {}; train digits {:?}",
                splits.train.len(),
                splits.validation.len(),
                splits.test.len(),
                hist
            );
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Error::exit_code(&e) as u8)
        }
    }
}
