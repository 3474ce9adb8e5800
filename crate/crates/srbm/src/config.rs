//! Experiment configuration as a line-oriented `key = value` file.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is optional;
//! missing keys keep their defaults. Command-line flags are applied on top.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use srbm_core::data::SplitSpec;
use srbm_core::logreg::{LogRegOptions, LAMBDA_GRID};
use srbm_core::trainer::{StatsMode, TrainConfig};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Rbm,
    Subspace,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rbm => "rbm",
            ModelKind::Subspace => "subspace",
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rbm" => Ok(ModelKind::Rbm),
            "subspace" => Ok(ModelKind::Subspace),
            other => Err(format!("unknown model kind {other:?} (expected rbm or subspace)")),
        }
    }
}

fn stats_name(mode: StatsMode) -> &'static str {
    match mode {
        StatsMode::RaoBlackwell => "rao-blackwell",
        StatsMode::Sampled => "sampled",
    }
}

fn parse_stats(s: &str) -> std::result::Result<StatsMode, String> {
    match s {
        "rao-blackwell" => Ok(StatsMode::RaoBlackwell),
        "sampled" => Ok(StatsMode::Sampled),
        other => Err(format!("unknown statistics mode {other:?} (expected rao-blackwell or sampled)")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ModelKind,
    pub gates: usize,
    /// Ignored for the RBM.
    pub subspace: usize,
    /// `seed` drives the split as well as training.
    pub split: SplitSpec,
    pub train: TrainConfig,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub lambda_grid: Vec<f64>,
    pub logreg: LogRegOptions,
    /// Whether `K` was given explicitly, by file or flag.
    pub subspace_set: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Subspace,
            gates: 500,
            subspace: 3,
            split: SplitSpec::new(1000, 0),
            train: TrainConfig::default(),
            data_dir: PathBuf::from("data/mnist"),
            out_dir: PathBuf::from("runs"),
            lambda_grid: LAMBDA_GRID.to_vec(),
            logreg: LogRegOptions::default(),
            subspace_set: false,
        }
    }
}

/// Values given on the command line; `Some` wins over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub kind: Option<ModelKind>,
    pub gates: Option<usize>,
    pub subspace: Option<usize>,
    pub per_digit: Option<usize>,
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub max_epochs: Option<usize>,
}

fn value<T: FromStr>(key: &str, raw: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| format!("{key}: cannot parse {raw:?}: {e}"))
}

impl ExperimentConfig {
    pub fn seed(&self) -> u64 {
        self.train.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.train.seed = seed;
        self.split.seed = seed;
    }

    fn set(&mut self, key: &str, raw: &str) -> std::result::Result<(), String> {
        match key {
            "model_kind" => self.kind = raw.parse()?,
            "M" => self.gates = value(key, raw)?,
            "K" => {
                self.subspace = value(key, raw)?;
                self.subspace_set = true;
            }
            "per_digit" => self.split.per_digit_train = value(key, raw)?,
            "validation_size" => self.split.validation_size = value(key, raw)?,
            "test_size" => self.split.test_size = value(key, raw)?,
            "seed" => self.set_seed(value(key, raw)?),
            "learning_rate" => self.train.learning_rate = value(key, raw)?,
            "minibatch_size" => self.train.minibatch_size = value(key, raw)?,
            "cd_steps" => self.train.cd_steps = value(key, raw)?,
            "lookahead" => self.train.lookahead = value(key, raw)?,
            "max_epochs" => self.train.max_epochs = value(key, raw)?,
            "stats" => self.train.stats = parse_stats(raw)?,
            "init_std" => self.train.init_std = value(key, raw)?,
            "lambda_grid" => {
                self.lambda_grid = raw
                    .split(',')
                    .map(|v| value(key, v.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "logreg_max_iterations" => self.logreg.max_iterations = value(key, raw)?,
            "logreg_tolerance" => self.logreg.tolerance = value(key, raw)?,
            "data_dir" => self.data_dir = PathBuf::from(raw),
            "out" => self.out_dir = PathBuf::from(raw),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("{}:{}: expected `key = value`", origin.display(), n + 1)))?;
            cfg.set(key.trim(), raw.trim())
                .map_err(|m| Error::Usage(format!("{}:{}: {m}", origin.display(), n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.set_seed(seed);
        }
        if let Some(kind) = o.kind {
            self.kind = kind;
        }
        if let Some(m) = o.gates {
            self.gates = m;
        }
        if let Some(k) = o.subspace {
            self.subspace = k;
            self.subspace_set = true;
        }
        if let Some(n) = o.per_digit {
            self.split.per_digit_train = n;
        }
        if let Some(dir) = &o.data_dir {
            self.data_dir = dir.clone();
        }
        if let Some(dir) = &o.out_dir {
            self.out_dir = dir.clone();
        }
        if let Some(e) = o.max_epochs {
            self.train.max_epochs = e;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !SplitSpec::PER_DIGIT_CHOICES.contains(&self.split.per_digit_train) {
            return Err(Error::Usage(format!(
                "per_digit must be one of {:?}, got {}",
                SplitSpec::PER_DIGIT_CHOICES,
                self.split.per_digit_train
            )));
        }
        if self.gates == 0 || self.subspace == 0 {
            return Err(Error::Usage("M and K must be positive".into()));
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Usage("lambda_grid needs non-negative finite values".into()));
        }
        self.train.validate()?;
        Ok(())
    }

    /// Every key with its current value, in a form `parse` reads back.
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let grid: Vec<String> = self.lambda_grid.iter().map(f64::to_string).collect();
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| writeln!(s, "{k} = {v}").expect("writing to a String");
        kv("model_kind", &self.kind.as_str());
        kv("M", &self.gates);
        kv("K", &self.subspace);
        kv("per_digit", &self.split.per_digit_train);
        kv("validation_size", &self.split.validation_size);
        kv("test_size", &self.split.test_size);
        kv("seed", &self.seed());
        kv("learning_rate", &t.learning_rate);
        kv("minibatch_size", &t.minibatch_size);
        kv("cd_steps", &t.cd_steps);
        kv("lookahead", &t.lookahead);
        kv("max_epochs", &t.max_epochs);
        kv("stats", &stats_name(t.stats));
        kv("init_std", &t.init_std);
        kv("lambda_grid", &grid.join(","));
        kv("logreg_max_iterations", &self.logreg.max_iterations);
        kv("logreg_tolerance", &self.logreg.tolerance);
        kv("data_dir", &self.data_dir.display());
        kv("out", &self.out_dir.display());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig {
            kind: ModelKind::Rbm,
            ..Default::default()
        };
        cfg.set_seed(42);
        cfg.train.learning_rate = 0.1 + 0.2;
        cfg.train.stats = StatsMode::Sampled;
        cfg.lambda_grid = vec![0.5, 1e-7];
        let mut back = ExperimentConfig::parse(&cfg.to_text(), Path::new("c")).unwrap();
        assert!(back.subspace_set);
        back.subspace_set = false;
        assert_eq!(back, cfg);
    }

    #[test]
    fn comments_and_errors() {
        let cfg = ExperimentConfig::parse("# hi\n\nM = 7\n  seed=3  \n", Path::new("c")).unwrap();
        assert_eq!((cfg.gates, cfg.split.seed, cfg.train.seed), (7, 3, 3));
        assert!(!cfg.subspace_set);
        let err = ExperimentConfig::parse("M = 7\nbogus = 1\n", Path::new("c.cfg"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("c.cfg:2") && err.contains("bogus"), "{err}");
        assert!(ExperimentConfig::parse("M 7\n", Path::new("c")).is_err());
        assert!(ExperimentConfig::parse("M = x\n", Path::new("c")).is_err());
    }

    #[test]
    fn flags_win() {
        let mut cfg = ExperimentConfig::parse("M = 7\nseed = 3\n", Path::new("c")).unwrap();
        cfg.apply(&Overrides {
            gates: Some(9),
            subspace: Some(2),
            ..Default::default()
        });
        assert_eq!((cfg.gates, cfg.subspace, cfg.seed()), (9, 2, 3));
        assert!(cfg.subspace_set);
    }

    #[test]
    fn per_digit_is_restricted() {
        let mut cfg = ExperimentConfig::default();
        cfg.split.per_digit_train = 50;
        assert!(matches!(cfg.validate(), Err(Error::Usage(_))));
        cfg.split.per_digit_train = 10;
        cfg.validate().unwrap();
    }
}
