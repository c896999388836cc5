//! Run configuration: defaults, plain-text `key=value` files, and the
//! snapshot text embedded in model files. Precedence is CLI flag over file
//! over default; this module handles the file and default layers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};

/// Everything a training or evaluation run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Dataset manifest path.
    pub dataset: PathBuf,
    pub train_fraction: f64,
    pub seed: u64,
    pub normalize_target: bool,
    pub ensemble: EnsembleConfig,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: PathBuf::new(),
            train_fraction: 0.9,
            seed: 42,
            normalize_target: true,
            ensemble: EnsembleConfig::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Applies one `key=value` override.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| Error::Config {
                reason: format!("invalid value {value:?} for key {key:?}"),
            })
        }
        match key {
            "dataset" => self.dataset = PathBuf::from(value),
            "fraction" => self.train_fraction = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "normalize_target" => self.normalize_target = parse(key, value)?,
            "epochs" => self.ensemble.net.epochs = parse(key, value)?,
            "batch_size" => self.ensemble.net.batch_size = parse(key, value)?,
            "learning_rate" => self.ensemble.net.learning_rate = parse(key, value)?,
            "beta1" => self.ensemble.net.beta1 = parse(key, value)?,
            "beta2" => self.ensemble.net.beta2 = parse(key, value)?,
            "epsilon" => self.ensemble.net.epsilon = parse(key, value)?,
            "huber_delta" => self.ensemble.net.huber_delta = parse(key, value)?,
            "conv_channels" => self.ensemble.net.conv_channels = parse(key, value)?,
            "kernel_size" => self.ensemble.net.kernel_size = parse(key, value)?,
            "n_trees" => self.ensemble.forest.n_trees = parse(key, value)?,
            "max_depth" => self.ensemble.forest.max_depth = parse(key, value)?,
            "shrinkage" => self.ensemble.forest.shrinkage = parse(key, value)?,
            "lambda" => self.ensemble.forest.lambda = parse(key, value)?,
            "min_samples_leaf" => self.ensemble.forest.min_samples_leaf = parse(key, value)?,
            "memory_fraction" => self.ensemble.memory_fraction = parse(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            other => {
                return Err(Error::Config {
                    reason: format!("unknown config key {other:?}"),
                })
            }
        }
        Ok(())
    }

    /// Merges a config file into `self`. Lines are `key = value`; blank
    /// lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                reason: format!("{}:{}: expected key=value", path.display(), lineno + 1),
            })?;
            self.apply_kv(key.trim(), value.trim()).map_err(|e| Error::Config {
                reason: format!("{}:{}: {e}", path.display(), lineno + 1),
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config {
                reason: format!(
                    "fraction must lie strictly between 0 and 1, got {}",
                    self.train_fraction
                ),
            });
        }
        self.ensemble.validate()
    }

    /// Deterministic snapshot text; `parse_snapshot` inverts it exactly.
    /// Fixed key order keeps byte-identical model files reproducible.
    pub fn to_snapshot(&self) -> String {
        let mut s = String::new();
        let e = &self.ensemble;
        let _ = write!(
            s,
            "dataset={}\nfraction={}\nseed={}\nnormalize_target={}\n\
             epochs={}\nbatch_size={}\nlearning_rate={}\nbeta1={}\nbeta2={}\nepsilon={}\n\
             huber_delta={}\nconv_channels={}\nkernel_size={}\n\
             n_trees={}\nmax_depth={}\nshrinkage={}\nlambda={}\nmin_samples_leaf={}\n\
             memory_fraction={}\nout={}\n",
            self.dataset.display(),
            self.train_fraction,
            self.seed,
            self.normalize_target,
            e.net.epochs,
            e.net.batch_size,
            e.net.learning_rate,
            e.net.beta1,
            e.net.beta2,
            e.net.epsilon,
            e.net.huber_delta,
            e.net.conv_channels,
            e.net.kernel_size,
            e.forest.n_trees,
            e.forest.max_depth,
            e.forest.shrinkage,
            e.forest.lambda,
            e.forest.min_samples_leaf,
            e.memory_fraction,
            self.out_dir.display(),
        );
        s
    }

    /// Parses text produced by [`RunConfig::to_snapshot`].
    pub fn parse_snapshot(text: &str) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                reason: format!("snapshot line {line:?} is not key=value"),
            })?;
            config.apply_kv(key, value)?;
        }
        Ok(config)
    }
}
