//! Run configuration and the reference preset.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use spinbath_core::model::{
    sample_debye_frequencies, FrequencyMode, ModelParams, REFERENCE_BETA, REFERENCE_LAMBDA0, REFERENCE_N_S, REFERENCE_OMEGA0,
    REFERENCE_OMEGA_D,
};
use spinbath_core::propagation::uniform_grid;

use crate::io::read_frequency_file;

pub const REFERENCE_N_EIG: usize = 20;
pub const REFERENCE_KT: f64 = 0.02;
pub const REFERENCE_LAMBDAS: [f64; 5] = [0.0, 1.0, 2.0, 4.0, 8.0];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// Where the bath frequencies come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum FrequencySource {
    Quantile,
    Random { seed: u64 },
    File { path: PathBuf },
    Explicit { values: Vec<f64> },
}

impl FromStr for FrequencySource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "quantile" {
            return Ok(FrequencySource::Quantile);
        }
        if let Some(seed) = s.strip_prefix("random:") {
            return seed
                .parse()
                .map(|seed| FrequencySource::Random { seed })
                .map_err(|_| format!("bad seed in `{s}`"));
        }
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err("empty path in `file:`".into());
            }
            return Ok(FrequencySource::File { path: path.into() });
        }
        Err(format!("expected quantile, random:SEED or file:PATH, got `{s}`"))
    }
}

impl fmt::Display for FrequencySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrequencySource::Quantile => write!(f, "quantile"),
            FrequencySource::Random { seed } => write!(f, "random:{seed}"),
            FrequencySource::File { path } => write!(f, "file:{}", path.display()),
            FrequencySource::Explicit { values } => write!(f, "explicit({} values)", values.len()),
        }
    }
}

impl FrequencySource {
    /// Realized, sorted frequency list.
    pub fn resolve(&self, n_s: usize, omega_d: f64) -> Result<Vec<f64>, ConfigError> {
        let mode = match self {
            FrequencySource::Quantile => FrequencyMode::Quantile,
            FrequencySource::Random { seed } => FrequencyMode::Random { seed: *seed },
            FrequencySource::File { path } => FrequencyMode::Explicit(read_frequency_file(path)?),
            FrequencySource::Explicit { values } => FrequencyMode::Explicit(values.clone()),
        };
        sample_debye_frequencies(n_s, omega_d, &mode).map_err(|e| invalid(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_s: usize,
    pub omega0: f64,
    pub beta: f64,
    pub lambda0: f64,
    pub omega_d: f64,
    pub lambdas: Vec<f64>,
    pub n_eig: usize,
    pub kt: f64,
    pub t_max: f64,
    pub dt_out: f64,
    pub rtol: f64,
    pub atol: f64,
    pub frequencies: FrequencySource,
    pub isolated_reference: bool,
    pub lanczos_tol: f64,
    pub lanczos_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::reference()
    }
}

impl RunConfig {
    pub fn reference() -> Self {
        RunConfig {
            n_s: REFERENCE_N_S,
            omega0: REFERENCE_OMEGA0,
            beta: REFERENCE_BETA,
            lambda0: REFERENCE_LAMBDA0,
            omega_d: REFERENCE_OMEGA_D,
            lambdas: REFERENCE_LAMBDAS.to_vec(),
            n_eig: REFERENCE_N_EIG,
            kt: REFERENCE_KT,
            t_max: 100.0,
            dt_out: 0.1,
            rtol: 1e-10,
            atol: 1e-12,
            frequencies: FrequencySource::Quantile,
            isolated_reference: true,
            lanczos_tol: 1e-10,
            lanczos_seed: 0x5eed_1a2c,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_s == 0 || self.n_s > 24 {
            return Err(invalid(format!("n_s = {} outside 1..=24", self.n_s)));
        }
        if self.lambdas.is_empty() {
            return Err(invalid("lambda list is empty"));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !l.is_finite()) {
            return Err(invalid(format!("lambda {l} is not finite")));
        }
        let mut sorted = self.lambdas.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("lambda list has duplicates"));
        }
        if self.n_eig == 0 || self.n_eig > 1 << self.n_s {
            return Err(invalid(format!("n_eig = {} outside 1..=2^n_s", self.n_eig)));
        }
        for (name, v) in [("kT", self.kt), ("t_max", self.t_max), ("dt_out", self.dt_out), ("rtol", self.rtol), ("atol", self.atol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.lanczos_tol > 0.0) {
            return Err(invalid("lanczos_tol must be positive"));
        }
        uniform_grid(self.t_max, self.dt_out).map_err(|e| invalid(e.to_string()))?;
        self.model_params(&self.frequencies.resolve(self.n_s, self.omega_d)?, 0.0)
            .validate()
            .map_err(|e| invalid(e.to_string()))
    }

    pub fn model_params(&self, frequencies: &[f64], lambda: f64) -> ModelParams {
        ModelParams {
            n_s: self.n_s,
            omega0: self.omega0,
            beta: self.beta,
            lambda0: self.lambda0,
            lambda,
            omega_d: self.omega_d,
            frequencies: frequencies.to_vec(),
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.t_max, self.dt_out).expect("grid checked by validate")
    }

    /// Same run with the frequency source pinned to the realized values, so a copy of the
    /// config no longer depends on files or samplers.
    pub fn pinned(&self, frequencies: &[f64]) -> Self {
        RunConfig { frequencies: FrequencySource::Explicit { values: frequencies.to_vec() }, ..self.clone() }
    }
}

/// CSV file name for one coupling, e.g. `sweep_lambda_0.5.csv`.
pub fn sweep_file_name(lambda: f64) -> String {
    format!("sweep_lambda_{lambda}.csv")
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_preset_values() {
        let c = RunConfig::reference();
        assert_eq!(c.n_s, 12);
        assert_eq!(c.n_eig, 20);
        assert_eq!(c.kt, 0.02);
        assert_eq!(c.lambda0, 1.0);
        assert_eq!(c.lambdas, vec![0.0, 1.0, 2.0, 4.0, 8.0]);
        assert_eq!(c.omega0, 0.8288);
        assert_eq!(c.beta, 0.01);
        assert_eq!(c.omega_d, 1.0);
        c.validate().unwrap();
        assert_eq!(c.grid().len(), 1001);
    }

    #[test]
    fn frequency_source_parsing() {
        assert_eq!("quantile".parse::<FrequencySource>().unwrap(), FrequencySource::Quantile);
        assert_eq!("random:42".parse::<FrequencySource>().unwrap(), FrequencySource::Random { seed: 42 });
        assert_eq!(
            "file:/tmp/w.txt".parse::<FrequencySource>().unwrap(),
            FrequencySource::File { path: "/tmp/w.txt".into() }
        );
        for bad in ["", "random:", "random:x", "file:", "debye"] {
            assert!(bad.parse::<FrequencySource>().is_err(), "{bad}");
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let cases: Vec<fn(&mut RunConfig)> = vec![
            |c| c.lambdas.clear(),
            |c| c.lambdas = vec![1.0, 1.0],
            |c| c.lambdas = vec![f64::NAN],
            |c| c.kt = 0.0,
            |c| c.t_max = -1.0,
            |c| c.dt_out = 0.3,
            |c| c.n_eig = 0,
            |c| c.n_s = 0,
            |c| c.rtol = 0.0,
            |c| c.omega0 = f64::NAN,
            |c| c.frequencies = FrequencySource::Explicit { values: vec![0.5] },
            |c| c.frequencies = FrequencySource::File { path: "/nonexistent/freqs.txt".into() },
        ];
        for (i, mutate) in cases.into_iter().enumerate() {
            let mut c = RunConfig::reference();
            mutate(&mut c);
            assert!(c.validate().is_err(), "case {i} accepted");
        }
    }

    #[test]
    fn config_json_round_trip() {
        let mut c = RunConfig::reference();
        c.frequencies = FrequencySource::Random { seed: 7 };
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn pinned_config_reproduces_frequencies() {
        let c = RunConfig { frequencies: FrequencySource::Random { seed: 3 }, ..RunConfig::reference() };
        let f = c.frequencies.resolve(c.n_s, c.omega_d).unwrap();
        let pinned = c.pinned(&f);
        assert_eq!(pinned.frequencies.resolve(c.n_s, c.omega_d).unwrap(), f);
    }

    #[test]
    fn file_names() {
        assert_eq!(sweep_file_name(0.0), "sweep_lambda_0.csv");
        assert_eq!(sweep_file_name(8.0), "sweep_lambda_8.csv");
        assert_eq!(sweep_file_name(0.5), "sweep_lambda_0.5.csv");
    }
}
