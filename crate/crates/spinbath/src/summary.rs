//! Per-coupling comparison table built from a finished run directory.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::io::{read_csv, Row};
use crate::runner::{RunManifest, RunStatus, ISOLATED_FILE};

#[derive(Debug, thiserror::Error)]
pub enum SummaryError {
    #[error("missing {0}")]
    Missing(PathBuf),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("run in {0} is marked incomplete")]
    Incomplete(PathBuf),
    #[error("{path} does not share the isolated reference's time grid")]
    GridMismatch { path: PathBuf },
}

/// Mean of `S` over `t ∈ [t_max/2, t_max]`.
pub fn late_window_mean(rows: &[Row], t_max: f64) -> f64 {
    let late: Vec<f64> = rows.iter().filter(|r| r.t >= 0.5 * t_max - 1e-9).map(|r| r.s).collect();
    late.iter().sum::<f64>() / late.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub lambda: f64,
    pub late_mean_entropy: f64,
    pub max_abs_dz: f64,
    pub rms_x: f64,
    pub rms_y: f64,
    pub rms_z: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

fn rms(a: &[Row], b: &[Row], f: impl Fn(&Row) -> f64) -> f64 {
    (a.iter().zip(b).map(|(p, q)| (f(p) - f(q)).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Compares one coupled trajectory with the isolated one on the shared grid.
pub fn compare(lambda: f64, coupled: &[Row], isolated: &[Row], t_max: f64) -> SummaryRow {
    SummaryRow {
        lambda,
        late_mean_entropy: late_window_mean(coupled, t_max),
        max_abs_dz: coupled.iter().zip(isolated).map(|(p, q)| (p.z - q.z).abs()).fold(0.0, f64::max),
        rms_x: rms(coupled, isolated, |r| r.x),
        rms_y: rms(coupled, isolated, |r| r.y),
        rms_z: rms(coupled, isolated, |r| r.z),
    }
}

fn load(path: PathBuf) -> Result<Vec<Row>, SummaryError> {
    if !path.is_file() {
        return Err(SummaryError::Missing(path));
    }
    read_csv(&path).map_err(|source| SummaryError::Read { path, source })
}

pub fn summarize(dir: &Path) -> Result<Summary, SummaryError> {
    let mpath = crate::config::manifest_path(dir);
    if !mpath.is_file() {
        return Err(SummaryError::Missing(mpath));
    }
    let manifest = RunManifest::read(dir).map_err(|source| SummaryError::Read { path: mpath, source })?;
    if manifest.status != RunStatus::Complete {
        return Err(SummaryError::Incomplete(dir.into()));
    }
    let isolated = load(dir.join(ISOLATED_FILE))?;
    let t_max = manifest.config.t_max;
    let rows = manifest
        .lambdas
        .iter()
        .map(|rec| {
            let path = dir.join(&rec.csv);
            let coupled = load(path.clone())?;
            if coupled.len() != isolated.len() || coupled.iter().zip(&isolated).any(|(a, b)| a.t != b.t) {
                return Err(SummaryError::GridMismatch { path });
            }
            Ok(compare(rec.lambda, &coupled, &isolated, t_max))
        })
        .collect::<Result<_, _>>()?;
    Ok(Summary { rows })
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>8} {:>12} {:>12} {:>12} {:>12} {:>12}", "lambda", "S_late", "max|dZ|", "rms_X", "rms_Y", "rms_Z")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>8} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
                r.lambda, r.late_mean_entropy, r.max_abs_dz, r.rms_x, r.rms_y, r.rms_z
            )?;
        }
        Ok(())
    }
}
