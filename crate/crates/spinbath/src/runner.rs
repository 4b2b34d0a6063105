//! End-to-end sweep: bath spectra, thermal trajectory ensembles, isolated reference, artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spinbath_core::eigensolver::{lowest_eigenpairs, BathSpectrum, LanczosConfig};
use spinbath_core::error::Error as CoreError;
use spinbath_core::hilbert::{PauliAxis, StateVector};
use spinbath_core::model::{build_bath_hamiltonian, PauliTermList, SuperSpinForm};
use spinbath_core::observables::{
    entropy, partial_trace_impurity, spin_components, thermal_reduced_density, ReducedDensityMatrix, ThermalEnsemble,
};
use spinbath_core::propagation::{evolve_rk8, make_initial_state, EnergyShift, IntegratorConfig, TrajectoryRecord};

use crate::config::{manifest_path, sweep_file_name, ConfigError, RunConfig};
use crate::io::{plot_script, write_csv, write_spectrum, Row, SpectrumBlock};
use crate::summary::late_window_mean;

pub const ISOLATED_FILE: &str = "isolated.csv";
pub const SPECTRUM_FILE: &str = "spectrum.dat";
pub const PLOT_FILE: &str = "plot.gp";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Config,
    Numerical,
    Io,
}

#[derive(Debug, thiserror::Error)]
#[error("stage `{stage}` failed: {message}")]
pub struct RunError {
    pub stage: &'static str,
    pub kind: ErrorKind,
    pub message: String,
}

impl RunError {
    fn new(stage: &'static str, kind: ErrorKind, message: impl Into<String>) -> Self {
        RunError { stage, kind, message: message.into() }
    }

    fn core(stage: &'static str, e: CoreError) -> Self {
        let kind = match e {
            CoreError::InvalidParameter { .. } | CoreError::FrequencyOutOfRange { .. } | CoreError::CountMismatch { .. } => {
                ErrorKind::Config
            }
            _ => ErrorKind::Numerical,
        };
        RunError::new(stage, kind, e.to_string())
    }

    fn io(stage: &'static str, path: &Path, e: std::io::Error) -> Self {
        RunError::new(stage, ErrorKind::Io, format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io => 1,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::new("config", ErrorKind::Config, e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Complete,
    Incomplete,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaRecord {
    pub lambda: f64,
    pub csv: String,
    /// Bath levels used, ascending; more than `n_eig` when a multiplet straddles the cut.
    pub energies: Vec<f64>,
    pub extension: usize,
    pub weights: Vec<f64>,
    pub weight_truncation: f64,
    pub max_residual: f64,
    pub lanczos_matvecs: usize,
    pub max_norm_drift: f64,
    pub flagged_trajectories: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub late_mean_entropy: f64,
    pub bath_seconds: f64,
    /// Summed over this coupling's trajectories, which run concurrently.
    pub trajectory_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsolatedRecord {
    pub csv: String,
    pub max_norm_drift: f64,
    pub accepted_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorRecord {
    pub method: String,
    pub rtol: f64,
    pub atol: f64,
    pub energy_shift: String,
    pub stabilization: f64,
    pub max_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanczosRecord {
    pub n_eig: usize,
    pub tol: f64,
    pub seed: u64,
    pub max_krylov: usize,
    pub degeneracy_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub status: RunStatus,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub version: String,
    /// How the frequencies were specified on the command line.
    pub frequency_source: String,
    /// The run's configuration with the realized frequencies pinned; rerunning it reproduces
    /// every output byte for byte.
    pub config: RunConfig,
    pub frequencies: Vec<f64>,
    pub integrator: IntegratorRecord,
    pub lanczos: LanczosRecord,
    pub lambdas: Vec<LambdaRecord>,
    pub isolated: Option<IsolatedRecord>,
    pub files: Vec<String>,
    pub total_seconds: f64,
}

impl RunManifest {
    pub fn read(dir: &Path) -> std::io::Result<RunManifest> {
        let text = fs::read_to_string(manifest_path(dir))?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(manifest_path(dir), text + "\n")
    }
}

pub fn lanczos_config(cfg: &RunConfig) -> LanczosConfig {
    LanczosConfig { tol: cfg.lanczos_tol, seed: cfg.lanczos_seed, ..LanczosConfig::with_n_eig(cfg.n_eig) }
}

pub fn integrator_config(cfg: &RunConfig) -> IntegratorConfig {
    IntegratorConfig::new(cfg.grid()).with_tolerances(cfg.rtol, cfg.atol).with_shift(EnergyShift::Mean)
}

/// Lowest bath eigenpairs at coupling `lambda`.
pub fn bath_spectrum(cfg: &RunConfig, frequencies: &[f64], lambda: f64) -> Result<BathSpectrum, CoreError> {
    let h = build_bath_hamiltonian(&cfg.model_params(frequencies, lambda))?;
    lowest_eigenpairs(&h, &lanczos_config(cfg))
}

/// Impurity reduced density matrix on the output grid for the initial state `|1⟩ ⊗ |bath⟩`.
pub fn trajectory(
    op: &SuperSpinForm,
    bath: &StateVector,
    integ: &IntegratorConfig,
) -> Result<(Vec<ReducedDensityMatrix>, TrajectoryRecord), CoreError> {
    let psi0 = make_initial_state(bath)?;
    let mut rhos = Vec::with_capacity(integ.t_grid.len());
    let record = evolve_rk8(op, &psi0, integ, |_, _, psi| rhos.push(partial_trace_impurity(psi)))?;
    Ok((rhos, record))
}

/// Thermal average of per-member trajectories, reduced in member order.
pub fn ensemble_rows(
    times: &[f64],
    members: &[Vec<ReducedDensityMatrix>],
    ensemble: &ThermalEnsemble,
) -> Result<Vec<Row>, CoreError> {
    let mut at_t = Vec::with_capacity(members.len());
    times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            at_t.clear();
            at_t.extend(members.iter().map(|m| m[k]));
            let rho = thermal_reduced_density(&at_t, ensemble)?;
            let (x, y, z) = spin_components(&rho);
            Ok(Row { t, s: entropy(&rho)?, x, y, z })
        })
        .collect()
}

/// The bare impurity `(ω₀/2) Z + β X` started in `|1⟩`, integrated with the sweep's settings.
pub fn isolated_reference(cfg: &RunConfig) -> Result<(Vec<Row>, TrajectoryRecord), CoreError> {
    let mut h = PauliTermList::new(1);
    h.push(cfg.omega0 / 2.0, &[(0, PauliAxis::Z)])?;
    h.push(cfg.beta, &[(0, PauliAxis::X)])?;
    let integ = integrator_config(cfg);
    let mut rows = Vec::with_capacity(integ.t_grid.len());
    let record = evolve_rk8(&h.compile(), &StateVector::basis(1, 1), &integ, |_, t, psi| {
        let (x, y, z) = spin_components(&partial_trace_impurity(psi));
        rows.push(Row { t, s: 0.0, x, y, z });
    })?;
    Ok((rows, record))
}

struct Output<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Output<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn csv(&mut self, name: &str, rows: &[Row]) -> Result<(), RunError> {
        let path = self.path(name);
        write_csv(&path, rows).map_err(|e| RunError::io("output", &path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Runs the whole sweep and writes its artifacts into `out_dir`.
///
/// On failure after the output directory exists, a manifest with status `incomplete` and the
/// failing stage is still written next to whatever files were finished.
pub fn run_experiment(cfg: &RunConfig, out_dir: &Path, progress: &(dyn Fn(&str) + Sync)) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    cfg.validate()?;
    let frequencies = cfg.frequencies.resolve(cfg.n_s, cfg.omega_d)?;
    fs::create_dir_all(out_dir).map_err(|e| RunError::io("output", out_dir, e))?;

    let lz = lanczos_config(cfg);
    let integ = integrator_config(cfg);
    let mut manifest = RunManifest {
        status: RunStatus::Incomplete,
        failed_stage: None,
        error: None,
        version: env!("CARGO_PKG_VERSION").to_string(),
        frequency_source: cfg.frequencies.to_string(),
        config: cfg.pinned(&frequencies),
        frequencies: frequencies.clone(),
        integrator: IntegratorRecord {
            method: "dop853".into(),
            rtol: integ.rtol,
            atol: integ.atol,
            energy_shift: "mean".into(),
            stabilization: integ.stabilization,
            max_steps: integ.max_steps,
        },
        lanczos: LanczosRecord {
            n_eig: lz.n_eig,
            tol: lz.tol,
            seed: lz.seed,
            max_krylov: lz.max_krylov,
            degeneracy_gap: lz.degeneracy_gap,
        },
        lambdas: Vec::new(),
        isolated: None,
        files: Vec::new(),
        total_seconds: 0.0,
    };
    let mut out = Output { dir: out_dir, files: Vec::new() };
    let result = sweep(cfg, &frequencies, &integ, &mut out, &mut manifest, progress);
    manifest.files = out.files;
    manifest.total_seconds = start.elapsed().as_secs_f64();
    match &result {
        Ok(()) => manifest.status = RunStatus::Complete,
        Err(e) => {
            manifest.failed_stage = Some(e.stage.to_string());
            manifest.error = Some(e.message.clone());
        }
    }
    let written = manifest.write(out_dir).map_err(|e| RunError::io("output", &manifest_path(out_dir), e));
    result?;
    written?;
    Ok(manifest)
}

fn sweep(
    cfg: &RunConfig,
    frequencies: &[f64],
    integ: &IntegratorConfig,
    out: &mut Output,
    manifest: &mut RunManifest,
    progress: &(dyn Fn(&str) + Sync),
) -> Result<(), RunError> {
    let spectra: Vec<(BathSpectrum, f64)> = cfg
        .lambdas
        .par_iter()
        .map(|&lambda| {
            let t = Instant::now();
            let s = bath_spectrum(cfg, frequencies, lambda).map_err(|e| RunError::core("bath", e))?;
            progress(&format!(
                "bath λ = {lambda}: {} levels, ground {:.12}, {} matvecs",
                s.len(),
                s.energies[0],
                s.diagnostics.matvecs
            ));
            Ok((s, t.elapsed().as_secs_f64()))
        })
        .collect::<Result<_, RunError>>()?;
    let ensembles: Vec<ThermalEnsemble> = spectra
        .iter()
        .map(|(s, _)| ThermalEnsemble::from_energies(&s.energies, cfg.kt))
        .collect::<Result<_, _>>()
        .map_err(|e| RunError::core("weights", e))?;

    let blocks: Vec<SpectrumBlock> = cfg
        .lambdas
        .iter()
        .zip(&spectra)
        .map(|(&lambda, (s, _))| SpectrumBlock {
            lambda,
            energies: s.energies.clone(),
            residuals: s.residuals.clone(),
            eigenvectors: s.eigenvectors.clone(),
        })
        .collect();
    let path = out.path(SPECTRUM_FILE);
    write_spectrum(&path, cfg.n_s, &blocks).map_err(|e| RunError::io("output", &path, e))?;
    out.files.push(SPECTRUM_FILE.into());
    drop(blocks);

    let operators: Vec<SuperSpinForm> = cfg
        .lambdas
        .iter()
        .map(|&lambda| SuperSpinForm::new(&cfg.model_params(frequencies, lambda)))
        .collect::<Result<_, _>>()
        .map_err(|e| RunError::core("dynamics", e))?;
    let tasks: Vec<(usize, usize)> =
        spectra.iter().enumerate().flat_map(|(l, (s, _))| (0..s.len()).map(move |m| (l, m))).collect();
    let results: Vec<(Vec<ReducedDensityMatrix>, TrajectoryRecord, f64)> = tasks
        .par_iter()
        .map(|&(l, m)| {
            let t = Instant::now();
            let (rhos, rec) = trajectory(&operators[l], &spectra[l].0.eigenvectors[m], integ)
                .map_err(|e| RunError::core("dynamics", e))?;
            let secs = t.elapsed().as_secs_f64();
            progress(&format!(
                "λ = {} m = {m}: {} steps ({} rejected), drift {:.1e}, {secs:.1} s",
                cfg.lambdas[l], rec.accepted_steps, rec.rejected_steps, rec.max_norm_drift
            ));
            Ok((rhos, rec, secs))
        })
        .collect::<Result<_, RunError>>()?;

    let grid = &integ.t_grid;
    let mut results = results.into_iter();
    let mut sweep_files = Vec::new();
    for (l, &lambda) in cfg.lambdas.iter().enumerate() {
        let (spectrum, bath_seconds) = &spectra[l];
        let ens = &ensembles[l];
        let mine: Vec<_> = results.by_ref().take(spectrum.len()).collect();
        let members: Vec<Vec<ReducedDensityMatrix>> = mine.iter().map(|(r, _, _)| r.clone()).collect();
        let rows = ensemble_rows(grid, &members, ens).map_err(|e| RunError::core("observables", e))?;
        let name = sweep_file_name(lambda);
        out.csv(&name, &rows)?;
        sweep_files.push((lambda, name.clone()));
        let records: Vec<&TrajectoryRecord> = mine.iter().map(|(_, r, _)| r).collect();
        manifest.lambdas.push(LambdaRecord {
            lambda,
            csv: name,
            energies: spectrum.energies.clone(),
            extension: spectrum.extension(),
            weights: ens.weights.clone(),
            weight_truncation: ens.truncation,
            max_residual: spectrum.residuals.iter().copied().fold(0.0, f64::max),
            lanczos_matvecs: spectrum.diagnostics.matvecs,
            max_norm_drift: records.iter().map(|r| r.max_norm_drift).fold(0.0, f64::max),
            flagged_trajectories: records.iter().filter(|r| r.flagged).count(),
            accepted_steps: records.iter().map(|r| r.accepted_steps).sum(),
            rejected_steps: records.iter().map(|r| r.rejected_steps).sum(),
            late_mean_entropy: late_window_mean(&rows, cfg.t_max),
            bath_seconds: *bath_seconds,
            trajectory_seconds: mine.iter().map(|(_, _, s)| s).sum(),
        });
    }

    let isolated = if cfg.isolated_reference {
        let (rows, rec) = isolated_reference(cfg).map_err(|e| RunError::core("isolated", e))?;
        out.csv(ISOLATED_FILE, &rows)?;
        manifest.isolated = Some(IsolatedRecord {
            csv: ISOLATED_FILE.into(),
            max_norm_drift: rec.max_norm_drift,
            accepted_steps: rec.accepted_steps,
        });
        Some(ISOLATED_FILE)
    } else {
        None
    };

    let path = out.path(PLOT_FILE);
    fs::write(&path, plot_script(&sweep_files, isolated)).map_err(|e| RunError::io("output", &path, e))?;
    out.files.push(PLOT_FILE.into());
    Ok(())
}
