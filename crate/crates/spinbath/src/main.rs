use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spinbath::config::RunConfig;
use spinbath::runner::{run_experiment, RunManifest};
use spinbath::summary::summarize;
use spinbath::FrequencySource;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Paper,
}

/// Thermal central-spin decoherence sweeps.
///
/// Without a subcommand, runs a sweep. Flags override the preset.
#[derive(Debug, Parser)]
#[command(version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-coupling table of late-time entropy and deviations from the isolated spin.
    Summarize { dir: PathBuf },
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "paper")]
    preset: Preset,
    /// Re-run the configuration embedded in an earlier manifest.json.
    #[arg(long, conflicts_with_all = ["ns", "neig", "kt", "omega0", "beta", "lambda0", "lambdas", "tmax", "dt_out", "rtol", "atol", "freq_mode", "isolated_ref"])]
    from_manifest: Option<PathBuf>,
    #[arg(long)]
    ns: Option<usize>,
    #[arg(long)]
    neig: Option<usize>,
    #[arg(long)]
    kt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    omega0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda0: Option<f64>,
    /// Comma-separated intra-bath couplings.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    lambdas: Option<Vec<f64>>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    dt_out: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    /// quantile | random:SEED | file:PATH
    #[arg(long)]
    freq_mode: Option<FrequencySource>,
    /// Also integrate the uncoupled impurity (on by default).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    isolated_ref: Option<bool>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, short)]
    quiet: bool,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, String> {
        if let Some(path) = &self.from_manifest {
            let dir = if path.is_dir() { path.clone() } else { path.parent().map(PathBuf::from).unwrap_or_default() };
            let m = RunManifest::read(&dir).map_err(|e| format!("{}: {e}", path.display()))?;
            return Ok(m.config);
        }
        let mut c = match self.preset {
            Preset::Paper => RunConfig::reference(),
        };
        macro_rules! set {
            ($($arg:ident => $field:ident),*) => {
                $(if let Some(v) = self.$arg.clone() { c.$field = v; })*
            };
        }
        set!(ns => n_s, neig => n_eig, kt => kt, omega0 => omega0, beta => beta, lambda0 => lambda0,
             lambdas => lambdas, tmax => t_max, dt_out => dt_out, rtol => rtol, atol => atol,
             freq_mode => frequencies, isolated_ref => isolated_reference);
        Ok(c)
    }
}

fn run(args: RunArgs) -> ExitCode {
    let cfg = match args.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error [config]: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error [config]: {e}");
            return ExitCode::from(2);
        }
    }
    let quiet = args.quiet;
    let progress = move |msg: &str| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    match run_experiment(&cfg, &args.out, &progress) {
        Ok(m) => {
            if !quiet {
                for rec in &m.lambdas {
                    eprintln!(
                        "λ = {}: late S = {:.6}, max drift {:.1e}, {} levels",
                        rec.lambda,
                        rec.late_mean_entropy,
                        rec.max_norm_drift,
                        rec.energies.len()
                    );
                }
                eprintln!("done in {:.1} s, outputs in {}", m.total_seconds, args.out.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error [{}]: {}", e.stage, e.message);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Some(Command::Summarize { dir }) => match summarize(&dir) {
            Ok(s) => {
                print!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error [summarize]: {e}");
                ExitCode::from(1)
            }
        },
        None => run(cli.run),
    }
}
