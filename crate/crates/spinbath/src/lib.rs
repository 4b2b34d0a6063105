//! Driver for thermal central-spin decoherence sweeps.
//!
//! [`runner::run_experiment`] diagonalizes the bath for each intra-bath coupling, evolves every
//! thermally populated initial state in parallel, and writes one `t,S,X,Y,Z` CSV per coupling
//! plus an isolated-spin reference, a manifest, the cached bath spectra and a gnuplot script.

pub mod config;
pub mod io;
pub mod runner;
pub mod summary;

pub use config::{FrequencySource, RunConfig};
pub use runner::{run_experiment, RunError, RunManifest};
pub use summary::{summarize, Summary};
