//! Times one bath solve and one ground-state trajectory per coupling at the full bath size.
//!
//! `cargo run --example trajectory_timing -p spinbath-core -- 0 8`

use std::time::Instant;

use spinbath_core::eigensolver::{lowest_eigenpairs, LanczosConfig};
use spinbath_core::model::build_bath_hamiltonian;
use spinbath_core::propagation::{evolve_rk8, make_initial_state, uniform_grid, IntegratorConfig};
use spinbath_core::{ModelParams, SuperSpinForm};

fn main() {
    let lambdas: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("coupling")).collect();
    let lambdas = if lambdas.is_empty() { vec![0.0, 1.0, 2.0, 4.0, 8.0] } else { lambdas };
    let grid = uniform_grid(100.0, 0.1).unwrap();
    for lambda in lambdas {
        let p = ModelParams::reference(lambda);
        let t0 = Instant::now();
        let bath = lowest_eigenpairs(&build_bath_hamiltonian(&p).unwrap(), &LanczosConfig::with_n_eig(20)).unwrap();
        let t_bath = t0.elapsed();
        let psi0 = make_initial_state(&bath.eigenvectors[0]).unwrap();
        let t1 = Instant::now();
        let rec = evolve_rk8(&SuperSpinForm::new(&p).unwrap(), &psi0, &IntegratorConfig::new(grid.clone()), |_, _, _| {})
            .unwrap();
        println!(
            "lambda={lambda} bath={t_bath:.2?} (n={}, matvecs={}) trajectory={:.2?} steps={} rejected={} drift={:.2e}",
            bath.len(),
            bath.diagnostics.matvecs,
            t1.elapsed(),
            rec.accepted_steps,
            rec.rejected_steps,
            rec.max_norm_drift
        );
    }
}
