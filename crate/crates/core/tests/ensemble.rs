use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinbath_core::eigensolver::{lowest_eigenpairs, LanczosConfig};
use spinbath_core::hilbert::{inner_product, PauliAxis, StateVector, C64};
use spinbath_core::model::{
    apply_collective, apply_superspin_hamiltonian, build_bath_hamiltonian, build_full_hamiltonian, FrequencyMode, ModelParams,
    SuperSpinForm,
};
use spinbath_core::observables::{partial_trace_impurity, ReducedDensityMatrix, ThermalEnsemble};
use spinbath_core::propagation::{evolve_exact_oracle, evolve_rk8, make_initial_state, uniform_grid, IntegratorConfig};

fn degenerate_bath(lambda: f64) -> ModelParams {
    ModelParams {
        n_s: 4,
        beta: 0.0,
        frequencies: vec![0.5; 4],
        lambda,
        omega_d: 1.0,
        ..ModelParams::reference(0.0)
    }
}

/// Random unitary mix of an orthonormal set, re-orthonormalized by Gram–Schmidt.
fn mix(vs: &[StateVector], rng: &mut ChaCha8Rng) -> Vec<StateVector> {
    let mut out: Vec<StateVector> = Vec::new();
    for _ in 0..vs.len() {
        let mut w = StateVector::zeros(vs[0].n_spins());
        for v in vs {
            w.axpy(C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5), v);
        }
        for u in &out {
            let c = inner_product(u, &w);
            w.axpy(-c, u);
        }
        w.normalize();
        out.push(w);
    }
    out
}

fn ensemble_rho(p: &ModelParams, members: &[StateVector], times: &[f64]) -> Vec<ReducedDensityMatrix> {
    let h = build_full_hamiltonian(p).unwrap();
    let mut acc = vec![ReducedDensityMatrix::default(); times.len()];
    for m in members {
        let states = evolve_exact_oracle(&h, &make_initial_state(m).unwrap(), times).unwrap();
        for (a, s) in acc.iter_mut().zip(&states) {
            a.add_scaled(1.0 / members.len() as f64, &partial_trace_impurity(s));
        }
    }
    acc
}

#[test]
fn degenerate_multiplet_basis_does_not_change_reduced_dynamics() {
    let p = degenerate_bath(0.0);
    let spectrum = lowest_eigenpairs(&build_bath_hamiltonian(&p).unwrap(), &LanczosConfig::with_n_eig(2)).unwrap();
    // all-down ground state plus the four single flips
    assert_eq!(spectrum.len(), 5);
    let multiplet = &spectrum.eigenvectors[1..5];
    let times = [0.0, 1.5, 7.0, 20.0];
    let reference = ensemble_rho(&p, multiplet, &times);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let rotated = mix(multiplet, &mut rng);
    for (a, b) in reference.iter().zip(ensemble_rho(&p, &rotated, &times)) {
        assert!((a.rho11 - b.rho11).abs() < 1e-12);
        assert!((a.rho10 - b.rho10).norm() < 1e-12);
    }
    // a single member, by contrast, depends on the basis choice
    let one_a = ensemble_rho(&p, &multiplet[..1], &times);
    let one_b = ensemble_rho(&p, &rotated[..1], &times);
    assert!(one_a.iter().zip(&one_b).any(|(a, b)| (a.rho11 - b.rho11).abs() > 1e-6));
}

#[test]
fn lanczos_ground_estimate_never_rises() {
    let p = ModelParams::with_bath(10, &FrequencyMode::Quantile, 2.0).unwrap();
    let s = lowest_eigenpairs(&build_bath_hamiltonian(&p).unwrap(), &LanczosConfig::with_n_eig(5)).unwrap();
    let h = &s.diagnostics.ground_history;
    assert!(h.len() > 1);
    for w in h.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
    assert!((h.last().unwrap() - s.energies[0]).abs() < 1e-10);
}

#[test]
fn energies_do_not_depend_on_the_start_vector() {
    let p = ModelParams::with_bath(9, &FrequencyMode::Random { seed: 5 }, 4.0).unwrap();
    let h = build_bath_hamiltonian(&p).unwrap();
    let a = lowest_eigenpairs(&h, &LanczosConfig { seed: 1, ..LanczosConfig::with_n_eig(12) }).unwrap();
    let b = lowest_eigenpairs(&h, &LanczosConfig { seed: 2, ..LanczosConfig::with_n_eig(12) }).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.energies.iter().zip(&b.energies) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn thermal_weights_follow_boltzmann_ratios() {
    let energies = [-3.0, -2.98, -2.9, -2.5];
    let e = ThermalEnsemble::from_energies(&energies, 0.02).unwrap();
    for k in 1..energies.len() {
        let ratio = e.weights[k] / e.weights[0];
        let expect = (-(energies[k] - energies[0]) / 0.02f64).exp();
        assert!((ratio / expect - 1.0).abs() < 1e-13);
    }
    assert!((e.truncation - (-25.0f64).exp()).abs() < 1e-24);
}

#[test]
fn strong_coupling_pushes_the_bath_ground_state_toward_zero_collective_x() {
    let sx2: Vec<f64> = [0.0, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&lambda| {
            let p = ModelParams::reference(lambda);
            let s = lowest_eigenpairs(&build_bath_hamiltonian(&p).unwrap(), &LanczosConfig::with_n_eig(1)).unwrap();
            let v = apply_collective(PauliAxis::X, 0..p.n_s, &s.eigenvectors[0]);
            inner_product(&v, &v).re
        })
        .collect();
    assert!(sx2.windows(2).all(|w| w[1] < w[0]), "{sx2:?}");
    // the residual weight outside Σ_x = 0 comes from the Z fields and falls off like 1/λ²
    assert!(sx2[4] < sx2[0] / 50.0, "{sx2:?}");
    assert!(sx2[3] / sx2[4] > 2.0 && sx2[3] / sx2[4] < 4.5, "{sx2:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn superspin_operator_is_hermitian(seed in any::<u64>(), lambda in -4.0f64..8.0, n_s in 2usize..7) {
        let p = ModelParams::with_bath(n_s, &FrequencyMode::Random { seed }, lambda).unwrap();
        let op = SuperSpinForm::new(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = StateVector::random(n_s + 1, &mut rng);
        let psi = StateVector::random(n_s + 1, &mut rng);
        let lhs = inner_product(&phi, &apply_superspin_hamiltonian(&op, &psi));
        let rhs = inner_product(&apply_superspin_hamiltonian(&op, &phi), &psi);
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn short_evolution_keeps_the_reduced_state_physical(seed in any::<u64>(), lambda in 0.0f64..8.0) {
        let p = ModelParams::with_bath(4, &FrequencyMode::Random { seed }, lambda).unwrap();
        let op = SuperSpinForm::new(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x55);
        let psi0 = make_initial_state(&StateVector::random(4, &mut rng)).unwrap();
        let cfg = IntegratorConfig::new(uniform_grid(2.0, 0.5).unwrap());
        let mut bad = Vec::new();
        let rec = evolve_rk8(&op, &psi0, &cfg, |_, t, psi| {
            let rho = partial_trace_impurity(psi);
            if (rho.trace() - 1.0).abs() > 1e-9 || rho.det() < -1e-12 {
                bad.push(t);
            }
        }).unwrap();
        prop_assert!(bad.is_empty(), "unphysical at {:?}", bad);
        prop_assert!(rec.max_norm_drift < 1e-9);
    }
}
