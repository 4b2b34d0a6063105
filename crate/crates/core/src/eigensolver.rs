//! Lowest eigenpairs of the isolated bath.
//!
//! [`lowest_eigenpairs`] runs thick-restart Lanczos with full reorthogonalization. Converged
//! pairs are locked and the search continues in their orthogonal complement, which is how
//! exactly degenerate partners (invisible to a single Krylov sequence) are picked up: after
//! the requested count is reached, one more deflated run checks that nothing lower was missed.
//!
//! [`dense_spectrum_oracle`] diagonalizes the assembled matrix and exists for verification.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen as DenseEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hilbert::{dot, StateVector, C64};
use crate::linalg::symmetric_eigen;
use crate::math;
use crate::model::PauliTermList;
use crate::operator::{CompiledOperator, Operator};

/// Largest dimension the dense oracle accepts.
pub const DENSE_CAP: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct LanczosConfig {
    pub n_eig: usize,
    /// Krylov basis size at which a thick restart happens.
    pub max_krylov: usize,
    /// Residual tolerance relative to the spectral width estimate.
    pub tol: f64,
    pub seed: u64,
    pub max_restarts: usize,
    /// Levels closer than this are treated as one multiplet.
    pub degeneracy_gap: f64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        LanczosConfig {
            n_eig: 20,
            max_krylov: 240,
            tol: 1e-10,
            seed: 0x5eed_1a2c,
            max_restarts: 500,
            degeneracy_gap: 1e-10,
        }
    }
}

impl LanczosConfig {
    pub fn with_n_eig(n_eig: usize) -> Self {
        LanczosConfig { n_eig, ..Default::default() }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.n_eig == 0 || self.n_eig > dim {
            return Err(Error::param("n_eig", alloc::format!("need 1 <= n_eig <= {dim}, got {}", self.n_eig)));
        }
        if self.max_krylov < (self.n_eig + 3).min(dim) {
            return Err(Error::param("max_krylov", "must exceed n_eig by at least 3"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        if !(self.degeneracy_gap >= 0.0) {
            return Err(Error::param("degeneracy_gap", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LanczosDiagnostics {
    pub matvecs: usize,
    pub restarts: usize,
    /// Number of Krylov runs (the first, any top-ups, and completeness probes).
    pub cycles: usize,
    /// Lowest Ritz value at every convergence check of the first run.
    pub ground_history: Vec<f64>,
    pub spectral_width: f64,
}

/// Lowest eigenpairs of a bath Hamiltonian, energies ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct BathSpectrum {
    pub energies: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
    /// `‖H v − ε v‖` for each pair.
    pub residuals: Vec<f64>,
    /// Pair count asked for; `len()` can be larger when a multiplet straddles the cut.
    pub requested: usize,
    pub diagnostics: LanczosDiagnostics,
}

impl BathSpectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Pairs added beyond the request to complete a degenerate multiplet.
    pub fn extension(&self) -> usize {
        self.len() - self.requested
    }

    pub fn n_spins(&self) -> usize {
        self.eigenvectors.first().map_or(0, StateVector::n_spins)
    }
}

pub fn lowest_eigenpairs(h: &PauliTermList, cfg: &LanczosConfig) -> Result<BathSpectrum> {
    lowest_eigenpairs_op(&h.compile(), cfg)
}

struct Pair {
    value: f64,
    vector: Vec<C64>,
}

pub fn lowest_eigenpairs_op<O: Operator + ?Sized>(op: &O, cfg: &LanczosConfig) -> Result<BathSpectrum> {
    let dim = op.dim();
    cfg.validate(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut diag = LanczosDiagnostics::default();
    let mut locked: Vec<Pair> = Vec::new();
    let mut target = cfg.n_eig;
    let mut verified = false;

    let count = loop {
        // one level past the cut so the gap after it is known
        let want = (target + 1).min(dim);
        if locked.len() < want {
            let found = krylov_run(op, &locked, want - locked.len(), cfg, &mut rng, &mut diag)?;
            insert_sorted(&mut locked, found);
            verified = false;
            continue;
        }
        if !verified && locked.len() < dim {
            let threshold = locked[want - 1].value;
            let probe = krylov_run(op, &locked, 1, cfg, &mut rng, &mut diag)?;
            let missed = probe[0].value < threshold + cfg.degeneracy_gap;
            insert_sorted(&mut locked, probe);
            verified = !missed;
            if missed {
                continue;
            }
        }
        let mut n = target;
        while n < locked.len() && locked[n].value - locked[n - 1].value < cfg.degeneracy_gap {
            n += 1;
        }
        if n == locked.len() && n < dim {
            // the multiplet may continue past what has been found so far
            target = n;
            verified = false;
            continue;
        }
        break n;
    };

    locked.truncate(count);
    let width = diag.spectral_width;
    let mut energies = Vec::with_capacity(count);
    let mut eigenvectors = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    let mut hv = vec![C64::new(0.0, 0.0); dim];
    for pair in locked {
        let mut v = pair.vector;
        normalize(&mut v);
        fix_phase(&mut v);
        op.apply_into(&v, &mut hv);
        diag.matvecs += 1;
        let energy = dot(&v, &hv).re;
        let res = math::sqrt(hv.iter().zip(&v).map(|(a, b)| (a - b * energy).norm_sqr()).sum());
        energies.push(energy);
        residuals.push(res);
        eigenvectors.push(StateVector::from_amplitudes(v)?);
    }
    // a pair whose true residual is far above the estimate has lost orthogonality
    if residuals.iter().any(|&r| r > 100.0 * cfg.tol * width.max(1.0)) {
        return Err(Error::NotConverged { matvecs: diag.matvecs, residuals });
    }
    Ok(BathSpectrum { energies, eigenvectors, residuals, requested: cfg.n_eig, diagnostics: diag })
}

fn insert_sorted(locked: &mut Vec<Pair>, found: Vec<Pair>) {
    locked.extend(found);
    locked.sort_by(|a, b| a.value.total_cmp(&b.value));
}

fn normalize(v: &mut [C64]) {
    let n = math::sqrt(v.iter().map(|a| a.norm_sqr()).sum());
    if n > 0.0 {
        let inv = 1.0 / n;
        v.iter_mut().for_each(|a| *a *= inv);
    }
}

/// Rotates the global phase so the largest-magnitude component is real and positive.
pub fn fix_phase(v: &mut [C64]) {
    let mut best = C64::new(0.0, 0.0);
    let mut best_mag = -1.0;
    for &a in v.iter() {
        let m = a.norm_sqr();
        if m > best_mag {
            best_mag = m;
            best = a;
        }
    }
    if best_mag > 0.0 {
        let rot = best.conj() / math::sqrt(best_mag);
        v.iter_mut().for_each(|a| *a *= rot);
    }
}

/// Removes the components along `basis` (two classical Gram–Schmidt passes) and
/// returns the accumulated projection coefficients.
fn orthogonalize(w: &mut [C64], locked: &[Pair], basis: &[Vec<C64>], coeffs: &mut Vec<C64>) {
    coeffs.clear();
    coeffs.resize(basis.len(), C64::new(0.0, 0.0));
    for _ in 0..2 {
        for p in locked {
            let c = dot(&p.vector, w);
            axpy_neg(c, &p.vector, w);
        }
        for (i, v) in basis.iter().enumerate() {
            let c = dot(v, w);
            axpy_neg(c, v, w);
            coeffs[i] += c;
        }
    }
}

#[inline]
fn axpy_neg(c: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= c * xi;
    }
}

fn random_unit<R: rand::Rng>(dim: usize, rng: &mut R, locked: &[Pair], basis: &[Vec<C64>]) -> Vec<C64> {
    let mut v = StateVector::random(dim.trailing_zeros() as usize, rng).into_amplitudes();
    let mut scratch = Vec::new();
    orthogonalize(&mut v, locked, basis, &mut scratch);
    normalize(&mut v);
    v
}

/// One thick-restart Lanczos run in the complement of `locked`, returning the lowest
/// `need` converged Ritz pairs (fewer only if the complement is smaller).
fn krylov_run<O: Operator + ?Sized, R: rand::Rng>(
    op: &O,
    locked: &[Pair],
    need: usize,
    cfg: &LanczosConfig,
    rng: &mut R,
    diag: &mut LanczosDiagnostics,
) -> Result<Vec<Pair>> {
    const CHECK_EVERY: usize = 10;
    let dim = op.dim();
    let avail = dim - locked.len();
    let need = need.min(avail);
    let kmax = cfg.max_krylov.min(avail);
    let keep = (need + need.max(8)).min(kmax.saturating_sub(3)).max(need);
    let first_run = diag.cycles == 0;
    diag.cycles += 1;

    // column-major projected matrix, leading dimension kmax + 1
    let ld = kmax + 1;
    let mut t = vec![0.0; ld * ld];
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(kmax + 1);
    basis.push(random_unit(dim, rng, locked, &[]));
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut coeffs = Vec::with_capacity(kmax + 1);
    let mut restarts_here = 0usize;

    loop {
        let k = basis.len();
        op.apply_into(&basis[k - 1], &mut w);
        diag.matvecs += 1;
        orthogonalize(&mut w, locked, &basis, &mut coeffs);
        for (i, c) in coeffs.iter().enumerate() {
            t[(k - 1) * ld + i] = c.re;
        }
        let mut beta = math::sqrt(w.iter().map(|a| a.norm_sqr()).sum());
        let scale = t[(k - 1) * ld + (k - 1)].abs().max(diag.spectral_width).max(1.0);
        let exhausted = k == avail;
        let breakdown = beta <= 1e-12 * scale;
        if breakdown {
            beta = 0.0;
        }

        if k % CHECK_EVERY == 0 || k == kmax || exhausted || breakdown {
            let proj = symmetrized(&t, ld, k);
            let eig = symmetric_eigen(&proj, k)?;
            let width = eig.values[k - 1] - eig.values[0];
            diag.spectral_width = diag.spectral_width.max(width);
            if first_run {
                diag.ground_history.push(eig.values[0]);
            }
            let tol_abs = cfg.tol * diag.spectral_width.max(f64::MIN_POSITIVE);
            let have = need.min(k);
            let residual = |j: usize| beta * eig.vector(j)[k - 1].abs();
            let done = (0..have).all(|j| residual(j) <= tol_abs) && (have == need || exhausted);
            if done {
                return Ok((0..have)
                    .map(|j| Pair { value: eig.values[j], vector: ritz_vector(&basis, eig.vector(j)) })
                    .collect());
            }
            if exhausted {
                // whole complement spanned yet residuals above tolerance: numerical trouble
                return Err(Error::NotConverged {
                    matvecs: diag.matvecs,
                    residuals: (0..have).map(residual).collect(),
                });
            }
            if k == kmax && !breakdown {
                restarts_here += 1;
                diag.restarts += 1;
                if restarts_here > cfg.max_restarts {
                    return Err(Error::NotConverged {
                        matvecs: diag.matvecs,
                        residuals: (0..have).map(residual).collect(),
                    });
                }
                let mut fresh: Vec<Vec<C64>> = (0..keep).map(|j| ritz_vector(&basis, eig.vector(j))).collect();
                let inv = 1.0 / beta;
                fresh.push(w.iter().map(|a| a * inv).collect());
                t.iter_mut().for_each(|x| *x = 0.0);
                for j in 0..keep {
                    t[j * ld + j] = eig.values[j];
                    t[j * ld + keep] = beta * eig.vector(j)[k - 1];
                }
                basis = fresh;
                continue;
            }
        }

        if breakdown {
            // invariant subspace: continue from a fresh direction, no coupling
            let v = random_unit(dim, rng, locked, &basis);
            basis.push(v);
        } else {
            t[(k - 1) * ld + k] = beta;
            let inv = 1.0 / beta;
            basis.push(w.iter().map(|a| a * inv).collect());
        }
    }
}

fn symmetrized(t: &[f64], ld: usize, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            out[i * k + j] = 0.5 * (t[j * ld + i] + t[i * ld + j]);
        }
    }
    out
}

fn ritz_vector(basis: &[Vec<C64>], y: &[f64]) -> Vec<C64> {
    let mut u = vec![C64::new(0.0, 0.0); basis[0].len()];
    for (v, &c) in basis.iter().zip(y) {
        for (ui, vi) in u.iter_mut().zip(v) {
            *ui += vi * c;
        }
    }
    u
}

/// Ritz-value bracket of the spectrum from a short Lanczos run, widened by the residuals.
pub fn estimate_spectral_interval<O: Operator + ?Sized>(op: &O, steps: usize, seed: u64) -> Result<(f64, f64)> {
    let dim = op.dim();
    let steps = steps.clamp(1, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis = vec![random_unit(dim, &mut rng, &[], &[])];
    let ld = steps + 1;
    let mut t = vec![0.0; ld * ld];
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut coeffs = Vec::new();
    let mut beta = 0.0;
    for k in 1..=steps {
        op.apply_into(&basis[k - 1], &mut w);
        orthogonalize(&mut w, &[], &basis, &mut coeffs);
        for (i, c) in coeffs.iter().enumerate() {
            t[(k - 1) * ld + i] = c.re;
        }
        beta = math::sqrt(w.iter().map(|a| a.norm_sqr()).sum());
        if k == steps || beta <= 1e-12 {
            break;
        }
        t[(k - 1) * ld + k] = beta;
        basis.push(w.iter().map(|a| a / beta).collect());
    }
    let k = basis.len();
    let eig = symmetric_eigen(&symmetrized(&t, ld, k), k)?;
    let lo = eig.values[0] - beta * eig.vector(0)[k - 1].abs();
    let hi = eig.values[k - 1] + beta * eig.vector(k - 1)[k - 1].abs();
    Ok((lo, hi))
}

/// Full spectrum from dense diagonalization.
#[derive(Clone, Debug)]
pub struct DenseSpectrum {
    pub energies: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
}

/// Dense Hermitian matrix of a term list (row, column) = ⟨row|H|col⟩.
pub fn dense_matrix(h: &PauliTermList) -> Result<DMatrix<C64>> {
    let dim = h.dim();
    if dim > DENSE_CAP {
        return Err(Error::DenseCapExceeded { dim, cap: DENSE_CAP });
    }
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    CompiledOperator::new(h).for_each_entry(|r, c, v| m[(r, c)] += v);
    Ok(m)
}

pub fn dense_spectrum_oracle(h: &PauliTermList) -> Result<DenseSpectrum> {
    let m = dense_matrix(h)?;
    let dim = m.nrows();
    let (values, columns): (Vec<f64>, Vec<Vec<C64>>) = if m.iter().all(|z| z.im == 0.0) {
        let real = m.map(|z| z.re);
        let eig = DenseEigen::new(real);
        let cols = (0..dim)
            .map(|k| eig.eigenvectors.column(k).iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        (eig.eigenvalues.iter().copied().collect(), cols)
    } else {
        let eig = DenseEigen::new(m);
        let cols = (0..dim).map(|k| eig.eigenvectors.column(k).iter().copied().collect()).collect();
        (eig.eigenvalues.iter().copied().collect(), cols)
    };
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut energies = Vec::with_capacity(dim);
    let mut eigenvectors = Vec::with_capacity(dim);
    for k in order {
        energies.push(values[k]);
        let mut v = columns[k].clone();
        fix_phase(&mut v);
        eigenvectors.push(StateVector::from_amplitudes(v)?);
    }
    Ok(DenseSpectrum { energies, eigenvectors })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// `max |⟨v_i|v_j⟩ − δ_ij|`
    pub max_gram_deviation: f64,
}

pub fn verify_spectrum<O: Operator + ?Sized>(s: &BathSpectrum, op: &O) -> Result<SpectrumReport> {
    let dim = op.dim();
    for v in &s.eigenvectors {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.dim() });
        }
    }
    let mut hv = vec![C64::new(0.0, 0.0); dim];
    let residuals: Vec<f64> = s
        .eigenvectors
        .iter()
        .zip(&s.energies)
        .map(|(v, &e)| {
            op.apply_into(v.amplitudes(), &mut hv);
            math::sqrt(hv.iter().zip(v.amplitudes()).map(|(a, b)| (a - b * e).norm_sqr()).sum())
        })
        .collect();
    let mut gram = 0.0f64;
    for (i, vi) in s.eigenvectors.iter().enumerate() {
        for (j, vj) in s.eigenvectors.iter().enumerate().skip(i) {
            let g = dot(vi.amplitudes(), vj.amplitudes());
            let expect = if i == j { 1.0 } else { 0.0 };
            gram = gram.max((g - C64::new(expect, 0.0)).norm());
        }
    }
    Ok(SpectrumReport {
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        residuals,
        max_gram_deviation: gram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::PauliAxis;
    use crate::model::{build_bath_hamiltonian, FrequencyMode, ModelParams};
    use approx::assert_relative_eq;

    fn bath(n_s: usize, lambda: f64) -> ModelParams {
        ModelParams::with_bath(n_s, &FrequencyMode::Quantile, lambda).unwrap()
    }

    #[test]
    fn dense_oracle_single_spin() {
        let mut h = PauliTermList::new(1);
        h.push(0.3, &[(0, PauliAxis::Z)]).unwrap();
        let s = dense_spectrum_oracle(&h).unwrap();
        assert_eq!(s.energies, vec![-0.3, 0.3]);
    }

    #[test]
    fn dense_oracle_two_spin_hand_diagonalization() {
        // H = 0.2 Z₀ + 0.4 Z₁ + X₀X₁ splits into the {|00⟩,|11⟩} block [[-0.6,1],[1,0.6]]
        // and the {|01⟩,|10⟩} block [[-0.2,1],[1,0.2]]
        let mut p = bath(2, 1.0);
        p.frequencies = vec![0.4, 0.8];
        p.beta = 0.0;
        let s = dense_spectrum_oracle(&build_bath_hamiltonian(&p).unwrap()).unwrap();
        let a = (0.36f64 + 1.0).sqrt();
        let b = (0.04f64 + 1.0).sqrt();
        let expect = [-a, -b, b, a];
        for (got, want) in s.energies.iter().zip(expect) {
            assert_relative_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn dense_matrix_is_traceless_and_capped() {
        let h = build_bath_hamiltonian(&bath(5, 2.0)).unwrap();
        let m = dense_matrix(&h).unwrap();
        assert!(m.trace().norm() < 1e-12);
        let big = build_bath_hamiltonian(&bath(13, 2.0)).unwrap();
        assert_eq!(dense_matrix(&big).unwrap_err(), Error::DenseCapExceeded { dim: 8192, cap: DENSE_CAP });
        assert!(matches!(dense_spectrum_oracle(&big), Err(Error::DenseCapExceeded { .. })));
    }

    #[test]
    fn diagonal_limit_ground_and_gap() {
        let mut p = bath(6, 0.0);
        p.beta = 0.0;
        let h = build_bath_hamiltonian(&p).unwrap();
        let s = lowest_eigenpairs(&h, &LanczosConfig::with_n_eig(5)).unwrap();
        let ground = -p.frequencies.iter().sum::<f64>() / 2.0;
        assert_relative_eq!(s.energies[0], ground, epsilon = 1e-12);
        assert_relative_eq!(s.energies[1], ground + p.frequencies[0], epsilon = 1e-12);
    }

    #[test]
    fn matches_dense_oracle_small_bath() {
        for lambda in [0.0, 1.0, 8.0] {
            let h = build_bath_hamiltonian(&bath(6, lambda)).unwrap();
            let s = lowest_eigenpairs(&h, &LanczosConfig::with_n_eig(10)).unwrap();
            let dense = dense_spectrum_oracle(&h).unwrap();
            for (a, b) in s.energies.iter().zip(&dense.energies) {
                assert!((a - b).abs() < 1e-9, "lambda {lambda}: {a} vs {b}");
            }
            let report = verify_spectrum(&s, &h.compile()).unwrap();
            assert!(report.max_residual < 1e-8);
            assert!(report.max_gram_deviation < 1e-10);
        }
    }

    #[test]
    fn exact_degeneracy_is_captured_and_extended() {
        // equal frequencies, no transverse terms: levels −0.5, 0 (×2), 0.5
        let mut p = bath(2, 0.0);
        p.frequencies = vec![0.5, 0.5];
        p.beta = 0.0;
        let h = build_bath_hamiltonian(&p).unwrap();
        let s = lowest_eigenpairs(&h, &LanczosConfig::with_n_eig(2)).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.extension(), 1);
        assert_relative_eq!(s.energies[0], -0.5, epsilon = 1e-12);
        assert!(s.energies[1].abs() < 1e-12 && s.energies[2].abs() < 1e-12);

        // four degenerate levels at the cut of a 4-spin bath
        let mut p = bath(4, 0.0);
        p.frequencies = vec![0.5; 4];
        p.beta = 0.0;
        let h = build_bath_hamiltonian(&p).unwrap();
        let s = lowest_eigenpairs(&h, &LanczosConfig::with_n_eig(3)).unwrap();
        assert_eq!(s.len(), 5);
        let dense = dense_spectrum_oracle(&h).unwrap();
        for (a, b) in s.energies.iter().zip(&dense.energies) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn whole_space_request() {
        let h = build_bath_hamiltonian(&bath(2, 1.0)).unwrap();
        let s = lowest_eigenpairs(&h, &LanczosConfig { n_eig: 4, max_krylov: 4, ..Default::default() }).unwrap();
        let dense = dense_spectrum_oracle(&h).unwrap();
        assert_eq!(s.len(), 4);
        for (a, b) in s.energies.iter().zip(&dense.energies) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        let h = build_bath_hamiltonian(&bath(3, 1.0)).unwrap();
        let too_many = LanczosConfig::with_n_eig(9);
        assert!(matches!(lowest_eigenpairs(&h, &too_many), Err(Error::InvalidParameter { name: "n_eig", .. })));
        let small_krylov = LanczosConfig { n_eig: 4, max_krylov: 5, ..Default::default() };
        assert!(matches!(
            lowest_eigenpairs(&h, &small_krylov),
            Err(Error::InvalidParameter { name: "max_krylov", .. })
        ));
    }

    #[test]
    fn restart_budget_exhaustion_is_reported() {
        let h = build_bath_hamiltonian(&bath(8, 4.0)).unwrap();
        let cfg = LanczosConfig { n_eig: 10, max_krylov: 13, max_restarts: 1, tol: 1e-13, ..Default::default() };
        match lowest_eigenpairs(&h, &cfg) {
            Err(Error::NotConverged { residuals, .. }) => assert!(!residuals.is_empty()),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn phase_convention() {
        let mut v = vec![C64::new(0.1, 0.0), C64::new(0.0, -0.9), C64::new(0.3, 0.3)];
        fix_phase(&mut v);
        assert!(v[1].im.abs() < 1e-15 && v[1].re > 0.0);
    }

    #[test]
    fn spectral_interval_brackets_dense_extremes() {
        let h = build_bath_hamiltonian(&bath(6, 2.0)).unwrap();
        let dense = dense_spectrum_oracle(&h).unwrap();
        let (lo, hi) = estimate_spectral_interval(&h.compile(), 40, 3).unwrap();
        let (emin, emax) = (dense.energies[0], *dense.energies.last().unwrap());
        assert!(lo <= emin + 1e-6 && hi >= emax - 1e-6, "[{lo},{hi}] vs [{emin},{emax}]");
        assert!(hi - lo < 1.5 * (emax - emin));
    }
}
