//! Impurity reduced density matrix, thermal averaging, entropy and spin components.

use alloc::vec::Vec;

use crate::eigensolver::BathSpectrum;
use crate::error::{Error, Result};
use crate::hilbert::{StateVector, C64};
use crate::math;

/// Tolerance on `|Tr ρ − 1|` accepted by [`entropy`].
pub const TRACE_TOL: f64 = 1e-8;
/// Negative determinants down to `−DET_TOL` are treated as rounding noise on a pure state.
pub const DET_TOL: f64 = 1e-12;

/// 2×2 density matrix of the impurity, `ρ_ab = ⟨a|ρ|b⟩` with `a, b ∈ {1 = up, 0 = down}`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReducedDensityMatrix {
    pub rho11: f64,
    pub rho00: f64,
    pub rho10: C64,
}

impl ReducedDensityMatrix {
    pub fn new(rho11: f64, rho00: f64, rho10: C64) -> Self {
        ReducedDensityMatrix { rho11, rho00, rho10 }
    }

    /// The initial impurity state: fully up.
    pub fn up() -> Self {
        ReducedDensityMatrix::new(1.0, 0.0, C64::new(0.0, 0.0))
    }

    pub fn maximally_mixed() -> Self {
        ReducedDensityMatrix::new(0.5, 0.5, C64::new(0.0, 0.0))
    }

    pub fn rho01(&self) -> C64 {
        self.rho10.conj()
    }

    pub fn trace(&self) -> f64 {
        self.rho11 + self.rho00
    }

    pub fn det(&self) -> f64 {
        self.rho11 * self.rho00 - self.rho10.norm_sqr()
    }

    /// `self += w · other`
    pub fn add_scaled(&mut self, w: f64, other: &ReducedDensityMatrix) {
        self.rho11 += w * other.rho11;
        self.rho00 += w * other.rho00;
        self.rho10 += other.rho10 * w;
    }

    /// Bloch vector `(X, Y, Z)`, see [`spin_components`].
    pub fn spin_components(&self) -> (f64, f64, f64) {
        spin_components(self)
    }
}

/// Traces out every site except site 0.
///
/// Panics if `psi` has no bath (fewer than one spin).
pub fn partial_trace_impurity(psi: &StateVector) -> ReducedDensityMatrix {
    assert!(psi.n_spins() >= 1, "partial trace needs at least the impurity site");
    let mut rho = ReducedDensityMatrix::default();
    for pair in psi.amplitudes().chunks_exact(2) {
        let (down, up) = (pair[0], pair[1]);
        rho.rho11 += up.norm_sqr();
        rho.rho00 += down.norm_sqr();
        rho.rho10 += up * down.conj();
    }
    rho
}

/// Boltzmann weights over the lowest bath levels.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalEnsemble {
    pub kt: f64,
    /// Bath energies the weights were computed from, ascending.
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
    /// `exp(−(ε_last − ε_first)/kT)`: unnormalized weight of the highest level kept.
    /// Small values mean the cut at this many levels loses nothing visible.
    pub truncation: f64,
}

impl ThermalEnsemble {
    pub fn from_energies(energies: &[f64], kt: f64) -> Result<Self> {
        if !(kt > 0.0) || !kt.is_finite() {
            return Err(Error::param("kT", "must be positive and finite"));
        }
        if energies.is_empty() {
            return Err(Error::param("energies", "need at least one level"));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::param("energies", "must be ascending"));
        }
        let e0 = energies[0];
        let raw: Vec<f64> = energies.iter().map(|&e| math::exp(-(e - e0) / kt)).collect();
        let z: f64 = raw.iter().sum();
        let weights = raw.iter().map(|w| w / z).collect();
        Ok(ThermalEnsemble {
            kt,
            energies: energies.to_vec(),
            weights,
            truncation: *raw.last().unwrap(),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn boltzmann_weights(spectrum: &BathSpectrum, kt: f64) -> Result<ThermalEnsemble> {
    ThermalEnsemble::from_energies(&spectrum.energies, kt)
}

/// Weighted sum of per-member reduced matrices, accumulated in member order.
pub fn thermal_reduced_density(members: &[ReducedDensityMatrix], ensemble: &ThermalEnsemble) -> Result<ReducedDensityMatrix> {
    if members.len() != ensemble.len() {
        return Err(Error::CountMismatch { what: "reduced density matrices", expected: ensemble.len(), found: members.len() });
    }
    let mut rho = ReducedDensityMatrix::default();
    for (m, &w) in members.iter().zip(&ensemble.weights) {
        rho.add_scaled(w, m);
    }
    Ok(rho)
}

/// Eigenvalues `(p₊, p₋)` of a valid density matrix after the determinant is clamped.
pub fn eigenvalues(rho: &ReducedDensityMatrix) -> Result<(f64, f64)> {
    let tr = rho.trace();
    if !((tr - 1.0).abs() <= TRACE_TOL) {
        return Err(Error::InvalidState(alloc::format!("trace {tr} deviates from 1")));
    }
    let det = rho.det();
    if !(det >= -DET_TOL) {
        return Err(Error::InvalidState(alloc::format!("negative determinant {det}")));
    }
    let det = det.clamp(0.0, 0.25);
    let disc = math::sqrt(1.0 - 4.0 * det);
    let p_plus = 0.5 * (1.0 + disc);
    // p₊ p₋ = det avoids the cancellation in (1 − disc)/2
    Ok((p_plus, det / p_plus))
}

/// Von Neumann entropy in nats, from the eigenvalues.
pub fn entropy(rho: &ReducedDensityMatrix) -> Result<f64> {
    let (a, b) = eigenvalues(rho)?;
    // adding +0 turns the −0 of a pure state into +0
    Ok(-xlnx(a) - xlnx(b) + 0.0)
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * math::ln(x)
    } else {
        0.0
    }
}

/// `S = −½ ln det − ½ √(1−4det) · ln[(1+√(1−4det)) / (1−√(1−4det))]`.
///
/// Ill-conditioned as `det → 0`, where two divergent terms cancel; [`entropy`] is the
/// production path.
pub fn entropy_closed_form(det: f64) -> f64 {
    let disc = math::sqrt(1.0 - 4.0 * det);
    let one_minus = 4.0 * det / (1.0 + disc);
    -0.5 * math::ln(det) - 0.5 * disc * math::ln((1.0 + disc) / one_minus)
}

/// `X = ρ10 + ρ01`, `Y = i(ρ10 − ρ01)`, `Z = ρ11 − ρ00`.
pub fn spin_components(rho: &ReducedDensityMatrix) -> (f64, f64, f64) {
    (2.0 * rho.rho10.re, 0.0 - 2.0 * rho.rho10.im, rho.rho11 - rho.rho00)
}
