//! Model parameters and Hamiltonian construction.
//!
//! The Hamiltonian on `n_s + 1` spins (site 0 is the impurity, sites `1..=n_s` the bath):
//!
//! ```text
//! H = (ω₀/2) Z₀ + β X₀ + λ₀ X₀ Σⱼ Xⱼ + Σⱼ [(ωⱼ/2) Zⱼ + β Xⱼ] + λ Σ_{i<j} Xᵢ Xⱼ
//! ```
//!
//! The same operator can be written with the collective bath spin `Σ_a = Σⱼ σ_a^{(j)}` as
//!
//! ```text
//! H = (ω₀/2) Z₀ + β X₀ + λ₀ X₀ Σ_x + Σⱼ (νⱼ/2) Zⱼ + (Ω/2) Σ_z + β Σ_x + (λ/2)(Σ_x² − n_s)
//! ```
//!
//! with `Ω` the mean bath frequency and `νⱼ = ωⱼ − Ω`. [`SuperSpinForm`] evaluates this second
//! form directly and serves both as an independent check of the term list and as a cheaper matvec.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hilbert::{
    apply_pauli, apply_pauli_accumulate, flip_accumulate, walsh_hadamard, PauliAxis, StateVector, C64, MAX_SPINS,
};
use crate::linalg::Matrix2;
use crate::math;
use crate::operator::{CompiledOperator, Operator};

pub const REFERENCE_N_S: usize = 12;
pub const REFERENCE_OMEGA0: f64 = 0.8288;
pub const REFERENCE_BETA: f64 = 0.01;
pub const REFERENCE_LAMBDA0: f64 = 1.0;
pub const REFERENCE_OMEGA_D: f64 = 1.0;

/// How the bath frequencies are drawn from the Debye density g(ω) ∝ ω² on (0, ω_D].
#[derive(Clone, Debug, PartialEq)]
pub enum FrequencyMode {
    /// Deterministic midpoint quantiles `ω_D ((j − ½)/n_s)^{1/3}`.
    Quantile,
    /// Inverse-CDF draws from a ChaCha8 stream.
    Random { seed: u64 },
    Explicit(Vec<f64>),
}

/// Bath frequencies, sorted ascending.
pub fn sample_debye_frequencies(n_s: usize, omega_d: f64, mode: &FrequencyMode) -> Result<Vec<f64>> {
    if n_s == 0 {
        return Err(Error::param("n_s", "need at least one bath spin"));
    }
    if !(omega_d > 0.0 && omega_d.is_finite()) {
        return Err(Error::param("omega_d", format!("must be positive and finite, got {omega_d}")));
    }
    let mut out = match mode {
        FrequencyMode::Quantile => (1..=n_s)
            .map(|j| omega_d * math::cbrt((j as f64 - 0.5) / n_s as f64))
            .collect::<Vec<_>>(),
        FrequencyMode::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..n_s)
                .map(|_| {
                    // 1 − U lies in (0, 1]
                    let u = 1.0 - rng.random::<f64>();
                    omega_d * math::cbrt(u)
                })
                .collect()
        }
        FrequencyMode::Explicit(list) => {
            if list.len() != n_s {
                return Err(Error::CountMismatch { what: "frequency list", expected: n_s, found: list.len() });
            }
            validate_frequencies(list, omega_d)?;
            list.clone()
        }
    };
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn validate_frequencies(list: &[f64], omega_d: f64) -> Result<()> {
    for (index, &value) in list.iter().enumerate() {
        if !(value > 0.0 && value <= omega_d) {
            return Err(Error::FrequencyOutOfRange { index, value, omega_d });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub n_s: usize,
    pub omega0: f64,
    pub beta: f64,
    pub lambda0: f64,
    pub lambda: f64,
    pub omega_d: f64,
    pub frequencies: Vec<f64>,
}

impl ModelParams {
    /// Published parameter set (`n_s = 12`, quantile frequencies) at intra-bath coupling `lambda`.
    pub fn reference(lambda: f64) -> Self {
        let frequencies = sample_debye_frequencies(REFERENCE_N_S, REFERENCE_OMEGA_D, &FrequencyMode::Quantile)
            .expect("reference preset is valid");
        ModelParams {
            n_s: REFERENCE_N_S,
            omega0: REFERENCE_OMEGA0,
            beta: REFERENCE_BETA,
            lambda0: REFERENCE_LAMBDA0,
            lambda,
            omega_d: REFERENCE_OMEGA_D,
            frequencies,
        }
    }

    /// Reference couplings with a different bath size and frequency mode.
    pub fn with_bath(n_s: usize, mode: &FrequencyMode, lambda: f64) -> Result<Self> {
        let frequencies = sample_debye_frequencies(n_s, REFERENCE_OMEGA_D, mode)?;
        Ok(ModelParams { n_s, frequencies, ..Self::reference(lambda) })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_s == 0 {
            return Err(Error::param("n_s", "need at least one bath spin"));
        }
        if self.n_s + 1 > MAX_SPINS {
            return Err(Error::param("n_s", format!("{} bath spins exceed the supported maximum", self.n_s)));
        }
        for (name, v) in [
            ("omega0", self.omega0),
            ("beta", self.beta),
            ("lambda0", self.lambda0),
            ("lambda", self.lambda),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        if !(self.omega_d > 0.0 && self.omega_d.is_finite()) {
            return Err(Error::param("omega_d", format!("must be positive and finite, got {}", self.omega_d)));
        }
        if self.frequencies.len() != self.n_s {
            return Err(Error::CountMismatch {
                what: "frequencies",
                expected: self.n_s,
                found: self.frequencies.len(),
            });
        }
        validate_frequencies(&self.frequencies, self.omega_d)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference(0.0)
    }
}

/// One real-weighted Pauli string; factors are sorted by site.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    coeff: f64,
    factors: Vec<(usize, PauliAxis)>,
}

impl PauliTerm {
    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn factors(&self) -> &[(usize, PauliAxis)] {
        &self.factors
    }
}

/// Real linear combination of Pauli strings. Identical strings are merged on insertion and
/// zero weights are dropped, so every stored string is distinct.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTermList {
    n_spins: usize,
    terms: Vec<PauliTerm>,
}

impl PauliTermList {
    pub fn new(n_spins: usize) -> Self {
        assert!(n_spins <= MAX_SPINS, "too many spins: {n_spins}");
        PauliTermList { n_spins, terms: Vec::new() }
    }

    pub fn push(&mut self, coeff: f64, factors: &[(usize, PauliAxis)]) -> Result<()> {
        if factors.is_empty() {
            return Err(Error::param("factors", "a term needs at least one Pauli factor"));
        }
        if !coeff.is_finite() {
            return Err(Error::param("coeff", format!("must be finite, got {coeff}")));
        }
        let mut sorted = factors.to_vec();
        sorted.sort();
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::RepeatedSite(w[0].0));
            }
        }
        if let Some(&(site, _)) = sorted.iter().find(|(s, _)| *s >= self.n_spins) {
            return Err(Error::SiteOutOfRange { site, n_spins: self.n_spins });
        }
        if coeff == 0.0 {
            return Ok(());
        }
        match self.terms.iter_mut().find(|t| t.factors == sorted) {
            Some(t) => t.coeff += coeff,
            None => self.terms.push(PauliTerm { coeff, factors: sorted }),
        }
        Ok(())
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn compile(&self) -> CompiledOperator {
        CompiledOperator::new(self)
    }
}

fn push_bath_terms(h: &mut PauliTermList, p: &ModelParams, offset: usize) -> Result<()> {
    for (j, &w) in p.frequencies.iter().enumerate() {
        h.push(w / 2.0, &[(offset + j, PauliAxis::Z)])?;
        h.push(p.beta, &[(offset + j, PauliAxis::X)])?;
    }
    // (λ/2) Σ_{i≠j} over ordered pairs = λ per unordered pair
    for i in 0..p.n_s {
        for j in i + 1..p.n_s {
            h.push(p.lambda, &[(offset + i, PauliAxis::X), (offset + j, PauliAxis::X)])?;
        }
    }
    Ok(())
}

/// Impurity plus bath on `n_s + 1` spins.
pub fn build_full_hamiltonian(p: &ModelParams) -> Result<PauliTermList> {
    p.validate()?;
    let mut h = PauliTermList::new(p.n_s + 1);
    h.push(p.omega0 / 2.0, &[(0, PauliAxis::Z)])?;
    h.push(p.beta, &[(0, PauliAxis::X)])?;
    for j in 1..=p.n_s {
        h.push(p.lambda0, &[(0, PauliAxis::X), (j, PauliAxis::X)])?;
    }
    push_bath_terms(&mut h, p, 1)?;
    Ok(h)
}

/// The isolated environment on `n_s` spins, bath sites relabelled `0..n_s`.
pub fn build_bath_hamiltonian(p: &ModelParams) -> Result<PauliTermList> {
    p.validate()?;
    let mut h = PauliTermList::new(p.n_s);
    push_bath_terms(&mut h, p, 0)?;
    Ok(h)
}

/// `H|psi⟩` evaluated term by term with single-site Pauli applications.
///
/// # Panics
/// If `psi` does not live on `h.n_spins()` spins.
pub fn apply_hamiltonian(h: &PauliTermList, psi: &StateVector) -> StateVector {
    assert_eq!(psi.n_spins(), h.n_spins(), "apply_hamiltonian: dimension mismatch");
    let mut acc = StateVector::zeros(h.n_spins());
    for term in &h.terms {
        let (&(last_site, last_axis), rest) = term.factors.split_last().expect("non-empty term");
        let coeff = C64::new(term.coeff, 0.0);
        if rest.is_empty() {
            apply_pauli_accumulate(last_axis, last_site, coeff, psi, &mut acc);
        } else {
            let mut tmp = apply_pauli(rest[0].1, rest[0].0, psi);
            for &(site, axis) in &rest[1..] {
                tmp = apply_pauli(axis, site, &tmp);
            }
            apply_pauli_accumulate(last_axis, last_site, coeff, &tmp, &mut acc);
        }
    }
    acc
}

/// `Σ_{j∈sites} σ_axis^{(j)} |psi⟩`
pub fn apply_collective(axis: PauliAxis, sites: Range<usize>, psi: &StateVector) -> StateVector {
    let mut acc = StateVector::zeros(psi.n_spins());
    for site in sites {
        apply_pauli_accumulate(axis, site, C64::new(1.0, 0.0), psi, &mut acc);
    }
    acc
}

/// Collective-spin form of the full Hamiltonian.
#[derive(Clone, Debug)]
pub struct SuperSpinForm {
    params: ModelParams,
    omega_mean: f64,
    nu: Vec<f64>,
    // (ω₀/2) z₀ + Σ (νⱼ/2) zⱼ + (Ω/2) Σ_z − (λ/2) n_s, per basis index
    diagonal: Vec<f64>,
    // β x₀ + β s + λ₀ x₀ s + (λ/2) s² in the Hadamard-rotated basis, divided by the dimension
    // so that two unnormalized transforms compose to the identity
    x_diagonal: Vec<f64>,
}

impl SuperSpinForm {
    pub fn new(p: &ModelParams) -> Result<Self> {
        p.validate()?;
        let n_s = p.n_s;
        let omega_mean = p.frequencies.iter().sum::<f64>() / n_s as f64;
        let nu: Vec<f64> = p.frequencies.iter().map(|w| w - omega_mean).collect();
        let dim = 1usize << (n_s + 1);
        let mut diagonal = vec![0.0; dim];
        for (j, d) in diagonal.iter_mut().enumerate() {
            let z = |site: usize| if (j >> site) & 1 == 1 { 1.0 } else { -1.0 };
            let detuned: f64 = nu.iter().enumerate().map(|(k, v)| v / 2.0 * z(k + 1)).sum();
            let up = (j >> 1).count_ones() as f64;
            let sigma_z = 2.0 * up - n_s as f64;
            *d = p.omega0 / 2.0 * z(0) + detuned + omega_mean / 2.0 * sigma_z - p.lambda / 2.0 * n_s as f64;
        }
        let x_diagonal = (0..dim)
            .map(|j| {
                // after the rotation bit value 0 is x = +1
                let x0 = if j & 1 == 0 { 1.0 } else { -1.0 };
                let s = n_s as f64 - 2.0 * (j >> 1).count_ones() as f64;
                (p.beta * x0 + p.beta * s + p.lambda0 * x0 * s + p.lambda / 2.0 * s * s) / dim as f64
            })
            .collect();
        Ok(SuperSpinForm { params: p.clone(), omega_mean, nu, diagonal, x_diagonal })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Ω, the mean bath frequency.
    pub fn omega_mean(&self) -> f64 {
        self.omega_mean
    }

    /// νⱼ = ωⱼ − Ω.
    pub fn detunings(&self) -> &[f64] {
        &self.nu
    }

    /// Same operator applied with explicit bit flips for every collective X term; slower than
    /// the [`Operator`] path and kept as an independent cross-check.
    pub fn apply_with_flips(&self, psi: &[C64], out: &mut [C64]) {
        let dim = self.dim();
        assert_eq!(psi.len(), dim, "super-spin operator: input dimension mismatch");
        assert_eq!(out.len(), dim, "super-spin operator: output dimension mismatch");
        let p = &self.params;
        let bath_bits = || (1..=p.n_s).map(|j| 1usize << j);

        // Σ_x ψ
        let mut sx = vec![C64::new(0.0, 0.0); dim];
        for bit in bath_bits() {
            flip_accumulate(bit, 1.0, psi, &mut sx);
        }
        for ((o, x), d) in out.iter_mut().zip(psi).zip(&self.diagonal) {
            *o = x * d;
        }
        flip_accumulate(1, p.beta, psi, out);
        flip_accumulate(1, p.lambda0, &sx, out);
        flip_accumulate(0, p.beta, &sx, out);
        // (λ/2) Σ_x (Σ_x ψ); the −(λ/2) n_s part sits in the diagonal
        if p.lambda != 0.0 {
            for bit in bath_bits() {
                flip_accumulate(bit, p.lambda / 2.0, &sx, out);
            }
        }
    }
}

impl Operator for SuperSpinForm {
    fn n_spins(&self) -> usize {
        self.params.n_s + 1
    }

    /// Every X-type term is diagonal after a Hadamard on all sites:
    /// `Hψ = D_z ψ + W D_x W ψ` with `W` the fast Walsh–Hadamard transform.
    fn apply_into(&self, psi: &[C64], out: &mut [C64]) {
        let dim = self.dim();
        assert_eq!(psi.len(), dim, "super-spin operator: input dimension mismatch");
        assert_eq!(out.len(), dim, "super-spin operator: output dimension mismatch");
        out.copy_from_slice(psi);
        walsh_hadamard(out);
        for (o, d) in out.iter_mut().zip(&self.x_diagonal) {
            *o *= d;
        }
        walsh_hadamard(out);
        for ((o, x), d) in out.iter_mut().zip(psi).zip(&self.diagonal) {
            *o += x * d;
        }
    }
}

/// `H|psi⟩` through the collective-spin form.
pub fn apply_superspin_hamiltonian(s: &SuperSpinForm, psi: &StateVector) -> StateVector {
    assert_eq!(psi.n_spins(), s.n_spins(), "apply_superspin_hamiltonian: dimension mismatch");
    let mut out = StateVector::zeros(psi.n_spins());
    s.apply_into(psi.amplitudes(), out.amplitudes_mut());
    out
}

/// Impurity Hamiltonian when the bath is frozen in a Σ_x eigenstate with eigenvalue `s_x`:
/// `(ω₀/2) σ_z + (β + λ₀ s_x) σ_x`, in the (|1⟩, |0⟩) row ordering.
pub fn effective_hamiltonian_spin(p: &ModelParams, s_x: f64) -> Matrix2 {
    let off = p.beta + p.lambda0 * s_x;
    Matrix2::new([[p.omega0 / 2.0, off], [off, -p.omega0 / 2.0]])
}
