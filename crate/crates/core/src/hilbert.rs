//! Tensor-product basis of N spin-1/2 modes encoded as the bits of an integer.
//!
//! Bit `i` of a basis index stores the σ_z eigenstate of spin `i`: 1 is up (σ_z = +1),
//! 0 is down (σ_z = −1). A Pauli operator therefore either permutes amplitudes (X),
//! permutes them with a phase (Y) or flips their sign (Z); no matrix is ever stored.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use rand::Rng;

use crate::error::{Error, Result};
use crate::math;

pub use num_complex::Complex64 as C64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Largest supported spin count (2^30 amplitudes is already 16 GiB).
pub const MAX_SPINS: usize = 30;

/// A computational basis state `j = j_1 + 2 j_2 + … + 2^{N-1} j_N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex(usize);

impl BasisIndex {
    /// Returns `None` unless `value < 2^n_spins`.
    pub fn new(value: usize, n_spins: usize) -> Option<Self> {
        (n_spins <= MAX_SPINS && value < (1usize << n_spins)).then_some(BasisIndex(value))
    }

    /// Composes an index from per-site bits, `bits[i]` being the state of site `i`.
    pub fn from_bits(bits: &[bool]) -> Self {
        BasisIndex(
            bits.iter()
                .enumerate()
                .fold(0, |acc, (i, &b)| acc | (usize::from(b) << i)),
        )
    }

    pub fn value(self) -> usize {
        self.0
    }

    pub fn bit(self, site: usize) -> bool {
        (self.0 >> site) & 1 == 1
    }

    pub fn bits(self, n_spins: usize) -> Vec<bool> {
        (0..n_spins).map(|i| self.bit(i)).collect()
    }

    /// The image of this index under σ_x on `site`.
    pub fn flipped(self, site: usize) -> Self {
        BasisIndex(self.0 ^ (1 << site))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    pub fn symbol(self) -> char {
        match self {
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }
}

/// Dense vector of 2^N complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_spins: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zeros(n_spins: usize) -> Self {
        assert!(n_spins <= MAX_SPINS, "too many spins: {n_spins}");
        StateVector { n_spins, amps: vec![ZERO; 1 << n_spins] }
    }

    /// Unit amplitude on a single basis state.
    pub fn basis(n_spins: usize, index: usize) -> Self {
        let mut s = Self::zeros(n_spins);
        s.amps[index] = C64::new(1.0, 0.0);
        s
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        Ok(StateVector { n_spins: len.trailing_zeros() as usize, amps })
    }

    /// A normalized vector with independent Gaussian real and imaginary parts.
    pub fn random<R: Rng + ?Sized>(n_spins: usize, rng: &mut R) -> Self {
        let mut s = Self::zeros(n_spins);
        for a in s.amps.iter_mut() {
            *a = gaussian_pair(rng);
        }
        s.normalize();
        s
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.norm_sqr())
    }

    /// Scales to unit norm; a zero vector is left untouched.
    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.scale(C64::new(1.0 / n, 0.0));
        }
    }

    pub fn scale(&mut self, c: C64) {
        for a in self.amps.iter_mut() {
            *a *= c;
        }
    }

    /// `self += c · other`
    pub fn axpy(&mut self, c: C64, other: &StateVector) {
        assert_eq!(self.dim(), other.dim(), "axpy: dimension mismatch");
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += c * b;
        }
    }

    /// Largest componentwise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_abs_diff: dimension mismatch");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for StateVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.amps[i]
    }
}

impl IndexMut<usize> for StateVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.amps[i]
    }
}

fn gaussian_pair<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    // Box–Muller
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let r = math::sqrt(-2.0 * math::ln(u1));
    let (s, c) = math::sin_cos(core::f64::consts::TAU * u2);
    C64::new(r * c, r * s)
}

/// σ_axis on `site` applied to `psi`; the input is left untouched.
///
/// Y acts as `|1⟩ → i|0⟩`, `|0⟩ → −i|1⟩`, which together with X and Z satisfies XY = iZ.
///
/// # Panics
/// If `site >= psi.n_spins()`.
pub fn apply_pauli(axis: PauliAxis, site: usize, psi: &StateVector) -> StateVector {
    let mut out = StateVector::zeros(psi.n_spins);
    apply_pauli_accumulate(axis, site, C64::new(1.0, 0.0), psi, &mut out);
    out
}

/// `acc += coeff · σ_axis^{(site)} |psi⟩`
///
/// # Panics
/// If the dimensions differ or `site` is out of range.
pub fn apply_pauli_accumulate(
    axis: PauliAxis,
    site: usize,
    coeff: C64,
    psi: &StateVector,
    acc: &mut StateVector,
) {
    assert!(
        site < psi.n_spins,
        "site {site} out of range for {} spins",
        psi.n_spins
    );
    assert_eq!(psi.dim(), acc.dim(), "apply_pauli_accumulate: dimension mismatch");
    if coeff == ZERO {
        return;
    }
    let bit = 1usize << site;
    let src = &psi.amps;
    let dst = &mut acc.amps;
    match axis {
        PauliAxis::X => flip_accumulate_complex(bit, coeff, src, dst),
        PauliAxis::Y => {
            // destination with the bit set came from a source with the bit clear
            let up = coeff * -I;
            let down = coeff * I;
            for_each_flip_block(bit, dst.len(), |base, partner, len| {
                let c = if base & bit != 0 { up } else { down };
                for k in 0..len {
                    dst[base + k] += c * src[partner + k];
                }
            });
        }
        PauliAxis::Z => {
            for_each_flip_block(bit, dst.len(), |base, _, len| {
                let c = if base & bit != 0 { coeff } else { -coeff };
                for k in 0..len {
                    dst[base + k] += c * src[base + k];
                }
            });
        }
    }
}

/// `⟨phi|psi⟩`, antilinear in `phi`.
///
/// # Panics
/// If the dimensions differ.
pub fn inner_product(phi: &StateVector, psi: &StateVector) -> C64 {
    assert_eq!(phi.dim(), psi.dim(), "inner_product: dimension mismatch");
    dot(&phi.amps, &psi.amps)
}

#[inline]
pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

/// Calls `f(base, base ^ mask, len)` over contiguous runs of `len` indices whose images
/// under `j → j ^ mask` are also contiguous. `len` is the lowest set bit of `mask`.
#[inline]
fn for_each_flip_block(mask: usize, dim: usize, mut f: impl FnMut(usize, usize, usize)) {
    debug_assert!(mask != 0 && mask < dim);
    let len = 1usize << mask.trailing_zeros();
    let mut base = 0;
    while base < dim {
        f(base, base ^ mask, len);
        base += len;
    }
}

/// `dst[j] += coeff · src[j ^ mask]` for every `j`.
#[inline]
pub fn flip_accumulate(mask: usize, coeff: f64, src: &[C64], dst: &mut [C64]) {
    debug_assert_eq!(src.len(), dst.len());
    if mask == 0 {
        for (d, s) in dst.iter_mut().zip(src) {
            *d += s * coeff;
        }
        return;
    }
    if mask.is_power_of_two() {
        match mask {
            1 => flip_bit::<1>(coeff, src, dst),
            2 => flip_bit::<2>(coeff, src, dst),
            4 => flip_bit::<4>(coeff, src, dst),
            8 => flip_bit::<8>(coeff, src, dst),
            _ => {
                for (d, s) in dst.chunks_exact_mut(2 * mask).zip(src.chunks_exact(2 * mask)) {
                    let (d_lo, d_hi) = d.split_at_mut(mask);
                    let (s_lo, s_hi) = s.split_at(mask);
                    for (a, b) in d_lo.iter_mut().zip(s_hi) {
                        *a += b * coeff;
                    }
                    for (a, b) in d_hi.iter_mut().zip(s_lo) {
                        *a += b * coeff;
                    }
                }
            }
        }
        return;
    }
    if mask & 1 == 1 {
        for (j, d) in dst.iter_mut().enumerate() {
            *d += src[j ^ mask] * coeff;
        }
        return;
    }
    for_each_flip_block(mask, dst.len(), |base, partner, len| {
        let d = &mut dst[base..base + len];
        let s = &src[partner..partner + len];
        for (d, s) in d.iter_mut().zip(s) {
            *d += s * coeff;
        }
    });
}

// single-bit flip with a compile-time stride
#[inline(always)]
fn flip_bit<const S: usize>(coeff: f64, src: &[C64], dst: &mut [C64]) {
    for (d, s) in dst.chunks_exact_mut(2 * S).zip(src.chunks_exact(2 * S)) {
        for i in 0..S {
            d[i] += s[S + i] * coeff;
            d[S + i] += s[i] * coeff;
        }
    }
}

/// In-place unnormalized Walsh–Hadamard transform, `v ← H^{⊗n} v · 2^{n/2}`.
///
/// Applying it twice multiplies by `v.len()`. Panics unless the length is a power of two.
pub fn walsh_hadamard(v: &mut [C64]) {
    let n = v.len();
    assert!(n.is_power_of_two(), "walsh_hadamard: length {n} is not a power of two");
    if n == 1 {
        return;
    }
    if n == 2 {
        let (a, b) = (v[0], v[1]);
        v[0] = a + b;
        v[1] = a - b;
        return;
    }
    // low bits inside L1-sized blocks, the first two of them fused
    const BLOCK: usize = 512;
    let block = BLOCK.min(n);
    for chunk in v.chunks_exact_mut(block) {
        for q in chunk.chunks_exact_mut(4) {
            let (s01, d01) = (q[0] + q[1], q[0] - q[1]);
            let (s23, d23) = (q[2] + q[3], q[2] - q[3]);
            q[0] = s01 + s23;
            q[1] = d01 + d23;
            q[2] = s01 - s23;
            q[3] = d01 - d23;
        }
        let mut h = 4;
        while h < block {
            butterfly_pass(chunk, h);
            h <<= 1;
        }
    }
    let mut h = block;
    while h < n {
        butterfly_pass(v, h);
        h <<= 1;
    }
}

#[inline]
fn butterfly_pass(v: &mut [C64], h: usize) {
    for c in v.chunks_exact_mut(2 * h) {
        let (a, b) = c.split_at_mut(h);
        for (x, y) in a.iter_mut().zip(b.iter_mut()) {
            let (s, d) = (*x + *y, *x - *y);
            *x = s;
            *y = d;
        }
    }
}

/// Complex-coefficient variant of [`flip_accumulate`].
#[inline]
pub fn flip_accumulate_complex(mask: usize, coeff: C64, src: &[C64], dst: &mut [C64]) {
    debug_assert_eq!(src.len(), dst.len());
    if mask == 0 {
        for (d, s) in dst.iter_mut().zip(src) {
            *d += s * coeff;
        }
        return;
    }
    for_each_flip_block(mask, dst.len(), |base, partner, len| {
        for k in 0..len {
            dst[base + k] += coeff * src[partner + k];
        }
    });
}
