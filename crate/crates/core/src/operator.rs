//! Matrix-free linear operators on the spin Hilbert space.

use alloc::vec;
use alloc::vec::Vec;

use crate::hilbert::{flip_accumulate, PauliAxis, C64, I};
use crate::model::PauliTermList;

/// Hermitian operator acting on dense amplitude slices of length `2^n_spins`.
pub trait Operator {
    fn n_spins(&self) -> usize;

    fn dim(&self) -> usize {
        1 << self.n_spins()
    }

    /// Overwrites `out` with `H · psi`. Both slices have length [`Operator::dim`].
    fn apply_into(&self, psi: &[C64], out: &mut [C64]);
}

impl<T: Operator + ?Sized> Operator for &T {
    fn n_spins(&self) -> usize {
        (**self).n_spins()
    }

    fn apply_into(&self, psi: &[C64], out: &mut [C64]) {
        (**self).apply_into(psi, out)
    }
}

/// A Pauli string reduced to its action on basis indices:
/// `P|j⟩ = i^{n_y} (−1)^{popcount(z_mask & !j)} |j ^ x_mask⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct StringAction {
    pub x_mask: usize,
    pub z_mask: usize,
    pub n_y: u32,
}

impl StringAction {
    pub fn from_factors(factors: &[(usize, PauliAxis)]) -> Self {
        let mut a = StringAction { x_mask: 0, z_mask: 0, n_y: 0 };
        for &(site, axis) in factors {
            let bit = 1 << site;
            match axis {
                PauliAxis::X => a.x_mask |= bit,
                PauliAxis::Y => {
                    a.x_mask |= bit;
                    a.z_mask |= bit;
                    a.n_y += 1;
                }
                PauliAxis::Z => a.z_mask |= bit,
            }
        }
        a
    }

    /// Phase acquired by source index `j`.
    #[inline]
    pub fn phase(&self, j: usize) -> C64 {
        let sign = if (self.z_mask & !j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let base = match self.n_y % 4 {
            0 => C64::new(1.0, 0.0),
            1 => I,
            2 => C64::new(-1.0, 0.0),
            _ => -I,
        };
        base * sign
    }
}

/// Term list lowered to one diagonal plus one entry per distinct flip mask.
///
/// Strings containing only X factors collapse into a single real coefficient per mask,
/// which is the hot path for the spin-bath Hamiltonians (no Y appears there).
#[derive(Clone, Debug)]
pub struct CompiledOperator {
    n_spins: usize,
    diagonal: Vec<f64>,
    uniform: Vec<(usize, f64)>,
    // coefficient indexed by destination
    general: Vec<(usize, Vec<C64>)>,
}

impl CompiledOperator {
    pub fn new(h: &PauliTermList) -> Self {
        let n = h.n_spins();
        let dim = 1usize << n;
        let mut diagonal = vec![0.0; dim];
        let mut uniform: Vec<(usize, f64)> = Vec::new();
        let mut general: Vec<(usize, Vec<C64>)> = Vec::new();

        for term in h.terms() {
            let act = StringAction::from_factors(term.factors());
            let c = term.coeff();
            if act.x_mask == 0 {
                for (j, d) in diagonal.iter_mut().enumerate() {
                    *d += c * act.phase(j).re;
                }
            } else if act.z_mask == 0 {
                match uniform.iter_mut().find(|(m, _)| *m == act.x_mask) {
                    Some((_, acc)) => *acc += c,
                    None => uniform.push((act.x_mask, c)),
                }
            } else {
                let idx = match general.iter().position(|(m, _)| *m == act.x_mask) {
                    Some(i) => i,
                    None => {
                        general.push((act.x_mask, vec![C64::new(0.0, 0.0); dim]));
                        general.len() - 1
                    }
                };
                let coeffs = &mut general[idx].1;
                for (k, ck) in coeffs.iter_mut().enumerate() {
                    *ck += act.phase(k ^ act.x_mask) * c;
                }
            }
        }
        CompiledOperator { n_spins: n, diagonal, uniform, general }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Number of distinct off-diagonal flip masks.
    pub fn n_masks(&self) -> usize {
        self.uniform.len() + self.general.len()
    }

    /// Visits every structurally non-zero matrix element `(row, col, value)`.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, C64)) {
        for (j, &d) in self.diagonal.iter().enumerate() {
            if d != 0.0 {
                f(j, j, C64::new(d, 0.0));
            }
        }
        for &(mask, c) in &self.uniform {
            for k in 0..self.dim() {
                f(k, k ^ mask, C64::new(c, 0.0));
            }
        }
        for (mask, coeffs) in &self.general {
            for (k, &c) in coeffs.iter().enumerate() {
                f(k, k ^ mask, c);
            }
        }
    }
}

impl Operator for CompiledOperator {
    fn n_spins(&self) -> usize {
        self.n_spins
    }

    fn apply_into(&self, psi: &[C64], out: &mut [C64]) {
        assert_eq!(psi.len(), self.dim(), "operator: input dimension mismatch");
        assert_eq!(out.len(), self.dim(), "operator: output dimension mismatch");
        for ((o, p), d) in out.iter_mut().zip(psi).zip(&self.diagonal) {
            *o = p * d;
        }
        for &(mask, c) in &self.uniform {
            flip_accumulate(mask, c, psi, out);
        }
        for (mask, coeffs) in &self.general {
            for (k, (o, c)) in out.iter_mut().zip(coeffs).enumerate() {
                *o += c * psi[k ^ mask];
            }
        }
    }
}
