//! Dense Kronecker-product oracles shared by unit tests.

use alloc::vec;
use alloc::vec::Vec;

use crate::hilbert::{PauliAxis, C64};

pub type Dense = Vec<Vec<C64>>;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// 2×2 single-site matrix in the (|0⟩ = down, |1⟩ = up) ordering.
pub fn single(axis: Option<PauliAxis>) -> Dense {
    match axis {
        None => vec![vec![c(1., 0.), c(0., 0.)], vec![c(0., 0.), c(1., 0.)]],
        Some(PauliAxis::X) => vec![vec![c(0., 0.), c(1., 0.)], vec![c(1., 0.), c(0., 0.)]],
        Some(PauliAxis::Y) => vec![vec![c(0., 0.), c(0., 1.)], vec![c(0., -1.), c(0., 0.)]],
        Some(PauliAxis::Z) => vec![vec![c(-1., 0.), c(0., 0.)], vec![c(0., 0.), c(1., 0.)]],
    }
}

pub fn kron(a: &Dense, b: &Dense) -> Dense {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0., 0.); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Dense matrix of a Pauli string on `n` spins; site `n−1` is the most significant factor.
pub fn pauli_dense(n: usize, factors: &[(usize, PauliAxis)]) -> Dense {
    let op_at = |site: usize| factors.iter().find(|(s, _)| *s == site).map(|&(_, a)| a);
    let mut m = single(op_at(n - 1));
    for site in (0..n - 1).rev() {
        m = kron(&m, &single(op_at(site)));
    }
    m
}

pub fn dense_apply(m: &Dense, v: &[C64]) -> Vec<C64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn dense_add_scaled(acc: &mut Dense, coeff: f64, m: &Dense) {
    for (ra, rm) in acc.iter_mut().zip(m) {
        for (a, b) in ra.iter_mut().zip(rm) {
            *a += b * coeff;
        }
    }
}
