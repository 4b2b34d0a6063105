//! Exact dynamics of a central spin coupled to an interacting spin bath.
//!
//! The crate is `no_std` (with `alloc`). Everything here is pure numerics:
//!
//! * [`hilbert`]: bit-encoded tensor-product basis and matrix-free Pauli action.
//! * [`model`]: model parameters, Debye frequency sampling, Hamiltonian term lists
//!   and the collective ("super-spin") form of the same operator.
//! * [`operator`]: the [`Operator`] matvec trait and a compiled fast path for term lists.
//! * [`eigensolver`]: Lanczos lowest eigenpairs plus a dense oracle.
//! * [`propagation`]: adaptive 8th-order Runge–Kutta and an exact dense propagator.
//! * [`observables`]: thermal reduced density matrix, entropy, spin components.
//!
//! Basis convention: site 0 is the lowest bit; bit value 1 is the σ_z = +1 (up) state.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod eigensolver;
pub mod error;
pub mod hilbert;
pub mod linalg;
mod math;
pub mod model;
pub mod observables;
pub mod operator;
pub mod propagation;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use hilbert::{BasisIndex, PauliAxis, StateVector, C64};
pub use model::{ModelParams, PauliTermList, SuperSpinForm};
pub use operator::Operator;
