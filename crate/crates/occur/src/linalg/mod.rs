//! Dense complex linear-algebra kernel: matrix arithmetic, Hermitian
//! eigendecomposition, tensor products, partial traces and matrix
//! exponentials of Hermitian generators.
//!
//! All operations are pure functions of their inputs; matrices are
//! value-semantic and safe to share read-only across threads.

mod eig;
mod matrix;

pub use eig::{
    eig_hermitian, jacobi_eigh, unitary_evolve, SpectralDecomposition, DEGENERACY_TOL_REL,
    HERMITICITY_TOL,
};
pub use matrix::{anticommutator, commutator, partial_trace_env, tensor, ComplexMatrix};

pub use num_complex::Complex64 as C64;
