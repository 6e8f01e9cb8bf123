//! Reduced dynamics of open quantum systems under microscopically derived
//! master-equation generators, with conservation auditing of operator
//! currents against exact small-bath co-simulation.
//!
//! The crate is organised as:
//!
//! - [`linalg`]: dense complex matrices, Hermitian eigendecomposition
//!   (cyclic Jacobi), tensor products, partial traces.
//! - [`model`]: scenario data model — Hamiltonians, couplings, bath
//!   spectral functions, eigenoperator construction, drive schedules.
//! - [`generators`]: the master-equation dissipators (singular coupling,
//!   secular weak coupling, nonsecular Redfield, driven secular and
//!   nonsecular) and their dissipative currents.
//! - [`propagate`]: fixed-step RK4 reduced propagation and exact unitary
//!   propagation of the full system+bath composite.
//! - [`audit`]: both sides of the current-conservation balance, the
//!   integrated-current identity and coupling-strength residual sweeps.
//! - [`scenario`] / [`cli`]: declarative scenario files, command
//!   implementations and result emission.

pub mod audit;
pub mod cli;
pub mod error;
pub mod generators;
pub mod linalg;
pub mod model;
pub mod propagate;
pub mod scenario;

pub use error::{Error, Result};
