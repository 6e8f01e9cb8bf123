//! Scenario data model: system/environment/interaction Hamiltonians,
//! observables, bath spectral functions and eigenoperator construction.
//!
//! The interaction Hamiltonian is the tensor decomposition
//! H_I = sum_a A_a (x) B_a with Hermitian factors. The library does not
//! orthogonalise the environment operators {B_a}; the scenario author is
//! responsible for choosing an orthogonal set when it matters.

mod bath;
mod drive;

pub use bath::{pv_integral, BathSpectrum, LambShiftMode};
pub use drive::{DriveProtocol, DriveSchedule};

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, jacobi_eigh, ComplexMatrix, DEGENERACY_TOL_REL, HERMITICITY_TOL,
};

/// System side of a scenario: Hamiltonian and coupling operators.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub dim_s: usize,
    pub h_s: ComplexMatrix,
    pub couplings: Vec<ComplexMatrix>,
}

impl SystemSpec {
    pub fn new(h_s: ComplexMatrix, couplings: Vec<ComplexMatrix>) -> Result<Self> {
        let dim_s = h_s.dim();
        if !h_s.is_hermitian(HERMITICITY_TOL) {
            return Err(Error::validation("system.H_S", "not Hermitian"));
        }
        for (k, a) in couplings.iter().enumerate() {
            if a.dim() != dim_s {
                return Err(Error::validation(
                    format!("system.couplings[{k}]"),
                    "dimension does not match H_S",
                ));
            }
            if !a.is_hermitian(HERMITICITY_TOL) {
                return Err(Error::validation(
                    format!("system.couplings[{k}]"),
                    "not Hermitian",
                ));
            }
        }
        Ok(Self { dim_s, h_s, couplings })
    }
}

/// Finite-dimensional environment for exact co-simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub dim_e: usize,
    pub h_e: ComplexMatrix,
    pub bath_ops: Vec<ComplexMatrix>,
    pub rho_e0: ComplexMatrix,
}

impl EnvSpec {
    pub fn new(
        h_e: ComplexMatrix,
        bath_ops: Vec<ComplexMatrix>,
        rho_e0: ComplexMatrix,
    ) -> Result<Self> {
        let dim_e = h_e.dim();
        if !h_e.is_hermitian(HERMITICITY_TOL) {
            return Err(Error::validation("environment.H_E", "not Hermitian"));
        }
        for (k, b) in bath_ops.iter().enumerate() {
            if b.dim() != dim_e {
                return Err(Error::validation(
                    format!("environment.bath_ops[{k}]"),
                    "dimension does not match H_E",
                ));
            }
            if !b.is_hermitian(HERMITICITY_TOL) {
                return Err(Error::validation(
                    format!("environment.bath_ops[{k}]"),
                    "not Hermitian",
                ));
            }
        }
        validate_density_matrix(&rho_e0, "environment.rho_E0")?;
        if rho_e0.dim() != dim_e {
            return Err(Error::validation(
                "environment.rho_E0",
                "dimension does not match H_E",
            ));
        }
        Ok(Self {
            dim_e,
            h_e,
            bath_ops,
            rho_e0,
        })
    }
}

/// Check Hermiticity, unit trace and positive semidefiniteness of an
/// initial state. `field` names the scenario location for error messages.
pub fn validate_density_matrix(rho: &ComplexMatrix, field: &str) -> Result<()> {
    if !rho.is_hermitian(HERMITICITY_TOL) {
        return Err(Error::validation(field, "not Hermitian"));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
        return Err(Error::validation(
            field,
            format!("trace is {:.6e}{:+.2e}i, expected 1", tr.re, tr.im),
        ));
    }
    let (values, _) = jacobi_eigh(rho)?;
    let min = values.first().copied().unwrap_or(0.0);
    if min < -1e-10 {
        return Err(Error::validation(
            field,
            format!("not positive semidefinite: min eigenvalue {min:.3e}"),
        ));
    }
    Ok(())
}

/// A system observable, optionally with an explicit constant rate of
/// change dG/dt (so G(t) = G + t dG/dt).
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSpec {
    pub name: String,
    pub g: ComplexMatrix,
    pub dg_dt: Option<ComplexMatrix>,
}

impl ObservableSpec {
    pub fn new(name: impl Into<String>, g: ComplexMatrix, dg_dt: Option<ComplexMatrix>) -> Result<Self> {
        let name = name.into();
        if !g.is_hermitian(HERMITICITY_TOL) {
            return Err(Error::validation(format!("observables.{name}.G"), "not Hermitian"));
        }
        if let Some(d) = &dg_dt {
            if d.dim() != g.dim() {
                return Err(Error::validation(
                    format!("observables.{name}.explicit_dGdt"),
                    "dimension mismatch",
                ));
            }
            if !d.is_hermitian(HERMITICITY_TOL) {
                return Err(Error::validation(
                    format!("observables.{name}.explicit_dGdt"),
                    "not Hermitian",
                ));
            }
        }
        Ok(Self { name, g, dg_dt })
    }

    pub fn time_independent(name: impl Into<String>, g: ComplexMatrix) -> Result<Self> {
        Self::new(name, g, None)
    }
}

/// Decomposition of a coupling operator into Bohr-frequency components
/// A(w) = sum over eigenvalue pairs with e' - e = w of P(e) A P(e').
///
/// Frequencies are ascending; components whose largest entry is below
/// 1e-13 are dropped.
#[derive(Clone, Debug)]
pub struct EigenoperatorSet {
    pub frequencies: Vec<f64>,
    pub operators: Vec<ComplexMatrix>,
    pub source_coupling: ComplexMatrix,
}

impl EigenoperatorSet {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &ComplexMatrix)> {
        self.frequencies.iter().copied().zip(self.operators.iter())
    }
}

const DROP_TOL: f64 = 1e-13;

/// Default binning tolerance for Bohr frequencies, relative to the
/// spectral scale of H_S.
pub fn default_freq_tol(h_s: &ComplexMatrix) -> f64 {
    let scale = h_s.max_abs().max(1.0);
    1e-9 * scale
}

/// Split a coupling operator into eigenoperators of H_S. Bohr
/// frequencies closer than `tol_freq` are binned together.
pub fn build_eigenoperators(
    h_s: &ComplexMatrix,
    a: &ComplexMatrix,
    tol_freq: f64,
) -> Result<EigenoperatorSet> {
    if h_s.dim() != a.dim() {
        return Err(Error::Shape(format!(
            "eigenoperator build: H_S dim {} vs coupling dim {}",
            h_s.dim(),
            a.dim()
        )));
    }
    if tol_freq <= 0.0 {
        return Err(Error::validation("tol_freq", "must be positive"));
    }
    let dec = eig_hermitian(h_s, DEGENERACY_TOL_REL)?;

    let mut raw: Vec<(f64, ComplexMatrix)> = Vec::new();
    for (j, pj) in dec.projectors.iter().enumerate() {
        for (k, pk) in dec.projectors.iter().enumerate() {
            let omega = dec.eigenvalues[k] - dec.eigenvalues[j];
            let term = &(pj * a) * pk;
            raw.push((omega, term));
        }
    }
    raw.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());

    let mut frequencies = Vec::new();
    let mut operators = Vec::new();
    let mut start = 0;
    while start < raw.len() {
        let mut end = start + 1;
        while end < raw.len() && raw[end].0 - raw[end - 1].0 <= tol_freq {
            end += 1;
        }
        let group = &raw[start..end];
        let omega = group.iter().map(|g| g.0).sum::<f64>() / group.len() as f64;
        let mut op = ComplexMatrix::zeros(a.dim());
        for (_, term) in group {
            op.add_assign(term);
        }
        if op.max_abs() >= DROP_TOL {
            frequencies.push(omega);
            operators.push(op);
        }
        start = end;
    }

    Ok(EigenoperatorSet {
        frequencies,
        operators,
        source_coupling: a.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sx() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    fn sz() -> ComplexMatrix {
        ComplexMatrix::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)])
    }

    fn random_hermitian(dim: usize, seed: u64) -> ComplexMatrix {
        let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
        let mut next = move || {
            state = state.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        ComplexMatrix::from_fn(dim, |_, _| c(next(), next())).hermitize()
    }

    #[test]
    fn qubit_ladder_operators() {
        // H_S = sz/2 (w01 = 1), A = sx. The ground state is |1> = (0,1).
        let h = sz().scale_re(0.5);
        let set = build_eigenoperators(&h, &sx(), 1e-9).unwrap();
        assert_eq!(set.frequencies.len(), 2);
        assert!((set.frequencies[0] + 1.0).abs() < 1e-12);
        assert!((set.frequencies[1] - 1.0).abs() < 1e-12);

        // A(+1) = |g><e| lowers from the e = +1/2 eigenvector (0,0) basis
        let g_vec = [c(0.0, 0.0), c(1.0, 0.0)];
        let e_vec = [c(1.0, 0.0), c(0.0, 0.0)];
        let lower = ComplexMatrix::outer(&g_vec, &e_vec);
        let raise = ComplexMatrix::outer(&e_vec, &g_vec);
        assert!(set.operators[1].max_abs_diff(&lower) < 1e-12);
        assert!(set.operators[0].max_abs_diff(&raise) < 1e-12);
    }

    #[test]
    fn diagonal_coupling_single_zero_frequency() {
        let h = sz().scale_re(0.5);
        let a = ComplexMatrix::diagonal(&[c(0.4, 0.0), c(-0.7, 0.0)]);
        let set = build_eigenoperators(&h, &a, 1e-9).unwrap();
        assert_eq!(set.frequencies.len(), 1);
        assert_eq!(set.frequencies[0], 0.0);
        assert!(set.operators[0].max_abs_diff(&a) < 1e-13);
    }

    #[test]
    fn eigenoperator_invariants_random() {
        for seed in 0..12u64 {
            let dim = 2 + (seed as usize % 5);
            let h = random_hermitian(dim, 100 + seed);
            let a = random_hermitian(dim, 200 + seed);
            let tol = default_freq_tol(&h);
            let set = build_eigenoperators(&h, &a, tol).unwrap();

            // completeness
            let mut sum = ComplexMatrix::zeros(dim);
            for (_, op) in set.iter() {
                sum.add_assign(op);
            }
            assert!(sum.max_abs_diff(&a) < 1e-10, "completeness failed (seed {seed})");

            // conjugation pairing A(-w) = A(w)'
            for (w, op) in set.iter() {
                let partner = set
                    .iter()
                    .find(|(w2, _)| (w2 + w).abs() <= tol.max(1e-12))
                    .map(|(_, o)| o.clone())
                    .expect("missing conjugate frequency");
                assert!(partner.max_abs_diff(&op.adjoint()) < 1e-10);
            }

            // eigenoperator property [H, A(w)] = -w A(w)
            for (w, op) in set.iter() {
                let comm = crate::linalg::commutator(&h, op).unwrap();
                let expected = op.scale_re(-w);
                assert!(comm.max_abs_diff(&expected) < 1e-9);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let h = sz();
        let a = ComplexMatrix::identity(3);
        assert!(matches!(
            build_eigenoperators(&h, &a, 1e-9),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn density_matrix_validation() {
        let good = ComplexMatrix::diagonal(&[c(0.5, 0.0), c(0.5, 0.0)]);
        validate_density_matrix(&good, "x").unwrap();

        let bad_trace = ComplexMatrix::diagonal(&[c(0.5, 0.0), c(0.6, 0.0)]);
        assert!(validate_density_matrix(&bad_trace, "x").is_err());

        let negative = ComplexMatrix::diagonal(&[c(1.5, 0.0), c(-0.5, 0.0)]);
        assert!(validate_density_matrix(&negative, "x").is_err());
    }

    #[test]
    fn system_spec_rejects_non_hermitian_coupling() {
        let mut a = ComplexMatrix::zeros(2);
        a.set(0, 1, c(1.0, 0.0));
        let err = SystemSpec::new(sz(), vec![a]).unwrap_err();
        assert!(err.to_string().contains("couplings[0]"));
    }
}
