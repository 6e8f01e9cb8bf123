//! Hermitian eigendecomposition by cyclic Jacobi rotations.
//!
//! Each rotation annihilates one off-diagonal pair (p, q) of the working
//! copy with a complex Givens rotation: the pivot's phase is absorbed
//! into the rotation so the 2x2 subproblem reduces to the real symmetric
//! case. Sweeps repeat until the off-diagonal Frobenius norm falls below
//! 1e-14 times the Frobenius norm of the input, or 100 sweeps elapse.

use num_complex::Complex64 as C64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Input must be Hermitian to this entrywise tolerance.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Default relative tolerance for merging nearly equal eigenvalues into
/// one eigenspace projector.
pub const DEGENERACY_TOL_REL: f64 = 1e-9;

const CONVERGENCE_REL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues (ascending) and orthonormal eigenprojectors of a Hermitian
/// operator. Degenerate eigenvalues are merged into a single projector.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<ComplexMatrix>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    /// Σ_k f(ε_k) Π_k.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim());
        for (ev, p) in self.eigenvalues.iter().zip(self.projectors.iter()) {
            out.add_assign(&p.scale(f(*ev)));
        }
        out
    }
}

/// Raw eigen-solve: eigenvalues ascending, eigenvectors as columns
/// (returned per-column), no degeneracy merging.
pub fn jacobi_eigh(a: &ComplexMatrix) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let defect = a.hermiticity_defect();
    if defect >= HERMITICITY_TOL {
        return Err(Error::Validation {
            field: "matrix".into(),
            message: format!("not Hermitian: max |A - A'| = {defect:.3e}"),
        });
    }
    let n = a.dim();
    let norm_f = a.frobenius_norm();
    let mut w = a.hermitize();
    let mut v = ComplexMatrix::identity(n);

    let off_norm = |m: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m.get(i, j).norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&w) > CONVERGENCE_REL * norm_f {
        if sweeps >= MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps \
                 (off-diagonal norm {:.3e}, target {:.3e})",
                off_norm(&w),
                CONVERGENCE_REL * norm_f
            )));
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = w.get(p, q);
                let b = apq.norm();
                if b == 0.0 {
                    continue;
                }
                let phi = apq.arg();
                let h = w.get(q, q).re - w.get(p, p).re;
                let theta = h / (2.0 * b);
                let t = if theta.abs() > 1e150 {
                    1.0 / (2.0 * theta)
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let em = C64::from_polar(1.0, -phi);
                let ep = em.conj();

                // columns p, q of W
                for k in 0..n {
                    let x = w.get(k, p);
                    let y = em * w.get(k, q);
                    w.set(k, p, x * c - y * s);
                    w.set(k, q, x * s + y * c);
                }
                // rows p, q of W
                for k in 0..n {
                    let x = w.get(p, k);
                    let y = ep * w.get(q, k);
                    w.set(p, k, x * c - y * s);
                    w.set(q, k, x * s + y * c);
                }
                // annihilated pair and real diagonal, exactly
                w.set(p, q, C64::new(0.0, 0.0));
                w.set(q, p, C64::new(0.0, 0.0));
                w.set(p, p, C64::new(w.get(p, p).re, 0.0));
                w.set(q, q, C64::new(w.get(q, q).re, 0.0));

                // accumulate eigenvectors: V <- V G
                for k in 0..n {
                    let x = v.get(k, p);
                    let y = em * v.get(k, q);
                    v.set(k, p, x * c - y * s);
                    v.set(k, q, x * s + y * c);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w.get(i, i).re.partial_cmp(&w.get(j, j).re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| w.get(i, i).re).collect();
    let vectors: Vec<Vec<C64>> = order
        .iter()
        .map(|&j| (0..n).map(|k| v.get(k, j)).collect())
        .collect();
    Ok((values, vectors))
}

/// Spectral decomposition with eigenvalues within `tol_degeneracy` times
/// the spectral norm merged into a single projector.
pub fn eig_hermitian(a: &ComplexMatrix, tol_degeneracy: f64) -> Result<SpectralDecomposition> {
    if tol_degeneracy <= 0.0 {
        return Err(Error::Validation {
            field: "tol_degeneracy".into(),
            message: "must be positive".into(),
        });
    }
    let (values, vectors) = jacobi_eigh(a)?;
    let n = a.dim();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let gap = tol_degeneracy * scale;

    let mut eigenvalues = Vec::new();
    let mut projectors = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= gap {
            end += 1;
        }
        let group = &values[start..end];
        eigenvalues.push(group.iter().sum::<f64>() / group.len() as f64);
        let mut proj = ComplexMatrix::zeros(n);
        for vec in &vectors[start..end] {
            proj.add_assign(&ComplexMatrix::outer(vec, vec));
        }
        projectors.push(proj);
        start = end;
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        projectors,
    })
}

/// exp(-iHt) for Hermitian H, via the eigendecomposition
/// V diag(exp(-i e_k t)) V'.
pub fn unitary_evolve(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let (values, vectors) = jacobi_eigh(h)?;
    let n = h.dim();
    let phases: Vec<C64> = values
        .iter()
        .map(|&e| C64::from_polar(1.0, -e * t))
        .collect();
    let mut u = ComplexMatrix::zeros(n);
    for (phase, vec) in phases.iter().zip(vectors.iter()) {
        u.add_assign(&ComplexMatrix::outer(vec, vec).scale(*phase));
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::super::matrix::test_support::*;
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(dim: usize, seed: u64) -> ComplexMatrix {
        // small deterministic LCG; good enough for test matrices
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let raw = ComplexMatrix::from_fn(dim, |_, _| c(next(), next()));
        raw.hermitize()
    }

    #[test]
    fn sigma_z_decomposition() {
        let dec = eig_hermitian(&sigma_z(), DEGENERACY_TOL_REL).unwrap();
        assert_eq!(dec.eigenvalues.len(), 2);
        assert!((dec.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((dec.eigenvalues[1] - 1.0).abs() < 1e-14);
        // ground projector |1><1|, excited projector |0><0|
        let p_minus = ComplexMatrix::diagonal(&[c(0.0, 0.0), c(1.0, 0.0)]);
        let p_plus = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(dec.projectors[0].max_abs_diff(&p_minus) < 1e-14);
        assert!(dec.projectors[1].max_abs_diff(&p_plus) < 1e-14);
    }

    #[test]
    fn sigma_x_projectors() {
        // eigenprojectors of sx are (I -+ sx)/2
        let dec = eig_hermitian(&sigma_x(), DEGENERACY_TOL_REL).unwrap();
        let minus = ComplexMatrix::from_fn(2, |i, j| if i == j { c(0.5, 0.0) } else { c(-0.5, 0.0) });
        let plus = ComplexMatrix::from_fn(2, |_, _| c(0.5, 0.0));
        assert!((dec.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((dec.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!(dec.projectors[0].max_abs_diff(&minus) < 1e-12);
        assert!(dec.projectors[1].max_abs_diff(&plus) < 1e-12);
    }

    #[test]
    fn random_reconstruction_and_projector_algebra() {
        for seed in 0..8u64 {
            let a = random_hermitian(6, seed + 1);
            let dec = eig_hermitian(&a, DEGENERACY_TOL_REL).unwrap();
            let n = a.dim();

            // completeness
            let mut sum = ComplexMatrix::zeros(n);
            for p in &dec.projectors {
                sum.add_assign(p);
            }
            assert!(sum.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-12);

            // orthogonality
            for (i, pi) in dec.projectors.iter().enumerate() {
                for (j, pj) in dec.projectors.iter().enumerate() {
                    let prod = pi * pj;
                    if i == j {
                        assert!(prod.max_abs_diff(pi) < 1e-12);
                    } else {
                        assert!(prod.max_abs() < 1e-12);
                    }
                }
            }

            // reconstruction, relative to spectral norm
            let rebuilt = dec.map_spectrum(|e| c(e, 0.0));
            let scale = dec
                .eigenvalues
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(1.0);
            assert!(rebuilt.max_abs_diff(&a) < 1e-10 * scale);
        }
    }

    #[test]
    fn degenerate_eigenvalues_merge() {
        // sz ⊗ I has eigenvalues {-1, -1, +1, +1}
        let m = crate::linalg::tensor(&sigma_z(), &ComplexMatrix::identity(2));
        let dec = eig_hermitian(&m, DEGENERACY_TOL_REL).unwrap();
        assert_eq!(dec.eigenvalues.len(), 2);
        assert!((dec.projectors[0].trace().re - 2.0).abs() < 1e-12);
        assert!((dec.projectors[1].trace().re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = ComplexMatrix::zeros(2);
        m.set(0, 1, c(1.0, 0.0));
        assert!(eig_hermitian(&m, DEGENERACY_TOL_REL).is_err());
    }

    #[test]
    fn zero_matrix_ok() {
        let dec = eig_hermitian(&ComplexMatrix::zeros(3), DEGENERACY_TOL_REL).unwrap();
        assert_eq!(dec.eigenvalues.len(), 1);
        assert_eq!(dec.eigenvalues[0], 0.0);
    }

    #[test]
    fn unitary_evolve_at_zero_is_identity() {
        let h = random_hermitian(4, 42);
        let u = unitary_evolve(&h, 0.0).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn sigma_z_half_turn() {
        // exp(-i sz pi) = -I
        let u = unitary_evolve(&sigma_z(), std::f64::consts::PI).unwrap();
        let minus_i = ComplexMatrix::identity(2).scale_re(-1.0);
        assert!(u.max_abs_diff(&minus_i) < 1e-12);
    }

    #[test]
    fn group_property_and_unitarity() {
        let h = random_hermitian(5, 7);
        let u1 = unitary_evolve(&h, 0.7).unwrap();
        let u2 = unitary_evolve(&h, 1.9).unwrap();
        let u12 = unitary_evolve(&h, 2.6).unwrap();
        assert!((&u1 * &u2).max_abs_diff(&u12) < 1e-10);

        let gram = &u1.adjoint() * &u1;
        assert!(gram.max_abs_diff(&ComplexMatrix::identity(5)) < 1e-10);
    }

    #[test]
    fn unitary_conjugation_preserves_trace_and_hermiticity() {
        let h = random_hermitian(4, 11);
        let rho = {
            let x = random_hermitian(4, 12);
            let sq = &x * &x;
            let tr = sq.trace().re;
            sq.scale_re(1.0 / tr)
        };
        let u = unitary_evolve(&h, 1.3).unwrap();
        let evolved = &(&u * &rho) * &u.adjoint();
        assert!((evolved.trace() - rho.trace()).norm() < 1e-10);
        assert!(evolved.hermiticity_defect() < 1e-10);
    }
}
