//! Dense square complex matrices, row-major storage.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Dense square matrix of complex scalars. The universal carrier for
/// states, Hamiltonians and observables. All physics uses natural units
/// (hbar = k_B = 1), so entries are dimensionless numbers.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix(dim={})", self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| format!("{:+.4}{:+.4}i", self.get(i, j).re, self.get(i, j).im))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    /// Build from a flat row-major entry list. Rejects wrong lengths and
    /// non-finite components.
    pub fn from_data(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("matrix dimension must be at least 1".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::Shape(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        let m = Self { dim, data };
        if !m.is_finite() {
            return Err(Error::Numeric(
                "matrix contains NaN or infinite components".into(),
            ));
        }
        Ok(m)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Rank-one matrix |u><v|.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len(), "outer product needs equal lengths");
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Tr(self * other) without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim, "trace_product dimension mismatch");
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim {
            for k in 0..self.dim {
                acc += self.get(i, k) * other.get(k, i);
            }
        }
        acc
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max |M - M†| over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                d = d.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        d
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() < tol
    }

    /// (M + M†)/2.
    pub fn hermitize(&self) -> Self {
        Self::from_fn(self.dim, |i, j| {
            (self.get(i, j) + self.get(j, i).conj()) * 0.5
        })
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.dim, other.dim, "add dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += *b;
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "diff dimension mismatch");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }
}

/// AB - BA.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "commutator dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(&(a * b) - &(b * a))
}

/// AB + BA.
pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "anticommutator dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(&(a * b) + &(b * a))
}

/// Kronecker product A ⊗ B. The first (system) factor is the slow index:
/// entry ((i_a, i_b), (j_a, j_b)) sits at row i_a*dim(B)+i_b.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim(), b.dim());
    let n = na * nb;
    let mut out = ComplexMatrix::zeros(n);
    for ia in 0..na {
        for ja in 0..na {
            let f = a.get(ia, ja);
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            for ib in 0..nb {
                for jb in 0..nb {
                    out.set(ia * nb + ib, ja * nb + jb, f * b.get(ib, jb));
                }
            }
        }
    }
    out
}

/// Trace over the environment (second tensor factor):
/// result[s, s'] = Σ_e M[(s,e), (s',e)].
pub fn partial_trace_env(m: &ComplexMatrix, dim_s: usize, dim_e: usize) -> Result<ComplexMatrix> {
    if dim_s * dim_e != m.dim() {
        return Err(Error::Shape(format!(
            "partial trace: {}x{} composite does not factor as {}*{}",
            m.dim(),
            m.dim(),
            dim_s,
            dim_e
        )));
    }
    let mut out = ComplexMatrix::zeros(dim_s);
    for s in 0..dim_s {
        for sp in 0..dim_s {
            let mut acc = C64::new(0.0, 0.0);
            for e in 0..dim_e {
                acc += m.get(s * dim_e + e, sp * dim_e + e);
            }
            out.set(s, sp, acc);
        }
    }
    Ok(out)
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pauli_commutator() {
        // [sx, sy] = 2i sz
        let comm = commutator(&sigma_x(), &sigma_y()).unwrap();
        let expected = sigma_z().scale(c(0.0, 2.0));
        assert!(comm.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn self_commutator_vanishes() {
        let h = sigma_x().scale(c(0.3, 0.0));
        let comm = commutator(&h, &h).unwrap();
        assert_eq!(comm.max_abs(), 0.0);
    }

    #[test]
    fn disjoint_tensor_factors_commute() {
        let a = tensor(&sigma_x(), &ComplexMatrix::identity(2));
        let b = tensor(&ComplexMatrix::identity(2), &sigma_y());
        let comm = commutator(&a, &b).unwrap();
        assert!(comm.max_abs() < 1e-15);
    }

    #[test]
    fn commutator_shape_error() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(3);
        assert!(matches!(commutator(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn commutator_antisymmetric() {
        let a = ComplexMatrix::from_fn(3, |i, j| c((i + 2 * j) as f64, (i as f64) - 0.5));
        let b = ComplexMatrix::from_fn(3, |i, j| c((i * j) as f64 * 0.2, 0.1 * j as f64));
        let ab = commutator(&a, &b).unwrap();
        let ba = commutator(&b, &a).unwrap();
        assert_eq!(ab, (&ba).neg());
    }

    #[test]
    fn trace_examples() {
        assert_eq!(ComplexMatrix::identity(4).trace(), c(4.0, 0.0));
        assert_eq!(sigma_x().trace(), c(0.0, 0.0));
    }

    #[test]
    fn tensor_identity_and_diagonal() {
        let i4 = tensor(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2));
        assert!(i4.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);

        let zi = tensor(&sigma_z(), &ComplexMatrix::identity(2));
        let expected = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0)]);
        assert!(zi.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_state() {
        // rho_S ⊗ rho_E with unit-trace rho_E recovers rho_S
        let rho_s = ComplexMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => c(0.7, 0.0),
            (1, 1) => c(0.3, 0.0),
            (0, 1) => c(0.1, 0.05),
            (1, 0) => c(0.1, -0.05),
            _ => unreachable!(),
        });
        let rho_e = ComplexMatrix::diagonal(&[c(0.25, 0.0), c(0.75, 0.0)]);
        let full = tensor(&rho_s, &rho_e);
        let back = partial_trace_env(&full, 2, 2).unwrap();
        assert!(back.max_abs_diff(&rho_s) < 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        // |Φ+> = (|00> + |11>)/sqrt(2); reduced state is I/2
        let amp = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [c(amp, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(amp, 0.0)];
        let rho = ComplexMatrix::outer(&psi, &psi);
        let red = partial_trace_env(&rho, 2, 2).unwrap();
        assert!(red.max_abs_diff(&ComplexMatrix::identity(2).scale_re(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_shape_error() {
        let m = ComplexMatrix::identity(6);
        assert!(partial_trace_env(&m, 4, 2).is_err());
    }

    #[test]
    fn from_data_rejects_nan() {
        let r = ComplexMatrix::from_data(1, vec![c(f64::NAN, 0.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn adjoint_involution() {
        let a = ComplexMatrix::from_fn(4, |i, j| c(0.3 * i as f64 - j as f64, 0.7 * (i * j) as f64));
        assert_eq!(a.adjoint().adjoint(), a);
    }

    #[test]
    fn trace_product_matches_full_product() {
        let a = ComplexMatrix::from_fn(3, |i, j| c(i as f64 + 0.1, j as f64 - 0.2));
        let b = ComplexMatrix::from_fn(3, |i, j| c(j as f64 * 0.4, i as f64 * 0.3));
        let direct = (&a * &b).trace();
        let lazy = a.trace_product(&b);
        assert!((direct - lazy).norm() < 1e-12);
    }
}
