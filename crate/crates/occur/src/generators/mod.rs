//! Master-equation generators (generalised dissipators).
//!
//! Each generator maps a reduced state to the non-unitary part D of
//! d rho_S/dt = -i [H_S, rho_S] + D. Any interaction-induced unitary
//! contribution (Lamb-shift commutator) is folded into D rather than
//! into the Hamiltonian, so D alone carries everything the environment
//! does to the system.
//!
//! Four microscopic derivations are covered:
//!
//! - singular coupling: first standard form with a Hermitian rate
//!   matrix over the coupling operators, no secular approximation;
//! - secular weak coupling: Lindblad form over Bohr-frequency
//!   eigenoperators A(w) with rates gamma(w);
//! - nonsecular Redfield, evaluated in the Schroedinger picture as
//!   D = sum_w Gamma(w) (A(w) rho A - A A(w) rho) + h.c., the exact
//!   picture rotation of the interaction-picture form (phases cancel
//!   against the eigenoperator rotation);
//! - driven secular / nonsecular in the instantaneous-eigenstate basis
//!   of H_S(t) (see [`driven`]).

mod driven;

pub use driven::{dissipator_driven, DrivenGenerator, ModeTable};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{commutator, jacobi_eigh, ComplexMatrix, HERMITICITY_TOL};
use crate::model::{
    build_eigenoperators, default_freq_tol, BathSpectrum, DriveSchedule, EigenoperatorSet,
    ObservableSpec, SystemSpec,
};

/// Hermitian rate matrix {gamma_ab} and Lamb-shift matrix {S_ab} for the
/// singular-coupling generator, indexed like the coupling list.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMatrix {
    pub gamma: ComplexMatrix,
    pub lamb: ComplexMatrix,
}

impl RateMatrix {
    pub fn new(gamma: ComplexMatrix, lamb: ComplexMatrix) -> Result<Self> {
        if gamma.dim() != lamb.dim() {
            return Err(Error::Shape(
                "rate and Lamb-shift matrices must have equal dimensions".into(),
            ));
        }
        if !gamma.is_hermitian(HERMITICITY_TOL) {
            return Err(Error::validation("generator.rates.gamma", "not Hermitian"));
        }
        if !lamb.is_hermitian(HERMITICITY_TOL) {
            return Err(Error::validation("generator.rates.s", "not Hermitian"));
        }
        let (values, _) = jacobi_eigh(&gamma)?;
        if let Some(&min) = values.first() {
            if min < -1e-10 {
                return Err(Error::validation(
                    "generator.rates.gamma",
                    format!("not positive semidefinite: min eigenvalue {min:.3e}"),
                ));
            }
        }
        Ok(Self { gamma, lamb })
    }

    /// Scalar rates for a single coupling operator.
    pub fn scalar(gamma: f64, lamb: f64) -> Result<Self> {
        Self::new(
            ComplexMatrix::diagonal(&[C64::new(gamma, 0.0)]),
            ComplexMatrix::diagonal(&[C64::new(lamb, 0.0)]),
        )
    }
}

/// Which master-equation generator a scenario uses, with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorKind {
    SingularCoupling { rates: RateMatrix },
    SecularWeak { bath: BathSpectrum },
    RedfieldNonsecular { bath: BathSpectrum },
    DrivenSecular { bath: BathSpectrum },
    DrivenNonsecular { bath: BathSpectrum },
}

impl GeneratorKind {
    pub fn is_driven(&self) -> bool {
        matches!(
            self,
            GeneratorKind::DrivenSecular { .. } | GeneratorKind::DrivenNonsecular { .. }
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::SingularCoupling { .. } => "singular_coupling",
            GeneratorKind::SecularWeak { .. } => "secular_weak",
            GeneratorKind::RedfieldNonsecular { .. } => "redfield_nonsecular",
            GeneratorKind::DrivenSecular { .. } => "driven_secular",
            GeneratorKind::DrivenNonsecular { .. } => "driven_nonsecular",
        }
    }
}

/// The generalised dissipator applied to one state at one time.
#[derive(Clone, Debug)]
pub struct DissipatorOutput {
    pub d: ComplexMatrix,
    pub t: f64,
}

/// gamma (L rho Ldag - {Ldag L, rho}/2), the expanded form of
/// (gamma/2)([L, rho Ldag] + [L rho, Ldag]).
fn lindblad_term(l: &ComplexMatrix, l_dag: &ComplexMatrix, rho: &ComplexMatrix, rate: f64) -> ComplexMatrix {
    let ldl = l_dag * l;
    let sandwich = &(l * rho) * l_dag;
    let anti = &(&ldl * rho) + &(rho * &ldl);
    (&sandwich - &anti.scale_re(0.5)).scale_re(rate)
}

// ---------------------------------------------------------------------
// Singular coupling
// ---------------------------------------------------------------------

/// Precomputed singular-coupling generator: first standard form
/// D = -i[H_LS, rho] + sum_ab gamma_ab (A_b rho A_a - {A_a A_b, rho}/2),
/// H_LS = sum_ab S_ab A_a A_b.
#[derive(Clone, Debug)]
pub struct SingularGenerator {
    couplings: Vec<ComplexMatrix>,
    gamma: ComplexMatrix,
    h_ls: ComplexMatrix,
    dim: usize,
}

impl SingularGenerator {
    pub fn new(sys: &SystemSpec, rates: &RateMatrix) -> Result<Self> {
        let n = sys.couplings.len();
        if rates.gamma.dim() != n {
            return Err(Error::Shape(format!(
                "rate matrix is {}x{} but there are {} couplings",
                rates.gamma.dim(),
                rates.gamma.dim(),
                n
            )));
        }
        if n == 0 {
            return Err(Error::validation(
                "system.couplings",
                "singular-coupling generator needs at least one coupling",
            ));
        }
        let mut h_ls = ComplexMatrix::zeros(sys.dim_s);
        for a in 0..n {
            for b in 0..n {
                let s_ab = rates.lamb.get(a, b);
                if s_ab.norm() == 0.0 {
                    continue;
                }
                h_ls.add_assign(&(&sys.couplings[a] * &sys.couplings[b]).scale(s_ab));
            }
        }
        Ok(Self {
            couplings: sys.couplings.clone(),
            gamma: rates.gamma.clone(),
            h_ls,
            dim: sys.dim_s,
        })
    }

    pub fn apply(&self, rho: &ComplexMatrix, t: f64) -> Result<DissipatorOutput> {
        if rho.dim() != self.dim {
            return Err(Error::Shape(format!(
                "state dim {} does not match system dim {}",
                rho.dim(),
                self.dim
            )));
        }
        let minus_i = C64::new(0.0, -1.0);
        let mut d = commutator(&self.h_ls, rho)?.scale(minus_i);
        let n = self.couplings.len();
        for a in 0..n {
            for b in 0..n {
                let g_ab = self.gamma.get(a, b);
                if g_ab.norm() == 0.0 {
                    continue;
                }
                let op_a = &self.couplings[a];
                let op_b = &self.couplings[b];
                let sandwich = &(op_b * rho) * op_a;
                let prod = op_a * op_b;
                let anti = &(&prod * rho) + &(rho * &prod);
                d.add_assign(&(&sandwich - &anti.scale_re(0.5)).scale(g_ab));
            }
        }
        Ok(DissipatorOutput { d, t })
    }
}

/// One-shot evaluation of the singular-coupling dissipator.
pub fn dissipator_singular(
    sys: &SystemSpec,
    rates: &RateMatrix,
    rho: &ComplexMatrix,
) -> Result<DissipatorOutput> {
    SingularGenerator::new(sys, rates)?.apply(rho, 0.0)
}

// ---------------------------------------------------------------------
// Secular weak coupling
// ---------------------------------------------------------------------

struct SecularTerm {
    op: ComplexMatrix,
    op_dag: ComplexMatrix,
    rate: f64,
}

/// Precomputed secular weak-coupling generator:
/// D = -i[H_LS, rho] + sum_w gamma(w)(A(w) rho A(w)' - {A(w)'A(w), rho}/2),
/// H_LS = sum_w S(w) A(w)' A(w).
pub struct SecularWeakGenerator {
    terms: Vec<SecularTerm>,
    h_ls: ComplexMatrix,
    dim: usize,
}

impl SecularWeakGenerator {
    pub fn new(sys: &SystemSpec, eig: &EigenoperatorSet, bath: &BathSpectrum) -> Result<Self> {
        if eig.source_coupling.dim() != sys.dim_s {
            return Err(Error::Shape(
                "eigenoperator set does not match the system dimension".into(),
            ));
        }
        let mut terms = Vec::with_capacity(eig.len());
        let mut h_ls = ComplexMatrix::zeros(sys.dim_s);
        for (omega, op) in eig.iter() {
            let op_dag = op.adjoint();
            let shift = bath.lamb_shift_s(omega)?;
            if shift != 0.0 {
                h_ls.add_assign(&(&op_dag * op).scale_re(shift));
            }
            terms.push(SecularTerm {
                op: op.clone(),
                op_dag,
                rate: bath.gamma(omega),
            });
        }
        Ok(Self {
            terms,
            h_ls,
            dim: sys.dim_s,
        })
    }

    pub fn apply(&self, rho: &ComplexMatrix, t: f64) -> Result<DissipatorOutput> {
        if rho.dim() != self.dim {
            return Err(Error::Shape(format!(
                "state dim {} does not match system dim {}",
                rho.dim(),
                self.dim
            )));
        }
        let mut d = commutator(&self.h_ls, rho)?.scale(C64::new(0.0, -1.0));
        for term in &self.terms {
            if term.rate == 0.0 {
                continue;
            }
            d.add_assign(&lindblad_term(&term.op, &term.op_dag, rho, term.rate));
        }
        Ok(DissipatorOutput { d, t })
    }
}

/// One-shot evaluation of the secular weak-coupling dissipator.
pub fn dissipator_secular_weak(
    sys: &SystemSpec,
    eig: &EigenoperatorSet,
    bath: &BathSpectrum,
    rho: &ComplexMatrix,
) -> Result<DissipatorOutput> {
    SecularWeakGenerator::new(sys, eig, bath)?.apply(rho, 0.0)
}

// ---------------------------------------------------------------------
// Nonsecular Redfield
// ---------------------------------------------------------------------

struct RedfieldChannel {
    /// (A(w), Gamma(w)) pairs for one coupling operator.
    terms: Vec<(ComplexMatrix, C64)>,
    coupling: ComplexMatrix,
}

/// Precomputed Redfield generator in the Schroedinger picture:
/// D = sum_w Gamma(w)(A(w) rho A - A A(w) rho) + h.c. per coupling,
/// with A the full coupling operator and Gamma(w) = gamma(w)/2 + i S(w).
/// The imaginary part of Gamma carries the Lamb-shift contribution, so
/// no separate commutator term appears.
pub struct RedfieldGenerator {
    channels: Vec<RedfieldChannel>,
    dim: usize,
}

impl RedfieldGenerator {
    /// Single-coupling construction from a prebuilt eigenoperator set.
    pub fn new(sys: &SystemSpec, eig: &EigenoperatorSet, bath: &BathSpectrum) -> Result<Self> {
        Self::from_sets(sys, std::slice::from_ref(eig), bath)
    }

    /// Multi-coupling construction; each coupling sees the same bath
    /// spectral functions and the baths are mutually uncorrelated.
    pub fn from_sets(
        sys: &SystemSpec,
        sets: &[EigenoperatorSet],
        bath: &BathSpectrum,
    ) -> Result<Self> {
        let mut channels = Vec::with_capacity(sets.len());
        for eig in sets {
            if eig.source_coupling.dim() != sys.dim_s {
                return Err(Error::Shape(
                    "eigenoperator set does not match the system dimension".into(),
                ));
            }
            let mut terms = Vec::with_capacity(eig.len());
            for (omega, op) in eig.iter() {
                terms.push((op.clone(), bath.big_gamma(omega)?));
            }
            channels.push(RedfieldChannel {
                terms,
                coupling: eig.source_coupling.clone(),
            });
        }
        Ok(Self {
            channels,
            dim: sys.dim_s,
        })
    }

    pub fn apply(&self, rho: &ComplexMatrix, t: f64) -> Result<DissipatorOutput> {
        if rho.dim() != self.dim {
            return Err(Error::Shape(format!(
                "state dim {} does not match system dim {}",
                rho.dim(),
                self.dim
            )));
        }
        let mut d = ComplexMatrix::zeros(self.dim);
        for channel in &self.channels {
            let a_full = &channel.coupling;
            let mut x = ComplexMatrix::zeros(self.dim);
            for (op, big_gamma) in &channel.terms {
                if big_gamma.norm() == 0.0 {
                    continue;
                }
                let op_rho = op * rho;
                let term = &(&op_rho * a_full) - &(a_full * &op_rho);
                x.add_assign(&term.scale(*big_gamma));
            }
            d.add_assign(&(&x + &x.adjoint()));
        }
        Ok(DissipatorOutput { d, t })
    }
}

/// One-shot evaluation of the nonsecular Redfield dissipator.
pub fn dissipator_redfield(
    sys: &SystemSpec,
    eig: &EigenoperatorSet,
    bath: &BathSpectrum,
    rho: &ComplexMatrix,
) -> Result<DissipatorOutput> {
    RedfieldGenerator::new(sys, eig, bath)?.apply(rho, 0.0)
}

// ---------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------

/// A generator prepared for repeated evaluation along a trajectory:
/// eigenoperators, rates and Lamb shifts are computed once.
pub enum PreparedGenerator {
    Singular(SingularGenerator),
    SecularWeak(SecularWeakGenerator),
    Redfield(RedfieldGenerator),
    Driven(DrivenGenerator),
}

impl PreparedGenerator {
    /// `drive` must be supplied for the driven variants; it is ignored
    /// otherwise. `allow_large_driven` lifts the default two-level
    /// restriction on the driven generators.
    pub fn build(
        sys: &SystemSpec,
        kind: &GeneratorKind,
        drive: Option<&DriveSchedule>,
        allow_large_driven: bool,
    ) -> Result<Self> {
        match kind {
            GeneratorKind::SingularCoupling { rates } => {
                Ok(PreparedGenerator::Singular(SingularGenerator::new(sys, rates)?))
            }
            GeneratorKind::SecularWeak { bath } => {
                let coupling = single_coupling(sys, "secular_weak")?;
                let eig = build_eigenoperators(&sys.h_s, coupling, default_freq_tol(&sys.h_s))?;
                Ok(PreparedGenerator::SecularWeak(SecularWeakGenerator::new(
                    sys, &eig, bath,
                )?))
            }
            GeneratorKind::RedfieldNonsecular { bath } => {
                if sys.couplings.is_empty() {
                    return Err(Error::validation(
                        "system.couplings",
                        "redfield_nonsecular needs at least one coupling",
                    ));
                }
                let tol = default_freq_tol(&sys.h_s);
                let sets = sys
                    .couplings
                    .iter()
                    .map(|a| build_eigenoperators(&sys.h_s, a, tol))
                    .collect::<Result<Vec<_>>>()?;
                Ok(PreparedGenerator::Redfield(RedfieldGenerator::from_sets(
                    sys, &sets, bath,
                )?))
            }
            GeneratorKind::DrivenSecular { bath } | GeneratorKind::DrivenNonsecular { bath } => {
                let schedule = drive.ok_or_else(|| {
                    Error::validation("drive", "driven generators need a drive schedule")
                })?;
                let secular = matches!(kind, GeneratorKind::DrivenSecular { .. });
                Ok(PreparedGenerator::Driven(DrivenGenerator::new(
                    sys,
                    schedule,
                    bath,
                    secular,
                    allow_large_driven,
                )?))
            }
        }
    }

    pub fn apply(&self, rho: &ComplexMatrix, t: f64) -> Result<DissipatorOutput> {
        match self {
            PreparedGenerator::Singular(g) => g.apply(rho, t),
            PreparedGenerator::SecularWeak(g) => g.apply(rho, t),
            PreparedGenerator::Redfield(g) => g.apply(rho, t),
            PreparedGenerator::Driven(g) => g.apply(rho, t),
        }
    }
}

pub(crate) fn single_coupling<'a>(sys: &'a SystemSpec, what: &str) -> Result<&'a ComplexMatrix> {
    if sys.couplings.len() != 1 {
        return Err(Error::validation(
            "system.couplings",
            format!(
                "{what} accepts exactly one coupling operator, got {}",
                sys.couplings.len()
            ),
        ));
    }
    Ok(&sys.couplings[0])
}

/// Generator-side dissipative current Tr_S(D G). Real because both
/// factors are Hermitian; the imaginary residue must stay below 1e-11.
pub fn dissipative_current_rhs(d: &DissipatorOutput, g: &ObservableSpec) -> Result<f64> {
    if d.d.dim() != g.g.dim() {
        return Err(Error::Shape(format!(
            "dissipator dim {} vs observable dim {}",
            d.d.dim(),
            g.g.dim()
        )));
    }
    let v = d.d.trace_product(&g.g);
    if v.im.abs() >= 1e-11 {
        return Err(Error::Numeric(format!(
            "dissipative current has imaginary residue {:.3e}",
            v.im
        )));
    }
    Ok(v.re)
}
