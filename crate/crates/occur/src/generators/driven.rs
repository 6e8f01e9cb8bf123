//! Driven-system dissipators in the instantaneous-eigenstate basis.
//!
//! The mode basis {|phi_x(t)>} is built from instantaneous eigenstates
//! of H_S(t), tracked sample-to-sample on the drive grid: modes are
//! matched by maximal overlap and phase-fixed so consecutive overlaps
//! are real positive (discrete parallel transport). Accumulated phases
//! int_0^t e_x dt' are trapezoid sums on the same grid. This basis is
//! exact only in the adiabatic limit.
//!
//! The secular form at time t uses jump operators L_ab = P(a) A P(b)
//! between instantaneous eigenprojectors with rates evaluated at the
//! instantaneous gaps, plus the diagonal channel L_0 = sum_a P(a) A P(a)
//! at zero frequency. The nonsecular form is the Redfield-type
//! interaction-picture expression built from mode propagators
//! U(x) = |phi_x(t)><phi_x(0)| and accumulated phase factors, rotated
//! back to the Schroedinger picture with the adiabatic propagator
//! U_S(t) = sum_x exp(-i phase_x(t)) U(x).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{commutator, jacobi_eigh, ComplexMatrix};
use crate::model::{default_freq_tol, BathSpectrum, DriveSchedule, SystemSpec};

use super::{single_coupling, DissipatorOutput};

const MIN_TRACKING_OVERLAP_SQ: f64 = 0.5;

fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Instantaneous modes, energies and accumulated phases at one time.
pub struct ModeFrame {
    pub energies: Vec<f64>,
    pub modes: Vec<Vec<C64>>,
    pub phases: Vec<f64>,
}

/// Parallel-transported instantaneous eigenbasis on the drive grid.
pub struct ModeTable {
    times: Vec<f64>,
    energies: Vec<Vec<f64>>,
    modes: Vec<Vec<Vec<C64>>>,
    phases: Vec<Vec<f64>>,
    dim: usize,
    gap_tol: f64,
}

impl ModeTable {
    pub fn build(base: &ComplexMatrix, schedule: &DriveSchedule) -> Result<Self> {
        let dim = base.dim();
        let gap_tol = default_freq_tol(base);
        let n_steps = (schedule.t_final / schedule.dt_sample).ceil() as usize;
        let n_samples = n_steps.max(1) + 1;

        let mut times = Vec::with_capacity(n_samples);
        let mut energies: Vec<Vec<f64>> = Vec::with_capacity(n_samples);
        let mut modes: Vec<Vec<Vec<C64>>> = Vec::with_capacity(n_samples);
        let mut phases: Vec<Vec<f64>> = Vec::with_capacity(n_samples);

        for i in 0..n_samples {
            let t = (i as f64 * schedule.dt_sample).min(schedule.t_final);
            let h_t = schedule.hamiltonian_at(base, t)?;
            let (vals, vecs) = nondegenerate_eigh(&h_t, gap_tol, t)?;
            if i == 0 {
                phases.push(vec![0.0; dim]);
                times.push(t);
                energies.push(vals);
                modes.push(vecs);
            } else {
                let (vals, vecs) = match_modes(&modes[i - 1], vals, vecs)?;
                let dt = t - times[i - 1];
                let prev_phases = &phases[i - 1];
                let prev_energy = &energies[i - 1];
                let new_phases: Vec<f64> = (0..dim)
                    .map(|x| prev_phases[x] + 0.5 * dt * (prev_energy[x] + vals[x]))
                    .collect();
                phases.push(new_phases);
                times.push(t);
                energies.push(vals);
                modes.push(vecs);
            }
        }

        Ok(Self {
            times,
            energies,
            modes,
            phases,
            dim,
            gap_tol,
        })
    }

    pub fn initial_modes(&self) -> &[Vec<C64>] {
        &self.modes[0]
    }

    /// Fresh eigenbasis of H_S(t), ordered and phase-aligned against the
    /// nearest grid sample at or before t, with interpolated phases.
    pub fn frame_at(&self, h_t: &ComplexMatrix, t: f64) -> Result<ModeFrame> {
        let (vals, vecs) = nondegenerate_eigh(h_t, self.gap_tol, t)?;
        let idx = self
            .times
            .partition_point(|&x| x <= t)
            .saturating_sub(1)
            .min(self.times.len() - 1);
        let (vals, vecs) = match_modes(&self.modes[idx], vals, vecs)?;
        let dt = t - self.times[idx];
        let phases: Vec<f64> = (0..self.dim)
            .map(|x| self.phases[idx][x] + 0.5 * dt * (self.energies[idx][x] + vals[x]))
            .collect();
        Ok(ModeFrame {
            energies: vals,
            modes: vecs,
            phases,
        })
    }
}

fn nondegenerate_eigh(
    h: &ComplexMatrix,
    gap_tol: f64,
    t: f64,
) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let (vals, vecs) = jacobi_eigh(h)?;
    for pair in vals.windows(2) {
        if pair[1] - pair[0] <= gap_tol {
            return Err(Error::Degenerate(format!(
                "instantaneous spectrum at t = {t} has gap {:.3e} below tolerance {:.3e}",
                pair[1] - pair[0],
                gap_tol
            )));
        }
    }
    Ok((vals, vecs))
}

/// Reorder and phase-fix fresh eigenvectors against a reference basis:
/// each reference mode claims the fresh vector with the largest overlap,
/// which is then rotated so the overlap is real positive.
fn match_modes(
    reference: &[Vec<C64>],
    vals: Vec<f64>,
    vecs: Vec<Vec<C64>>,
) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let dim = reference.len();
    let mut used = vec![false; dim];
    let mut out_vals = vec![0.0; dim];
    let mut out_vecs: Vec<Vec<C64>> = vec![Vec::new(); dim];
    for (x, ref_vec) in reference.iter().enumerate() {
        let mut best = None;
        let mut best_sq = -1.0;
        for (j, cand) in vecs.iter().enumerate() {
            if used[j] {
                continue;
            }
            let sq = inner(ref_vec, cand).norm_sqr();
            if sq > best_sq {
                best_sq = sq;
                best = Some(j);
            }
        }
        let j = best.expect("candidate list exhausted");
        if best_sq < MIN_TRACKING_OVERLAP_SQ {
            return Err(Error::Numeric(format!(
                "mode tracking lost: best overlap^2 = {best_sq:.3} for mode {x}; \
                 reduce the drive sample spacing"
            )));
        }
        used[j] = true;
        let ov = inner(ref_vec, &vecs[j]);
        let phase = C64::from_polar(1.0, -ov.arg());
        out_vals[x] = vals[j];
        out_vecs[x] = vecs[j].iter().map(|&c| c * phase).collect();
    }
    Ok((out_vals, out_vecs))
}

/// Driven weak-coupling generator, secular or nonsecular, in the
/// instantaneous-eigenstate basis.
pub struct DrivenGenerator {
    base_h: ComplexMatrix,
    schedule: DriveSchedule,
    table: ModeTable,
    coupling: ComplexMatrix,
    bath: BathSpectrum,
    secular: bool,
    dim: usize,
}

impl DrivenGenerator {
    pub fn new(
        sys: &SystemSpec,
        schedule: &DriveSchedule,
        bath: &BathSpectrum,
        secular: bool,
        allow_large: bool,
    ) -> Result<Self> {
        let coupling = single_coupling(sys, "driven generator")?.clone();
        if sys.dim_s > 2 && !allow_large {
            return Err(Error::validation(
                "generator",
                format!(
                    "driven generators are limited to two-level systems by default \
                     (got dim {}); set allow_large_driven to override",
                    sys.dim_s
                ),
            ));
        }
        schedule.validate(sys.dim_s)?;
        let table = ModeTable::build(&sys.h_s, schedule)?;
        Ok(Self {
            base_h: sys.h_s.clone(),
            schedule: schedule.clone(),
            table,
            coupling,
            bath: bath.clone(),
            secular,
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
        let h_t = self.schedule.hamiltonian_at(&self.base_h, t)?;
        let frame = self.table.frame_at(&h_t, t)?;
        let d = if self.secular {
            self.apply_secular(&frame, rho)?
        } else {
            self.apply_nonsecular(&frame, rho)?
        };
        Ok(DissipatorOutput { d, t })
    }

    fn apply_secular(&self, frame: &ModeFrame, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim;
        // coupling matrix elements in the instantaneous basis
        let elem = coupling_elements(&self.coupling, &frame.modes);

        // diagonal channel at zero frequency
        let mut l0 = ComplexMatrix::zeros(n);
        for a in 0..n {
            l0.add_assign(&ComplexMatrix::outer(&frame.modes[a], &frame.modes[a]).scale(elem[a][a]));
        }
        let l0_dag = l0.adjoint();
        let mut d = super::lindblad_term(&l0, &l0_dag, rho, self.bath.gamma(0.0));

        let mut h_ls = ComplexMatrix::zeros(n);
        let s0 = self.bath.lamb_shift_s(0.0)?;
        if s0 != 0.0 {
            for a in 0..n {
                let l_aa = ComplexMatrix::outer(&frame.modes[a], &frame.modes[a]).scale(elem[a][a]);
                h_ls.add_assign(&(&l_aa.adjoint() * &l_aa).scale_re(s0));
            }
        }

        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                // rate at the gap bridged by L_ab = P(a) A P(b)
                let omega = frame.energies[b] - frame.energies[a];
                let l_ab = ComplexMatrix::outer(&frame.modes[a], &frame.modes[b]).scale(elem[a][b]);
                let l_dag = l_ab.adjoint();
                let rate = self.bath.gamma(omega);
                if rate != 0.0 {
                    d.add_assign(&super::lindblad_term(&l_ab, &l_dag, rho, rate));
                }
                let shift = self.bath.lamb_shift_s(omega)?;
                if shift != 0.0 {
                    h_ls.add_assign(&(&l_dag * &l_ab).scale_re(shift));
                }
            }
        }

        if h_ls.max_abs() > 0.0 {
            d.add_assign(&commutator(&h_ls, rho)?.scale(C64::new(0.0, -1.0)));
        }
        Ok(d)
    }

    fn apply_nonsecular(&self, frame: &ModeFrame, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim;
        let modes0 = self.table.initial_modes();

        // adiabatic propagator U_S = sum_x exp(-i phase_x) |phi_x(t)><phi_x(0)|
        let mut u_s = ComplexMatrix::zeros(n);
        for x in 0..n {
            let phase = C64::from_polar(1.0, -frame.phases[x]);
            u_s.add_assign(&ComplexMatrix::outer(&frame.modes[x], &modes0[x]).scale(phase));
        }
        let u_dag = u_s.adjoint();

        let rho_i = &(&u_dag * rho) * &u_s;
        // interaction-picture coupling; telescopes over the mode sum
        let a_i = &(&u_dag * &self.coupling) * &u_s;

        let elem = coupling_elements(&self.coupling, &frame.modes);

        let mut x_i = ComplexMatrix::zeros(n);
        for a in 0..n {
            for ap in 0..n {
                let amp = elem[a][ap];
                if amp.norm() == 0.0 {
                    continue;
                }
                let omega = frame.energies[ap] - frame.energies[a];
                let big_gamma = self.bath.big_gamma(omega)?;
                if big_gamma.norm() == 0.0 {
                    continue;
                }
                let phase = C64::from_polar(1.0, -(frame.phases[ap] - frame.phases[a]));
                // W = U(a)' A U(a') on the t = 0 mode dyad
                let w = ComplexMatrix::outer(&modes0[a], &modes0[ap]).scale(amp);
                let w_rho = &w * &rho_i;
                let term = &(&w_rho * &a_i) - &(&a_i * &w_rho);
                x_i.add_assign(&term.scale(big_gamma * phase));
            }
        }
        let d_i = &x_i + &x_i.adjoint();
        Ok(&(&u_s * &d_i) * &u_dag)
    }
}

/// m[a][b] = <phi_a| A |phi_b>.
fn coupling_elements(a: &ComplexMatrix, modes: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = modes.len();
    let dim = a.dim();
    let mut out = vec![vec![C64::new(0.0, 0.0); n]; n];
    for (i, bra) in modes.iter().enumerate() {
        for (j, ket) in modes.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..dim {
                let mut row = C64::new(0.0, 0.0);
                for c in 0..dim {
                    row += a.get(r, c) * ket[c];
                }
                acc += bra[r].conj() * row;
            }
            out[i][j] = acc;
        }
    }
    out
}

/// One-shot evaluation of the driven dissipator at time t.
pub fn dissipator_driven(
    sys: &SystemSpec,
    schedule: &DriveSchedule,
    bath: &BathSpectrum,
    rho: &ComplexMatrix,
    t: f64,
    secular: bool,
) -> Result<DissipatorOutput> {
    DrivenGenerator::new(sys, schedule, bath, secular, false)?.apply(rho, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{
        dissipative_current_rhs, dissipator_redfield, dissipator_secular_weak,
    };
    use crate::model::{build_eigenoperators, DriveProtocol, LambShiftMode, ObservableSpec};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sx() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    fn sz() -> ComplexMatrix {
        ComplexMatrix::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)])
    }

    fn random_density(dim: usize, seed: u64) -> ComplexMatrix {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(7);
        let mut next = move || {
            state = state.wrapping_mul(0x5851F42D4C957F2D).wrapping_add(0x14057B7EF767814F);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let x = ComplexMatrix::from_fn(dim, |_, _| c(next(), next())).hermitize();
        let sq = &x * &x;
        let tr = sq.trace().re;
        sq.scale_re(1.0 / tr)
    }

    fn bath(temperature: f64) -> BathSpectrum {
        BathSpectrum::new(temperature, 0.05, 10.0, LambShiftMode::Zero).unwrap()
    }

    #[test]
    fn undriven_secular_limit_matches_static_generator() {
        let h = &sz().scale_re(0.5) + &sx().scale_re(0.2);
        let a = &sx() + &sz().scale_re(0.3);
        let sys = SystemSpec::new(h.clone(), vec![a.clone()]).unwrap();
        let schedule = DriveSchedule::constant(10.0);
        let b = bath(0.4);
        let eig = build_eigenoperators(&h, &a, 1e-9).unwrap();
        let gen = DrivenGenerator::new(&sys, &schedule, &b, true, false).unwrap();
        for seed in 0..20 {
            let rho = random_density(2, 100 + seed);
            let t = 10.0 * (seed as f64 / 20.0);
            let driven = gen.apply(&rho, t).unwrap();
            let static_out = dissipator_secular_weak(&sys, &eig, &b, &rho).unwrap();
            assert!(driven.d.max_abs_diff(&static_out.d) < 1e-10);
        }
    }

    #[test]
    fn undriven_nonsecular_limit_matches_redfield() {
        let h = &sz().scale_re(0.5) + &sx().scale_re(0.2);
        let a = &sx() + &sz().scale_re(0.3);
        let sys = SystemSpec::new(h.clone(), vec![a.clone()]).unwrap();
        let schedule = DriveSchedule::constant(10.0);
        let b = bath(0.4);
        let eig = build_eigenoperators(&h, &a, 1e-9).unwrap();
        let gen = DrivenGenerator::new(&sys, &schedule, &b, false, false).unwrap();
        for seed in 0..20 {
            let rho = random_density(2, 300 + seed);
            let t = 10.0 * (seed as f64 / 20.0);
            let driven = gen.apply(&rho, t).unwrap();
            let red = dissipator_redfield(&sys, &eig, &b, &rho).unwrap();
            assert!(driven.d.max_abs_diff(&red.d) < 1e-10);
        }
    }

    #[test]
    fn nonsecular_commuting_observable_current_vanishes_under_sweep() {
        let a = &sx() + &sz().scale_re(0.3);
        let sys = SystemSpec::new(sz().scale_re(0.5), vec![a.clone()]).unwrap();
        let schedule = DriveSchedule {
            protocol: DriveProtocol::LinearSweep {
                h_drive: sx().scale_re(0.15),
                t_ramp: 20.0,
            },
            dt_sample: 0.02,
            t_final: 20.0,
        };
        let b = bath(0.4);
        let gen = DrivenGenerator::new(&sys, &schedule, &b, false, false).unwrap();
        let g = ObservableSpec::time_independent("g", a).unwrap();
        for seed in 0..10 {
            let rho = random_density(2, 500 + seed);
            let t = 2.0 * seed as f64;
            let out = gen.apply(&rho, t).unwrap();
            let current = dissipative_current_rhs(&out, &g).unwrap();
            assert!(current.abs() < 1e-6, "current {current} at t={t}");
        }
    }

    #[test]
    fn secular_current_vanishes_when_observable_diagonal_in_modes() {
        // amplitude-only drive keeps the eigenbasis fixed; with A = G
        // diagonal in that basis, [G, P(a)] = 0 at all times
        let h0 = sz().scale_re(0.5);
        let sys = SystemSpec::new(h0.clone(), vec![h0.clone()]).unwrap();
        let schedule = DriveSchedule {
            protocol: DriveProtocol::LinearSweep {
                h_drive: sz().scale_re(0.25),
                t_ramp: 10.0,
            },
            dt_sample: 0.1,
            t_final: 10.0,
        };
        let b = bath(0.7);
        let gen = DrivenGenerator::new(&sys, &schedule, &b, true, false).unwrap();
        let g = ObservableSpec::time_independent("g", h0).unwrap();
        for seed in 0..10 {
            let rho = random_density(2, 700 + seed);
            let out = gen.apply(&rho, seed as f64).unwrap();
            assert!(dissipative_current_rhs(&out, &g).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_spectrum_rejected() {
        let sys = SystemSpec::new(ComplexMatrix::identity(2), vec![sx()]).unwrap();
        let schedule = DriveSchedule::constant(1.0);
        let b = bath(0.4);
        let err = DrivenGenerator::new(&sys, &schedule, &b, true, false);
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    #[test]
    fn large_dim_gated() {
        let h = ComplexMatrix::diagonal(&[c(0.0, 0.0), c(1.0, 0.0), c(2.5, 0.0)]);
        let a = ComplexMatrix::from_fn(3, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let sys = SystemSpec::new(h, vec![a]).unwrap();
        let schedule = DriveSchedule::constant(1.0);
        let b = bath(0.4);
        assert!(DrivenGenerator::new(&sys, &schedule, &b, true, false).is_err());
        assert!(DrivenGenerator::new(&sys, &schedule, &b, true, true).is_ok());
    }

    #[test]
    fn driven_outputs_traceless_hermitian() {
        let a = &sx() + &sz().scale_re(0.3);
        let sys = SystemSpec::new(sz().scale_re(0.5), vec![a]).unwrap();
        let schedule = DriveSchedule {
            protocol: DriveProtocol::LinearSweep {
                h_drive: sx().scale_re(0.2),
                t_ramp: 5.0,
            },
            dt_sample: 0.05,
            t_final: 5.0,
        };
        let b = bath(0.6);
        for secular in [true, false] {
            let gen = DrivenGenerator::new(&sys, &schedule, &b, secular, false).unwrap();
            for seed in 0..10 {
                let rho = random_density(2, 900 + seed);
                let out = gen.apply(&rho, 0.5 * seed as f64).unwrap();
                assert!(out.d.trace().norm() < 1e-11);
                assert!(out.d.hermiticity_defect() < 1e-11);
            }
        }
    }
}
