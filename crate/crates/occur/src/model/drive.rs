//! Time-dependent system Hamiltonians: drive protocols and sampling.

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

#[derive(Clone, Debug, PartialEq)]
pub enum DriveProtocol {
    /// Constant H_S.
    None,
    /// H_S(t) = H_S + min(t/t_ramp, 1) * h_drive.
    LinearSweep { h_drive: ComplexMatrix, t_ramp: f64 },
    /// Absolute H_S(t) samples at the given times, linearly interpolated.
    /// Times must be ascending and cover the full propagation window.
    UserSamples {
        times: Vec<f64>,
        matrices: Vec<ComplexMatrix>,
    },
}

/// Drive schedule over [0, t_final]. `dt_sample` sets the grid used for
/// mode tracking and accumulated-phase integration in the driven
/// generators.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveSchedule {
    pub protocol: DriveProtocol,
    pub dt_sample: f64,
    pub t_final: f64,
}

impl DriveSchedule {
    pub fn constant(t_final: f64) -> Self {
        Self {
            protocol: DriveProtocol::None,
            dt_sample: t_final.max(1e-12),
            t_final,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.dt_sample <= 0.0 || self.t_final <= 0.0 {
            return Err(Error::validation(
                "drive",
                "dt_sample and t_final must be positive",
            ));
        }
        match &self.protocol {
            DriveProtocol::None => Ok(()),
            DriveProtocol::LinearSweep { h_drive, t_ramp } => {
                if h_drive.dim() != dim {
                    return Err(Error::validation(
                        "drive.parameters.h_drive",
                        format!("dimension {} does not match system {}", h_drive.dim(), dim),
                    ));
                }
                if !h_drive.is_hermitian(crate::linalg::HERMITICITY_TOL) {
                    return Err(Error::validation("drive.parameters.h_drive", "not Hermitian"));
                }
                if *t_ramp <= 0.0 {
                    return Err(Error::validation("drive.parameters.t_ramp", "must be positive"));
                }
                Ok(())
            }
            DriveProtocol::UserSamples { times, matrices } => {
                if times.len() != matrices.len() || times.len() < 2 {
                    return Err(Error::validation(
                        "drive.t_samples",
                        "need at least two (time, matrix) samples of equal count",
                    ));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::validation("drive.t_samples", "times must be ascending"));
                }
                if times[0] > 0.0 || *times.last().unwrap() < self.t_final {
                    return Err(Error::validation(
                        "drive.t_samples",
                        "samples must cover [0, t_final]",
                    ));
                }
                for (k, m) in matrices.iter().enumerate() {
                    if m.dim() != dim {
                        return Err(Error::validation(
                            format!("drive.t_samples[{k}]"),
                            "dimension mismatch",
                        ));
                    }
                    if !m.is_hermitian(crate::linalg::HERMITICITY_TOL) {
                        return Err(Error::validation(
                            format!("drive.t_samples[{k}]"),
                            "not Hermitian",
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// Instantaneous H_S(t). `base` is the static system Hamiltonian.
    pub fn hamiltonian_at(&self, base: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
        let slack = 1e-9 * self.t_final.max(1.0);
        if t < -slack || t > self.t_final + slack {
            return Err(Error::Range(format!(
                "drive sample requested at t = {t}, schedule covers [0, {}]",
                self.t_final
            )));
        }
        let t = t.clamp(0.0, self.t_final);
        match &self.protocol {
            DriveProtocol::None => Ok(base.clone()),
            DriveProtocol::LinearSweep { h_drive, t_ramp } => {
                let s = (t / t_ramp).min(1.0);
                Ok(base + &h_drive.scale_re(s))
            }
            DriveProtocol::UserSamples { times, matrices } => {
                let idx = times.partition_point(|&x| x <= t);
                if idx == 0 {
                    return Ok(matrices[0].clone());
                }
                if idx == times.len() {
                    return Ok(matrices[times.len() - 1].clone());
                }
                let (t0, t1) = (times[idx - 1], times[idx]);
                let frac = (t - t0) / (t1 - t0);
                Ok(&matrices[idx - 1].scale_re(1.0 - frac) + &matrices[idx].scale_re(frac))
            }
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self.protocol, DriveProtocol::None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    fn sx() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, |i, j| {
            if i != j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    fn sz() -> ComplexMatrix {
        ComplexMatrix::diagonal(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)])
    }

    #[test]
    fn linear_sweep_endpoints() {
        let sched = DriveSchedule {
            protocol: DriveProtocol::LinearSweep {
                h_drive: sx(),
                t_ramp: 10.0,
            },
            dt_sample: 0.1,
            t_final: 10.0,
        };
        sched.validate(2).unwrap();
        let base = sz();
        assert!(sched.hamiltonian_at(&base, 0.0).unwrap().max_abs_diff(&base) < 1e-15);
        let end = sched.hamiltonian_at(&base, 10.0).unwrap();
        assert!(end.max_abs_diff(&(&base + &sx())) < 1e-15);
    }

    #[test]
    fn out_of_range_is_error() {
        let sched = DriveSchedule::constant(5.0);
        assert!(sched.hamiltonian_at(&sz(), 6.0).is_err());
        assert!(sched.hamiltonian_at(&sz(), -1.0).is_err());
    }

    #[test]
    fn user_samples_interpolate() {
        let sched = DriveSchedule {
            protocol: DriveProtocol::UserSamples {
                times: vec![0.0, 2.0],
                matrices: vec![sz(), sx()],
            },
            dt_sample: 0.5,
            t_final: 2.0,
        };
        sched.validate(2).unwrap();
        let mid = sched.hamiltonian_at(&sz(), 1.0).unwrap();
        let expected = &sz().scale_re(0.5) + &sx().scale_re(0.5);
        assert!(mid.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn user_samples_must_cover_window() {
        let sched = DriveSchedule {
            protocol: DriveProtocol::UserSamples {
                times: vec![0.0, 1.0],
                matrices: vec![sz(), sx()],
            },
            dt_sample: 0.5,
            t_final: 2.0,
        };
        assert!(sched.validate(2).is_err());
    }
}
