//! Bath spectral functions: Ohmic rate function with exponential cutoff
//! and thermal occupation, optional dispersive shift S(w), and the
//! half-range transform Gamma(w) = gamma(w)/2 + i S(w).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// How the dispersive (Lamb-shift) function S(w) is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum LambShiftMode {
    /// S(w) = 0 everywhere.
    Zero,
    /// Linear interpolation of tabulated (w, S) pairs; querying outside
    /// the table range is an error.
    Table(Vec<(f64, f64)>),
    /// Principal-value quadrature of gamma over a symmetric window
    /// around the pole.
    PvQuadrature,
}

/// Thermal Ohmic bath with exponential cutoff.
///
/// gamma(w) = 2 pi eta w exp(-w/w_c) (n(w)+1) for w > 0, the detailed
/// balance partner for w < 0, and the w -> 0 limit 2 pi eta T at w = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct BathSpectrum {
    pub temperature: f64,
    pub coupling_strength: f64,
    pub cutoff: f64,
    pub lamb_shift: LambShiftMode,
}

impl BathSpectrum {
    pub fn new(
        temperature: f64,
        coupling_strength: f64,
        cutoff: f64,
        lamb_shift: LambShiftMode,
    ) -> Result<Self> {
        if temperature < 0.0 || !temperature.is_finite() {
            return Err(Error::validation("bath.temperature", "must be >= 0 and finite"));
        }
        if coupling_strength <= 0.0 || !coupling_strength.is_finite() {
            return Err(Error::validation("bath.eta", "must be > 0 and finite"));
        }
        if cutoff <= 0.0 || !cutoff.is_finite() {
            return Err(Error::validation("bath.omega_c", "must be > 0 and finite"));
        }
        if let LambShiftMode::Table(table) = &lamb_shift {
            if table.is_empty() {
                return Err(Error::validation("bath.S_table", "table must not be empty"));
            }
            for pair in table.windows(2) {
                if pair[1].0 <= pair[0].0 {
                    return Err(Error::validation(
                        "bath.S_table",
                        "frequencies must be strictly increasing",
                    ));
                }
            }
        }
        Ok(Self {
            temperature,
            coupling_strength,
            cutoff,
            lamb_shift,
        })
    }

    /// Bose-Einstein occupation; zero at T = 0.
    fn occupation(&self, omega: f64) -> f64 {
        if self.temperature == 0.0 {
            return 0.0;
        }
        let x = omega / self.temperature;
        1.0 / x.exp_m1()
    }

    /// Rate function gamma(w) >= 0, satisfying KMS detailed balance
    /// gamma(-w) = exp(-w/T) gamma(w).
    pub fn gamma(&self, omega: f64) -> f64 {
        let two_pi_eta = 2.0 * std::f64::consts::PI * self.coupling_strength;
        if omega == 0.0 {
            return two_pi_eta * self.temperature;
        }
        let mag = omega.abs();
        let ohmic = two_pi_eta * mag * (-mag / self.cutoff).exp();
        if omega > 0.0 {
            ohmic * (self.occupation(mag) + 1.0)
        } else {
            ohmic * self.occupation(mag)
        }
    }

    /// Dispersive shift S(w) in the selected evaluation mode.
    pub fn lamb_shift_s(&self, omega: f64) -> Result<f64> {
        match &self.lamb_shift {
            LambShiftMode::Zero => Ok(0.0),
            LambShiftMode::Table(table) => {
                let lo = table.first().unwrap().0;
                let hi = table.last().unwrap().0;
                if omega < lo || omega > hi {
                    return Err(Error::Range(format!(
                        "S table covers [{lo}, {hi}], requested w = {omega}"
                    )));
                }
                let idx = table.partition_point(|&(w, _)| w <= omega);
                if idx == 0 {
                    return Ok(table[0].1);
                }
                if idx == table.len() {
                    return Ok(table[table.len() - 1].1);
                }
                let (w0, s0) = table[idx - 1];
                let (w1, s1) = table[idx];
                let frac = (omega - w0) / (w1 - w0);
                Ok(s0 + frac * (s1 - s0))
            }
            LambShiftMode::PvQuadrature => {
                let w_c = self.cutoff;
                let half_width = 20.0 * w_c;
                let hole = 1e-4 * w_c;
                let step = 1e-3 * w_c;
                Ok(pv_integral(|w| self.gamma(w), omega, half_width, hole, step)
                    / (2.0 * std::f64::consts::PI))
            }
        }
    }

    /// Gamma(w) = gamma(w)/2 + i S(w).
    pub fn big_gamma(&self, omega: f64) -> Result<C64> {
        Ok(C64::new(0.5 * self.gamma(omega), self.lamb_shift_s(omega)?))
    }
}

/// PV integral of f(w')/(w - w') over [w - half_width, w + half_width],
/// excluding a symmetric hole of the given half-width around the pole.
/// Points at w +- u are paired so the singular parts cancel:
/// the integrand in u is (f(w-u) - f(w+u))/u, integrated by trapezoid.
pub fn pv_integral(
    f: impl Fn(f64) -> f64,
    omega: f64,
    half_width: f64,
    hole: f64,
    step: f64,
) -> f64 {
    let paired = |u: f64| (f(omega - u) - f(omega + u)) / u;
    let mut acc = 0.0;
    let mut u = hole;
    let mut prev = paired(u);
    while u < half_width {
        let next_u = (u + step).min(half_width);
        let next = paired(next_u);
        acc += 0.5 * (prev + next) * (next_u - u);
        u = next_u;
        prev = next;
    }
    acc
}
