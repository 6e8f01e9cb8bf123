//! Declarative scenario files and their validated in-memory model.
//!
//! Scenarios are JSON documents. Complex numbers are two-element
//! [re, im] arrays and matrices are row-major nested arrays of them.
//! Every matrix is validated on load: Hermiticity where required,
//! density-matrix conditions on initial states, dimensional consistency
//! throughout. Validation errors carry the dotted field path.

use serde::{Deserialize, Serialize};

use num_complex::Complex64 as C64;

use crate::audit::AuditThresholds;
use crate::error::{Error, Result};
use crate::generators::{GeneratorKind, PreparedGenerator, RateMatrix};
use crate::linalg::{jacobi_eigh, partial_trace_env, tensor, ComplexMatrix};
use crate::model::{
    build_eigenoperators, default_freq_tol, validate_density_matrix, BathSpectrum, DriveProtocol,
    DriveSchedule, EnvSpec, LambShiftMode, ObservableSpec, SystemSpec,
};
use crate::propagate::{default_dt, IntegratorConfig};

pub type MatrixData = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveSection>,
    pub generator: GeneratorSection,
    pub observables: Vec<ObservableSection>,
    pub initial_state: InitialStateSection,
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(rename = "dimS")]
    pub dim_s: usize,
    #[serde(rename = "H_S")]
    pub h_s: MatrixData,
    #[serde(default)]
    pub couplings: Vec<MatrixData>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    #[serde(rename = "dimE")]
    pub dim_e: usize,
    #[serde(rename = "H_E")]
    pub h_e: MatrixData,
    pub bath_ops: Vec<MatrixData>,
    #[serde(rename = "rho_E0")]
    pub rho_e0: MatrixData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub temperature: f64,
    pub eta: f64,
    pub omega_c: f64,
    pub lamb_shift_mode: String,
    #[serde(rename = "S_table", default, skip_serializing_if = "Option::is_none")]
    pub s_table: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub protocol: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<DriveParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_samples: Option<Vec<DriveSample>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_sample: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveParams {
    pub h_drive: MatrixData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ramp: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSample {
    pub t: f64,
    #[serde(rename = "H_S")]
    pub h_s: MatrixData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allow_large_driven: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    pub gamma: MatrixData,
    pub s: MatrixData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSection {
    pub name: String,
    #[serde(rename = "G")]
    pub g: MatrixData,
    #[serde(rename = "explicit_dGdt", default, skip_serializing_if = "Option::is_none")]
    pub explicit_dgdt: Option<MatrixData>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateSection {
    #[serde(rename = "rho_S0", default, skip_serializing_if = "Option::is_none")]
    pub rho_s0: Option<MatrixData>,
    #[serde(rename = "rho_full0", default, skip_serializing_if = "Option::is_none")]
    pub rho_full0: Option<MatrixData>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_final: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store_every: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pointwise_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integral_threshold: Option<f64>,
}

/// Fully validated scenario, ready for propagation and auditing.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub system: SystemSpec,
    pub environment: Option<EnvSpec>,
    pub drive: Option<DriveSchedule>,
    pub generator: GeneratorKind,
    pub allow_large_driven: bool,
    pub observables: Vec<ObservableSpec>,
    pub initial_reduced: ComplexMatrix,
    pub initial_full: Option<ComplexMatrix>,
    pub integrator: IntegratorConfig,
    pub thresholds: AuditThresholds,
}

fn parse_matrix(field: &str, data: &MatrixData, expect_dim: Option<usize>) -> Result<ComplexMatrix> {
    let dim = data.len();
    if dim == 0 {
        return Err(Error::validation(field, "matrix is empty"));
    }
    if let Some(expected) = expect_dim {
        if dim != expected {
            return Err(Error::validation(
                field,
                format!("matrix has {dim} rows, expected {expected}"),
            ));
        }
    }
    let mut entries = Vec::with_capacity(dim * dim);
    for (i, row) in data.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::validation(
                field,
                format!("row {i} has {} entries, expected {dim}", row.len()),
            ));
        }
        for &[re, im] in row {
            entries.push(C64::new(re, im));
        }
    }
    ComplexMatrix::from_data(dim, entries)
        .map_err(|e| Error::validation(field, e.to_string()))
}

fn emit_matrix(m: &ComplexMatrix) -> MatrixData {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| [m.get(i, j).re, m.get(i, j).im]).collect())
        .collect()
}

fn parse_hermitian(field: &str, data: &MatrixData, expect_dim: Option<usize>) -> Result<ComplexMatrix> {
    let m = parse_matrix(field, data, expect_dim)?;
    if !m.is_hermitian(crate::linalg::HERMITICITY_TOL) {
        return Err(Error::validation(
            field,
            format!("not Hermitian (max defect {:.3e})", m.hermiticity_defect()),
        ));
    }
    Ok(m)
}

impl Scenario {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: ScenarioFile = serde_json::from_str(&text)
            .map_err(|e| Error::validation("scenario", e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn from_file(file: &ScenarioFile) -> Result<Self> {
        // system
        let h_s = parse_hermitian("system.H_S", &file.system.h_s, Some(file.system.dim_s))?;
        let mut couplings = Vec::with_capacity(file.system.couplings.len());
        for (k, data) in file.system.couplings.iter().enumerate() {
            couplings.push(parse_hermitian(
                &format!("system.couplings[{k}]"),
                data,
                Some(file.system.dim_s),
            )?);
        }
        let system = SystemSpec::new(h_s, couplings)?;

        // environment
        let environment = match &file.environment {
            Some(section) => {
                let h_e = parse_hermitian("environment.H_E", &section.h_e, Some(section.dim_e))?;
                let mut bath_ops = Vec::with_capacity(section.bath_ops.len());
                for (k, data) in section.bath_ops.iter().enumerate() {
                    bath_ops.push(parse_hermitian(
                        &format!("environment.bath_ops[{k}]"),
                        data,
                        Some(section.dim_e),
                    )?);
                }
                if bath_ops.len() != system.couplings.len() {
                    return Err(Error::validation(
                        "environment.bath_ops",
                        format!(
                            "{} bath operators vs {} system couplings",
                            bath_ops.len(),
                            system.couplings.len()
                        ),
                    ));
                }
                let rho_e0 =
                    parse_hermitian("environment.rho_E0", &section.rho_e0, Some(section.dim_e))?;
                Some(EnvSpec::new(h_e, bath_ops, rho_e0)?)
            }
            None => None,
        };

        // bath spectral functions
        let bath = match &file.bath {
            Some(section) => {
                let mode = match section.lamb_shift_mode.as_str() {
                    "zero" => LambShiftMode::Zero,
                    "table" => {
                        let table = section.s_table.clone().ok_or_else(|| {
                            Error::validation("bath.S_table", "required in table mode")
                        })?;
                        LambShiftMode::Table(table.into_iter().map(|[w, s]| (w, s)).collect())
                    }
                    "pv_quadrature" => LambShiftMode::PvQuadrature,
                    other => {
                        return Err(Error::validation(
                            "bath.lamb_shift_mode",
                            format!("unknown mode '{other}' (zero | table | pv_quadrature)"),
                        ))
                    }
                };
                Some(BathSpectrum::new(
                    section.temperature,
                    section.eta,
                    section.omega_c,
                    mode,
                )?)
            }
            None => None,
        };

        // integrator (dt defaulted below once rates are known)
        if file.integrator.t_final <= 0.0 {
            return Err(Error::validation("integrator.t_final", "must be positive"));
        }

        // drive schedule
        let drive = match &file.drive {
            Some(section) => Some(parse_drive(section, &file.integrator, file.system.dim_s)?),
            None => None,
        };

        // generator
        let generator = parse_generator(&file.generator, &system, bath.as_ref())?;
        let allow_large_driven = file.generator.allow_large_driven.unwrap_or(false);

        // a driven generator without a drive section runs undriven
        let drive = match (&generator, drive) {
            (k, None) if k.is_driven() => Some(DriveSchedule::constant(file.integrator.t_final)),
            (_, d) => d,
        };
        if let Some(schedule) = &drive {
            schedule.validate(system.dim_s)?;
        }

        // observables
        if file.observables.is_empty() {
            return Err(Error::validation("observables", "need at least one observable"));
        }
        let mut observables = Vec::with_capacity(file.observables.len());
        for section in &file.observables {
            let g = parse_hermitian(
                &format!("observables.{}.G", section.name),
                &section.g,
                Some(file.system.dim_s),
            )?;
            let rate = section
                .explicit_dgdt
                .as_ref()
                .map(|d| {
                    parse_hermitian(
                        &format!("observables.{}.explicit_dGdt", section.name),
                        d,
                        Some(file.system.dim_s),
                    )
                })
                .transpose()?;
            observables.push(ObservableSpec::new(section.name.clone(), g, rate)?);
        }

        // initial state
        let (initial_reduced, initial_full) = parse_initial_state(
            &file.initial_state,
            &system,
            environment.as_ref(),
        )?;

        // integration step default
        let dt = match file.integrator.dt {
            Some(dt) => dt,
            None => default_dt(
                spectral_spread(&system.h_s)?,
                max_generator_rate(&system, &generator)?,
            ),
        };
        let integrator = IntegratorConfig {
            dt,
            t_final: file.integrator.t_final,
            store_every: file.integrator.store_every.unwrap_or(1),
        };
        integrator.validate()?;

        let defaults = AuditThresholds::default();
        let thresholds = match &file.audit {
            Some(section) => AuditThresholds {
                pointwise: section.pointwise_threshold.unwrap_or(defaults.pointwise),
                integral: section.integral_threshold.unwrap_or(defaults.integral),
            },
            None => defaults,
        };
        if thresholds.pointwise <= 0.0 || thresholds.integral <= 0.0 {
            return Err(Error::validation("audit", "thresholds must be positive"));
        }

        Ok(Self {
            system,
            environment,
            drive,
            generator,
            allow_large_driven,
            observables,
            initial_reduced,
            initial_full,
            integrator,
            thresholds,
        })
    }

    /// Emit the scenario with every default made explicit. Reloading the
    /// result reproduces this scenario exactly.
    pub fn normalize(&self) -> ScenarioFile {
        let bath_section = match &self.generator {
            GeneratorKind::SecularWeak { bath }
            | GeneratorKind::RedfieldNonsecular { bath }
            | GeneratorKind::DrivenSecular { bath }
            | GeneratorKind::DrivenNonsecular { bath } => Some(BathSection {
                temperature: bath.temperature,
                eta: bath.coupling_strength,
                omega_c: bath.cutoff,
                lamb_shift_mode: match &bath.lamb_shift {
                    LambShiftMode::Zero => "zero".into(),
                    LambShiftMode::Table(_) => "table".into(),
                    LambShiftMode::PvQuadrature => "pv_quadrature".into(),
                },
                s_table: match &bath.lamb_shift {
                    LambShiftMode::Table(t) => Some(t.iter().map(|&(w, s)| [w, s]).collect()),
                    _ => None,
                },
            }),
            GeneratorKind::SingularCoupling { .. } => None,
        };

        let rates_section = match &self.generator {
            GeneratorKind::SingularCoupling { rates } => Some(RateSection {
                gamma: emit_matrix(&rates.gamma),
                s: emit_matrix(&rates.lamb),
            }),
            _ => None,
        };

        let drive_section = self.drive.as_ref().map(|schedule| DriveSection {
            protocol: match &schedule.protocol {
                DriveProtocol::None => "none".into(),
                DriveProtocol::LinearSweep { .. } => "linear_sweep".into(),
                DriveProtocol::UserSamples { .. } => "user_samples".into(),
            },
            parameters: match &schedule.protocol {
                DriveProtocol::LinearSweep { h_drive, t_ramp } => Some(DriveParams {
                    h_drive: emit_matrix(h_drive),
                    t_ramp: Some(*t_ramp),
                }),
                _ => None,
            },
            t_samples: match &schedule.protocol {
                DriveProtocol::UserSamples { times, matrices } => Some(
                    times
                        .iter()
                        .zip(matrices.iter())
                        .map(|(&t, m)| DriveSample {
                            t,
                            h_s: emit_matrix(m),
                        })
                        .collect(),
                ),
                _ => None,
            },
            dt_sample: Some(schedule.dt_sample),
        });

        ScenarioFile {
            system: SystemSection {
                dim_s: self.system.dim_s,
                h_s: emit_matrix(&self.system.h_s),
                couplings: self.system.couplings.iter().map(emit_matrix).collect(),
            },
            environment: self.environment.as_ref().map(|env| EnvSection {
                dim_e: env.dim_e,
                h_e: emit_matrix(&env.h_e),
                bath_ops: env.bath_ops.iter().map(emit_matrix).collect(),
                rho_e0: emit_matrix(&env.rho_e0),
            }),
            bath: bath_section,
            drive: drive_section,
            generator: GeneratorSection {
                variant: self.generator.name().into(),
                rates: rates_section,
                allow_large_driven: Some(self.allow_large_driven),
            },
            observables: self
                .observables
                .iter()
                .map(|g| ObservableSection {
                    name: g.name.clone(),
                    g: emit_matrix(&g.g),
                    explicit_dgdt: g.dg_dt.as_ref().map(emit_matrix),
                })
                .collect(),
            initial_state: InitialStateSection {
                rho_s0: Some(emit_matrix(&self.initial_reduced)),
                rho_full0: self.initial_full.as_ref().map(emit_matrix),
            },
            integrator: IntegratorSection {
                dt: Some(self.integrator.dt),
                t_final: self.integrator.t_final,
                store_every: Some(self.integrator.store_every),
            },
            audit: Some(AuditSection {
                pointwise_threshold: Some(self.thresholds.pointwise),
                integral_threshold: Some(self.thresholds.integral),
            }),
        }
    }

    pub fn prepared_generator(&self) -> Result<PreparedGenerator> {
        PreparedGenerator::build(
            &self.system,
            &self.generator,
            self.drive.as_ref(),
            self.allow_large_driven,
        )
    }

    /// Copy of the scenario with every coupling operator scaled by `s`
    /// (interaction strength sweep).
    pub fn with_coupling_scale(&self, s: f64) -> Result<Self> {
        let mut out = self.clone();
        out.system = SystemSpec::new(
            self.system.h_s.clone(),
            self.system.couplings.iter().map(|a| a.scale_re(s)).collect(),
        )?;
        Ok(out)
    }
}

fn parse_drive(
    section: &DriveSection,
    integrator: &IntegratorSection,
    dim: usize,
) -> Result<DriveSchedule> {
    let t_final = integrator.t_final;
    let protocol = match section.protocol.as_str() {
        "none" => DriveProtocol::None,
        "linear_sweep" => {
            let params = section.parameters.as_ref().ok_or_else(|| {
                Error::validation("drive.parameters", "required for linear_sweep")
            })?;
            DriveProtocol::LinearSweep {
                h_drive: parse_hermitian("drive.parameters.h_drive", &params.h_drive, Some(dim))?,
                t_ramp: params.t_ramp.unwrap_or(t_final),
            }
        }
        "user_samples" => {
            let samples = section.t_samples.as_ref().ok_or_else(|| {
                Error::validation("drive.t_samples", "required for user_samples")
            })?;
            let mut times = Vec::with_capacity(samples.len());
            let mut matrices = Vec::with_capacity(samples.len());
            for (k, sample) in samples.iter().enumerate() {
                times.push(sample.t);
                matrices.push(parse_hermitian(
                    &format!("drive.t_samples[{k}]"),
                    &sample.h_s,
                    Some(dim),
                )?);
            }
            DriveProtocol::UserSamples { times, matrices }
        }
        other => {
            return Err(Error::validation(
                "drive.protocol",
                format!("unknown protocol '{other}' (none | linear_sweep | user_samples)"),
            ))
        }
    };
    let dt_sample = section.dt_sample.unwrap_or(t_final / 1000.0);
    Ok(DriveSchedule {
        protocol,
        dt_sample,
        t_final,
    })
}

fn parse_generator(
    section: &GeneratorSection,
    system: &SystemSpec,
    bath: Option<&BathSpectrum>,
) -> Result<GeneratorKind> {
    let need_bath = |variant: &str| -> Result<BathSpectrum> {
        bath.cloned().ok_or_else(|| {
            Error::validation("bath", format!("required for generator variant {variant}"))
        })
    };
    match section.variant.as_str() {
        "singular_coupling" => {
            let rates = section.rates.as_ref().ok_or_else(|| {
                Error::validation("generator.rates", "required for singular_coupling")
            })?;
            let n = system.couplings.len();
            let gamma = parse_matrix("generator.rates.gamma", &rates.gamma, Some(n))?;
            let lamb = parse_matrix("generator.rates.s", &rates.s, Some(n))?;
            Ok(GeneratorKind::SingularCoupling {
                rates: RateMatrix::new(gamma, lamb)?,
            })
        }
        "secular_weak" => Ok(GeneratorKind::SecularWeak {
            bath: need_bath("secular_weak")?,
        }),
        "redfield_nonsecular" => Ok(GeneratorKind::RedfieldNonsecular {
            bath: need_bath("redfield_nonsecular")?,
        }),
        "driven_secular" => Ok(GeneratorKind::DrivenSecular {
            bath: need_bath("driven_secular")?,
        }),
        "driven_nonsecular" => Ok(GeneratorKind::DrivenNonsecular {
            bath: need_bath("driven_nonsecular")?,
        }),
        other => Err(Error::validation(
            "generator.variant",
            format!(
                "unknown variant '{other}' (singular_coupling | secular_weak | \
                 redfield_nonsecular | driven_secular | driven_nonsecular)"
            ),
        )),
    }
}

fn parse_initial_state(
    section: &InitialStateSection,
    system: &SystemSpec,
    env: Option<&EnvSpec>,
) -> Result<(ComplexMatrix, Option<ComplexMatrix>)> {
    match (&section.rho_s0, &section.rho_full0, env) {
        (Some(data), None, None) => {
            let rho = parse_hermitian("initial_state.rho_S0", data, Some(system.dim_s))?;
            validate_density_matrix(&rho, "initial_state.rho_S0")?;
            Ok((rho, None))
        }
        (Some(data), None, Some(env)) => {
            let rho = parse_hermitian("initial_state.rho_S0", data, Some(system.dim_s))?;
            validate_density_matrix(&rho, "initial_state.rho_S0")?;
            let full = tensor(&rho, &env.rho_e0);
            Ok((rho, Some(full)))
        }
        (None, Some(data), Some(env)) => {
            let full = parse_hermitian(
                "initial_state.rho_full0",
                data,
                Some(system.dim_s * env.dim_e),
            )?;
            validate_density_matrix(&full, "initial_state.rho_full0")?;
            let reduced = partial_trace_env(&full, system.dim_s, env.dim_e)?;
            Ok((reduced, Some(full)))
        }
        (Some(rs), Some(rf), Some(env)) => {
            let rho = parse_hermitian("initial_state.rho_S0", rs, Some(system.dim_s))?;
            validate_density_matrix(&rho, "initial_state.rho_S0")?;
            let full = parse_hermitian(
                "initial_state.rho_full0",
                rf,
                Some(system.dim_s * env.dim_e),
            )?;
            validate_density_matrix(&full, "initial_state.rho_full0")?;
            let reduced = partial_trace_env(&full, system.dim_s, env.dim_e)?;
            if reduced.max_abs_diff(&rho) > 1e-10 {
                return Err(Error::validation(
                    "initial_state",
                    "rho_S0 is not the partial trace of rho_full0",
                ));
            }
            Ok((rho, Some(full)))
        }
        (_, Some(_), None) => Err(Error::validation(
            "initial_state.rho_full0",
            "requires an environment section",
        )),
        (None, None, _) => Err(Error::validation(
            "initial_state",
            "one of rho_S0 or rho_full0 is required",
        )),
    }
}

/// Spectral range of H_S: largest minus smallest eigenvalue.
fn spectral_spread(h_s: &ComplexMatrix) -> Result<f64> {
    let (values, _) = jacobi_eigh(h_s)?;
    Ok(values.last().unwrap() - values.first().unwrap())
}

/// Fastest dissipative rate seen by the generator, for the default-step
/// heuristic.
fn max_generator_rate(system: &SystemSpec, kind: &GeneratorKind) -> Result<f64> {
    match kind {
        GeneratorKind::SingularCoupling { rates } => {
            let (values, _) = jacobi_eigh(&rates.gamma)?;
            Ok(values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        }
        GeneratorKind::SecularWeak { bath }
        | GeneratorKind::RedfieldNonsecular { bath }
        | GeneratorKind::DrivenSecular { bath }
        | GeneratorKind::DrivenNonsecular { bath } => {
            let mut max_rate = bath.gamma(0.0);
            for a in &system.couplings {
                let eig = build_eigenoperators(&system.h_s, a, default_freq_tol(&system.h_s))?;
                for (w, _) in eig.iter() {
                    max_rate = max_rate.max(bath.gamma(w));
                }
            }
            Ok(max_rate)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level_file() -> ScenarioFile {
        let json = r#"{
            "system": {
                "dimS": 2,
                "H_S": [[[0.5,0],[0,0]],[[0,0],[-0.5,0]]],
                "couplings": [[[[0.3,0],[1,0]],[[1,0],[-0.3,0]]]]
            },
            "bath": {
                "temperature": 0.0,
                "eta": 0.03517871262098421,
                "omega_c": 10.0,
                "lamb_shift_mode": "zero"
            },
            "generator": { "variant": "secular_weak" },
            "observables": [
                { "name": "G", "G": [[[0.3,0],[1,0]],[[1,0],[-0.3,0]]] }
            ],
            "initial_state": { "rho_S0": [[[1,0],[0,0]],[[0,0],[0,0]]] },
            "integrator": { "dt": 0.01, "t_final": 5.0, "store_every": 1 }
        }"#;
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn loads_and_validates() {
        let scn = Scenario::from_file(&two_level_file()).unwrap();
        assert_eq!(scn.system.dim_s, 2);
        assert_eq!(scn.observables.len(), 1);
        assert!(scn.environment.is_none());
        assert!(scn.initial_full.is_none());
        assert_eq!(scn.integrator.store_every, 1);
    }

    #[test]
    fn non_hermitian_h_s_names_the_field() {
        let mut file = two_level_file();
        file.system.h_s[0][1] = [1.0, 0.5];
        let err = Scenario::from_file(&file).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("system.H_S"), "message was: {msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_bath_for_weak_coupling() {
        let mut file = two_level_file();
        file.bath = None;
        let err = Scenario::from_file(&file).unwrap_err();
        assert!(err.to_string().contains("bath"));
    }

    #[test]
    fn singular_requires_rates() {
        let mut file = two_level_file();
        file.generator.variant = "singular_coupling".into();
        let err = Scenario::from_file(&file).unwrap_err();
        assert!(err.to_string().contains("generator.rates"));
    }

    #[test]
    fn default_dt_filled_in() {
        let mut file = two_level_file();
        file.integrator.dt = None;
        let scn = Scenario::from_file(&file).unwrap();
        // spectral spread 1 and gamma(1) = 0.2: dt = 0.01 / 1 = 0.01
        assert!((scn.integrator.dt - 0.01).abs() < 1e-12);
    }

    #[test]
    fn normalizer_round_trip() {
        let scn = Scenario::from_file(&two_level_file()).unwrap();
        let emitted = scn.normalize();
        let reloaded = Scenario::from_file(&emitted).unwrap();
        assert_eq!(scn, reloaded);

        // and through actual JSON bytes
        let text = serde_json::to_string_pretty(&emitted).unwrap();
        let parsed: ScenarioFile = serde_json::from_str(&text).unwrap();
        assert_eq!(Scenario::from_file(&parsed).unwrap(), scn);
    }

    #[test]
    fn unknown_generator_variant() {
        let mut file = two_level_file();
        file.generator.variant = "lindbladish".into();
        assert!(Scenario::from_file(&file).is_err());
    }

    #[test]
    fn product_initial_state_built_from_environment() {
        let mut file = two_level_file();
        file.environment = Some(EnvSection {
            dim_e: 2,
            h_e: vec![
                vec![[0.75, 0.0], [0.0, 0.0]],
                vec![[0.0, 0.0], [-0.75, 0.0]],
            ],
            bath_ops: vec![vec![
                vec![[0.0, 0.0], [1.0, 0.0]],
                vec![[1.0, 0.0], [0.0, 0.0]],
            ]],
            rho_e0: vec![
                vec![[0.0, 0.0], [0.0, 0.0]],
                vec![[0.0, 0.0], [1.0, 0.0]],
            ],
        });
        let scn = Scenario::from_file(&file).unwrap();
        let full = scn.initial_full.unwrap();
        assert_eq!(full.dim(), 4);
        assert!((full.get(1, 1).re - 1.0).abs() < 1e-12);
    }
}
