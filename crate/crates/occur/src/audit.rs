//! Conservation auditing of operator currents.
//!
//! Two independent evaluations of the dissipative current are compared:
//! the interaction side, -i Tr{rho [G (x) I, H_I]} reduced to system
//! traces via Tr_E{B_a rho}, and the generator side Tr_S{D G}. For an
//! observable that commutes with the interaction Hamiltonian the
//! interaction side vanishes identically, so any generator-side current
//! is an artifact of the approximations behind the master equation.
//!
//! The audit also checks the integral identity: the first-definition
//! current (closed-system term plus interaction term) must integrate to
//! the change of the expectation value along the trajectory.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::{dissipative_current_rhs, PreparedGenerator};
use crate::linalg::{commutator, partial_trace_env, tensor, ComplexMatrix};
use crate::model::{EnvSpec, ObservableSpec, SystemSpec};
use crate::propagate::{
    observable_at, propagate_exact, propagate_reduced, CompositeRhs, ReducedRhs, Trajectory,
};
use crate::scenario::Scenario;

/// Commutation tolerance for the conserved-by-interaction flag.
pub const COMMUTING_TOL: f64 = 1e-10;

const LHS_IMAG_TOL: f64 = 1e-10;

/// Verdict thresholds. The pointwise threshold is scaled by the
/// magnitude of the observable's expectation before use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AuditThresholds {
    pub pointwise: f64,
    pub integral: f64,
}

impl Default for AuditThresholds {
    fn default() -> Self {
        Self {
            pointwise: 1e-8,
            integral: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Conserved,
    Violated,
}

/// Per-observable audit result. Series are stored at the trajectory's
/// output stride; `lhs_series`/`residual_series` are present only when
/// the exact oracle ran.
#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub observable: String,
    pub commuting: bool,
    pub verdict: Verdict,
    pub max_abs_rhs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_residual: Option<f64>,
    pub integrated_current: f64,
    pub observable_change: f64,
    pub integral_gap: f64,
    pub pointwise_threshold: f64,
    pub integral_threshold: f64,
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub expectation_series: Vec<f64>,
    #[serde(skip)]
    pub current_series: Vec<f64>,
    #[serde(skip)]
    pub rhs_series: Vec<f64>,
    #[serde(skip)]
    pub lhs_series: Option<Vec<f64>>,
    #[serde(skip)]
    pub residual_series: Option<Vec<f64>>,
}

/// Interaction-side dissipative current, Eq.-of-motion form reduced to
/// system traces: -i Tr_S{ sum_a [A_a, Tr_E{B_a rho}] G }.
pub fn lhs_dissipative_current(
    rho_full: &ComplexMatrix,
    couplings: &[ComplexMatrix],
    bath_ops: &[ComplexMatrix],
    g: &ObservableSpec,
) -> Result<f64> {
    lhs_dissipative_current_at(rho_full, couplings, bath_ops, &g.g)
}

fn lhs_dissipative_current_at(
    rho_full: &ComplexMatrix,
    couplings: &[ComplexMatrix],
    bath_ops: &[ComplexMatrix],
    g_matrix: &ComplexMatrix,
) -> Result<f64> {
    if couplings.len() != bath_ops.len() {
        return Err(Error::Shape(format!(
            "{} couplings vs {} bath operators",
            couplings.len(),
            bath_ops.len()
        )));
    }
    if couplings.is_empty() {
        return Ok(0.0);
    }
    let dim_s = couplings[0].dim();
    let dim_e = bath_ops[0].dim();
    if dim_s * dim_e != rho_full.dim() {
        return Err(Error::Shape(format!(
            "composite state dim {} does not factor as {dim_s}x{dim_e}",
            rho_full.dim()
        )));
    }

    let mut acc = ComplexMatrix::zeros(dim_s);
    for (a, b) in couplings.iter().zip(bath_ops.iter()) {
        let lifted = tensor(&ComplexMatrix::identity(dim_s), b);
        let weighted = partial_trace_env(&(&lifted * rho_full), dim_s, dim_e)?;
        acc.add_assign(&commutator(a, &weighted)?);
    }
    let v = acc.trace_product(g_matrix) * num_complex::Complex64::new(0.0, -1.0);
    if v.im.abs() >= LHS_IMAG_TOL {
        return Err(Error::Numeric(format!(
            "interaction-side current has imaginary residue {:.3e}",
            v.im
        )));
    }
    Ok(v.re)
}

/// True when [G, H_I] = 0 within tolerance. With an explicit environment
/// the commutator is formed on the composite space; otherwise the
/// per-coupling criterion [G, A_a] = 0 is used, which is equivalent for
/// orthogonal environment factors.
pub fn commuting_flag(sys: &SystemSpec, env: Option<&EnvSpec>, g: &ObservableSpec) -> Result<bool> {
    let check = |m: &ComplexMatrix| -> Result<bool> {
        match env {
            Some(env) => {
                let lifted = tensor(m, &ComplexMatrix::identity(env.dim_e));
                let mut h_i = ComplexMatrix::zeros(sys.dim_s * env.dim_e);
                for (a, b) in sys.couplings.iter().zip(env.bath_ops.iter()) {
                    h_i.add_assign(&tensor(a, b));
                }
                Ok(commutator(&lifted, &h_i)?.max_abs() < COMMUTING_TOL)
            }
            None => {
                for a in &sys.couplings {
                    if commutator(m, a)?.max_abs() >= COMMUTING_TOL {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    };
    let mut ok = check(&g.g)?;
    if let Some(rate) = &g.dg_dt {
        ok = ok && check(rate)?;
    }
    Ok(ok)
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        acc += 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
    }
    acc
}

/// The closed-system part of the current: -i Tr{rho_S [G(t), H_S(t)]}.
fn unitary_current(rho_s: &ComplexMatrix, g_t: &ComplexMatrix, h_s: &ComplexMatrix) -> Result<f64> {
    let comm = commutator(g_t, h_s)?;
    let v = rho_s.trace_product(&comm) * num_complex::Complex64::new(0.0, -1.0);
    Ok(v.re)
}

/// Full audit artifact for one scenario: shared trajectories plus the
/// per-observable reports.
pub struct AuditRun {
    pub reports: Vec<AuditReport>,
}

impl AuditRun {
    pub fn all_conserved(&self) -> bool {
        self.reports.iter().all(|r| r.verdict == Verdict::Conserved)
    }
}

/// Propagate the scenario (reduced, and exact when an environment is
/// present) and audit every observable against the conservation law.
pub fn audit_conservation(scn: &Scenario) -> Result<AuditRun> {
    let generator = scn.prepared_generator()?;
    let rhs = ReducedRhs {
        sys: &scn.system,
        drive: scn.drive.as_ref(),
        generator: &generator,
    };
    let reduced = propagate_reduced(&rhs, &scn.initial_reduced, &scn.integrator)?;
    let exact = match (&scn.environment, &scn.initial_full) {
        (Some(env), Some(rho0)) => Some(propagate_exact(
            &scn.system,
            env,
            scn.drive.as_ref(),
            rho0,
            &scn.integrator,
        )?),
        _ => None,
    };

    let mut reports = Vec::with_capacity(scn.observables.len());
    for g in &scn.observables {
        reports.push(audit_observable(
            scn,
            &generator,
            &rhs,
            &reduced,
            exact.as_ref(),
            g,
        )?);
    }
    Ok(AuditRun { reports })
}

pub(crate) fn audit_observable(
    scn: &Scenario,
    generator: &PreparedGenerator,
    rhs: &ReducedRhs<'_>,
    reduced: &Trajectory,
    exact: Option<&Trajectory>,
    g: &ObservableSpec,
) -> Result<AuditReport> {
    let commuting = commuting_flag(&scn.system, scn.environment.as_ref(), g)?;

    // generator-side current along the reduced trajectory
    let mut rhs_series = Vec::with_capacity(reduced.len());
    for (idx, t) in reduced.times.iter().copied().enumerate() {
        let out = generator.apply(&reduced.states[idx], t)?;
        rhs_series.push(dissipative_current_rhs(&out, g)?);
    }
    let max_abs_rhs = rhs_series.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let times = reduced.times.clone();
    let mut expectation_series = Vec::with_capacity(times.len());
    let mut current_series = Vec::with_capacity(times.len());
    let mut lhs_series: Option<Vec<f64>> = None;

    match exact {
        Some(traj) => {
            if traj.len() != reduced.len() {
                return Err(Error::Numeric(
                    "exact and reduced trajectories stored different grids".into(),
                ));
            }
            let mut lhs_vals = Vec::with_capacity(traj.len());
            for (idx, t) in traj.times.iter().copied().enumerate() {
                let rho_full = &traj.states[idx];
                let rho_s = traj.reduced_state(idx)?;
                let g_t = observable_at(g, t);
                let h_s = rhs.hamiltonian_at(t)?;
                let env = scn.environment.as_ref().unwrap();
                let lhs = lhs_dissipative_current_at(
                    rho_full,
                    &scn.system.couplings,
                    &env.bath_ops,
                    &g_t,
                )?;
                let mut current = unitary_current(&rho_s, &g_t, &h_s)? + lhs;
                if let Some(rate) = &g.dg_dt {
                    current += rho_s.trace_product(rate).re;
                }
                expectation_series.push(rho_s.trace_product(&g_t).re);
                current_series.push(current);
                lhs_vals.push(lhs);
            }
            lhs_series = Some(lhs_vals);
        }
        None => {
            for (idx, t) in reduced.times.iter().copied().enumerate() {
                let rho_s = &reduced.states[idx];
                let g_t = observable_at(g, t);
                let h_s = rhs.hamiltonian_at(t)?;
                // the interaction-side term is identically zero for a
                // commuting observable; otherwise the generator side is
                // the only available estimate
                let interaction = if commuting { 0.0 } else { rhs_series[idx] };
                let mut current = unitary_current(rho_s, &g_t, &h_s)? + interaction;
                if let Some(rate) = &g.dg_dt {
                    current += rho_s.trace_product(rate).re;
                }
                expectation_series.push(rho_s.trace_product(&g_t).re);
                current_series.push(current);
            }
        }
    }

    let residual_series = lhs_series
        .as_ref()
        .map(|lhs| lhs.iter().zip(rhs_series.iter()).map(|(l, r)| l - r).collect::<Vec<_>>());
    let max_abs_residual = residual_series
        .as_ref()
        .map(|rs| rs.iter().fold(0.0f64, |m, v| m.max(v.abs())));

    let integrated_current = trapezoid(&times, &current_series);
    let observable_change =
        expectation_series.last().unwrap() - expectation_series.first().unwrap();
    let integral_gap = (integrated_current - observable_change).abs();

    let scale = expectation_series
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let pointwise_threshold = scn.thresholds.pointwise * scale;
    let integral_threshold = scn.thresholds.integral;

    let violated = (commuting && max_abs_rhs > pointwise_threshold)
        || integral_gap > integral_threshold;

    Ok(AuditReport {
        observable: g.name.clone(),
        commuting,
        verdict: if violated {
            Verdict::Violated
        } else {
            Verdict::Conserved
        },
        max_abs_rhs,
        max_abs_residual,
        integrated_current,
        observable_change,
        integral_gap,
        pointwise_threshold,
        integral_threshold,
        times,
        expectation_series,
        current_series,
        rhs_series,
        lhs_series,
        residual_series,
    })
}

/// Residual study across interaction strengths: for each value the
/// couplings are scaled, both sides are re-propagated and the maximal
/// pointwise |lhs - rhs| is recorded. Values must be positive and
/// descending. `max_threads` caps the parallel evaluation.
pub fn born_residual_sweep(
    scn: &Scenario,
    g: &ObservableSpec,
    values: &[f64],
    max_threads: usize,
) -> Result<Vec<(f64, f64)>> {
    if scn.environment.is_none() {
        return Err(Error::validation(
            "environment",
            "coupling sweep requires the exact oracle",
        ));
    }
    if values.is_empty() {
        return Err(Error::Usage("sweep needs at least one coupling value".into()));
    }
    if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::Usage("sweep values must be nonnegative and finite".into()));
    }
    if values.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Usage("sweep values must be descending".into()));
    }

    let n_threads = max_threads.max(1).min(values.len());
    let mut results: Vec<Option<(f64, f64)>> = vec![None; values.len()];
    let chunk = values.len().div_ceil(n_threads);

    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for (chunk_idx, (vals, out)) in values
            .chunks(chunk)
            .zip(results.chunks_mut(chunk))
            .enumerate()
        {
            let scn_ref = &*scn;
            handles.push((
                chunk_idx,
                scope.spawn(move || -> Result<()> {
                    for (v, slot) in vals.iter().zip(out.iter_mut()) {
                        *slot = Some((*v, sweep_point(scn_ref, g, *v)?));
                    }
                    Ok(())
                }),
            ));
        }
        for (_, handle) in handles {
            handle.join().map_err(|_| Error::Numeric("sweep worker panicked".into()))??;
        }
        Ok(())
    })?;

    Ok(results.into_iter().map(|r| r.unwrap()).collect())
}

fn sweep_point(scn: &Scenario, g: &ObservableSpec, value: f64) -> Result<f64> {
    if value == 0.0 {
        // both sides vanish identically with the interaction switched off
        return Ok(0.0);
    }
    let scaled = scn.with_coupling_scale(value)?;
    let generator = scaled.prepared_generator()?;
    let rhs = ReducedRhs {
        sys: &scaled.system,
        drive: scaled.drive.as_ref(),
        generator: &generator,
    };
    let reduced = propagate_reduced(&rhs, &scaled.initial_reduced, &scaled.integrator)?;
    let env = scaled.environment.as_ref().unwrap();
    let exact = propagate_exact(
        &scaled.system,
        env,
        scaled.drive.as_ref(),
        scaled.initial_full.as_ref().unwrap(),
        &scaled.integrator,
    )?;
    if exact.len() != reduced.len() {
        return Err(Error::Numeric(
            "exact and reduced trajectories stored different grids".into(),
        ));
    }

    let mut max_residual = 0.0f64;
    for (idx, t) in exact.times.iter().copied().enumerate() {
        let g_t = observable_at(g, t);
        let lhs = lhs_dissipative_current_at(
            &exact.states[idx],
            &scaled.system.couplings,
            &env.bath_ops,
            &g_t,
        )?;
        let out = generator.apply(&reduced.states[idx], t)?;
        let rhs_val = dissipative_current_rhs(&out, g)?;
        max_residual = max_residual.max((lhs - rhs_val).abs());
    }
    Ok(max_residual)
}

/// Exact three-term split of the current on a composite trajectory:
/// d<G>/dt computed from the total Hamiltonian must equal the
/// closed-system term plus the interaction-side current. An identity up
/// to floating point, useful as an oracle for the audit plumbing.
pub fn exact_identity_defect(
    sys: &SystemSpec,
    env: &EnvSpec,
    rhs: &CompositeRhs<'_>,
    traj: &Trajectory,
    g: &ObservableSpec,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for (idx, t) in traj.times.iter().copied().enumerate() {
        let rho_full = &traj.states[idx];
        let rho_s = traj.reduced_state(idx)?;
        let g_t = observable_at(g, t);

        // d<G>/dt from the total commutator
        let g_lifted = tensor(&g_t, &ComplexMatrix::identity(env.dim_e));
        let rho_dot = rhs.eval(t, rho_full)?;
        let mut total = rho_dot.trace_product(&g_lifted).re;
        if let Some(rate) = &g.dg_dt {
            total += rho_s.trace_product(rate).re;
        }

        let h_s = rhs.system_hamiltonian_at(t)?;
        let mut split = unitary_current(&rho_s, &g_t, &h_s)?
            + lhs_dissipative_current_at(rho_full, &sys.couplings, &env.bath_ops, &g_t)?;
        if let Some(rate) = &g.dg_dt {
            split += rho_s.trace_product(rate).re;
        }
        worst = worst.max((total - split).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::propagate::IntegratorConfig;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sx() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    fn sz() -> ComplexMatrix {
        ComplexMatrix::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)])
    }

    fn excited() -> ComplexMatrix {
        ComplexMatrix::diagonal(&[c(1.0, 0.0), c(0.0, 0.0)])
    }

    fn qubit_pair(g_coupling: f64) -> (SystemSpec, EnvSpec, ComplexMatrix) {
        let sys = SystemSpec::new(sz().scale_re(0.5), vec![sx().scale_re(g_coupling)]).unwrap();
        let env = EnvSpec::new(
            sz().scale_re(0.75),
            vec![sx()],
            ComplexMatrix::diagonal(&[c(0.0, 0.0), c(1.0, 0.0)]),
        )
        .unwrap();
        let rho0 = tensor(&excited(), &env.rho_e0);
        (sys, env, rho0)
    }

    #[test]
    fn lhs_vanishes_for_unpolarised_product_state() {
        // Tr{B rho_E} = 0 for rho_E = I/2 and B = sx
        let (sys, env, _) = qubit_pair(0.1);
        let rho_e = ComplexMatrix::identity(2).scale_re(0.5);
        let rho = tensor(&excited(), &rho_e);
        let g = ObservableSpec::time_independent("sz", sz()).unwrap();
        let v = lhs_dissipative_current(&rho, &sys.couplings, &env.bath_ops, &g).unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn lhs_vanishes_for_commuting_observable() {
        let (sys, env, rho0) = qubit_pair(0.1);
        // G = sx commutes with sx (x) sx
        let g = ObservableSpec::time_independent("sx", sx()).unwrap();
        let cfg = IntegratorConfig {
            dt: 0.01,
            t_final: 3.0,
            store_every: 50,
        };
        let traj = propagate_exact(&sys, &env, None, &rho0, &cfg).unwrap();
        for (idx, _) in traj.times.iter().enumerate() {
            let v =
                lhs_dissipative_current(&traj.states[idx], &sys.couplings, &env.bath_ops, &g)
                    .unwrap();
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn three_term_split_is_identity_on_exact_trajectory() {
        let (sys, env, rho0) = qubit_pair(0.1);
        let cfg = IntegratorConfig {
            dt: 0.005,
            t_final: 5.0,
            store_every: 20,
        };
        let traj = propagate_exact(&sys, &env, None, &rho0, &cfg).unwrap();
        let rhs = CompositeRhs::new(&sys, &env, None).unwrap();
        for g_matrix in [sz(), sx(), &sx() + &sz().scale_re(0.3)] {
            let g = ObservableSpec::time_independent("g", g_matrix).unwrap();
            let defect = exact_identity_defect(&sys, &env, &rhs, &traj, &g).unwrap();
            assert!(defect < 1e-8, "split defect {defect:.3e}");
        }
    }

    #[test]
    fn reconstructed_generator_side_matches_lhs_on_exact_dynamics() {
        // replace the generator with the exact reduced derivative minus
        // the unitary part (finite differences of the partial trace) and
        // check the conservation balance closes
        let (sys, env, rho0) = qubit_pair(0.1);
        let cfg = IntegratorConfig {
            dt: 0.002,
            t_final: 4.0,
            store_every: 1,
        };
        let traj = propagate_exact(&sys, &env, None, &rho0, &cfg).unwrap();
        let g = ObservableSpec::time_independent("g", &sx() + &sz().scale_re(0.3)).unwrap();
        let h = cfg.dt;
        for idx in 1..traj.len() - 1 {
            let before = traj.reduced_state(idx - 1).unwrap();
            let after = traj.reduced_state(idx + 1).unwrap();
            let here = traj.reduced_state(idx).unwrap();
            let fd = (&after - &before).scale_re(1.0 / (2.0 * h));
            let unitary = commutator(&sys.h_s, &here)
                .unwrap()
                .scale(c(0.0, -1.0));
            let d_effective = &fd - &unitary;
            let rhs_val = d_effective.trace_product(&g.g).re;
            let lhs_val =
                lhs_dissipative_current(&traj.states[idx], &sys.couplings, &env.bath_ops, &g)
                    .unwrap();
            assert!(
                (lhs_val - rhs_val).abs() < 1e-6,
                "idx {idx}: lhs {lhs_val} vs rhs {rhs_val}"
            );
        }
    }

    #[test]
    fn commuting_flag_uses_composite_when_available() {
        let (sys, env, _) = qubit_pair(0.1);
        let g_sx = ObservableSpec::time_independent("sx", sx()).unwrap();
        let g_sz = ObservableSpec::time_independent("sz", sz()).unwrap();
        assert!(commuting_flag(&sys, Some(&env), &g_sx).unwrap());
        assert!(!commuting_flag(&sys, Some(&env), &g_sz).unwrap());
        assert!(commuting_flag(&sys, None, &g_sx).unwrap());
        assert!(!commuting_flag(&sys, None, &g_sz).unwrap());
    }

    #[test]
    fn trapezoid_refinement_is_stable() {
        // the integral over a smooth series changes little when the
        // stride is halved
        let times_fine: Vec<f64> = (0..=400).map(|i| 0.01 * i as f64).collect();
        let values_fine: Vec<f64> = times_fine.iter().map(|t| (2.0 * t).sin() * (-0.3 * t).exp()).collect();
        let times_coarse: Vec<f64> = times_fine.iter().step_by(2).copied().collect();
        let values_coarse: Vec<f64> = values_fine.iter().step_by(2).copied().collect();
        let fine = trapezoid(&times_fine, &values_fine);
        let coarse = trapezoid(&times_coarse, &values_coarse);
        assert!((fine - coarse).abs() < 1e-4);
    }
}
