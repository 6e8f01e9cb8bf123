//! Time evolution: fixed-step RK4 for reduced dynamics under any
//! generator, and exact unitary stepping of the full system+bath
//! composite as an oracle.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::generators::PreparedGenerator;
use crate::linalg::{commutator, partial_trace_env, tensor, unitary_evolve, ComplexMatrix};
use crate::model::{DriveSchedule, EnvSpec, ObservableSpec, SystemSpec};

/// Largest composite dimension accepted by the exact oracle.
pub const MAX_COMPOSITE_DIM: usize = 64;

const TRACE_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_final: f64,
    pub store_every: usize,
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_final > 0.0) {
            return Err(Error::validation(
                "integrator",
                "dt and t_final must be positive",
            ));
        }
        if self.dt > self.t_final {
            return Err(Error::validation("integrator", "dt must not exceed t_final"));
        }
        if self.store_every == 0 {
            return Err(Error::validation("integrator.store_every", "must be >= 1"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt + 1e-9).floor() as usize
    }
}

/// Default step: 0.01 divided by the fastest scale among the spectral
/// range of H_S and the largest dissipative rate.
pub fn default_dt(max_frequency: f64, max_rate: f64) -> f64 {
    let from_freq = if max_frequency > 0.0 {
        0.01 / max_frequency
    } else {
        f64::INFINITY
    };
    let from_rate = if max_rate > 0.0 {
        0.01 / max_rate
    } else {
        f64::INFINITY
    };
    let dt = from_freq.min(from_rate);
    if dt.is_finite() {
        dt
    } else {
        0.01
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrajectoryKind {
    Reduced,
    Composite { dim_s: usize, dim_e: usize },
}

/// Stored propagation history. For composite trajectories the states are
/// the full system+bath density matrices; reduced states are obtained by
/// partial trace on demand.
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexMatrix>,
    pub kind: TrajectoryKind,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Reduced state at a stored index (partial trace for composites).
    pub fn reduced_state(&self, idx: usize) -> Result<ComplexMatrix> {
        match self.kind {
            TrajectoryKind::Reduced => Ok(self.states[idx].clone()),
            TrajectoryKind::Composite { dim_s, dim_e } => {
                partial_trace_env(&self.states[idx], dim_s, dim_e)
            }
        }
    }
}

/// Right-hand side of the reduced master equation:
/// -i [H_S(t), rho] + D(rho, t).
pub struct ReducedRhs<'a> {
    pub sys: &'a SystemSpec,
    pub drive: Option<&'a DriveSchedule>,
    pub generator: &'a PreparedGenerator,
}

impl ReducedRhs<'_> {
    pub fn hamiltonian_at(&self, t: f64) -> Result<ComplexMatrix> {
        match self.drive {
            Some(schedule) => schedule.hamiltonian_at(&self.sys.h_s, t),
            None => Ok(self.sys.h_s.clone()),
        }
    }

    pub fn eval(&self, t: f64, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let h = self.hamiltonian_at(t)?;
        let mut out = commutator(&h, rho)?.scale(C64::new(0.0, -1.0));
        out.add_assign(&self.generator.apply(rho, t)?.d);
        Ok(out)
    }
}

/// Right-hand side of the von Neumann equation on the composite space.
pub struct CompositeRhs<'a> {
    sys: &'a SystemSpec,
    env: &'a EnvSpec,
    drive: Option<&'a DriveSchedule>,
    h_static: ComplexMatrix,
}

impl<'a> CompositeRhs<'a> {
    pub fn new(sys: &'a SystemSpec, env: &'a EnvSpec, drive: Option<&'a DriveSchedule>) -> Result<Self> {
        let h_static = assemble_total_hamiltonian(&sys.h_s, sys, env)?;
        Ok(Self {
            sys,
            env,
            drive,
            h_static,
        })
    }

    pub fn hamiltonian_at(&self, t: f64) -> Result<ComplexMatrix> {
        match self.drive {
            Some(schedule) if !schedule.is_static() => {
                let h_s = schedule.hamiltonian_at(&self.sys.h_s, t)?;
                assemble_total_hamiltonian(&h_s, self.sys, self.env)
            }
            _ => Ok(self.h_static.clone()),
        }
    }

    /// System-only Hamiltonian H_S(t).
    pub fn system_hamiltonian_at(&self, t: f64) -> Result<ComplexMatrix> {
        match self.drive {
            Some(schedule) => schedule.hamiltonian_at(&self.sys.h_s, t),
            None => Ok(self.sys.h_s.clone()),
        }
    }

    pub fn is_static(&self) -> bool {
        self.drive.map_or(true, |s| s.is_static())
    }

    pub fn eval(&self, t: f64, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let h = self.hamiltonian_at(t)?;
        Ok(commutator(&h, rho)?.scale(C64::new(0.0, -1.0)))
    }
}

/// H = H_S (x) I_E + I_S (x) H_E + sum_a A_a (x) B_a.
pub fn assemble_total_hamiltonian(
    h_s: &ComplexMatrix,
    sys: &SystemSpec,
    env: &EnvSpec,
) -> Result<ComplexMatrix> {
    if sys.couplings.len() != env.bath_ops.len() {
        return Err(Error::Shape(format!(
            "{} system couplings vs {} bath operators",
            sys.couplings.len(),
            env.bath_ops.len()
        )));
    }
    let mut h = tensor(h_s, &ComplexMatrix::identity(env.dim_e));
    h.add_assign(&tensor(&ComplexMatrix::identity(sys.dim_s), &env.h_e));
    for (a, b) in sys.couplings.iter().zip(env.bath_ops.iter()) {
        h.add_assign(&tensor(a, b));
    }
    Ok(h)
}

fn check_trace(rho: &ComplexMatrix, t: f64) -> Result<()> {
    let drift = (rho.trace().re - 1.0).abs();
    if !(drift <= TRACE_DRIFT_LIMIT) {
        return Err(Error::Numeric(format!(
            "trace drift {drift:.3e} at t = {t:.6}; reduce the integration step"
        )));
    }
    Ok(())
}

/// Classical fixed-step RK4 with re-Hermitisation after every step.
fn rk4_propagate(
    rhs: &dyn Fn(f64, &ComplexMatrix) -> Result<ComplexMatrix>,
    rho0: &ComplexMatrix,
    cfg: &IntegratorConfig,
    kind: TrajectoryKind,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n_steps = cfg.n_steps();
    let mut rho = rho0.hermitize();
    let mut times = Vec::with_capacity(n_steps / cfg.store_every + 1);
    let mut states = Vec::with_capacity(n_steps / cfg.store_every + 1);
    times.push(0.0);
    states.push(rho.clone());

    let dt = cfg.dt;
    for step in 0..n_steps {
        let t = step as f64 * dt;
        let k1 = rhs(t, &rho)?;
        let mid1 = &rho + &k1.scale_re(0.5 * dt);
        let k2 = rhs(t + 0.5 * dt, &mid1)?;
        let mid2 = &rho + &k2.scale_re(0.5 * dt);
        let k3 = rhs(t + 0.5 * dt, &mid2)?;
        let end = &rho + &k3.scale_re(dt);
        let k4 = rhs(t + dt, &end)?;

        let mut incr = k1;
        incr.add_assign(&k2.scale_re(2.0));
        incr.add_assign(&k3.scale_re(2.0));
        incr.add_assign(&k4);
        rho = (&rho + &incr.scale_re(dt / 6.0)).hermitize();

        let t_next = (step + 1) as f64 * dt;
        check_trace(&rho, t_next)?;
        if (step + 1) % cfg.store_every == 0 {
            times.push(t_next);
            states.push(rho.clone());
        }
    }

    Ok(Trajectory { times, states, kind })
}

/// Propagate the reduced state under the master equation. The state is
/// re-Hermitised each step; positivity is not repaired.
pub fn propagate_reduced(
    rhs: &ReducedRhs<'_>,
    rho0: &ComplexMatrix,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if rho0.dim() != rhs.sys.dim_s {
        return Err(Error::Shape(format!(
            "initial state dim {} does not match system dim {}",
            rho0.dim(),
            rhs.sys.dim_s
        )));
    }
    crate::model::validate_density_matrix(rho0, "initial_state.rho_S0")?;
    let f = |t: f64, rho: &ComplexMatrix| rhs.eval(t, rho);
    rk4_propagate(&f, rho0, cfg, TrajectoryKind::Reduced)
}

/// Propagate the full composite exactly. Time-independent Hamiltonians
/// use repeated application of the step propagator exp(-iH dt), which is
/// unitary by construction; driven Hamiltonians fall back to RK4 on the
/// von Neumann equation with mid-step Hamiltonian samples.
pub fn propagate_exact(
    sys: &SystemSpec,
    env: &EnvSpec,
    drive: Option<&DriveSchedule>,
    rho0_full: &ComplexMatrix,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let dim = sys.dim_s * env.dim_e;
    if dim > MAX_COMPOSITE_DIM {
        return Err(Error::Capacity(format!(
            "composite dimension {dim} exceeds the supported maximum {MAX_COMPOSITE_DIM}"
        )));
    }
    if rho0_full.dim() != dim {
        return Err(Error::Shape(format!(
            "initial composite state dim {} does not match {}x{}",
            rho0_full.dim(),
            sys.dim_s,
            env.dim_e
        )));
    }
    crate::model::validate_density_matrix(rho0_full, "initial_state.rho_full0")?;
    cfg.validate()?;

    let rhs = CompositeRhs::new(sys, env, drive)?;
    let kind = TrajectoryKind::Composite {
        dim_s: sys.dim_s,
        dim_e: env.dim_e,
    };

    if !rhs.is_static() {
        let f = |t: f64, rho: &ComplexMatrix| rhs.eval(t, rho);
        return rk4_propagate(&f, rho0_full, cfg, kind);
    }

    let u = unitary_evolve(&rhs.h_static, cfg.dt)?;
    let u_dag = u.adjoint();
    let n_steps = cfg.n_steps();
    let mut rho = rho0_full.clone();
    let mut times = Vec::with_capacity(n_steps / cfg.store_every + 1);
    let mut states = Vec::with_capacity(n_steps / cfg.store_every + 1);
    times.push(0.0);
    states.push(rho.clone());
    for step in 0..n_steps {
        rho = (&(&u * &rho) * &u_dag).hermitize();
        if (step + 1) % cfg.store_every == 0 {
            times.push((step + 1) as f64 * cfg.dt);
            states.push(rho.clone());
        }
    }
    Ok(Trajectory { times, states, kind })
}

/// Expectation series <G>(t) and its analytic derivative along a stored
/// trajectory. The derivative uses the commutator/dissipator form of the
/// state derivative supplied by `deriv`, never finite differences; the
/// explicit dG/dt term is included when the observable carries one.
pub fn observable_series(
    traj: &Trajectory,
    deriv: impl Fn(f64, &ComplexMatrix) -> Result<ComplexMatrix>,
    g: &ObservableSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let lift = |m: &ComplexMatrix| -> ComplexMatrix {
        match traj.kind {
            TrajectoryKind::Reduced => m.clone(),
            TrajectoryKind::Composite { dim_e, .. } => tensor(m, &ComplexMatrix::identity(dim_e)),
        }
    };
    let mut expectations = Vec::with_capacity(traj.len());
    let mut derivatives = Vec::with_capacity(traj.len());
    for (idx, t) in traj.times.iter().copied().enumerate() {
        let rho = &traj.states[idx];
        let g_t = observable_at(g, t);
        let g_lifted = lift(&g_t);
        expectations.push(rho.trace_product(&g_lifted).re);

        let rho_dot = deriv(t, rho)?;
        let mut d = rho_dot.trace_product(&g_lifted).re;
        if let Some(rate) = &g.dg_dt {
            d += rho.trace_product(&lift(rate)).re;
        }
        derivatives.push(d);
    }
    Ok((expectations, derivatives))
}

/// G(t) = G + t dG/dt for the constant-rate explicit time dependence.
pub fn observable_at(g: &ObservableSpec, t: f64) -> ComplexMatrix {
    match &g.dg_dt {
        Some(rate) => &g.g + &rate.scale_re(t),
        None => g.g.clone(),
    }
}
