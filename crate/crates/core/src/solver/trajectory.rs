//! Time integration loop, energy audits and the weak-form residual.

use serde::{Deserialize, Serialize};

use super::problem::{ProblemSpec, Scheme, State};
use super::step::{midpoint_step, rk4_step, StepFailure};
use super::system::GalerkinSystem;
use crate::basis::FieldCoeffs;
use crate::error::{Error, Result};

/// Energy bookkeeping at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub kinetic: f64,
    pub potential: f64,
    /// kinetic + potential
    pub script_e: f64,
    pub f_boundary: f64,
    /// script_e - f_boundary
    pub e: f64,
    /// trapezoidal `int_0^t ||v||_{1,2}^2`
    pub dissipation_cum: f64,
    /// trapezoidal `int_0^t (g(u), v)_boundary`
    pub work_cum: f64,
    /// `script_e(t) + dissipation_cum - script_e(0) - work_cum`
    pub balance_residual: f64,
    pub(crate) dissipation_rate: f64,
    pub(crate) work_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Termination {
    Completed,
    BlowupDetected,
    NewtonFailure,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub records: Vec<EnergyRecord>,
    pub termination: Termination,
    pub newton_iterations: usize,
    pub message: Option<String>,
}

impl Trajectory {
    pub fn last_state(&self) -> &State {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn max_abs_balance_residual(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.balance_residual.abs())
            .fold(0.0, f64::max)
    }
}

fn record_at(
    sys: &GalerkinSystem<'_>,
    state: &State,
    prev: Option<&EnergyRecord>,
    e0: Option<f64>,
) -> EnergyRecord {
    let parts = sys.energy_parts(&state.u.coeffs, &state.v.coeffs);
    let script_e = parts.kinetic + parts.potential;
    let (dissipation_cum, work_cum) = match prev {
        None => (0.0, 0.0),
        Some(pr) => {
            let h = state.t - pr.t;
            (
                pr.dissipation_cum + 0.5 * h * (pr.dissipation_rate + parts.dissipation_rate),
                pr.work_cum + 0.5 * h * (pr.work_rate + parts.work_rate),
            )
        }
    };
    let e0 = e0.unwrap_or(script_e);
    EnergyRecord {
        t: state.t,
        kinetic: parts.kinetic,
        potential: parts.potential,
        script_e,
        f_boundary: parts.f_boundary,
        e: script_e - parts.f_boundary,
        dissipation_cum,
        work_cum,
        balance_residual: script_e + dissipation_cum - e0 - work_cum,
        dissipation_rate: parts.dissipation_rate,
        work_rate: parts.work_rate,
    }
}

/// Integrates the Galerkin system from `(u0, u1)` to `t_final`, halting early
/// on blow-up (energy plus dissipation above the threshold, or non-finite
/// values) or on a Newton failure.
pub fn integrate(problem: &ProblemSpec) -> Result<Trajectory> {
    let sys = GalerkinSystem::new(problem)?;
    let initial = State {
        t: 0.0,
        u: problem.u0.clone(),
        v: problem.u1.clone(),
    };
    let first = record_at(&sys, &initial, None, None);
    let e0 = first.script_e;
    let n_steps = problem.n_steps();
    let mut traj = Trajectory {
        states: vec![initial],
        records: vec![first],
        termination: Termination::Completed,
        newton_iterations: 0,
        message: None,
    };
    if !(e0 + first.dissipation_cum <= problem.blowup_threshold) {
        traj.termination = Termination::BlowupDetected;
        traj.message = Some("initial energy exceeds the blow-up threshold".into());
        return Ok(traj);
    }
    for k in 0..n_steps {
        let current = traj.last_state();
        let t_next = if k + 1 == n_steps {
            problem.t_final
        } else {
            (k + 1) as f64 * problem.dt
        };
        let h = t_next - current.t;
        let outcome = match problem.scheme {
            Scheme::ImplicitMidpoint => midpoint_step(&sys, current, h),
            Scheme::ExplicitRk4 => rk4_step(&sys, current, h),
        };
        match outcome {
            Ok(out) => {
                let mut state = out.state;
                state.t = t_next;
                traj.newton_iterations += out.newton_iterations;
                let rec = record_at(&sys, &state, traj.records.last(), Some(e0));
                let level = rec.script_e + rec.dissipation_cum;
                traj.states.push(state);
                traj.records.push(rec);
                if !(level <= problem.blowup_threshold) {
                    traj.termination = Termination::BlowupDetected;
                    traj.message = Some(format!(
                        "energy level {level:e} exceeded threshold at t = {t_next}"
                    ));
                    break;
                }
            }
            Err(StepFailure::NonFinite) => {
                let bad = State {
                    t: t_next,
                    u: FieldCoeffs {
                        coeffs: current.u.coeffs.map(|_| f64::NAN),
                        basis_id: current.u.basis_id,
                    },
                    v: FieldCoeffs {
                        coeffs: current.v.coeffs.map(|_| f64::NAN),
                        basis_id: current.v.basis_id,
                    },
                };
                let rec = record_at(&sys, &bad, traj.records.last(), Some(e0));
                traj.states.push(bad);
                traj.records.push(rec);
                traj.termination = Termination::BlowupDetected;
                traj.message = Some(format!("non-finite state at t = {t_next}"));
                break;
            }
            Err(StepFailure::NewtonFailure {
                iterations,
                residual,
            }) => {
                traj.termination = Termination::NewtonFailure;
                traj.message = Some(format!(
                    "Newton did not converge at t = {t_next} after {iterations} iterations (residual {residual:e})"
                ));
                break;
            }
        }
    }
    Ok(traj)
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Residual of the weak-solution identity at the final recorded time:
///
/// `(v(t), phi(t)) - (v(0), phi(0)) - int (v, phi_t) + int <-Delta_p u, phi>
///  + int <D v, phi> - int (g(u), phi)_boundary`,
///
/// time integrals by the trapezoidal rule on the trajectory's grid. `phi`
/// and `phi_t` are the test field and its time derivative at every
/// recorded time.
pub fn weak_form_residual(
    problem: &ProblemSpec,
    trajectory: &Trajectory,
    phi: &[FieldCoeffs],
    phi_t: &[FieldCoeffs],
) -> Result<f64> {
    let n = trajectory.states.len();
    if phi.len() != n || phi_t.len() != n {
        return Err(Error::invalid(format!(
            "test field has {} / {} samples, trajectory has {n} times",
            phi.len(),
            phi_t.len()
        )));
    }
    let sys = GalerkinSystem::new(problem)?;
    let basis = sys.basis();
    for f in phi.iter().chain(phi_t) {
        basis.check(f)?;
    }
    let mass = basis.mass();
    let times = trajectory.times();
    let mut inertia = Vec::with_capacity(n);
    let mut action = Vec::with_capacity(n);
    for (k, st) in trajectory.states.iter().enumerate() {
        let u = &st.u.coeffs;
        let v = &st.v.coeffs;
        inertia.push(v.dot(&(mass * &phi_t[k].coeffs)));
        // P(u) - S(u) + D v, paired with phi
        let force = sys.internal_force(u) + &sys.damping * v;
        action.push(force.dot(&phi[k].coeffs));
    }
    let first = &trajectory.states[0];
    let last = &trajectory.states[n - 1];
    let boundary_terms = last.v.coeffs.dot(&(mass * &phi[n - 1].coeffs))
        - first.v.coeffs.dot(&(mass * &phi[0].coeffs));
    Ok(boundary_terms - trapezoid(&times, &inertia) + trapezoid(&times, &action))
}

/// Test fields for [`weak_form_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestField {
    Zero,
    /// The basis function `w_j`, constant in time.
    Static(usize),
    /// The computed solution, with its velocity as time derivative.
    Solution,
}

impl TestField {
    /// Samples `(phi, phi_t)` on the trajectory's time grid.
    pub fn samples(
        self,
        problem: &ProblemSpec,
        trajectory: &Trajectory,
    ) -> Result<(Vec<FieldCoeffs>, Vec<FieldCoeffs>)> {
        let basis = &problem.basis;
        let n = trajectory.states.len();
        Ok(match self {
            TestField::Zero => (vec![basis.zero(); n], vec![basis.zero(); n]),
            TestField::Static(j) => (vec![basis.unit(j)?; n], vec![basis.zero(); n]),
            TestField::Solution => (
                trajectory.states.iter().map(|s| s.u.clone()).collect(),
                trajectory.states.iter().map(|s| s.v.clone()).collect(),
            ),
        })
    }
}

/// First time at which `script_e + dissipation_cum` exceeds the threshold or
/// stops being finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub flagged: bool,
    pub t_flag: Option<f64>,
}

pub fn blowup_monitor(trajectory: &Trajectory, threshold: f64) -> Result<BlowupReport> {
    if !(threshold > 0.0) {
        return Err(Error::invalid("blow-up threshold must be positive"));
    }
    let hit = trajectory.records.iter().find(|r| {
        let level = r.script_e + r.dissipation_cum;
        !(level.is_finite() && level <= threshold)
    });
    Ok(BlowupReport {
        flagged: hit.is_some(),
        t_flag: hit.map(|r| r.t),
    })
}
