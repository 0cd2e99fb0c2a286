//! One-step time integrators for the first-order form `u' = v, M v' = -P(u) - D v + S(u)`.

use nalgebra::DVector;

use super::problem::{ProblemSpec, State};
use super::system::GalerkinSystem;
use crate::basis::FieldCoeffs;
use crate::error::Result;

/// Why a step could not produce a new state.
#[derive(Debug, Clone, PartialEq)]
pub enum StepFailure {
    NewtonFailure { iterations: usize, residual: f64 },
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: State,
    pub newton_iterations: usize,
}

fn make_state(state: &State, t: f64, u: DVector<f64>, v: DVector<f64>) -> State {
    State {
        t,
        u: FieldCoeffs {
            coeffs: u,
            basis_id: state.u.basis_id,
        },
        v: FieldCoeffs {
            coeffs: v,
            basis_id: state.v.basis_id,
        },
    }
}

/// Implicit midpoint step of length `dt`.
///
/// The unknown is the midpoint velocity `w`, with `u_1 = u_0 + dt w` and
/// `v_1 = 2 w - v_0`. Newton iterates on the velocity-scaled residual
/// `M (w - v_0) + dt/2 (P(u_m) - S(u_m) + D w)`, `u_m = u_0 + dt/2 w`,
/// until its max-norm drops below the problem's tolerance.
pub fn midpoint_step(
    sys: &GalerkinSystem<'_>,
    state: &State,
    dt: f64,
) -> std::result::Result<StepOutcome, StepFailure> {
    let pr = sys.problem;
    let basis = sys.basis();
    let mass = basis.mass();
    let (u0, v0) = (&state.u.coeffs, &state.v.coeffs);
    let half = 0.5 * dt;
    let mut w = v0 + sys.acceleration(u0, v0) * half;
    if w.iter().any(|x| !x.is_finite()) {
        w = v0.clone();
    }
    let residual = |w: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
        let um = u0 + w * half;
        let r = mass * (w - v0) + (sys.internal_force(&um) + &sys.damping * w) * half;
        (r, um)
    };
    let mut iterations = 0;
    let (mut r, mut um) = residual(&w);
    let mut rnorm = r.amax();
    while !(rnorm < pr.newton_tol) {
        if iterations >= pr.newton_max_iter || !rnorm.is_finite() {
            return Err(StepFailure::NewtonFailure {
                iterations,
                residual: rnorm,
            });
        }
        let jac = mass + (sys.internal_jacobian(&um) * half + &sys.damping) * half;
        let delta = match jac.lu().solve(&r) {
            Some(d) => d,
            None => {
                return Err(StepFailure::NewtonFailure {
                    iterations,
                    residual: rnorm,
                })
            }
        };
        w -= delta;
        iterations += 1;
        (r, um) = residual(&w);
        rnorm = r.amax();
    }
    let u1 = u0 + &w * dt;
    let v1 = &w * 2.0 - v0;
    let next = make_state(state, state.t + dt, u1, v1);
    if !next.is_finite() {
        return Err(StepFailure::NonFinite);
    }
    Ok(StepOutcome {
        state: next,
        newton_iterations: iterations,
    })
}

/// Classical four-stage Runge–Kutta step of length `dt`.
pub fn rk4_step(
    sys: &GalerkinSystem<'_>,
    state: &State,
    dt: f64,
) -> std::result::Result<StepOutcome, StepFailure> {
    let (u, v) = (&state.u.coeffs, &state.v.coeffs);
    let h2 = 0.5 * dt;
    let a1 = sys.acceleration(u, v);
    let (u2, v2) = (u + v * h2, v + &a1 * h2);
    let a2 = sys.acceleration(&u2, &v2);
    let (u3, v3) = (u + &v2 * h2, v + &a2 * h2);
    let a3 = sys.acceleration(&u3, &v3);
    let (u4, v4) = (u + &v3 * dt, v + &a3 * dt);
    let a4 = sys.acceleration(&u4, &v4);
    let s = dt / 6.0;
    let un = u + (v + &v2 * 2.0 + &v3 * 2.0 + &v4) * s;
    let vn = v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * s;
    let next = make_state(state, state.t + dt, un, vn);
    if !next.is_finite() {
        return Err(StepFailure::NonFinite);
    }
    Ok(StepOutcome {
        state: next,
        newton_iterations: 0,
    })
}

/// One implicit midpoint step with the problem's `dt`.
pub fn step_implicit_midpoint(
    problem: &ProblemSpec,
    state: &State,
) -> Result<std::result::Result<State, StepFailure>> {
    let sys = GalerkinSystem::new(problem)?;
    problem.basis.check(&state.u)?;
    problem.basis.check(&state.v)?;
    Ok(midpoint_step(&sys, state, problem.dt).map(|o| o.state))
}

/// One RK4 step with the problem's `dt`.
pub fn step_rk4(
    problem: &ProblemSpec,
    state: &State,
) -> Result<std::result::Result<State, StepFailure>> {
    let sys = GalerkinSystem::new(problem)?;
    problem.basis.check(&state.u)?;
    problem.basis.check(&state.v)?;
    Ok(rk4_step(&sys, state, problem.dt).map(|o| o.state))
}
