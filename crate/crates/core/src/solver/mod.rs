//! Galerkin time integration, energy audits and a-priori bounds.

mod bounds;
mod problem;
mod step;
mod system;
mod trajectory;

pub use bounds::{
    global_source_constant, gronwall_envelope, horizon_for_radius, local_horizon_estimate,
    select_truncation_radius, HorizonEstimate,
};
pub use problem::{
    ProblemSpec, Scheme, State, DEFAULT_BLOWUP_THRESHOLD, DEFAULT_NEWTON_MAX_ITER,
    DEFAULT_NEWTON_TOL,
};
pub use step::{
    midpoint_step, rk4_step, step_implicit_midpoint, step_rk4, StepFailure, StepOutcome,
};
pub use system::{rhs, EnergyParts, GalerkinSystem};
pub use trajectory::{
    blowup_monitor, integrate, weak_form_residual, BlowupReport, EnergyRecord, Termination,
    TestField, Trajectory,
};
