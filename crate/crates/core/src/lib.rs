//! Galerkin semidiscretization of the strongly damped p-Laplacian wave
//! equation on the unit interval,
//!
//! ```text
//! u_tt - Delta_p u - Delta u_t = 0                                  in (0, 1)
//! |u_x|^{p-2} d_n u + |u|^{p-2} u + d_n u_t + u_t = f(u)            at x = 0, 1
//! ```
//!
//! with the weak-form operators, source truncations, energy audits and
//! existence bounds needed to study it numerically.

pub mod basis;
pub mod error;
pub mod mesh;
pub mod operators;
pub mod quadrature;
pub mod regime;
pub mod sampling;
pub mod solver;
pub mod sources;

pub use basis::{w1p_distance, BasisDocument, BasisId, BasisKind, BasisSet, FieldCoeffs};
pub use error::{Error, Result};
pub use mesh::{Mesh, DEFAULT_QUAD_ORDER};
pub use operators::{
    apply_damping, apply_p_laplacian, dual_norm_bound_check, hemicontinuity_probe,
    monotonicity_check, DampingForm, DualNormReport, DualVector, PLaplacianForm,
};
pub use regime::{source_exponent_limit, RegimeReport, Violation};
pub use solver::{
    blowup_monitor, global_source_constant, gronwall_envelope, integrate, local_horizon_estimate,
    rhs, select_truncation_radius, step_implicit_midpoint, step_rk4, weak_form_residual,
    BlowupReport, EnergyRecord, HorizonEstimate, ProblemSpec, Scheme, State, Termination,
    TestField, Trajectory,
};
pub use sources::{
    analytic_lipschitz_bound, boundary_source_jacobian, boundary_source_values,
    boundary_source_vector, eta, eta_prime, f_eval, f_n_eval, f_prime, f_primitive,
    lipschitz_probe, truncate_radial, CustomSource, LipschitzReport, SourceKind, SourceSpec,
    TruncationSpec, CUTOFF_SLOPE,
};
