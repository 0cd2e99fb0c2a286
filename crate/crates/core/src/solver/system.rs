//! The semidiscrete Galerkin system `M u'' + P(u) + D u' = S(u)`.

use nalgebra::{DMatrix, DVector};

use super::problem::{ProblemSpec, State};
use crate::basis::BasisSet;
use crate::error::Result;
use crate::operators::PLaplacianForm;
use crate::sources::{boundary_values_nodal, source_jacobian_nodal, source_vector_nodal};

/// Cached operators of one problem.
#[derive(Debug, Clone)]
pub struct GalerkinSystem<'a> {
    pub problem: &'a ProblemSpec,
    pub p_form: PLaplacianForm<'a>,
    pub damping: DMatrix<f64>,
}

/// Energy bookkeeping at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub potential: f64,
    /// `F(u(0)) + F(u(1))`; NaN when the source has no primitive.
    pub f_boundary: f64,
    /// `||v||_{1,2}^2`
    pub dissipation_rate: f64,
    /// `g(u(0)) v(0) + g(u(1)) v(1)`
    pub work_rate: f64,
}

impl<'a> GalerkinSystem<'a> {
    pub fn new(problem: &'a ProblemSpec) -> Result<Self> {
        problem.validate()?;
        let p_form = PLaplacianForm::new(&problem.basis, problem.p)?;
        Ok(GalerkinSystem {
            problem,
            p_form,
            damping: problem.basis.robin_form(),
        })
    }

    pub fn basis(&self) -> &'a BasisSet {
        &self.problem.basis
    }

    /// `P(u) - S(u)` in basis coordinates.
    pub fn internal_force(&self, u: &DVector<f64>) -> DVector<f64> {
        let basis = self.basis();
        let nodal = basis.coeffs_to_nodal(u);
        let mut out = self.p_form.apply_nodal(&nodal);
        if !self.problem.src.is_identically_zero() {
            let s = source_vector_nodal_raw(self, &nodal);
            out -= s;
        }
        basis.nodal_dual_to_basis(&out)
    }

    /// Jacobian of [`Self::internal_force`].
    pub fn internal_jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let basis = self.basis();
        let nodal = basis.coeffs_to_nodal(u);
        let jp = basis.nodal_matrix_to_basis(&self.p_form.jacobian_nodal(&nodal));
        if self.problem.src.is_identically_zero() {
            jp
        } else {
            let pr = self.problem;
            jp - source_jacobian_nodal(basis, &pr.src, &pr.trunc, &nodal, pr.p)
        }
    }

    /// Source dual vector `S(u)`.
    pub fn source(&self, u: &DVector<f64>) -> DVector<f64> {
        let pr = self.problem;
        let nodal = self.basis().coeffs_to_nodal(u);
        source_vector_nodal(self.basis(), &pr.src, &pr.trunc, &nodal, pr.p)
    }

    /// Acceleration `a` solving `M a = -P(u) - D v + S(u)`.
    pub fn acceleration(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let rhs = -(self.internal_force(u) + &self.damping * v);
        self.basis().solve_mass(&rhs)
    }

    pub fn energy_parts(&self, u: &DVector<f64>, v: &DVector<f64>) -> EnergyParts {
        let basis = self.basis();
        let pr = self.problem;
        let nodal_u = basis.coeffs_to_nodal(u);
        let nodal_v = basis.coeffs_to_nodal(v);
        let last = nodal_u.len() - 1;
        let kinetic = 0.5 * v.dot(&(basis.mass() * v));
        let potential = basis.w1p_norm_pow_nodal(&nodal_u, pr.p) / pr.p;
        let f_boundary = match (
            pr.src.primitive(nodal_u[0]),
            pr.src.primitive(nodal_u[last]),
        ) {
            (Ok(a), Ok(b)) => a + b,
            _ => f64::NAN,
        };
        let dissipation_rate = v.dot(&(&self.damping * v));
        let [g0, g1] = boundary_values_nodal(&pr.src, &pr.trunc, basis, &nodal_u, pr.p);
        let work_rate = g0 * nodal_v[0] + g1 * nodal_v[last];
        EnergyParts {
            kinetic,
            potential,
            f_boundary,
            dissipation_rate,
            work_rate,
        }
    }
}

fn source_vector_nodal_raw(sys: &GalerkinSystem<'_>, nodal: &DVector<f64>) -> DVector<f64> {
    let pr = sys.problem;
    let [g0, g1] = boundary_values_nodal(&pr.src, &pr.trunc, sys.basis(), nodal, pr.p);
    let mut d = DVector::zeros(nodal.len());
    let last = nodal.len() - 1;
    d[0] += g0;
    d[last] += g1;
    d
}

/// Acceleration coefficients of the Galerkin system at `state`.
pub fn rhs(problem: &ProblemSpec, state: &State) -> Result<DVector<f64>> {
    let sys = GalerkinSystem::new(problem)?;
    problem.basis.check(&state.u)?;
    problem.basis.check(&state.v)?;
    Ok(sys.acceleration(&state.u.coeffs, &state.v.coeffs))
}
