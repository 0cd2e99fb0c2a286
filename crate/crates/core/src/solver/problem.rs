use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{BasisSet, FieldCoeffs};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sources::{SourceSpec, TruncationSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scheme {
    #[default]
    ImplicitMidpoint,
    ExplicitRk4,
}

pub const DEFAULT_NEWTON_TOL: f64 = 1e-12;
pub const DEFAULT_NEWTON_MAX_ITER: usize = 30;
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e12;

/// Everything needed to integrate one Galerkin trajectory.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub p: f64,
    pub basis: Arc<BasisSet>,
    pub src: SourceSpec,
    pub trunc: TruncationSpec,
    pub u0: FieldCoeffs,
    pub u1: FieldCoeffs,
    pub t_final: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub blowup_threshold: f64,
}

impl ProblemSpec {
    /// Source-free problem on `[0, 1]` with `dt = 0.01`, implicit midpoint.
    pub fn new(basis: Arc<BasisSet>, p: f64, u0: FieldCoeffs, u1: FieldCoeffs) -> Self {
        ProblemSpec {
            p,
            basis,
            src: SourceSpec::zero(),
            trunc: TruncationSpec::None,
            u0,
            u1,
            t_final: 1.0,
            dt: 0.01,
            scheme: Scheme::ImplicitMidpoint,
            newton_tol: DEFAULT_NEWTON_TOL,
            newton_max_iter: DEFAULT_NEWTON_MAX_ITER,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        }
    }

    pub fn with_source(mut self, src: SourceSpec) -> Self {
        self.src = src;
        self
    }

    pub fn with_truncation(mut self, trunc: TruncationSpec) -> Self {
        self.trunc = trunc;
        self
    }

    pub fn with_horizon(mut self, t_final: f64, dt: f64) -> Self {
        self.t_final = t_final;
        self.dt = dt;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_newton(mut self, tol: f64, max_iter: usize) -> Self {
        self.newton_tol = tol;
        self.newton_max_iter = max_iter;
        self
    }

    pub fn with_blowup_threshold(mut self, threshold: f64) -> Self {
        self.blowup_threshold = threshold;
        self
    }

    /// Checks the structural invariants. The exponent may equal 2 (the
    /// linear case); the theory's range `2 < p < 3` is checked by the
    /// parameter classifier, not here.
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 2.0) || !self.p.is_finite() {
            return Err(Error::invalid(format!(
                "solver needs p >= 2, got {}",
                self.p
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::invalid("time step must be positive"));
        }
        if !(self.t_final >= self.dt) {
            return Err(Error::invalid("horizon must be at least one time step"));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::invalid(
                "Newton tolerance and iteration budget must be positive",
            ));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::invalid("blow-up threshold must be positive"));
        }
        let need = Mesh::min_quad_order_for(self.p);
        if self.basis.mesh().quad_order() < need {
            return Err(Error::invalid(format!(
                "quadrature order {} below the minimum {need} for p = {}",
                self.basis.mesh().quad_order(),
                self.p
            )));
        }
        self.basis.check(&self.u0)?;
        self.basis.check(&self.u1)?;
        self.src.validate()?;
        self.trunc.validate()
    }

    /// Number of steps to reach `t_final`; the last one may be shorter.
    pub fn n_steps(&self) -> usize {
        ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize
    }
}

/// `(u_N, u_N')` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: FieldCoeffs,
    pub v: FieldCoeffs,
}

impl State {
    pub fn is_finite(&self) -> bool {
        self.u
            .coeffs
            .iter()
            .chain(self.v.coeffs.iter())
            .all(|x| x.is_finite())
    }
}
