//! Boundary source nonlinearities, their primitives, the radial and cutoff
//! truncations, and sampled Lipschitz certification.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{boundary_lq_of, BasisSet, FieldCoeffs};
use crate::error::{Error, Result};
use crate::operators::{DualVector, PLaplacianForm};
use crate::sampling::{constant_field, random_field_with_norm};

/// Slope bound of the quintic cutoff: `|eta_n'| <= CUTOFF_SLOPE / n`.
pub const CUTOFF_SLOPE: f64 = 15.0 / 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SourceKind {
    Power,
    PowerPlusLinear,
    Custom,
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied source. The growth constant must satisfy
/// `|f'(s)| <= C (|s|^{r-1} + 1)` and `|f(s)| <= C (|s|^r + 1)`.
#[derive(Clone)]
pub struct CustomSource {
    pub f: ScalarFn,
    pub f_prime: ScalarFn,
    pub primitive: Option<ScalarFn>,
    pub growth_constant: f64,
}

impl fmt::Debug for CustomSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSource")
            .field("has_primitive", &self.primitive.is_some())
            .field("growth_constant", &self.growth_constant)
            .finish()
    }
}

/// `f(s) = a |s|^{r-1} s + b s` for the power kinds, or a custom triple.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub r: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(skip)]
    pub custom: Option<CustomSource>,
}

impl SourceSpec {
    pub fn power(a: f64, r: f64) -> Self {
        SourceSpec {
            kind: SourceKind::Power,
            r,
            a,
            b: 0.0,
            custom: None,
        }
    }

    pub fn power_plus_linear(a: f64, b: f64, r: f64) -> Self {
        SourceSpec {
            kind: SourceKind::PowerPlusLinear,
            r,
            a,
            b,
            custom: None,
        }
    }

    /// `f = 0`.
    pub fn zero() -> Self {
        Self::power(0.0, 1.0)
    }

    pub fn custom(r: f64, custom: CustomSource) -> Self {
        SourceSpec {
            kind: SourceKind::Custom,
            r,
            a: 0.0,
            b: 0.0,
            custom: Some(custom),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r >= 1.0) || !self.r.is_finite() {
            return Err(Error::invalid(format!(
                "source exponent r = {} must be at least 1",
                self.r
            )));
        }
        if !self.a.is_finite() || !self.b.is_finite() {
            return Err(Error::invalid("source coefficients must be finite"));
        }
        if self.kind == SourceKind::Custom && self.custom.is_none() {
            return Err(Error::invalid("custom source without functions"));
        }
        Ok(())
    }

    pub fn is_identically_zero(&self) -> bool {
        self.kind != SourceKind::Custom && self.a == 0.0 && self.b == 0.0
    }

    pub fn f(&self, s: f64) -> f64 {
        match &self.custom {
            Some(c) => (c.f)(s),
            None => self.a * s.abs().powf(self.r - 1.0) * s + self.b * s,
        }
    }

    pub fn f_prime(&self, s: f64) -> f64 {
        match &self.custom {
            Some(c) => (c.f_prime)(s),
            None => self.a * self.r * s.abs().powf(self.r - 1.0) + self.b,
        }
    }

    /// `F(s) = int_0^s f`.
    pub fn primitive(&self, s: f64) -> Result<f64> {
        match &self.custom {
            Some(c) => c
                .primitive
                .as_ref()
                .map(|g| g(s))
                .ok_or_else(|| Error::invalid("custom source does not supply its primitive")),
            None => Ok(self.a / (self.r + 1.0) * s.abs().powf(self.r + 1.0) + 0.5 * self.b * s * s),
        }
    }

    /// Smallest `C` with `|f'(s)| <= C (|s|^{r-1} + 1)` for all `s`.
    pub fn growth_constant(&self) -> f64 {
        if let Some(c) = &self.custom {
            return c.growth_constant;
        }
        if self.r == 1.0 {
            // f' = a + b, and |s|^0 + 1 = 2
            0.5 * (self.a + self.b).abs()
        } else {
            // sup_t (|a| r t + |b|) / (t + 1) over t >= 0
            (self.a.abs() * self.r).max(self.b.abs())
        }
    }

    /// A `C` with `|f(s)| <= C (|s|^r + 1)` for all `s`.
    pub fn magnitude_constant(&self) -> f64 {
        if let Some(c) = &self.custom {
            return c.growth_constant;
        }
        if self.r == 1.0 {
            (self.a + self.b).abs()
        } else {
            self.a.abs() + self.b.abs()
        }
    }

    /// `sup_{|s| <= bound} |f'(s)|` for the power kinds.
    pub fn max_slope(&self, bound: f64) -> Option<f64> {
        if self.custom.is_some() {
            return None;
        }
        Some(if self.r == 1.0 {
            (self.a + self.b).abs()
        } else {
            self.a.abs() * self.r * bound.powf(self.r - 1.0) + self.b.abs()
        })
    }
}

pub fn f_eval(src: &SourceSpec, s: f64) -> f64 {
    src.f(s)
}

pub fn f_prime(src: &SourceSpec, s: f64) -> f64 {
    src.f_prime(s)
}

pub fn f_primitive(src: &SourceSpec, s: f64) -> Result<f64> {
    src.primitive(s)
}

/// How the source is truncated before it enters the Galerkin system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TruncationSpec {
    None,
    /// Radial retraction of the field onto the W^{1,p} ball of radius `k`.
    RadialK {
        k: f64,
    },
    /// Multiplication by the cutoff `eta_n`.
    CutoffN {
        n: u32,
    },
}

impl TruncationSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TruncationSpec::None => Ok(()),
            TruncationSpec::RadialK { k } if k > 0.0 && k.is_finite() => Ok(()),
            TruncationSpec::RadialK { k } => Err(Error::invalid(format!(
                "truncation radius K = {k} must be positive"
            ))),
            TruncationSpec::CutoffN { n } if n >= 1 => Ok(()),
            TruncationSpec::CutoffN { .. } => {
                Err(Error::invalid("cutoff index n must be at least 1"))
            }
        }
    }

    pub fn cutoff_eta(&self, s: f64) -> Result<f64> {
        match *self {
            TruncationSpec::CutoffN { n } => Ok(eta(n, s)),
            _ => Err(Error::invalid("cutoff_eta needs a cutoff truncation")),
        }
    }

    /// The constant `C` in `|eta_n'| <= C / n`.
    pub fn eta_slope_constant(&self) -> Option<f64> {
        matches!(self, TruncationSpec::CutoffN { .. }).then_some(CUTOFF_SLOPE)
    }
}

/// Quintic smoothstep cutoff: 1 on `|s| <= n`, 0 on `|s| >= 2n`.
pub fn eta(n: u32, s: f64) -> f64 {
    let n = n as f64;
    let a = s.abs();
    if a <= n {
        1.0
    } else if a >= 2.0 * n {
        0.0
    } else {
        let t = (a - n) / n;
        1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// Derivative of [`eta`] with respect to `s`.
pub fn eta_prime(n: u32, s: f64) -> f64 {
    let nf = n as f64;
    let a = s.abs();
    if a <= nf || a >= 2.0 * nf {
        0.0
    } else {
        let t = (a - nf) / nf;
        -30.0 * t * t * (1.0 - t) * (1.0 - t) / nf * s.signum()
    }
}

/// `f_n(s) = f(s) eta_n(s)`.
pub fn f_n_eval(src: &SourceSpec, n: u32, s: f64) -> f64 {
    let e = eta(n, s);
    if e == 0.0 {
        0.0
    } else {
        src.f(s) * e
    }
}

fn f_n_prime(src: &SourceSpec, n: u32, s: f64) -> f64 {
    src.f_prime(s) * eta(n, s) + src.f(s) * eta_prime(n, s)
}

/// Boundary values of the radially truncated source `f_K(u)`: inside the
/// ball `f(u)`, outside `f(K u / ||u||)` evaluated at the rescaled traces.
pub fn truncate_radial(
    src: &SourceSpec,
    k: f64,
    basis: &BasisSet,
    u: &FieldCoeffs,
    p: f64,
) -> Result<[f64; 2]> {
    let [a, b] = basis.traces(u)?;
    let norm = basis.norm_w1p(u, p)?;
    Ok(radial_values(src, k, a, b, norm))
}

fn radial_values(src: &SourceSpec, k: f64, a: f64, b: f64, norm: f64) -> [f64; 2] {
    if norm <= k {
        [src.f(a), src.f(b)]
    } else {
        let s = k / norm;
        [src.f(s * a), src.f(s * b)]
    }
}

/// Boundary values `(g(0), g(1))` of the (possibly truncated) source at `u`.
pub fn boundary_source_values(
    src: &SourceSpec,
    trunc: &TruncationSpec,
    basis: &BasisSet,
    u: &FieldCoeffs,
    p: f64,
) -> Result<[f64; 2]> {
    let nodal = basis.nodal_values(u)?;
    Ok(boundary_values_nodal(src, trunc, basis, &nodal, p))
}

pub(crate) fn boundary_values_nodal(
    src: &SourceSpec,
    trunc: &TruncationSpec,
    basis: &BasisSet,
    nodal: &DVector<f64>,
    p: f64,
) -> [f64; 2] {
    let (a, b) = (nodal[0], nodal[nodal.len() - 1]);
    match *trunc {
        TruncationSpec::None => [src.f(a), src.f(b)],
        TruncationSpec::RadialK { k } => {
            let norm = basis.w1p_norm_pow_nodal(nodal, p).powf(1.0 / p);
            radial_values(src, k, a, b, norm)
        }
        TruncationSpec::CutoffN { n } => [f_n_eval(src, n, a), f_n_eval(src, n, b)],
    }
}

/// `(g(u), w_j)_boundary = g(0) w_j(0) + g(1) w_j(1)`.
pub fn boundary_source_vector(
    basis: &BasisSet,
    src: &SourceSpec,
    trunc: &TruncationSpec,
    u: &FieldCoeffs,
    p: f64,
) -> Result<DualVector> {
    let nodal = basis.nodal_values(u)?;
    Ok(source_vector_nodal(basis, src, trunc, &nodal, p))
}

pub(crate) fn source_vector_nodal(
    basis: &BasisSet,
    src: &SourceSpec,
    trunc: &TruncationSpec,
    nodal: &DVector<f64>,
    p: f64,
) -> DualVector {
    let [g0, g1] = boundary_values_nodal(src, trunc, basis, nodal, p);
    let n = nodal.len();
    let mut d = DVector::zeros(n);
    d[0] += g0;
    d[n - 1] += g1;
    basis.nodal_dual_to_basis(&d)
}

/// Jacobian of [`boundary_source_vector`] with respect to the coefficients.
///
/// For the radial truncation outside the ball the dependence through
/// `||u||` is included: `d||u|| / dc = ||u||^{1-p} <-Delta_p u, .>`.
pub fn boundary_source_jacobian(
    basis: &BasisSet,
    src: &SourceSpec,
    trunc: &TruncationSpec,
    u: &FieldCoeffs,
    p: f64,
) -> Result<DMatrix<f64>> {
    let nodal = basis.nodal_values(u)?;
    Ok(source_jacobian_nodal(basis, src, trunc, &nodal, p))
}

pub(crate) fn source_jacobian_nodal(
    basis: &BasisSet,
    src: &SourceSpec,
    trunc: &TruncationSpec,
    nodal: &DVector<f64>,
    p: f64,
) -> DMatrix<f64> {
    let n = nodal.len();
    let last = n - 1;
    let (a, b) = (nodal[0], nodal[last]);
    let mut jac = DMatrix::zeros(n, n);
    match *trunc {
        TruncationSpec::None => {
            jac[(0, 0)] += src.f_prime(a);
            jac[(last, last)] += src.f_prime(b);
        }
        TruncationSpec::CutoffN { n: cut } => {
            jac[(0, 0)] += f_n_prime(src, cut, a);
            jac[(last, last)] += f_n_prime(src, cut, b);
        }
        TruncationSpec::RadialK { k } => {
            let norm = basis.w1p_norm_pow_nodal(nodal, p).powf(1.0 / p);
            if norm <= k {
                jac[(0, 0)] += src.f_prime(a);
                jac[(last, last)] += src.f_prime(b);
            } else {
                let form = PLaplacianForm::new(basis, p).expect("p validated by caller");
                // gradient of ||u|| in nodal coordinates
                let dnorm = form.apply_nodal(nodal) * norm.powf(1.0 - p);
                let s = k / norm;
                for (row, trace) in [(0, a), (last, b)] {
                    let fp = src.f_prime(s * trace) * s;
                    // d/dU [K U_x / ||u||] = (K/||u||) (e_x - U_x/||u|| grad||u||)
                    for col in 0..n {
                        let mut d = -trace / norm * dnorm[col];
                        if col == row {
                            d += 1.0;
                        }
                        jac[(row, col)] += fp * d;
                    }
                }
            }
        }
    }
    basis.nodal_matrix_to_basis(&jac)
}

/// Result of a sampled Lipschitz estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub empirical_constant: f64,
    /// Coefficients of the pair attaining the maximum ratio.
    pub max_ratio_pair: Option<(Vec<f64>, Vec<f64>)>,
    pub samples: usize,
    pub region_radius: f64,
}

/// Trace constant `tau` with `|u(x)| <= tau ||u||_{1,p}` on the unit interval.
pub fn pointwise_trace_constant(p: f64) -> f64 {
    2f64.powf(1.0 - 1.0 / p)
}

/// Analytic Lipschitz constant of the untruncated power source from the
/// `W^{1,p}` ball of radius `radius` into the boundary `L^q`.
pub fn analytic_lipschitz_bound(src: &SourceSpec, radius: f64, p: f64, q: f64) -> Option<f64> {
    let tau = pointwise_trace_constant(p);
    src.max_slope(tau * radius)
        .map(|l| l * 2f64.powf(1.0 / q) * tau)
}

/// Samples pairs `u, v` and returns `max |g(u) - g(v)|_{q,boundary} / ||u - v||_{1,p}`
/// where `g` is the source under `trunc`.
///
/// Fields are drawn from the ball of radius `radius`, weighted towards its
/// rim. For the radial truncation the claim is global, so norms are drawn
/// uniformly out to four times the larger of `radius` and `K`. Half of the
/// pairs are close pairs, and a third of the base points are near-constant
/// fields, which carry the largest traces for their norm.
#[allow(clippy::too_many_arguments)]
pub fn lipschitz_probe<R: Rng + ?Sized>(
    basis: &BasisSet,
    src: &SourceSpec,
    trunc: &TruncationSpec,
    radius: f64,
    samples: usize,
    p: f64,
    q_target: f64,
    rng: &mut R,
) -> Result<LipschitzReport> {
    if !(radius > 0.0) {
        return Err(Error::invalid("probe radius must be positive"));
    }
    if samples < 2 {
        return Err(Error::invalid("at least two samples are required"));
    }
    if !(q_target >= 1.0) {
        return Err(Error::invalid("target exponent must be at least 1"));
    }
    let (region, bounded) = match *trunc {
        TruncationSpec::RadialK { k } => (4.0 * radius.max(k), false),
        _ => (radius, true),
    };
    let unit_const = constant_field(basis, 1.0);
    let unit_const_norm = basis.norm_w1p(&unit_const, p)?;
    let draw = |rng: &mut R| -> FieldCoeffs {
        let u01 = rng.random_range(0.0f64..1.0);
        let target = region * if bounded { u01.powf(0.25) } else { u01 };
        if rng.random_bool(1.0 / 3.0) {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let c = unit_const.scaled(sign * target / unit_const_norm);
            let wiggle = random_field_with_norm(basis, rng, p, 0.05 * target);
            &c + &wiggle
        } else {
            random_field_with_norm(basis, rng, p, target)
        }
    };
    let clamp = |u: FieldCoeffs| -> FieldCoeffs {
        if !bounded {
            return u;
        }
        let n = basis.norm_w1p(&u, p).expect("own basis");
        if n > region {
            u.scaled(region / n)
        } else {
            u
        }
    };
    let mut best = 0.0;
    let mut best_pair = None;
    for _ in 0..samples {
        let u = clamp(draw(rng));
        let v = if rng.random_bool(0.5) {
            let delta = region * 10f64.powf(-6.0 * rng.random_range(0.0..1.0));
            let d = random_field_with_norm(basis, rng, p, delta);
            clamp(&u + &d)
        } else {
            clamp(draw(rng))
        };
        let den = basis.norm_w1p(&(&u - &v), p)?;
        if den < 1e-13 * region {
            continue;
        }
        let gu = boundary_source_values(src, trunc, basis, &u, p)?;
        let gv = boundary_source_values(src, trunc, basis, &v, p)?;
        let ratio = boundary_lq_of(gu[0] - gv[0], gu[1] - gv[1], q_target) / den;
        if ratio > best {
            best = ratio;
            best_pair = Some((
                u.coeffs.iter().copied().collect(),
                v.coeffs.iter().copied().collect(),
            ));
        }
    }
    Ok(LipschitzReport {
        empirical_constant: best,
        max_ratio_pair: best_pair,
        samples,
        region_radius: region,
    })
}
