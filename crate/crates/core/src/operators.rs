//! Weak-form operators of the Robin p-Laplacian and the Kelvin–Voigt damping,
//! and executable versions of their monotonicity properties.
//!
//! For a piecewise-linear field the gradient is constant on every element, so
//! the volume integral `int |u'|^{p-2} u' w_j'` reduces to an exact sum over
//! elements; no quadrature error enters the nonlinear operator.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSet, FieldCoeffs};
use crate::error::{Error, Result};
use crate::sampling::random_field_with_norm;

/// Entries `F_j = <A u, w_j>` of an operator applied to a field.
pub type DualVector = DVector<f64>;

/// `|g|^{p-2} g`, taken as 0 at `g = 0`.
#[inline]
pub fn flux(g: f64, p: f64) -> f64 {
    if g == 0.0 {
        0.0
    } else {
        g.abs().powf(p - 2.0) * g
    }
}

/// `(p-1)|g|^{p-2}`, the derivative of [`flux`]; 0 at `g = 0`.
#[inline]
pub fn flux_derivative(g: f64, p: f64) -> f64 {
    if g == 0.0 {
        0.0
    } else {
        (p - 1.0) * g.abs().powf(p - 2.0)
    }
}

/// `<-Delta_p u, phi> = int |u'|^{p-2} u' phi' + sum_boundary |u|^{p-2} u phi`.
#[derive(Debug, Clone, Copy)]
pub struct PLaplacianForm<'a> {
    p: f64,
    basis: &'a BasisSet,
}

impl<'a> PLaplacianForm<'a> {
    pub fn new(basis: &'a BasisSet, p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::invalid(format!(
                "p-Laplacian exponent p = {p} must exceed 1"
            )));
        }
        Ok(PLaplacianForm { p, basis })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn basis(&self) -> &'a BasisSet {
        self.basis
    }

    /// Operator applied to nodal values, paired with the hat functions.
    pub(crate) fn apply_nodal(&self, nodal: &DVector<f64>) -> DVector<f64> {
        let mesh = self.basis.mesh();
        let n = nodal.len();
        let mut out = DVector::zeros(n);
        for e in 0..mesh.n_elements() {
            let h = mesh.element_size(e);
            let q = flux((nodal[e + 1] - nodal[e]) / h, self.p);
            // h * q * (+-1/h)
            out[e] -= q;
            out[e + 1] += q;
        }
        out[0] += flux(nodal[0], self.p);
        out[n - 1] += flux(nodal[n - 1], self.p);
        out
    }

    /// Tridiagonal hat-space Jacobian of [`Self::apply_nodal`].
    pub(crate) fn jacobian_nodal(&self, nodal: &DVector<f64>) -> DMatrix<f64> {
        let mesh = self.basis.mesh();
        let n = nodal.len();
        let mut jac = DMatrix::zeros(n, n);
        for e in 0..mesh.n_elements() {
            let h = mesh.element_size(e);
            let k = flux_derivative((nodal[e + 1] - nodal[e]) / h, self.p) / h;
            jac[(e, e)] += k;
            jac[(e + 1, e + 1)] += k;
            jac[(e, e + 1)] -= k;
            jac[(e + 1, e)] -= k;
        }
        jac[(0, 0)] += flux_derivative(nodal[0], self.p);
        jac[(n - 1, n - 1)] += flux_derivative(nodal[n - 1], self.p);
        jac
    }

    pub fn apply(&self, u: &FieldCoeffs) -> Result<DualVector> {
        let nodal = self.basis.nodal_values(u)?;
        Ok(self.basis.nodal_dual_to_basis(&self.apply_nodal(&nodal)))
    }

    /// Jacobian `dF_j / dc_k` with the same element integration as [`Self::apply`].
    pub fn jacobian(&self, u: &FieldCoeffs) -> Result<DMatrix<f64>> {
        let nodal = self.basis.nodal_values(u)?;
        Ok(self
            .basis
            .nodal_matrix_to_basis(&self.jacobian_nodal(&nodal)))
    }

    /// `<-Delta_p u, phi>`.
    pub fn pairing(&self, u: &FieldCoeffs, phi: &FieldCoeffs) -> Result<f64> {
        self.basis.check(phi)?;
        Ok(self.apply(u)?.dot(&phi.coeffs))
    }
}

/// The damping form `(v', phi') + v(0)phi(0) + v(1)phi(1)`.
#[derive(Debug, Clone)]
pub struct DampingForm<'a> {
    matrix: DMatrix<f64>,
    basis: &'a BasisSet,
}

impl<'a> DampingForm<'a> {
    pub fn new(basis: &'a BasisSet) -> Self {
        DampingForm {
            matrix: basis.robin_form(),
            basis,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, v: &FieldCoeffs) -> Result<DualVector> {
        self.basis.check(v)?;
        Ok(&self.matrix * &v.coeffs)
    }

    pub fn pairing(&self, v: &FieldCoeffs, phi: &FieldCoeffs) -> Result<f64> {
        self.basis.check(phi)?;
        Ok(self.apply(v)?.dot(&phi.coeffs))
    }
}

pub fn apply_p_laplacian(form: &PLaplacianForm<'_>, u: &FieldCoeffs) -> Result<DualVector> {
    form.apply(u)
}

pub fn apply_damping(form: &DampingForm<'_>, v: &FieldCoeffs) -> Result<DualVector> {
    form.apply(v)
}

/// Outcome of a randomized check of `||-Delta_p u||_* <= 2 ||u||^{p-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualNormReport {
    pub lhs_estimate: f64,
    pub rhs: f64,
    pub probes: usize,
    pub pass: bool,
}

/// Maximizes `|<-Delta_p u, phi>|` over random unit-norm probes `phi`
/// (plus the normalized field itself) and compares with `2 ||u||^{p-1}`.
pub fn dual_norm_bound_check<R: Rng + ?Sized>(
    form: &PLaplacianForm<'_>,
    u: &FieldCoeffs,
    probes: usize,
    rng: &mut R,
) -> Result<DualNormReport> {
    if probes == 0 {
        return Err(Error::invalid("at least one probe is required"));
    }
    let basis = form.basis();
    let p = form.p();
    let action = form.apply(u)?;
    let norm_u = basis.norm_w1p(u, p)?;
    let rhs = 2.0 * norm_u.powf(p - 1.0);
    let mut lhs: f64 = 0.0;
    if norm_u > 0.0 {
        lhs = lhs.max(action.dot(&u.coeffs).abs() / norm_u);
    }
    for _ in 0..probes {
        let phi = random_field_with_norm(basis, rng, p, 1.0);
        lhs = lhs.max(action.dot(&phi.coeffs).abs());
    }
    Ok(DualNormReport {
        lhs_estimate: lhs,
        rhs,
        probes,
        pass: lhs <= rhs + 1e-9,
    })
}

/// `<-Delta_p u + Delta_p v, u - v>`; nonnegative for a monotone operator.
pub fn monotonicity_check(
    form: &PLaplacianForm<'_>,
    u: &FieldCoeffs,
    v: &FieldCoeffs,
) -> Result<f64> {
    u.same_basis(v)?;
    let diff = form.apply(u)? - form.apply(v)?;
    Ok(diff.dot(&(&u.coeffs - &v.coeffs)))
}

/// `<-Delta_p (u + lambda v), phi>` for each `lambda`.
pub fn hemicontinuity_probe(
    form: &PLaplacianForm<'_>,
    u: &FieldCoeffs,
    v: &FieldCoeffs,
    phi: &FieldCoeffs,
    lambdas: &[f64],
) -> Result<Vec<f64>> {
    u.same_basis(v)?;
    u.same_basis(phi)?;
    lambdas
        .iter()
        .map(|&lam| {
            let shifted = FieldCoeffs {
                coeffs: &u.coeffs + &v.coeffs * lam,
                basis_id: u.basis_id,
            };
            form.pairing(&shifted, phi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::sampling::random_field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fem(n: usize) -> BasisSet {
        BasisSet::fem(&Mesh::uniform(n, 8).unwrap()).unwrap()
    }

    #[test]
    fn zero_field_gives_zero() {
        let b = fem(6);
        let f = PLaplacianForm::new(&b, 2.5).unwrap();
        assert!(f.apply(&b.zero()).unwrap().iter().all(|&x| x == 0.0));
        let d = DampingForm::new(&b);
        assert!(d.apply(&b.zero()).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn identity_field_pairing_is_two() {
        let b = fem(8);
        let u = b.interpolate(|x| x).unwrap();
        let f = PLaplacianForm::new(&b, 2.5).unwrap();
        let pairing = f.pairing(&u, &u).unwrap();
        assert!((pairing - 2.0).abs() < 1e-13, "{pairing}");
    }

    #[test]
    fn invalid_exponent() {
        let b = fem(2);
        assert!(PLaplacianForm::new(&b, 1.0).is_err());
        assert!(PLaplacianForm::new(&b, f64::NAN).is_err());
    }

    #[test]
    fn basis_mismatch_rejected() {
        let a = fem(3);
        let b = fem(4);
        let f = PLaplacianForm::new(&a, 2.5).unwrap();
        assert!(matches!(f.apply(&b.zero()), Err(Error::InvalidArgument(_))));
        let d = DampingForm::new(&a);
        assert!(d.apply(&b.zero()).is_err());
        assert!(monotonicity_check(&f, &a.zero(), &b.zero()).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for basis in [
            fem(7),
            BasisSet::robin_eigen(&Mesh::uniform(10, 4).unwrap(), 5).unwrap(),
        ] {
            let f = PLaplacianForm::new(&basis, 2.5).unwrap();
            let u = random_field(&basis, &mut rng, 1.0);
            let jac = f.jacobian(&u).unwrap();
            let h = 1e-6;
            for k in 0..basis.dim() {
                let mut up = u.clone();
                let mut dn = u.clone();
                up.coeffs[k] += h;
                dn.coeffs[k] -= h;
                let col = (f.apply(&up).unwrap() - f.apply(&dn).unwrap()) / (2.0 * h);
                for j in 0..basis.dim() {
                    assert!((col[j] - jac[(j, k)]).abs() < 1e-6 * (1.0 + jac[(j, k)].abs()));
                }
            }
        }
    }

    #[test]
    fn damping_on_eigenmode() {
        let b = BasisSet::robin_eigen(&Mesh::uniform(20, 4).unwrap(), 6).unwrap();
        let d = DampingForm::new(&b);
        let ev = b.eigvals().unwrap();
        for (k, lam) in ev.iter().enumerate() {
            let e = b.unit(k).unwrap();
            let lhs = d.apply(&e).unwrap();
            let rhs = b.mass() * &e.coeffs * *lam;
            assert!((lhs - rhs).amax() < 1e-9);
        }
    }

    #[test]
    fn operator_norm_identity_field() {
        let b = fem(8);
        let u = b.interpolate(|x| x).unwrap();
        let f = PLaplacianForm::new(&b, 2.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rep = dual_norm_bound_check(&f, &u, 200, &mut rng).unwrap();
        assert!((rep.rhs - 2f64.powf(1.6)).abs() < 1e-12);
        assert!(rep.pass && rep.lhs_estimate <= rep.rhs);
        let zero = dual_norm_bound_check(&f, &b.zero(), 10, &mut rng).unwrap();
        assert_eq!(zero.lhs_estimate, 0.0);
        assert!(zero.pass);
        assert!(dual_norm_bound_check(&f, &u, 0, &mut rng).is_err());
    }

    #[test]
    fn monotonicity_trivial_cases() {
        let b = fem(9);
        let f = PLaplacianForm::new(&b, 2.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_field(&b, &mut rng, 1.0);
        assert_eq!(monotonicity_check(&f, &u, &u).unwrap(), 0.0);
        let m0 = monotonicity_check(&f, &u, &b.zero()).unwrap();
        let np = b.w1p_norm_pow(&u, 2.5).unwrap();
        assert!((m0 - np).abs() < 1e-12 * np);
    }

    #[test]
    fn hemicontinuity_constant_when_direction_vanishes() {
        let b = fem(5);
        let f = PLaplacianForm::new(&b, 2.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_field(&b, &mut rng, 1.0);
        let phi = random_field(&b, &mut rng, 1.0);
        let vals = hemicontinuity_probe(&f, &u, &b.zero(), &phi, &[1.0, 0.1, 0.01]).unwrap();
        assert!(vals.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn hemicontinuity_from_zero_scales_like_power() {
        let b = fem(6);
        let p = 2.5;
        let f = PLaplacianForm::new(&b, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_field(&b, &mut rng, 1.0);
        let lambdas = [1e-1, 1e-2, 1e-3];
        let vals = hemicontinuity_probe(&f, &b.zero(), &v, &v, &lambdas).unwrap();
        let np = b.w1p_norm_pow(&v, p).unwrap();
        for (lam, val) in lambdas.iter().zip(&vals) {
            // <-Delta_p(lam v), v> = lam^{p-1} ||v||^p
            let want = lam.powf(p - 1.0) * np;
            assert!((val - want).abs() < 1e-12 * (1.0 + want));
        }
    }
}
