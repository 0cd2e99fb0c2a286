//! Random fields for the randomized property checks and Lipschitz probes.

use nalgebra::DVector;
use rand::Rng;

use crate::basis::{BasisKind, BasisSet, FieldCoeffs};

/// Draws a field mixing a constant level, a few smooth cosine modes and
/// nodal noise, so that both boundary-dominated and gradient-dominated
/// shapes show up. The result is scaled by `scale`.
pub fn random_field<R: Rng + ?Sized>(basis: &BasisSet, rng: &mut R, scale: f64) -> FieldCoeffs {
    let coeffs = match basis.kind() {
        BasisKind::FemHat => {
            let level = rng.random_range(-1.0..1.0);
            let modes: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let noise = rng.random_range(0.0..0.5);
            DVector::from_iterator(
                basis.dim(),
                basis.mesh().nodes().iter().map(|&x| {
                    let smooth: f64 = modes
                        .iter()
                        .enumerate()
                        .map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * x).cos())
                        .sum();
                    level + smooth + noise * rng.random_range(-1.0..1.0)
                }),
            )
        }
        BasisKind::RobinEigen => DVector::from_iterator(
            basis.dim(),
            (0..basis.dim()).map(|j| rng.random_range(-1.0..1.0) / (1.0 + j as f64)),
        ),
    };
    FieldCoeffs {
        coeffs: coeffs * scale,
        basis_id: basis.id(),
    }
}

/// A random field rescaled to have W^{1,p} norm `radius`.
pub fn random_field_with_norm<R: Rng + ?Sized>(
    basis: &BasisSet,
    rng: &mut R,
    p: f64,
    radius: f64,
) -> FieldCoeffs {
    loop {
        let u = random_field(basis, rng, 1.0);
        let n = basis.norm_w1p(&u, p).expect("own basis, valid p");
        if n > 1e-12 {
            return u.scaled(radius / n);
        }
    }
}

/// Constant field `c` expressed in the basis (exact for hats, projected otherwise).
pub fn constant_field(basis: &BasisSet, c: f64) -> FieldCoeffs {
    match basis.kind() {
        BasisKind::FemHat => FieldCoeffs {
            coeffs: DVector::from_element(basis.dim(), c),
            basis_id: basis.id(),
        },
        BasisKind::RobinEigen => basis.project_l2(|_| c).expect("projection onto own basis"),
    }
}
