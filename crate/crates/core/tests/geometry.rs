use std::f64::consts::PI;

use nalgebra::DVector;
use plapwave_core::{BasisSet, Error, Mesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fem(n: usize) -> BasisSet {
    BasisSet::fem(&Mesh::uniform(n, 8).unwrap()).unwrap()
}

/// Smallest positive root of `(k^2 - 1) sin k = 2 k cos k`, the Robin
/// eigencondition on the unit interval, by bisection.
fn robin_k1() -> f64 {
    let g = |k: f64| (k * k - 1.0) * k.sin() - 2.0 * k * k.cos();
    let (mut lo, mut hi) = (0.5, 2.0);
    assert!(g(lo) * g(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn first_robin_eigenvalue_converges_quadratically() {
    let k = robin_k1();
    assert!((k - 1.306_542_9).abs() < 1e-6, "k = {k}");
    let exact = k * k;
    let errs: Vec<f64> = [64, 128]
        .iter()
        .map(|&n| {
            let b = BasisSet::robin_eigen(&Mesh::uniform(n, 4).unwrap(), 3).unwrap();
            b.eigvals().unwrap()[0] - exact
        })
        .collect();
    assert!(
        errs[0] > 0.0 && errs[1] > 0.0,
        "conforming eigenvalues lie above: {errs:?}"
    );
    let ratio = errs[0] / errs[1];
    assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
}

/// Independent `||g - u_h||_{W^{1,p}}` with composite Gauss quadrature on each element.
fn interpolation_error(
    basis: &BasisSet,
    u: &plapwave_core::FieldCoeffs,
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    p: f64,
) -> f64 {
    let nodes = basis.mesh().nodes().to_vec();
    let gl = [
        (-0.906_179_845_938_664, 0.236_926_885_056_189),
        (-0.538_469_310_105_683, 0.478_628_670_499_366),
        (0.0, 0.568_888_888_888_889),
        (0.538_469_310_105_683, 0.478_628_670_499_366),
        (0.906_179_845_938_664, 0.236_926_885_056_189),
    ];
    let mut grad = 0.0;
    for w in nodes.windows(2) {
        let slope = basis.eval_grad(u, 0.5 * (w[0] + w[1])).unwrap();
        let sub = 16;
        for s in 0..sub {
            let a = w[0] + (w[1] - w[0]) * s as f64 / sub as f64;
            let b = a + (w[1] - w[0]) / sub as f64;
            for (xi, wi) in gl {
                let x = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                grad += 0.5 * (b - a) * wi * (dg(x) - slope).abs().powf(p);
            }
        }
    }
    let e0 = (g(0.0) - basis.eval(u, 0.0).unwrap()).abs().powf(p);
    let e1 = (g(1.0) - basis.eval(u, 1.0).unwrap()).abs().powf(p);
    (grad + e0 + e1).powf(1.0 / p)
}

#[test]
fn interpolation_error_halves_with_h() {
    let p = 2.5;
    let errs: Vec<f64> = [16, 32]
        .iter()
        .map(|&n| {
            let b = fem(n);
            let u = b.interpolate(|x| (PI * x).sin()).unwrap();
            interpolation_error(&b, &u, |x| (PI * x).sin(), |x| PI * (PI * x).cos(), p)
        })
        .collect();
    assert!(errs[1] < errs[0]);
    let ratio = errs[0] / errs[1];
    assert!((1.9..2.1).contains(&ratio), "ratio {ratio}");
}

fn projection_l2_error(n: usize, g: fn(f64) -> f64) -> f64 {
    let b = fem(n);
    let u = b.project_l2(g).unwrap();
    // fine midpoint-rule oracle
    let m = 20_000;
    let h = 1.0 / m as f64;
    let s: f64 = (0..m)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            (g(x) - b.eval(&u, x).unwrap()).powi(2) * h
        })
        .sum();
    s.sqrt()
}

#[test]
fn projection_of_smooth_function_is_second_order() {
    let g: fn(f64) -> f64 = |x| (2.0 * x).exp() * (3.0 * x).sin();
    let e: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&n| projection_l2_error(n, g))
        .collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.6..4.4).contains(&ratio), "ratio {ratio} from {e:?}");
    }
}

#[test]
fn projection_of_linear_function_is_exact() {
    for n in [4, 8, 16] {
        assert!(projection_l2_error(n, |x| x) < 1e-12);
    }
}

#[test]
fn norm_matches_direct_sum_for_random_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mesh = Mesh::from_nodes(vec![0.0, 0.1, 0.25, 0.3, 0.6, 0.61, 1.0], 8).unwrap();
    let b = BasisSet::fem(&mesh).unwrap();
    for _ in 0..1000 {
        let c: DVector<f64> = DVector::from_fn(b.dim(), |_, _| rng.random_range(-3.0..3.0));
        let p: f64 = rng.random_range(1.0..4.0);
        let nodes = mesh.nodes();
        let mut direct = c[0].abs().powf(p) + c[b.dim() - 1].abs().powf(p);
        for e in 0..nodes.len() - 1 {
            let h = nodes[e + 1] - nodes[e];
            direct += h * ((c[e + 1] - c[e]) / h).abs().powf(p);
        }
        let u = b.field(c).unwrap();
        let got = b.w1p_norm_pow(&u, p).unwrap();
        assert!((got - direct).abs() <= 1e-12 * direct, "{got} vs {direct}");
    }
}

#[test]
fn l2_norm_squared_is_mass_quadratic_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let b = fem(12);
    for _ in 0..200 {
        let c = DVector::from_fn(b.dim(), |_, _| rng.random_range(-2.0..2.0));
        let quad = c.dot(&(b.mass() * &c));
        let u = b.field(c).unwrap();
        assert!((b.norm_l2(&u).unwrap().powi(2) - quad).abs() < 1e-12);
    }
}

#[test]
fn eigenbasis_errors() {
    let mesh = Mesh::uniform(4, 4).unwrap();
    assert!(matches!(
        BasisSet::robin_eigen(&mesh, 6),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        BasisSet::robin_eigen(&mesh, 0),
        Err(Error::InvalidArgument(_))
    ));
    let eig = BasisSet::robin_eigen(&mesh, 3).unwrap();
    assert!(matches!(
        eig.interpolate(|x| x),
        Err(Error::UnsupportedOperation(_))
    ));
}

#[test]
fn mesh_rejects_empty_partition() {
    assert!(matches!(
        Mesh::uniform(0, 4),
        Err(Error::InvalidArgument(_))
    ));
    let one = Mesh::uniform(1, 4).unwrap();
    assert_eq!(one.nodes(), &[0.0, 1.0]);
}
