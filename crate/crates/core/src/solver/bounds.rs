//! Existence-horizon and Gronwall envelopes for the energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sources::SourceSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonEstimate {
    /// Truncation radius `K = 2^m`.
    pub k: f64,
    /// Time up to which `script_e <= K^p / p`, hence `||u||_{1,p} <= K`.
    pub t0: f64,
}

/// Smallest `K = 2^m` with `K^{p/2} > sqrt(2p) E0` and `K^p > 2p`.
pub fn select_truncation_radius(p: f64, script_e0: f64) -> f64 {
    let lhs = (2.0 * p).sqrt() * script_e0;
    let mut k: f64 = 1.0;
    while !(k.powf(0.5 * p) > lhs && k.powf(p) > 2.0 * p) {
        k *= 2.0;
    }
    k
}

/// `T0 = min{ (K^{p/2} - sqrt(2p) E0) / (sqrt(2p) C_K), (ln K^p - ln 2p) / (2p C_K) }`
/// with `K` from [`select_truncation_radius`].
pub fn local_horizon_estimate(p: f64, script_e0: f64, c_k: f64) -> Result<HorizonEstimate> {
    if !(c_k > 0.0) || !(script_e0 >= 0.0) || !(p > 1.0) {
        return Err(Error::invalid(
            "horizon estimate needs C_K > 0, E0 >= 0 and p > 1",
        ));
    }
    let k = select_truncation_radius(p, script_e0);
    Ok(HorizonEstimate {
        k,
        t0: horizon_for_radius(p, script_e0, c_k, k),
    })
}

/// The horizon formula for a given admissible radius.
pub fn horizon_for_radius(p: f64, script_e0: f64, c_k: f64, k: f64) -> f64 {
    let s = (2.0 * p).sqrt();
    let first = (k.powf(0.5 * p) - s * script_e0) / (s * c_k);
    let second = (p * k.ln() - (2.0 * p).ln()) / (2.0 * p * c_k);
    first.min(second)
}

/// `(E0 + C t) exp(C t)`.
pub fn gronwall_envelope(script_e0: f64, c: f64, t: f64) -> f64 {
    (script_e0 + c * t) * (c * t).exp()
}

/// Constant `C` for which `E(t) <= (E(0) + C t) exp(C t)` holds along
/// Galerkin trajectories on the unit interval when `r <= p/2`.
///
/// With `|f(s)| <= c_f (|s|^r + 1)` and `|s|^{2r} <= 1 + |s|^p`,
/// `(f(u), v)_boundary <= |f(u)|_2^2 / 2 + ||v||_{1,2}^2 / 2` and
/// `|f(u)|_2^2 / 2 <= c_f^2 (4 + p E)`, so `C = c_f^2 max(4, p)`.
pub fn global_source_constant(src: &SourceSpec, p: f64) -> f64 {
    let cf = src.magnitude_constant();
    cf * cf * p.max(4.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_energy_example() {
        let est = local_horizon_estimate(2.5, 0.0, 1.0).unwrap();
        assert_eq!(est.k, 2.0);
        let first = 2f64.powf(1.25) / 5f64.sqrt();
        let second = (2.5 * 2f64.ln() - 5f64.ln()) / 5.0;
        assert!((first - 1.063_659).abs() < 1e-6);
        assert!((est.t0 - second).abs() < 1e-15);
        assert!(
            (est.t0 - 0.024_686_007_793_152_6).abs() < 1e-15,
            "{}",
            est.t0
        );
        assert!((est.t0 - 0.0247).abs() < 2e-5);
    }

    #[test]
    fn doubling_constant_halves_horizon() {
        for e0 in [0.0, 0.3, 2.0, 17.0] {
            let a = local_horizon_estimate(2.5, e0, 0.7).unwrap();
            let b = local_horizon_estimate(2.5, e0, 1.4).unwrap();
            assert_eq!(a.k, b.k);
            assert!((a.t0 - 2.0 * b.t0).abs() < 1e-15 * a.t0.abs().max(1.0));
        }
    }

    #[test]
    fn first_branch_vanishes_at_admissibility_edge() {
        let p = 2.5;
        let k: f64 = 4.0;
        let edge = k.powf(0.5 * p) / (2.0 * p).sqrt();
        let t = horizon_for_radius(p, edge * (1.0 - 1e-12), 1.0, k);
        assert!((0.0..1e-10).contains(&t));
    }

    #[test]
    fn radius_is_admissible_and_minimal() {
        for e0 in [0.0, 0.5, 3.0, 40.0] {
            let p = 2.7;
            let k = select_truncation_radius(p, e0);
            assert!(k.powf(p / 2.0) > (2.0 * p).sqrt() * e0 && k.powf(p) > 2.0 * p);
            let h = k / 2.0;
            assert!(!(h.powf(p / 2.0) > (2.0 * p).sqrt() * e0 && h.powf(p) > 2.0 * p));
        }
    }

    #[test]
    fn envelope_edges() {
        assert_eq!(gronwall_envelope(1.5, 3.0, 0.0), 1.5);
        assert_eq!(gronwall_envelope(1.5, 0.0, 10.0), 1.5);
        assert_eq!(gronwall_envelope(0.0, 0.0, 10.0), 0.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(local_horizon_estimate(2.5, 0.0, 0.0).is_err());
        assert!(local_horizon_estimate(2.5, -1.0, 1.0).is_err());
    }
}
