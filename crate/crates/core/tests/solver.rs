use std::f64::consts::PI;
use std::sync::Arc;

use plapwave_core::sampling::random_field;
use plapwave_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fem(n: usize) -> Arc<BasisSet> {
    Arc::new(BasisSet::fem(&Mesh::uniform(n, 8).unwrap()).unwrap())
}

fn eigen(n_elements: usize, count: usize) -> Arc<BasisSet> {
    Arc::new(BasisSet::robin_eigen(&Mesh::uniform(n_elements, 8).unwrap(), count).unwrap())
}

fn smooth(basis: &Arc<BasisSet>, p: f64) -> ProblemSpec {
    let u0 = basis.project_l2(|x| 0.6 * (PI * x).cos() + 0.2).unwrap();
    let u1 = basis.project_l2(|x| 0.5 * (PI * x).sin()).unwrap();
    ProblemSpec::new(basis.clone(), p, u0, u1)
}

fn terminal(pr: &ProblemSpec) -> State {
    let tr = integrate(pr).unwrap();
    assert_eq!(tr.termination, Termination::Completed, "{:?}", tr.message);
    tr.last_state().clone()
}

fn gap(a: &State, b: &State) -> f64 {
    (&a.u.coeffs - &b.u.coeffs)
        .amax()
        .max((&a.v.coeffs - &b.v.coeffs).amax())
}

#[test]
fn equilibrium_is_fixed() {
    let b = fem(8);
    let pr = ProblemSpec::new(b.clone(), 2.5, b.zero(), b.zero())
        .with_source(SourceSpec::power(1.0, 1.5));
    let st = State {
        t: 0.0,
        u: b.zero(),
        v: b.zero(),
    };
    assert_eq!(rhs(&pr, &st).unwrap().amax(), 0.0);
    let next = step_implicit_midpoint(&pr, &st).unwrap().unwrap();
    assert_eq!(next.u, b.zero());
    assert_eq!(next.v, b.zero());
    let next = step_rk4(&pr, &st).unwrap().unwrap();
    assert_eq!(next.u, b.zero());
    let tr = integrate(&pr.clone().with_horizon(0.5, 0.05)).unwrap();
    assert!(tr
        .states
        .iter()
        .all(|s| s.u.coeffs.amax() == 0.0 && s.v.coeffs.amax() == 0.0));
    assert!(tr
        .records
        .iter()
        .all(|r| r.script_e == 0.0 && r.balance_residual == 0.0));
    let c = global_source_constant(&pr.src, 2.5);
    assert!(tr
        .records
        .iter()
        .all(|r| r.script_e <= gronwall_envelope(0.0, c, r.t)));
}

#[test]
fn linear_eigenmode_acceleration() {
    let b = eigen(32, 6);
    for k in 0..6 {
        let pr = ProblemSpec::new(b.clone(), 2.0, b.unit(k).unwrap(), b.zero());
        let st = State {
            t: 0.0,
            u: b.unit(k).unwrap(),
            v: b.zero(),
        };
        let a = rhs(&pr, &st).unwrap();
        let lam = b.eigvals().unwrap()[k];
        let want = b.unit(k).unwrap().coeffs * (-lam);
        assert!((a - want).amax() <= 1e-9 * lam, "mode {k}");
    }
}

#[test]
fn acceleration_satisfies_the_galerkin_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for b in [fem(12), eigen(24, 7)] {
        for trunc in [
            TruncationSpec::None,
            TruncationSpec::RadialK { k: 1.0 },
            TruncationSpec::CutoffN { n: 1 },
        ] {
            let u = random_field(&b, &mut rng, 1.5);
            let v = random_field(&b, &mut rng, 1.5);
            let src = SourceSpec::power_plus_linear(1.3, -0.4, 1.5);
            let pr = ProblemSpec::new(b.clone(), 2.5, u.clone(), v.clone())
                .with_source(src.clone())
                .with_truncation(trunc);
            let a = rhs(
                &pr,
                &State {
                    t: 0.0,
                    u: u.clone(),
                    v: v.clone(),
                },
            )
            .unwrap();
            let p_u = apply_p_laplacian(&PLaplacianForm::new(&b, 2.5).unwrap(), &u).unwrap();
            let d_v = apply_damping(&DampingForm::new(&b), &v).unwrap();
            let s_u = boundary_source_vector(&b, &src, &trunc, &u, 2.5).unwrap();
            let res = b.mass() * &a + &p_u + &d_v - &s_u;
            let scale = 1.0 + p_u.amax() + d_v.amax() + s_u.amax();
            assert!(res.amax() <= 1e-11 * scale, "{}", res.amax());
        }
    }
}

#[test]
fn linear_midpoint_energy_never_increases() {
    let b = fem(7);
    let tr = integrate(&smooth(&b, 2.0).with_horizon(2.0, 0.05)).unwrap();
    for w in tr.records.windows(2) {
        assert!(
            w[1].script_e <= w[0].script_e,
            "{} -> {}",
            w[0].script_e,
            w[1].script_e
        );
    }
}

#[test]
fn midpoint_is_second_order() {
    let b = fem(16);
    let run = |dt| {
        terminal(
            &smooth(&b, 2.5)
                .with_source(SourceSpec::power(1.0, 1.5))
                .with_horizon(1.0, dt),
        )
    };
    let states: Vec<State> = [0.01, 0.005, 0.0025, 0.00125]
        .iter()
        .map(|&dt| run(dt))
        .collect();
    let diffs: Vec<f64> = states.windows(2).map(|w| gap(&w[0], &w[1])).collect();
    for w in diffs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.5).contains(&ratio), "{diffs:?}");
    }
}

#[test]
fn rk4_is_fourth_order() {
    let b = eigen(32, 4);
    let run = |dt| {
        terminal(
            &smooth(&b, 2.5)
                .with_source(SourceSpec::power(1.0, 1.5))
                .with_scheme(Scheme::ExplicitRk4)
                .with_horizon(1.0, dt),
        )
    };
    // finer steps reach round-off
    let states: Vec<State> = [0.01, 0.005, 0.0025, 0.00125]
        .iter()
        .map(|&dt| run(dt))
        .collect();
    let diffs: Vec<f64> = states.windows(2).map(|w| gap(&w[0], &w[1])).collect();
    for w in diffs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((3.5..4.5).contains(&order), "{diffs:?}");
    }
}

#[test]
fn integrators_agree_to_second_order() {
    let b = eigen(32, 4);
    let base = smooth(&b, 2.5).with_source(SourceSpec::power(1.0, 1.5));
    let reference = terminal(
        &base
            .clone()
            .with_scheme(Scheme::ExplicitRk4)
            .with_horizon(1.0, 1e-3),
    );
    let gaps: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| gap(&terminal(&base.clone().with_horizon(1.0, dt)), &reference))
        .collect();
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.5).contains(&ratio), "{gaps:?}");
    }
}

#[test]
fn boundary_primitive_tracks_work() {
    let b = fem(16);
    let src = SourceSpec::power_plus_linear(1.0, 0.5, 1.5);
    let defects: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| {
            let tr = integrate(
                &smooth(&b, 2.5)
                    .with_source(src.clone())
                    .with_horizon(1.0, dt),
            )
            .unwrap();
            for r in &tr.records {
                assert_eq!(r.e, r.script_e - r.f_boundary);
            }
            let (first, last) = (tr.records[0], *tr.records.last().unwrap());
            (last.f_boundary - first.f_boundary - last.work_cum).abs()
        })
        .collect();
    for w in defects.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.5).contains(&ratio), "{defects:?}");
    }
}

#[test]
fn last_step_lands_on_horizon() {
    let b = fem(8);
    let tr = integrate(&smooth(&b, 2.5).with_horizon(0.25, 0.1)).unwrap();
    let times = tr.times();
    assert_eq!(times.len(), 4);
    assert_eq!(*times.last().unwrap(), 0.25);
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(tr.records.len(), tr.states.len());
}

#[test]
fn blowup_is_detected_and_monitored() {
    let b = fem(8);
    let u0 = b.interpolate(|_| 3.0).unwrap();
    let pr = ProblemSpec::new(b.clone(), 2.5, u0, b.zero())
        .with_source(SourceSpec::power(20.0, 4.0))
        .with_horizon(2.0, 0.01)
        .with_blowup_threshold(1e6);
    let tr = integrate(&pr).unwrap();
    assert!(
        matches!(
            tr.termination,
            Termination::BlowupDetected | Termination::NewtonFailure
        ),
        "{:?}",
        tr.termination
    );
    if tr.termination == Termination::BlowupDetected {
        let rep = blowup_monitor(&tr, 1e6).unwrap();
        assert!(rep.flagged);
        assert_eq!(rep.t_flag, Some(tr.last_state().t));
    }
}

#[test]
fn unstable_explicit_run_halts_with_blowup() {
    let b = fem(32);
    let pr = smooth(&b, 2.5)
        .with_scheme(Scheme::ExplicitRk4)
        .with_horizon(1.0, 0.05);
    let tr = integrate(&pr).unwrap();
    assert_eq!(tr.termination, Termination::BlowupDetected);
    let rep = blowup_monitor(&tr, pr.blowup_threshold).unwrap();
    assert!(rep.flagged);
    assert_eq!(rep.t_flag, Some(tr.last_state().t));
}

#[test]
fn monitor_thresholds() {
    let b = fem(8);
    let tr = integrate(&smooth(&b, 2.5).with_horizon(0.5, 0.05)).unwrap();
    assert!(!blowup_monitor(&tr, 1e12).unwrap().flagged);
    let low = blowup_monitor(&tr, 0.5 * tr.records[0].script_e).unwrap();
    assert_eq!(low.t_flag, Some(0.0));
    assert!(blowup_monitor(&tr, 0.0).is_err());
}

#[test]
fn newton_failure_halts_integration() {
    let b = fem(8);
    let pr = smooth(&b, 2.5)
        .with_horizon(0.5, 0.05)
        .with_newton(1e-30, 2);
    let tr = integrate(&pr).unwrap();
    assert_eq!(tr.termination, Termination::NewtonFailure);
    assert_eq!(tr.states.len(), 1);
    assert!(tr.message.is_some());
}

#[test]
fn weak_form_rejects_misaligned_fields() {
    let b = fem(8);
    let pr = smooth(&b, 2.5).with_horizon(0.2, 0.05);
    let tr = integrate(&pr).unwrap();
    let phi = vec![b.zero(); tr.states.len() - 1];
    assert!(matches!(
        weak_form_residual(&pr, &tr, &phi, &phi),
        Err(Error::InvalidArgument(_))
    ));
    let (phi, phi_t) = TestField::Zero.samples(&pr, &tr).unwrap();
    assert_eq!(weak_form_residual(&pr, &tr, &phi, &phi_t).unwrap(), 0.0);
}

#[test]
fn problem_validation() {
    let b = fem(4);
    let base = smooth(&b, 2.5);
    assert!(base.clone().with_horizon(1.0, 0.0).validate().is_err());
    assert!(base.clone().with_horizon(0.01, 0.1).validate().is_err());
    assert!(base.clone().with_newton(0.0, 10).validate().is_err());
    assert!(smooth(&b, 1.5).validate().is_err());
    let other = fem(5);
    let mut mixed = base.clone();
    mixed.u1 = other.zero();
    assert!(mixed.validate().is_err());
    assert!(base.validate().is_ok());
}

#[test]
fn radial_truncation_inactive_inside_ball() {
    let b = fem(16);
    let base = smooth(&b, 2.5)
        .with_source(SourceSpec::power(1.0, 1.5))
        .with_horizon(1.0, 0.01);
    let plain = integrate(&base).unwrap();
    let max_norm = plain
        .states
        .iter()
        .map(|s| b.norm_w1p(&s.u, 2.5).unwrap())
        .fold(0.0, f64::max);
    let radial = integrate(
        &base
            .clone()
            .with_truncation(TruncationSpec::RadialK { k: 2.0 * max_norm }),
    )
    .unwrap();
    for (a, r) in plain.states.iter().zip(&radial.states) {
        assert!(gap(a, r) <= 1e-12);
    }
}
