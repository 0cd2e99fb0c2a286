//! Experiment dispatch. Every experiment produces metrics, audits with explicit
//! tolerances, trajectories and plot-ready tables; failures of the numerical
//! core are recorded in the report rather than propagated.

use std::collections::BTreeMap;
use std::sync::Arc;

use plapwave_core::sampling::random_field;
use plapwave_core::sources::pointwise_trace_constant;
use plapwave_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BasisConfig, Experiment, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Audit {
    pub name: String,
    /// Stable tag of the property or hypothesis being audited.
    pub anchor: String,
    /// How `value` is compared with `tolerance`.
    pub criterion: String,
    pub tolerance: f64,
    pub value: f64,
    pub pass: bool,
}

impl Audit {
    fn at_most(name: &str, anchor: &str, value: f64, tolerance: f64) -> Self {
        Audit {
            name: name.into(),
            anchor: anchor.into(),
            criterion: "value <= tolerance".into(),
            tolerance,
            value,
            pass: value <= tolerance,
        }
    }

    fn at_least(name: &str, anchor: &str, value: f64, tolerance: f64) -> Self {
        Audit {
            name: name.into(),
            anchor: anchor.into(),
            criterion: "value >= tolerance".into(),
            tolerance,
            value,
            pass: value >= tolerance,
        }
    }

    fn within(name: &str, anchor: &str, value: f64, lo: f64, hi: f64) -> Self {
        Audit {
            name: name.into(),
            anchor: anchor.into(),
            criterion: format!("{lo} <= value <= {hi}"),
            tolerance: hi - lo,
            value,
            pass: (lo..=hi).contains(&value),
        }
    }
}

/// One integrated trajectory, exported as CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub name: String,
    pub termination: Termination,
    pub message: Option<String>,
    pub steps: usize,
    pub newton_iterations: usize,
    #[serde(skip)]
    pub records: Vec<EnergyRecord>,
}

impl RunRecord {
    fn new(name: impl Into<String>, traj: &Trajectory) -> Self {
        RunRecord {
            name: name.into(),
            termination: traj.termination,
            message: traj.message.clone(),
            steps: traj.states.len() - 1,
            newton_iterations: traj.newton_iterations,
            records: traj.records.clone(),
        }
    }
}

/// A plot-ready numeric table, exported as CSV.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub metrics: BTreeMap<String, f64>,
    pub audits: Vec<Audit>,
    pub errors: Vec<String>,
    pub runs: Vec<RunRecord>,
    pub tables: Vec<Table>,
}

impl ExperimentReport {
    fn new(experiment: Experiment) -> Self {
        ExperimentReport {
            experiment,
            metrics: BTreeMap::new(),
            audits: Vec::new(),
            errors: Vec::new(),
            runs: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        self.errors.is_empty() && self.audits.iter().all(|a| a.pass)
    }

    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    fn completed(&mut self, name: &str, traj: &Trajectory) {
        let ok = traj.termination == Termination::Completed;
        self.audits.push(Audit::at_least(
            &format!("{name}: integration completed"),
            "run-termination",
            if ok { 1.0 } else { 0.0 },
            1.0,
        ));
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub regime: RegimeReport,
    pub regime_summary: String,
    /// Hypotheses not met by the parameters; only possible in permissive mode.
    pub regime_violations: Vec<Violation>,
    pub experiments: Vec<ExperimentReport>,
    pub all_pass: bool,
}

impl RunReport {
    pub fn failed_audits(&self) -> Vec<(&ExperimentReport, &Audit)> {
        self.experiments
            .iter()
            .flat_map(|e| e.audits.iter().filter(|a| !a.pass).map(move |a| (e, a)))
            .collect()
    }
}

/// Runs every experiment listed in the configuration.
pub fn run_experiment(config: &RunConfig) -> RunReport {
    let regime = config.regime();
    let experiments: Vec<ExperimentReport> = config
        .experiments()
        .into_iter()
        .enumerate()
        .map(|(stream, exp)| {
            let mut rep = ExperimentReport::new(exp);
            if let Err(e) = dispatch(config, exp, stream as u64, &mut rep) {
                rep.errors.push(e.to_string());
            }
            rep
        })
        .collect();
    let all_pass = experiments.iter().all(ExperimentReport::pass);
    RunReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        regime_summary: regime.summary(),
        regime_violations: config.regime_violations(),
        regime,
        experiments,
        all_pass,
    }
}

fn rng_for(config: &RunConfig, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    rng
}

fn dispatch(
    config: &RunConfig,
    exp: Experiment,
    stream: u64,
    rep: &mut ExperimentReport,
) -> Result<()> {
    match exp {
        Experiment::Single => single(config, rep),
        Experiment::NRefinement => n_refinement(config, rep),
        Experiment::DtRefinement => dt_refinement(config, rep),
        Experiment::TruncationCompare => truncation_compare(config, rep),
        Experiment::HorizonCheck => horizon_check(config, &mut rng_for(config, stream), rep),
        Experiment::GlobalRegime => global_regime(config, rep),
        Experiment::PropertySuite => property_suite(config, &mut rng_for(config, stream), rep),
    }
}

fn max_state_gap(a: &Trajectory, b: &Trajectory) -> f64 {
    if a.states.len() != b.states.len() {
        return f64::INFINITY;
    }
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| {
            (&x.u.coeffs - &y.u.coeffs)
                .amax()
                .max((&x.v.coeffs - &y.v.coeffs).amax())
        })
        .fold(0.0, f64::max)
}

fn max_norm(traj: &Trajectory, basis: &BasisSet, p: f64) -> Result<f64> {
    traj.states
        .iter()
        .try_fold(0.0f64, |m, s| Ok(m.max(basis.norm_w1p(&s.u, p)?)))
}

fn single(config: &RunConfig, rep: &mut ExperimentReport) -> Result<()> {
    let problem = config.problem()?;
    let traj = integrate(&problem)?;
    rep.completed("single", &traj);
    let first = traj.records[0];
    let last = *traj.records.last().expect("initial record");
    rep.metric("initial_script_e", first.script_e);
    rep.metric("final_script_e", last.script_e);
    rep.metric("final_e", last.e);
    rep.metric("final_time", last.t);
    rep.metric("max_abs_balance_residual", traj.max_abs_balance_residual());
    rep.metric("newton_iterations", traj.newton_iterations as f64);
    let min_parts = traj
        .records
        .iter()
        .map(|r| r.kinetic.min(r.potential).min(r.dissipation_cum))
        .fold(f64::INFINITY, f64::min);
    rep.audits.push(Audit::at_least(
        "energy components nonnegative",
        "energy-record",
        min_parts,
        0.0,
    ));
    let monitor = blowup_monitor(&traj, problem.blowup_threshold)?;
    rep.audits.push(Audit::at_most(
        "no blow-up below threshold",
        "blow-up-alternative",
        if monitor.flagged { 1.0 } else { 0.0 },
        0.0,
    ));
    if problem.src.is_identically_zero() {
        let rise = traj
            .records
            .windows(2)
            .map(|w| w[1].script_e - w[0].script_e)
            .fold(f64::NEG_INFINITY, f64::max);
        rep.audits.push(Audit::at_most(
            "energy non-increasing without source",
            "semidiscrete-energy-law",
            rise,
            1e-12 * (1.0 + first.script_e),
        ));
    }
    rep.runs.push(RunRecord::new("", &traj));
    Ok(())
}

fn fitted_order(levels: &[f64], errors: &[f64]) -> f64 {
    let n = levels.len() as f64;
    let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let mx = levels.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = levels
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let sxx: f64 = levels.iter().map(|x| (x - mx) * (x - mx)).sum();
    -sxy / sxx
}

fn n_refinement(config: &RunConfig, rep: &mut ExperimentReport) -> Result<()> {
    let p = config.problem.p;
    let sizes = &config.study.n_values;
    let results: Vec<Result<(Arc<BasisSet>, Trajectory)>> = sizes
        .par_iter()
        .map(|&n| {
            let basis = match config.problem.basis {
                BasisConfig::FemHat => config.build_basis_with(n, None)?,
                BasisConfig::RobinEigen { .. } => {
                    config.build_basis_with(config.problem.mesh.n_elements, Some(n))?
                }
            };
            let problem = config.problem_on(basis.clone())?;
            Ok((basis, integrate(&problem)?))
        })
        .collect();
    let runs: Vec<(Arc<BasisSet>, Trajectory)> = results.into_iter().collect::<Result<_>>()?;
    for (&n, (_, traj)) in sizes.iter().zip(&runs) {
        rep.completed(&format!("n={n}"), traj);
        rep.runs.push(RunRecord::new(format!("n{n}"), traj));
    }
    let mut rows = Vec::new();
    for (k, w) in runs.windows(2).enumerate() {
        let d = w1p_distance(
            (&w[0].0, &w[0].1.last_state().u),
            (&w[1].0, &w[1].1.last_state().u),
            p,
        )?;
        rep.metric(&format!("distance_n{}_n{}", sizes[k], sizes[k + 1]), d);
        rows.push(vec![sizes[k] as f64, sizes[k + 1] as f64, d]);
    }
    let worst_ratio = rows
        .windows(2)
        .map(|w| w[1][2] / w[0][2])
        .fold(0.0, f64::max);
    rep.audits.push(Audit::at_most(
        "successive terminal distances strictly decreasing (max ratio)",
        "galerkin-self-convergence",
        if rows.len() < 2 { 0.0 } else { worst_ratio },
        1.0 - f64::EPSILON,
    ));
    rep.tables.push(Table {
        name: "distances".into(),
        columns: vec!["n_coarse".into(), "n_fine".into(), "w1p_distance".into()],
        rows,
    });
    Ok(())
}

fn dt_refinement(config: &RunConfig, rep: &mut ExperimentReport) -> Result<()> {
    let base = config.problem()?;
    let dts: Vec<f64> = (0..=config.study.dt_halvings)
        .map(|k| base.dt / 2f64.powi(k as i32))
        .collect();
    let trajs: Vec<Trajectory> = dts
        .par_iter()
        .map(|&dt| integrate(&base.clone().with_horizon(base.t_final, dt)))
        .collect::<Result<_>>()?;
    let mut residuals = Vec::new();
    let mut rows = Vec::new();
    for (k, (dt, traj)) in dts.iter().zip(&trajs).enumerate() {
        rep.completed(&format!("dt={dt}"), traj);
        rep.runs.push(RunRecord::new(format!("h{k}"), traj));
        let res = traj.max_abs_balance_residual();
        let gap = trajs.get(k + 1).map_or(f64::NAN, |next| {
            (&traj.last_state().u.coeffs - &next.last_state().u.coeffs).amax()
        });
        residuals.push(res);
        rows.push(vec![*dt, res, gap]);
    }
    let levels: Vec<f64> = (0..dts.len()).map(|k| k as f64).collect();
    let order = fitted_order(&levels, &residuals);
    rep.metric("balance_residual_order", order);
    let gaps: Vec<f64> = rows
        .iter()
        .map(|r| r[2])
        .filter(|g| g.is_finite())
        .collect();
    if gaps.len() >= 2 {
        rep.metric(
            "terminal_state_order",
            fitted_order(&levels[..gaps.len()], &gaps),
        );
    }
    rep.audits.push(Audit::within(
        "balance residual order under dt halving",
        "energy-identity",
        order,
        1.8,
        2.2,
    ));
    rep.tables.push(Table {
        name: "orders".into(),
        columns: vec![
            "dt".into(),
            "max_abs_balance_residual".into(),
            "terminal_gap_to_next".into(),
        ],
        rows,
    });
    Ok(())
}

fn truncation_compare(config: &RunConfig, rep: &mut ExperimentReport) -> Result<()> {
    let base = config.problem()?.with_truncation(TruncationSpec::None);
    let basis = base.basis.clone();
    let p = base.p;
    let e0 = basis.w1p_norm_pow(&base.u0, p)? / p
        + 0.5 * base.u1.coeffs.dot(&(basis.mass() * &base.u1.coeffs));
    let k = config
        .study
        .radial_k
        .unwrap_or_else(|| select_truncation_radius(p, e0));
    let n = config.study.cutoff_n;
    let modes = [
        TruncationSpec::None,
        TruncationSpec::RadialK { k },
        TruncationSpec::CutoffN { n },
    ];
    let trajs: Vec<Trajectory> = modes
        .par_iter()
        .map(|m| integrate(&base.clone().with_truncation(*m)))
        .collect::<Result<_>>()?;
    for (name, traj) in ["none", "radial_k", "cutoff_n"].iter().zip(&trajs) {
        rep.completed(name, traj);
        rep.runs.push(RunRecord::new(*name, traj));
    }
    let untruncated = &trajs[0];
    let norm_max = max_norm(untruncated, &basis, p)?;
    let trace_max = untruncated.states.iter().try_fold(0.0f64, |m, s| {
        let t = basis.traces(&s.u)?;
        Ok::<f64, Error>(m.max(t[0].abs()).max(t[1].abs()))
    })?;
    let radial_gap = max_state_gap(untruncated, &trajs[1]);
    let cutoff_gap = max_state_gap(untruncated, &trajs[2]);
    rep.metric("radial_k", k);
    rep.metric("cutoff_n", n as f64);
    rep.metric("max_norm_untruncated", norm_max);
    rep.metric("max_trace_untruncated", trace_max);
    rep.metric("radial_gap", radial_gap);
    rep.metric("cutoff_gap", cutoff_gap);
    if norm_max < k {
        rep.audits.push(Audit::at_most(
            "radial truncation inactive inside the ball",
            "radial-truncation",
            radial_gap,
            1e-12,
        ));
    }
    if trace_max <= n as f64 {
        rep.audits.push(Audit::at_most(
            "cutoff inactive on the plateau",
            "cutoff-truncation",
            cutoff_gap,
            1e-12,
        ));
    }
    let rows = untruncated
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let gap = |t: &Trajectory| {
                t.states
                    .get(i)
                    .map_or(f64::NAN, |o| (&s.u.coeffs - &o.u.coeffs).amax())
            };
            vec![s.t, gap(&trajs[1]), gap(&trajs[2])]
        })
        .collect();
    rep.tables.push(Table {
        name: "gaps".into(),
        columns: vec!["t".into(), "radial_gap".into(), "cutoff_gap".into()],
        rows,
    });
    Ok(())
}

fn horizon_check(
    config: &RunConfig,
    rng: &mut ChaCha8Rng,
    rep: &mut ExperimentReport,
) -> Result<()> {
    let base = config.problem()?.with_truncation(TruncationSpec::None);
    let basis = base.basis.clone();
    let p = base.p;
    let e0 = basis.w1p_norm_pow(&base.u0, p)? / p
        + 0.5 * base.u1.coeffs.dot(&(basis.mass() * &base.u1.coeffs));
    let k = select_truncation_radius(p, e0);
    let probe = lipschitz_probe(
        &basis,
        &base.src,
        &TruncationSpec::None,
        k,
        config.study.lipschitz_samples,
        p,
        4.0 / 3.0,
        rng,
    )?;
    let mut c_k = probe.empirical_constant;
    if c_k.is_nan() || c_k <= 0.0 {
        // a vanishing source is Lipschitz with any constant
        c_k = f64::MIN_POSITIVE.sqrt();
    }
    let est = local_horizon_estimate(p, e0, c_k)?;
    rep.metric("script_e0", e0);
    rep.metric("k", est.k);
    rep.metric("c_k", c_k);
    rep.metric("t0", est.t0);
    if let Some(bound) = analytic_lipschitz_bound(&base.src, k, p, 4.0 / 3.0) {
        rep.metric("c_k_analytic_bound", bound);
    }
    let t0 = est.t0;
    let steps = ((t0 / base.dt).ceil() as usize).max(50);
    let dt = t0 / steps as f64;
    let runs: Vec<Trajectory> = [TruncationSpec::RadialK { k: est.k }, TruncationSpec::None]
        .par_iter()
        .map(|m| integrate(&base.clone().with_truncation(*m).with_horizon(t0, dt)))
        .collect::<Result<_>>()?;
    rep.completed("radial_k", &runs[0]);
    rep.completed("none", &runs[1]);
    let norm_max = max_norm(&runs[0], &basis, p)?;
    let gap = max_state_gap(&runs[0], &runs[1]);
    rep.metric("max_norm_on_horizon", norm_max);
    rep.metric("radial_vs_untruncated_gap", gap);
    rep.audits.push(Audit::at_most(
        "norm stays within K up to T0",
        "local-existence-horizon",
        norm_max,
        est.k,
    ));
    rep.audits.push(Audit::at_most(
        "truncated and untruncated runs coincide up to T0",
        "local-existence-horizon",
        gap,
        1e-12,
    ));
    rep.runs.push(RunRecord::new("radial_k", &runs[0]));
    rep.runs.push(RunRecord::new("none", &runs[1]));
    Ok(())
}

fn global_regime(config: &RunConfig, rep: &mut ExperimentReport) -> Result<()> {
    let problem = config.problem()?;
    let c = global_source_constant(&problem.src, problem.p);
    let traj = integrate(&problem)?;
    rep.completed("global", &traj);
    let e0 = traj.records[0].script_e;
    let mut excess = f64::NEG_INFINITY;
    let mut rows = Vec::new();
    for r in &traj.records {
        let env = gronwall_envelope(e0, c, r.t);
        excess = excess.max(r.script_e - env);
        rows.push(vec![r.t, r.script_e, env]);
    }
    rep.metric("source_constant", c);
    rep.metric(
        "hypothesis_r_le_half_p",
        if config.regime().global_regime {
            1.0
        } else {
            0.0
        },
    );
    rep.metric("max_energy_minus_envelope", excess);
    rep.audits.push(Audit::at_most(
        "energy below the Gronwall envelope",
        "global-energy-envelope",
        excess,
        0.0,
    ));
    rep.runs.push(RunRecord::new("global", &traj));
    rep.tables.push(Table {
        name: "envelope".into(),
        columns: vec!["t".into(), "script_E".into(), "envelope".into()],
        rows,
    });
    Ok(())
}

fn property_suite(
    config: &RunConfig,
    rng: &mut ChaCha8Rng,
    rep: &mut ExperimentReport,
) -> Result<()> {
    let basis = config.build_basis()?;
    let p = config.problem.p;
    let samples = config.study.property_samples;
    let form = PLaplacianForm::new(&basis, p)?;
    let damping = DampingForm::new(&basis);
    let draw = |rng: &mut ChaCha8Rng| {
        let scale = 10f64.powf(rand::Rng::random_range(rng, -1.0..1.0));
        random_field(&basis, rng, scale)
    };
    let (mut duality, mut mono, mut homog, mut young, mut p2, mut damp) = (
        0.0f64,
        f64::INFINITY,
        0.0f64,
        f64::NEG_INFINITY,
        0.0f64,
        0.0f64,
    );
    let mut bound_ratio = 0.0f64;
    let mut bound_ok = true;
    let lap2 = PLaplacianForm::new(&basis, 2.0)?;
    for _ in 0..samples {
        let u = draw(rng);
        let v = draw(rng);
        let nu = basis.w1p_norm_pow(&u, p)?;
        let nv = basis.w1p_norm_pow(&v, p)?;
        duality = duality.max((form.pairing(&u, &u)? - nu).abs() / nu.max(f64::MIN_POSITIVE));
        mono = mono.min(monotonicity_check(&form, &u, &v)? / (1.0 + nu + nv));
        let alpha = 10f64.powf(rand::Rng::random_range(rng, -1.0..1.0));
        let a = form.apply(&u)?;
        let b = form.apply(&u.scaled(alpha))?;
        let factor = alpha.powf(p - 1.0);
        homog = homog.max((b - &a * factor).amax() / (factor * a.amax()).max(f64::MIN_POSITIVE));
        young =
            young.max((form.pairing(&u, &v)? - ((p - 1.0) / p * nu + nv / p)) / (1.0 + nu + nv));
        p2 = p2
            .max((lap2.apply(&u)? - damping.apply(&u)?).amax() / (1.0 + damping.apply(&u)?.amax()));
        let n2 = basis.norm_w1p(&v, 2.0)?;
        damp = damp.max((damping.pairing(&v, &v)? - n2 * n2).abs() / (1.0 + n2 * n2));
        let check = dual_norm_bound_check(&form, &u, 50, rng)?;
        bound_ok &= check.pass;
        bound_ratio = bound_ratio.max(check.lhs_estimate / check.rhs);
    }
    rep.metric("samples", samples as f64);
    rep.metric("operator_norm_ratio", bound_ratio);
    rep.audits.push(Audit::at_most(
        "duality identity (relative)",
        "duality-identity",
        duality,
        1e-10,
    ));
    rep.audits.push(Audit::at_least(
        "monotonicity (normalized)",
        "monotonicity",
        mono,
        -1e-10,
    ));
    rep.audits.push(Audit::at_most(
        "homogeneity of degree p-1 (relative)",
        "homogeneity",
        homog,
        1e-10,
    ));
    rep.audits.push(Audit::at_most(
        "Young-type estimate (normalized excess)",
        "young-estimate",
        young,
        1e-10,
    ));
    rep.audits.push(Audit::at_most(
        "p=2 form equals damping form",
        "linear-consistency",
        p2,
        1e-12,
    ));
    rep.audits.push(Audit::at_most(
        "damping pairing equals squared norm",
        "damping-form",
        damp,
        1e-12,
    ));
    rep.audits.push(Audit::at_most(
        "operator-norm bound (probe maximum over bound)",
        "operator-norm-bound",
        if bound_ok { bound_ratio } else { f64::INFINITY },
        1.0,
    ));

    let src = config.problem.source.to_spec();
    let c = src.magnitude_constant();
    let mut growth: f64 = 0.0;
    for i in 0..=120 {
        let s = 10f64.powf(-6.0 + 0.1 * i as f64);
        for s in [s, -s] {
            growth = growth
                .max(src.f(s).abs() / (c * (s.abs().powf(src.r) + 1.0)).max(f64::MIN_POSITIVE));
        }
    }
    rep.audits.push(Audit::at_most(
        "source growth bound on a log grid",
        "source-growth-assumption",
        growth,
        1.0 + 1e-12,
    ));

    let mut slope: f64 = 0.0;
    let mut plateau = true;
    for n in [1u32, 2, 4, 8, 16] {
        let nf = n as f64;
        let points = 20_000;
        for i in 0..points {
            let s = -3.0 * nf + 6.0 * nf * i as f64 / (points - 1) as f64;
            slope = slope.max(eta_prime(n, s).abs() * nf / CUTOFF_SLOPE);
            let e = eta(n, s);
            plateau &= if s.abs() <= nf {
                e == 1.0
            } else if s.abs() >= 2.0 * nf {
                e == 0.0
            } else {
                (0.0..=1.0).contains(&e)
            };
        }
    }
    rep.audits.push(Audit::at_most(
        "cutoff slope n |eta_n'| / 1.875",
        "cutoff-construction",
        slope,
        1.0,
    ));
    rep.audits.push(Audit::at_least(
        "cutoff plateau and support exact",
        "cutoff-construction",
        if plateau { 1.0 } else { 0.0 },
        1.0,
    ));

    let tau = pointwise_trace_constant(p);
    let mut continuity: f64 = 0.0;
    for _ in 0..samples.min(100) {
        let u = draw(rng);
        let k = basis.norm_w1p(&u, p)?;
        if k == 0.0 {
            continue;
        }
        let at = truncate_radial(&src, k, &basis, &u, p)?;
        let inside = truncate_radial(&src, k * (1.0 + 1e-15), &basis, &u, p)?;
        continuity = continuity.max(
            (at[0] - inside[0]).abs().max((at[1] - inside[1]).abs())
                / (1.0 + at[0].abs().max(at[1].abs())),
        );
    }
    rep.metric("trace_constant", tau);
    rep.audits.push(Audit::at_most(
        "radial truncation continuous at the threshold",
        "radial-truncation",
        continuity,
        1e-12,
    ));
    Ok(())
}

/// Default configuration of `plapwave suite`.
pub fn default_suite_config(seed: u64, n_elements: usize) -> RunConfig {
    use crate::config::*;
    RunConfig {
        experiment: ExperimentList::One(Experiment::PropertySuite),
        seed,
        output_dir: "plapwave-suite".into(),
        validation: Validation::Strict,
        problem: ProblemConfig {
            p: 2.5,
            mesh: MeshConfig {
                n_elements,
                quad_order: DEFAULT_QUAD_ORDER,
            },
            basis: BasisConfig::FemHat,
            source: SourceConfig {
                kind: SourceKind::Power,
                r: 1.5,
                a: 1.0,
                b: 0.0,
            },
            truncation: TruncationSpec::None,
            u0: Profile::default(),
            u1: Profile::default(),
            t_final: 1.0,
            dt: 0.01,
            scheme: Scheme::ImplicitMidpoint,
            newton_tol: solver::DEFAULT_NEWTON_TOL,
            newton_max_iter: solver::DEFAULT_NEWTON_MAX_ITER,
            blowup_threshold: solver::DEFAULT_BLOWUP_THRESHOLD,
        },
        study: StudyConfig::default(),
    }
}
