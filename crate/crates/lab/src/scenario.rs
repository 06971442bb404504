//! Scenario dispatch and convergence studies.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prandtl_core::compat::{build_unsteady_data, check_compat, perturbation_profile, InitialData1D};
use prandtl_core::energy::{check_principle_envelope, energy_bound_interval};
use prandtl_core::good_unknowns::{
    residual_good_unknown_equation, verify_boundary_reduction_1, verify_quotient_identity, ResidualKind,
};
use prandtl_core::inequality::{run_inequality_suite, DecayingSample, InequalityKind, Sample};
use prandtl_core::manufactured::Manufactured;
use prandtl_core::steady::{check_r0_stations, picard_step, run_steady, wall_slope, SteadyData, SteadyRun};
use prandtl_core::unsteady::{
    heat_oracle, init_unsteady, run_unsteady, HeatOracleOptions, MonitorConfig, RunStatus, UnsteadyParams, UnsteadyRun,
};
use prandtl_core::{make_grid, Error, Grid2D, ScalarField, WeightParams, YAxis};

use crate::config::{Profile, RunConfig};
use crate::error::{Context, LabError, Result};
use crate::output::{self, ConvergenceRow, Fmt, SteadyRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Unsteady,
    Steady,
    VerifyIdentities,
    CheckCompat,
    Inequalities,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    H,
    Dt,
    Eps,
    Theta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Completed,
    LifeSpanExceeded,
    BlowUp,
    IterationDivergence,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Completed => 0,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::LifeSpanExceeded => "life_span_exceeded",
            Status::BlowUp => "blow_up",
            Status::IterationDivergence => "iteration_divergence",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioResult {
    pub status: Status,
    pub artifacts: Vec<PathBuf>,
    /// Ordered key/value metrics; a failed run carries its time or station
    /// and the violated bound.
    pub summary: Vec<(String, String)>,
}

impl ScenarioResult {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

struct Summary(Vec<(String, String)>);

impl Summary {
    fn put(&mut self, k: &str, v: impl ToString) {
        self.0.push((k.to_string(), v.to_string()));
    }
}

fn fmt(cfg: &RunConfig) -> Fmt {
    Fmt { precision: cfg.output.csv_precision }
}

pub fn grid_of(cfg: &RunConfig) -> Result<Arc<Grid2D>> {
    let g = cfg.grid();
    Ok(Arc::new(make_grid(g.nx, g.ny, g.y_max, g.stretch).context("building the grid")?))
}

pub fn y_axis_of(cfg: &RunConfig) -> Result<Arc<YAxis>> {
    let g = cfg.grid();
    Ok(Arc::new(YAxis::stretched(g.ny, g.y_max, g.stretch).context("building the y axis")?))
}

/// One-dimensional initial data named by `[data]` on the nodes `y`.
pub fn initial_data_1d(cfg: &RunConfig, y: &[f64]) -> Result<InitialData1D> {
    let d = &cfg.data;
    let (rho_inf, u_inf) = (cfg.flow.rho_inf, cfg.flow.u_inf);
    let rho0: Vec<f64> = y.iter().map(|&t| rho_inf + d.rho_amplitude * (-t).exp()).collect();
    let closed = |f: &dyn Fn(f64) -> f64| InitialData1D {
        y: y.to_vec(),
        rho0: rho0.clone(),
        u0: y.iter().map(|&t| f(t)).collect(),
        analytic_derivs: None,
    };
    match d.profile {
        Profile::Builder => InitialData1D::builder(d.slope, u_inf, d.y_c, d.order, cfg.tail(), y, rho0.clone())
            .context("building the blended profile"),
        Profile::Tanh => Ok(closed(&|t| u_inf * (d.slope * t / u_inf).tanh())),
        Profile::Erf => {
            let c = 0.5 * std::f64::consts::PI.sqrt() * d.slope / u_inf;
            Ok(closed(&|t| u_inf * libm::erf(c * t)))
        }
    }
}

pub fn steady_data(cfg: &RunConfig) -> Result<SteadyData> {
    let s = cfg.require_steady()?;
    let y = y_axis_of(cfg)?;
    let mut d = initial_data_1d(cfg, y.nodes())?;
    for (u, &t) in d.u0.iter_mut().zip(y.nodes()) {
        *u += s.perturbation * perturbation_profile(t);
    }
    SteadyData::new(y, d.rho0, d.u0).context("building steady data")
}

pub fn run_scenario(cfg: &RunConfig, sub: Subcommand, out: &Path, seed: u64) -> Result<ScenarioResult> {
    match sub {
        Subcommand::Unsteady => unsteady(cfg, out),
        Subcommand::Steady => steady(cfg, out),
        Subcommand::VerifyIdentities => identities(cfg, out),
        Subcommand::CheckCompat => compat(cfg, out),
        Subcommand::Inequalities => inequalities(cfg, out, seed),
    }
}

/// Unsteady run from the builder data of `[data]` and `[unsteady]`.
pub fn unsteady_run(cfg: &RunConfig, eps: Option<f64>) -> Result<(UnsteadyRun, MonitorConfig)> {
    let w = cfg.require_weights()?;
    let u = cfg.require_unsteady()?;
    let mut p = cfg.unsteady_params()?;
    if let Some(e) = eps {
        p.eps = e;
    }
    let g = grid_of(cfg)?;
    let (rho0, u0) = build_unsteady_data(&w, u.delta_bl, u.kappa1, u.kappa2, u.amplitude, &g, &cfg.data_options())
        .context("building unsteady data")?;
    let init = init_unsteady(rho0, u0, &p).context("initializing the unsteady state")?;
    let cadence = if cfg.output.snapshot_every > 0 { cfg.output.snapshot_every } else { u.report_every };
    let mc = MonitorConfig {
        weights: w,
        s_max: u.s_order,
        delta_bl: u.delta_bl,
        kappa1: u.kappa1,
        kappa2: u.kappa2,
        report_every: cadence,
        snapshot_every: cadence,
        stop_on_failure: true,
    };
    let run = run_unsteady(init, &p, &mc).context("unsteady run")?;
    Ok((run, mc))
}

fn unsteady(cfg: &RunConfig, out: &Path) -> Result<ScenarioResult> {
    let (run, _) = unsteady_run(cfg, None)?;
    let f = fmt(cfg);
    let mut s = Summary(Vec::new());
    let status = match &run.status {
        RunStatus::Completed => Status::Completed,
        RunStatus::MonitorFailure { t, bound } => {
            s.put("failure_time", t);
            s.put("violated_bound", bound);
            Status::LifeSpanExceeded
        }
        RunStatus::BlowUp { t, reason } => {
            s.put("failure_time", t);
            s.put("reason", reason);
            Status::BlowUp
        }
    };
    s.put("steps", run.steps);
    s.put("life_span", run.life_span.map_or("none".into(), |t| t.to_string()));
    if let Some(r) = run.reports.first() {
        s.put("E_total_0", r.e_total);
    }
    let lambda_est = run.reports.iter().map(|r| r.q8_sup).fold(0.0, f64::max);
    if run.reports.len() >= 2 {
        let env = check_principle_envelope(&run.reports, lambda_est).context("envelope check")?;
        s.put("lambda_est", lambda_est);
        s.put("envelope_passed", env.passed);
        s.put("lambda_fit", env.lambda_fit);
    }
    if let Some(t) = energy_bound_interval(&run.reports, 2.1) {
        s.put("energy_bound_interval", t);
    }
    let mut artifacts = vec![output::write_energy(&out.join("energy.csv"), &run.reports, f)?];
    for (k, snap) in run.snapshots.iter().enumerate() {
        artifacts.push(output::write_unsteady_profile(&out.join(format!("snapshot_{k:05}.csv")), snap, f)?);
    }
    Ok(ScenarioResult { status, artifacts, summary: s.0 })
}

fn steady(cfg: &RunConfig, out: &Path) -> Result<ScenarioResult> {
    let data = steady_data(cfg)?;
    let p = cfg.steady_params()?;
    let f = fmt(cfg);
    let mut s = Summary(Vec::new());
    let run = match run_steady(&data, &p) {
        Ok(r) => r,
        Err(Error::IterationDivergence { theta, k, ratio }) => {
            s.put("theta", theta);
            s.put("iteration", k);
            s.put("ratio", ratio);
            s.put("violated_bound", "Picard contraction phi_{k+1} < phi_k");
            return Ok(ScenarioResult { status: Status::IterationDivergence, artifacts: Vec::new(), summary: s.0 });
        }
        Err(e) => return Err(LabError::Core { context: "steady run".into(), source: e }),
    };
    let rows = steady_rows(&run, &data, &p)?;
    let last = run.final_slab();
    let life = run.life_span.unwrap_or(0.0);
    let x_end = last.x_end();
    let mut status = Status::Completed;
    if let Some(stop) = &last.stop {
        status = Status::LifeSpanExceeded;
        s.put("failure_station", stop.x());
        s.put("violated_bound", format!("{stop:?}"));
    } else if let Some(m) = run.monitors.iter().find(|m| !m.green) {
        status = Status::LifeSpanExceeded;
        s.put("failure_station", m.x);
        s.put("violated_bound", failed_steady_bound(m, &run));
    }
    s.put("life_span", life);
    s.put("x_end", x_end);
    s.put("cauchy_ok", run.cauchy_ok);
    for d in &run.diagnostics {
        s.put(&format!("contraction_ratio[{}]", d.theta), d.contraction_ratio);
    }
    let c = &run.constants;
    s.put("lambda0", c.lambda0);
    s.put("delta", c.delta);
    s.put("xi0", c.xi0);
    s.put("kappa3", c.kappa3);
    let artifacts = vec![
        output::write_steady(&out.join("steady.csv"), &rows, f)?,
        output::write_picard(&out.join("picard.csv"), &run.diagnostics, f)?,
        output::write_steady_profile(&out.join("steady_profile.csv"), &data.y, last.stations.last().expect("x = 0 station"), f)?,
    ];
    Ok(ScenarioResult { status, artifacts, summary: s.0 })
}

fn failed_steady_bound(m: &prandtl_core::steady::StationMonitor, run: &SteadyRun) -> &'static str {
    let c = &run.constants;
    if !(m.wall_slope >= 2.0 * c.lambda0) {
        "wall slope d_y u(x, 0) >= 2 lambda0"
    } else if !(m.rho_min >= c.kappa3) {
        "density lower bound rho >= kappa3"
    } else if !(m.near_wall_margin >= 0.0) {
        "near-wall bound u >= lambda0 y on [0, delta]"
    } else {
        "far-field bound u >= xi0"
    }
}

/// Rows of `steady.csv` for the final slab, from station `m` on.
pub fn steady_rows(run: &SteadyRun, data: &SteadyData, p: &prandtl_core::steady::SteadyParams) -> Result<Vec<SteadyRow>> {
    let (theta, last) = run.slabs.last().map(|(t, s)| (*t, s)).expect("schedule is nonempty");
    let c = &run.constants;
    let next = picard_step(last, data, p, theta, c).context("residual sweep")?;
    let r0 = check_r0_stations(&next, last, data, theta);
    let phi_last = run.diagnostics.last().and_then(|d| d.phi_series.last().copied()).unwrap_or(0.0);
    Ok(run
        .xy_series
        .iter()
        .map(|pt| {
            let j = last.stations.iter().position(|st| st.x == pt.x).expect("station of the series");
            SteadyRow {
                x: pt.x,
                x_total: pt.x_energy,
                y_total: pt.y_dissipation,
                dyu_wall: wall_slope(&data.y, &last.stations[j].u),
                r0_residual: r0.get(j).map_or(f64::NAN, |r| r.residual),
                phi_last,
            }
        })
        .collect())
}

fn identities(cfg: &RunConfig, out: &Path) -> Result<ScenarioResult> {
    let g = grid_of(cfg)?;
    let w = cfg.weights.as_ref().map_or(WeightParams { gamma: 2.0, sigma: 3.0 }, |w| WeightParams { gamma: w.gamma, sigma: w.sigma });
    let s_order = cfg.unsteady.as_ref().map_or(2, |u| u.s_order);
    let dt = cfg.unsteady.as_ref().map_or(1e-2, |u| u.dt);
    let m = Manufactured::default();
    let t = 0.4;
    let st = [m.state(&g, t - dt), m.state(&g, t), m.state(&g, t + dt)];
    let p = UnsteadyParams { eps: m.eps, dt, ..Default::default() };
    let mut rows = Vec::new();
    let q = verify_quotient_identity(&st[1], s_order, w.sigma, 0.0).context("quotient identity")?;
    rows.push(("quotient_identity".to_string(), q.grid_h, q.residual_norm));
    let flat = Manufactured { a: 0.0, ..m }.state(&g, t);
    let q0 = verify_quotient_identity(&flat, s_order, w.sigma, 0.0).context("quotient identity")?;
    rows.push(("quotient_identity_x_independent".to_string(), q0.grid_h, q0.residual_norm));
    for (name, kind) in [("w_g_equation", ResidualKind::WgEquation), ("rho_g_equation", ResidualKind::RhogEquation)] {
        let r = residual_good_unknown_equation(kind, &st, &p, s_order, Some(&m)).context(name)?;
        rows.push((name.to_string(), r.grid_h, r.residual_norm));
    }
    let b = verify_boundary_reduction_1(&st[1]);
    rows.push(("boundary_reduction_1".to_string(), b.grid_h, b.residual_norm));
    let mut s = Summary(Vec::new());
    for (n, _, r) in &rows {
        s.put(n, r);
    }
    let artifacts = vec![output::write_identities(&out.join("identities.csv"), &rows, fmt(cfg))?];
    Ok(ScenarioResult { status: Status::Completed, artifacts, summary: s.0 })
}

fn compat(cfg: &RunConfig, out: &Path) -> Result<ScenarioResult> {
    let y = y_axis_of(cfg)?;
    let data = initial_data_1d(cfg, y.nodes())?;
    let rmin = data.rho0.iter().copied().fold(f64::INFINITY, f64::min);
    let kappa3 = cfg.steady.as_ref().and_then(|s| s.kappa3).unwrap_or(0.5 * rmin);
    let report = check_compat(&data, cfg.data.order.min(5), kappa3).context("compatibility check")?;
    let mut s = Summary(Vec::new());
    s.put("all_pass", report.passed());
    s.put("overall_order_m", report.overall_order_m);
    if let Some(e) = report.entries.iter().find(|e| !e.pass) {
        s.put("first_failure", &e.name);
    }
    s.put("table", output::compat_table(&report));
    let artifacts = vec![output::write_compat(&out.join("compat.csv"), &report, fmt(cfg))?];
    Ok(ScenarioResult { status: Status::Completed, artifacts, summary: s.0 })
}

/// `count` random decaying samples; trace and product kinds get
/// independent pairs.
pub fn random_samples(kind: InequalityKind, count: usize, rng: &mut ChaCha8Rng) -> Vec<Sample> {
    let mut draw = || {
        let mut u = [0.0; 10];
        u.iter_mut().for_each(|v| *v = rng.gen::<f64>());
        DecayingSample::from_unit(&u)
    };
    (0..count)
        .map(|_| match kind {
            InequalityKind::Trace | InequalityKind::Morse => {
                let (a, b) = (draw(), draw());
                Sample::pair(move |x, y| a.eval(x, y), move |x, y| b.eval(x, y))
            }
            _ => draw().into_sample(),
        })
        .collect()
}

fn inequalities(cfg: &RunConfig, out: &Path, seed: u64) -> Result<ScenarioResult> {
    let g = grid_of(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.inequalities.samples;
    let mut rows = Vec::new();
    let mut s = Summary(Vec::new());
    for kind in cfg.inequality_kinds()? {
        let lambda = if kind == InequalityKind::Hardy2 { cfg.inequalities.lambda_hardy2 } else { cfg.inequality_lambda() };
        let samples = random_samples(kind, n, &mut rng);
        let reports = run_inequality_suite(kind, &samples, lambda, &g).context(kind.name())?;
        let held = reports.iter().filter(|r| r.holds).count();
        let worst = reports.iter().map(|r| r.empirical_constant).fold(0.0, f64::max);
        s.put(&format!("{}_held", kind.name()), format!("{held}/{n}"));
        s.put(&format!("{}_max_constant", kind.name()), worst);
        rows.extend(reports.into_iter().enumerate());
    }
    s.put("rows", rows.len());
    let artifacts = vec![output::write_inequalities(&out.join("inequality.csv"), &rows, fmt(cfg))?];
    Ok(ScenarioResult { status: Status::Completed, artifacts, summary: s.0 })
}

/// `u_inf tanh(y) / tanh(y_max)`: odd in `y`, so every wall compatibility
/// condition of the heat equation holds.
fn heat_profile(u_inf: f64, y_max: f64) -> impl Fn(f64) -> f64 {
    move |y| u_inf * y.tanh() / y_max.tanh()
}

/// Sup distance at `t_final` between the solver on an x-independent,
/// constant-density state and the heat oracle.
pub fn heat_error(cfg: &RunConfig, ny: usize, dt: f64, t_final: f64, oracle: HeatOracleOptions) -> Result<f64> {
    let gs = cfg.grid();
    let g = Arc::new(make_grid(4, ny, gs.y_max, gs.stretch).context("building the grid")?);
    let (rho_inf, u_inf) = (cfg.flow.rho_inf, cfg.flow.u_inf);
    let prof = heat_profile(u_inf, gs.y_max);
    let p = UnsteadyParams { eps: 0.0, rho_inf, u_inf, dt, t_final, far_field_tol: 1e-6, ..Default::default() };
    let init = init_unsteady(ScalarField::constant(&g, rho_inf), ScalarField::from_fn(&g, |_, y| prof(y)), &p)
        .context("initializing the heat run")?;
    let mc = MonitorConfig { report_every: 0, ..Default::default() };
    let run = run_unsteady(init, &p, &mc).context("heat run")?;
    let last = run.snapshots.last().expect("final snapshot");
    let exact = heat_oracle(rho_inf, &prof, g.y_nodes(), t_final, dt, u_inf, oracle).context("heat oracle")?;
    Ok(last.u.column(0).iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

fn order(prev: &ConvergenceRow, err: f64, param: f64) -> f64 {
    (prev.error / err).ln() / (prev.param / param).ln()
}

fn l2_distance(a: &ScalarField, b: &ScalarField) -> f64 {
    (a - b).l2()
}

/// Runs the scenario behind `axis` at `levels` geometric parameter levels.
/// `h` and `dt` compare against the heat oracle; `eps` and `theta` record
/// the distance to the previous level.
pub fn convergence_study(cfg: &RunConfig, axis: Axis, levels: usize) -> Result<Vec<ConvergenceRow>> {
    if levels < 3 {
        return Err(LabError::Usage(format!("a convergence study needs at least 3 levels, got {levels}")));
    }
    let dt0 = cfg.unsteady.as_ref().map_or(1e-3, |u| u.dt);
    let t_final = cfg.unsteady.as_ref().map_or(0.25, |u| u.t_final);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    let push = |rows: &mut Vec<ConvergenceRow>, level: usize, param: f64, error: f64| {
        let observed_order = match rows.last() {
            Some(p) if p.error.is_finite() => order(p, error, param),
            _ => f64::NAN,
        };
        rows.push(ConvergenceRow { level, param, error, observed_order });
    };
    match axis {
        Axis::H => {
            let ny0 = cfg.grid().ny;
            let opts = HeatOracleOptions { refine: 8, dt_divisor: 4 };
            for k in 0..levels {
                let ny = ny0 << k;
                let h = cfg.grid().y_max / (ny - 1) as f64;
                push(&mut rows, k, h, heat_error(cfg, ny, dt0, t_final, opts)?);
            }
        }
        Axis::Dt => {
            let opts = HeatOracleOptions { refine: 1, dt_divisor: 16 };
            for k in 0..levels {
                let dt = dt0 * 0.5f64.powi(k as i32);
                push(&mut rows, k, dt, heat_error(cfg, cfg.grid().ny, dt, t_final, opts)?);
            }
        }
        Axis::Eps => {
            let eps0 = cfg.require_unsteady()?.eps;
            let mut prev: Option<(ScalarField, ScalarField)> = None;
            for k in 0..levels {
                let eps = eps0 * 0.1f64.powi(k as i32);
                let (run, _) = unsteady_run(cfg, Some(eps))?;
                if !matches!(run.status, RunStatus::Completed) {
                    return Err(LabError::Usage(format!("eps = {eps:e} run did not complete: {:?}", run.status)));
                }
                let last = run.snapshots.last().expect("final snapshot");
                let cur = (last.rho.clone(), last.u.clone());
                let err = prev.as_ref().map_or(f64::NAN, |(r, u)| {
                    (l2_distance(&cur.0, r).powi(2) + l2_distance(&cur.1, u).powi(2)).sqrt()
                });
                push(&mut rows, k, eps, err);
                prev = Some(cur);
            }
        }
        Axis::Theta => {
            let data = steady_data(cfg)?;
            let mut p = cfg.steady_params()?;
            let theta0 = p.theta_schedule.iter().copied().find(|&t| t > 0.0).unwrap_or(0.1);
            p.theta_schedule = (0..levels).map(|k| theta0 * 0.1f64.powi(k as i32)).collect();
            p.theta = *p.theta_schedule.last().expect("levels >= 3");
            let run = run_steady(&data, &p).context("steady theta continuation")?;
            for (k, &theta) in p.theta_schedule.iter().enumerate() {
                let err = if k == 0 { f64::NAN } else { run.cauchy_distances[k - 1] };
                push(&mut rows, k, theta, err);
            }
        }
    }
    Ok(rows)
}

pub fn run_convergence(cfg: &RunConfig, axis: Axis, levels: usize, out: &Path) -> Result<(Vec<ConvergenceRow>, ScenarioResult)> {
    let rows = convergence_study(cfg, axis, levels)?;
    let mut s = Summary(Vec::new());
    for r in &rows {
        s.put(&format!("level[{}]", r.level), format!("param {:e} error {:e} order {:.3}", r.param, r.error, r.observed_order));
    }
    let artifacts = vec![output::write_convergence(&out.join("convergence.csv"), &rows, fmt(cfg))?];
    Ok((rows, ScenarioResult { status: Status::Completed, artifacts, summary: s.0 }))
}
