//! Time integration of the epsilon-regularised inhomogeneous Prandtl
//! system with a constant outer flow,
//!
//! ```text
//! rho_t + u rho_x + v rho_y - eps rho_xx = 0
//! u_t + u u_x + v u_y - eps u_xx - (1/rho) u_yy = 0
//! v = -int_0^y u_x,   u|_{y=0} = 0,   (u, rho) -> (u_inf, rho_inf)
//! ```
//!
//! One step is Lie-split: Heun advection (with optional sources), then
//! Crank-Nicolson for `eps d_x^2` in Fourier space, then Crank-Nicolson for
//! `(1/rho) d_y^2` column by column.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::energy::{self, EnergyReport};
use crate::error::{Error, Result};
use crate::grid::{ddx, ddy, Grid2D, ScalarField, WeightParams};
use crate::interp::Pchip;
use crate::linalg::solve_tridiagonal;

pub const BLOWUP_SUP: f64 = 1e6;
pub const BLOWUP_RHO_MIN: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct UnsteadyParams {
    pub eps: f64,
    pub rho_inf: f64,
    pub u_inf: f64,
    pub dt: f64,
    pub t_final: f64,
    pub cfl_max: f64,
    /// Tangential order of the good unknowns.
    pub s_order: usize,
    /// Weight of first-order upwinding in the advection terms, in `[0, 1]`.
    pub upwind_blend: f64,
    pub far_field_tol: f64,
}

impl Default for UnsteadyParams {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            rho_inf: 1.0,
            u_inf: 1.0,
            dt: 1e-3,
            t_final: 0.25,
            cfl_max: 0.8,
            s_order: 2,
            upwind_blend: 0.0,
            far_field_tol: 1e-8,
        }
    }
}

impl UnsteadyParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.eps >= 0.0) {
            return bad("eps must be nonnegative");
        }
        if !(self.rho_inf > 0.0) || !(self.u_inf > 0.0) {
            return bad("rho_inf and u_inf must be positive");
        }
        if !(self.t_final >= 0.0) {
            return bad("t_final must be nonnegative");
        }
        if !(self.cfl_max > 0.0 && self.cfl_max <= 1.0) {
            return bad("cfl_max must lie in (0, 1]");
        }
        if !(1..=6).contains(&self.s_order) {
            return bad("s_order must lie in 1..=6");
        }
        if !(0.0..=1.0).contains(&self.upwind_blend) {
            return bad("upwind_blend must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnsteadyState {
    pub t: f64,
    pub rho: ScalarField,
    pub u: ScalarField,
    pub v: ScalarField,
    pub w: ScalarField,
}

impl UnsteadyState {
    pub fn grid(&self) -> &Arc<Grid2D> {
        self.u.grid()
    }

    fn from_parts(t: f64, rho: ScalarField, u: ScalarField) -> Self {
        let v = recover_v(&u);
        let w = ddy(&u, 1);
        Self { t, rho, u, v, w }
    }
}

/// Source terms `(f_rho, f_u)` added to the right-hand sides, used for
/// manufactured solutions.
pub trait Forcing: Sync {
    fn sources(&self, t: f64, x: f64, y: f64) -> (f64, f64);
}

pub fn init_unsteady(rho0: ScalarField, u0: ScalarField, params: &UnsteadyParams) -> Result<UnsteadyState> {
    params.validate()?;
    let g = u0.grid().clone();
    if **rho0.grid() != *g {
        return Err(Error::Usage("rho0 and u0 live on different grids".into()));
    }
    if !rho0.is_finite() || !u0.is_finite() {
        return Err(Error::Data("initial data contain non-finite values".into()));
    }
    let rmin = rho0.min();
    if !(rmin > 0.0) {
        return Err(Error::Data(format!("density must be positive, min rho0 = {rmin:.3e}")));
    }
    let ny = g.ny();
    let tol = params.far_field_tol;
    for ix in 0..g.nx() {
        let wall = u0.get(ix, 0);
        if wall.abs() > 1e-12 {
            return Err(Error::Data(format!("no-slip violated: u0(x, 0) = {wall:.3e}")));
        }
        let du = (u0.get(ix, ny - 1) - params.u_inf).abs();
        let dr = (rho0.get(ix, ny - 1) - params.rho_inf).abs();
        if du > tol || dr > tol {
            return Err(Error::Data(format!(
                "far-field limits missed at y_max: |u - u_inf| = {du:.3e}, |rho - rho_inf| = {dr:.3e}"
            )));
        }
    }
    let mut u = u0;
    let mut rho = rho0;
    apply_bc(&mut rho, &mut u, params);
    Ok(UnsteadyState::from_parts(0.0, rho, u))
}

/// `v = -int_0^y d_x u` by cumulative trapezoid; `v(., 0) = 0` exactly.
pub fn recover_v(u: &ScalarField) -> ScalarField {
    let ux = ddx(u, 1);
    let y = u.grid().y();
    ux.map_columns(|s, d| {
        let c = y.cumulative(s);
        for (o, v) in d.iter_mut().zip(c) {
            *o = -v;
        }
    })
}

fn apply_bc(rho: &mut ScalarField, u: &mut ScalarField, p: &UnsteadyParams) {
    let g = u.grid().clone();
    let top = g.ny() - 1;
    for ix in 0..g.nx() {
        u.set(ix, 0, 0.0);
        u.set(ix, top, p.u_inf);
        rho.set(ix, top, p.rho_inf);
    }
}

/// `max|u| dt/dx + max|v| dt/dy_min`.
pub fn cfl_number(state: &UnsteadyState, dt: f64) -> f64 {
    let g = state.grid();
    state.u.sup_abs() * dt / g.dx() + state.v.sup_abs() * dt / g.y().h_min()
}

fn upwind_x(f: &ScalarField, vel: &ScalarField) -> ScalarField {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let dx = g.dx();
    let mut out = ScalarField::zeros(g);
    for ix in 0..nx {
        let ip = (ix + 1) % nx;
        let im = (ix + nx - 1) % nx;
        for iy in 0..ny {
            let d = if vel.get(ix, iy) >= 0.0 {
                f.get(ix, iy) - f.get(im, iy)
            } else {
                f.get(ip, iy) - f.get(ix, iy)
            };
            out.set(ix, iy, d / dx);
        }
    }
    out
}

fn upwind_y(f: &ScalarField, vel: &ScalarField) -> ScalarField {
    let g = f.grid();
    let y = g.y_nodes();
    let ny = g.ny();
    let mut out = ScalarField::zeros(g);
    for ix in 0..g.nx() {
        for iy in 0..ny {
            let back = iy > 0 && (vel.get(ix, iy) >= 0.0 || iy == ny - 1);
            let d = if back {
                (f.get(ix, iy) - f.get(ix, iy - 1)) / (y[iy] - y[iy - 1])
            } else {
                (f.get(ix, iy + 1) - f.get(ix, iy)) / (y[iy + 1] - y[iy])
            };
            out.set(ix, iy, d);
        }
    }
    out
}

fn transport(f: &ScalarField, u: &ScalarField, v: &ScalarField, blend: f64) -> ScalarField {
    let mut fx = ddx(f, 1);
    let mut fy = ddy(f, 1);
    if blend > 0.0 {
        let ux = upwind_x(f, u);
        let uy = upwind_y(f, v);
        fx = fx.zip_map(&ux, |c, w| (1.0 - blend) * c + blend * w);
        fy = fy.zip_map(&uy, |c, w| (1.0 - blend) * c + blend * w);
    }
    let mut out = f.clone();
    for (k, o) in out.values_mut().iter_mut().enumerate() {
        *o = -(u.values()[k] * fx.values()[k] + v.values()[k] * fy.values()[k]);
    }
    out
}

fn advection_rhs(
    rho: &ScalarField,
    u: &ScalarField,
    t: f64,
    p: &UnsteadyParams,
    forcing: Option<&dyn Forcing>,
) -> (ScalarField, ScalarField) {
    let v = recover_v(u);
    let mut r = transport(rho, u, &v, p.upwind_blend);
    let mut m = transport(u, u, &v, p.upwind_blend);
    if let Some(f) = forcing {
        let g = u.grid();
        for ix in 0..g.nx() {
            let x = g.x(ix);
            for (iy, &y) in g.y_nodes().iter().enumerate() {
                let (fr, fu) = f.sources(t, x, y);
                let k = g.idx(ix, iy);
                r.values_mut()[k] += fr;
                m.values_mut()[k] += fu;
            }
        }
    }
    (r, m)
}

fn axpy(a: &ScalarField, s: f64, b: &ScalarField) -> ScalarField {
    a.zip_map(b, |x, y| x + s * y)
}

fn x_diffusion(f: &ScalarField, eps: f64, dt: f64) -> ScalarField {
    if eps == 0.0 {
        return f.clone();
    }
    let a = 0.5 * eps * dt;
    f.x_multiplier(|k, _| {
        let k2 = (k * k) as f64;
        ((1.0 - a * k2) / (1.0 + a * k2), 0.0)
    })
}

/// Crank-Nicolson for `u_t = (1/rho) u_yy` on each column, Dirichlet at
/// both ends.
fn y_diffusion(u: &ScalarField, rho: &ScalarField, dt: f64, u_inf: f64) -> Result<ScalarField> {
    let g = u.grid().clone();
    let y = g.y();
    let ny = g.ny();
    let mut out = u.clone();
    let (mut a, mut b, mut c, mut d) = (vec![0.0; ny], vec![0.0; ny], vec![0.0; ny], vec![0.0; ny]);
    for ix in 0..g.nx() {
        let col = u.column(ix);
        let rcol = rho.column(ix);
        b[0] = 1.0;
        c[0] = 0.0;
        d[0] = 0.0;
        a[ny - 1] = 0.0;
        b[ny - 1] = 1.0;
        d[ny - 1] = u_inf;
        for i in 1..ny - 1 {
            let s = y.d2_stencil(i);
            let k = 0.5 * dt / rcol[i];
            a[i] = -k * s.w[0];
            b[i] = 1.0 - k * s.w[1];
            c[i] = -k * s.w[2];
            d[i] = col[i] + k * s.apply(col);
        }
        let sol = solve_tridiagonal(&a, &b, &c, &d).map_err(|e| Error::BlowUp {
            t: f64::NAN,
            reason: format!("column {ix}: {e}"),
        })?;
        out.column_mut(ix).copy_from_slice(&sol);
    }
    Ok(out)
}

fn blowup_check(t: f64, rho: &ScalarField, u: &ScalarField) -> Result<()> {
    let reason: Option<String> = if !rho.is_finite() || !u.is_finite() {
        Some("non-finite value".into())
    } else if rho.sup_abs() > BLOWUP_SUP || u.sup_abs() > BLOWUP_SUP {
        Some(format!("sup norm above {BLOWUP_SUP:.0e}"))
    } else if rho.min() < BLOWUP_RHO_MIN {
        Some(format!("density {:.3e} below {BLOWUP_RHO_MIN:.0e}", rho.min()))
    } else {
        None
    };
    match reason {
        Some(reason) => Err(Error::BlowUp { t, reason }),
        None => Ok(()),
    }
}

pub fn step_unsteady(state: &UnsteadyState, params: &UnsteadyParams) -> Result<UnsteadyState> {
    step_unsteady_forced(state, params, None)
}

pub fn step_unsteady_forced(
    state: &UnsteadyState,
    params: &UnsteadyParams,
    forcing: Option<&dyn Forcing>,
) -> Result<UnsteadyState> {
    let dt = params.dt;
    let cfl = cfl_number(state, dt);
    if cfl > params.cfl_max {
        return Err(Error::Cfl { cfl, suggested_dt: dt * params.cfl_max / cfl * 0.9 });
    }
    let t = state.t;
    let (r0, m0) = advection_rhs(&state.rho, &state.u, t, params, forcing);
    let mut rho1 = axpy(&state.rho, dt, &r0);
    let mut u1 = axpy(&state.u, dt, &m0);
    apply_bc(&mut rho1, &mut u1, params);
    let (r1, m1) = advection_rhs(&rho1, &u1, t + dt, params, forcing);
    let mut rho = state.rho.zip_map(&rho1, |a, b| 0.5 * (a + b));
    rho = axpy(&rho, 0.5 * dt, &r1);
    let mut u = state.u.zip_map(&u1, |a, b| 0.5 * (a + b));
    u = axpy(&u, 0.5 * dt, &m1);
    apply_bc(&mut rho, &mut u, params);

    rho = x_diffusion(&rho, params.eps, dt);
    u = x_diffusion(&u, params.eps, dt);
    apply_bc(&mut rho, &mut u, params);
    blowup_check(t + dt, &rho, &u)?;

    u = y_diffusion(&u, &rho, dt, params.u_inf).map_err(|e| match e {
        Error::BlowUp { reason, .. } => Error::BlowUp { t: t + dt, reason },
        other => other,
    })?;
    blowup_check(t + dt, &rho, &u)?;
    Ok(UnsteadyState::from_parts(t + dt, rho, u))
}

/// `sup |d_x u + d_y v|` over interior nodes.
pub fn divergence_residual(state: &UnsteadyState) -> f64 {
    let d = &ddx(&state.u, 1) + &ddy(&state.v, 1);
    let g = state.grid();
    let mut m = 0.0f64;
    for ix in 0..g.nx() {
        for iy in 1..g.ny() - 1 {
            m = m.max(d.get(ix, iy).abs());
        }
    }
    m
}

/// `sup_x |d_y w(x, 0)|`, with `d_y w = d_y^2 u` from the one-sided wall
/// stencil.
pub fn wall_neumann_defect(state: &UnsteadyState) -> f64 {
    let g = state.grid();
    let s = g.y().d2_stencil(0);
    (0..g.nx()).map(|ix| s.apply(state.u.column(ix)).abs()).fold(0.0, f64::max)
}

/// Resolution of the independent heat-equation oracle relative to the
/// solver it checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatOracleOptions {
    /// Fine cells per coarse cell in y (the oracle grid is uniform unless
    /// this is 1, in which case the given nodes are used as they are).
    pub refine: usize,
    /// Fine steps per coarse step.
    pub dt_divisor: usize,
}

impl Default for HeatOracleOptions {
    fn default() -> Self {
        Self { refine: 4, dt_divisor: 10 }
    }
}

impl HeatOracleOptions {
    pub const MATCHED: Self = Self { refine: 1, dt_divisor: 1 };
}

/// Crank-Nicolson solution of `rho u_t = u_yy`, `u(0) = 0`,
/// `u(y_max) = u_inf`, reported on `y_nodes`.
pub fn heat_oracle(
    rho_const: f64,
    u0: &dyn Fn(f64) -> f64,
    y_nodes: &[f64],
    t: f64,
    dt: f64,
    u_inf: f64,
    opts: HeatOracleOptions,
) -> Result<Vec<f64>> {
    if !(rho_const > 0.0) {
        return Err(Error::Data("heat oracle needs a positive density".into()));
    }
    if y_nodes.len() < 3 || !(dt > 0.0) || opts.refine == 0 || opts.dt_divisor == 0 {
        return Err(Error::Usage("heat oracle needs >= 3 nodes, dt > 0 and positive refinements".into()));
    }
    let n_coarse = y_nodes.len();
    let y_max = y_nodes[n_coarse - 1];
    let nodes: Vec<f64> = if opts.refine == 1 {
        y_nodes.to_vec()
    } else {
        let nf = opts.refine * (n_coarse - 1) + 1;
        (0..nf).map(|i| y_max * i as f64 / (nf - 1) as f64).collect()
    };
    let n = nodes.len();
    let mut u: Vec<f64> = nodes.iter().map(|&y| u0(y)).collect();
    u[0] = 0.0;
    u[n - 1] = u_inf;
    let dtf = dt / opts.dt_divisor as f64;
    let steps = if t <= 0.0 { 0 } else { libm::ceil(t / dtf - 1e-9) as usize };
    let h = if steps > 0 { t / steps as f64 } else { 0.0 };
    // Three-point second difference on non-uniform nodes.
    let mut lo = vec![0.0; n];
    let mut di = vec![0.0; n];
    let mut up = vec![0.0; n];
    for i in 1..n - 1 {
        let hm = nodes[i] - nodes[i - 1];
        let hp = nodes[i + 1] - nodes[i];
        lo[i] = 2.0 / (hm * (hm + hp));
        up[i] = 2.0 / (hp * (hm + hp));
        di[i] = -lo[i] - up[i];
    }
    let k = 0.5 * h / rho_const;
    let mut rhs = vec![0.0; n];
    let mut cp = vec![0.0; n];
    for _ in 0..steps {
        rhs[0] = 0.0;
        rhs[n - 1] = u_inf;
        for i in 1..n - 1 {
            rhs[i] = u[i] + k * (lo[i] * u[i - 1] + di[i] * u[i] + up[i] * u[i + 1]);
        }
        // Forward sweep with Dirichlet rows folded in.
        cp[0] = 0.0;
        let mut prev = rhs[0];
        u[0] = prev;
        for i in 1..n - 1 {
            let a = -k * lo[i];
            let b = 1.0 - k * di[i];
            let c = -k * up[i];
            let m = b - a * cp[i - 1];
            cp[i] = c / m;
            prev = (rhs[i] - a * prev) / m;
            u[i] = prev;
        }
        u[n - 1] = rhs[n - 1];
        for i in (1..n - 1).rev() {
            u[i] -= cp[i] * u[i + 1];
        }
    }
    if opts.refine == 1 {
        return Ok(u);
    }
    let table = Pchip::new(&nodes, &u);
    Ok(y_nodes
        .iter()
        .map(|&y| {
            let j = libm::round(y / y_max * (n - 1) as f64) as usize;
            if j < n && (nodes[j] - y).abs() <= 1e-12 * y_max {
                u[j]
            } else {
                table.eval(y)
            }
        })
        .collect())
}

/// What `run_unsteady` watches and how often.
#[derive(Clone, Debug, PartialEq)]
pub struct MonitorConfig {
    pub weights: WeightParams,
    pub s_max: usize,
    pub delta_bl: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Energy report cadence in steps (0 disables intermediate reports).
    pub report_every: usize,
    /// Snapshot cadence in steps (0 keeps only the first and last state).
    pub snapshot_every: usize,
    pub stop_on_failure: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            weights: WeightParams { gamma: 2.0, sigma: 3.0 },
            s_max: 2,
            delta_bl: 0.0,
            kappa1: 0.0,
            kappa2: f64::INFINITY,
            report_every: 10,
            snapshot_every: 0,
            stop_on_failure: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    /// A monitored bound failed; the run stopped at `t`.
    MonitorFailure { t: f64, bound: &'static str },
    BlowUp { t: f64, reason: String },
}

#[derive(Clone, Debug)]
pub struct UnsteadyRun {
    pub snapshots: Vec<UnsteadyState>,
    pub reports: Vec<EnergyReport>,
    /// Last reported time at which all pointwise bounds held.
    pub life_span: Option<f64>,
    pub status: RunStatus,
    pub steps: usize,
}

fn first_failed_bound(r: &EnergyReport, m: &MonitorConfig) -> Option<&'static str> {
    if r.min_w_sigma < m.delta_bl {
        Some("vorticity lower bound w<y>^sigma >= delta")
    } else if r.rho_min < m.kappa1 {
        Some("density lower bound rho >= kappa1")
    } else if r.rho_max > m.kappa2 {
        Some("density upper bound rho <= kappa2")
    } else {
        None
    }
}

pub fn run_unsteady(init: UnsteadyState, params: &UnsteadyParams, monitors: &MonitorConfig) -> Result<UnsteadyRun> {
    run_unsteady_forced(init, params, monitors, None)
}

pub fn run_unsteady_forced(
    init: UnsteadyState,
    params: &UnsteadyParams,
    monitors: &MonitorConfig,
    forcing: Option<&dyn Forcing>,
) -> Result<UnsteadyRun> {
    params.validate()?;
    let n_steps = if params.t_final <= 0.0 {
        0
    } else {
        libm::round(params.t_final / params.dt) as usize
    };
    let report = |s: &UnsteadyState| energy::energy_report(s, &monitors.weights, params.rho_inf, monitors.s_max, monitors.delta_bl);
    let mut reports = vec![report(&init)?];
    let mut snapshots = vec![init.clone()];
    let mut life_span = first_failed_bound(&reports[0], monitors).is_none().then_some(init.t);
    let mut status = RunStatus::Completed;
    let mut failed = life_span.is_none();
    if failed {
        status = RunStatus::MonitorFailure { t: init.t, bound: first_failed_bound(&reports[0], monitors).unwrap_or("") };
    }
    let mut state = init;
    let mut steps = 0;
    if !(failed && monitors.stop_on_failure) {
        for k in 1..=n_steps {
            match step_unsteady_forced(&state, params, forcing) {
                Ok(s) => state = s,
                Err(Error::BlowUp { t, reason }) => {
                    status = RunStatus::BlowUp { t, reason };
                    break;
                }
                Err(e @ Error::Cfl { .. }) => {
                    status = RunStatus::BlowUp { t: state.t, reason: format!("{e}") };
                    break;
                }
                Err(e) => return Err(e),
            }
            steps = k;
            let last = k == n_steps;
            if last || (monitors.report_every > 0 && k % monitors.report_every == 0) {
                let r = report(&state)?;
                let bad = first_failed_bound(&r, monitors);
                if !failed {
                    match bad {
                        None => life_span = Some(state.t),
                        Some(bound) => {
                            failed = true;
                            status = RunStatus::MonitorFailure { t: state.t, bound };
                        }
                    }
                }
                reports.push(r);
            }
            if last || (monitors.snapshot_every > 0 && k % monitors.snapshot_every == 0) {
                snapshots.push(state.clone());
            }
            if failed && monitors.stop_on_failure {
                if snapshots.last().map(|s| s.t) != Some(state.t) {
                    snapshots.push(state.clone());
                }
                break;
            }
        }
    }
    if let RunStatus::BlowUp { .. } = status {
        if snapshots.last().map(|s| s.t) != Some(state.t) {
            snapshots.push(state);
        }
    }
    Ok(UnsteadyRun { snapshots, reports, life_span, status, steps })
}
