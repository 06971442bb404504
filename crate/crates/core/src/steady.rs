//! Steady inhomogeneous Prandtl system in the quotient variable `q = v/u`,
//! marched in `x` by the theta-regularized Picard iteration
//!
//! ```text
//! d_x rho^k + q^{k-1} d_y rho^k = 0
//! rho^k (u^{k-1} + theta)^2 d_y q^k + d_y^2 u^k = r0
//! d_x u^k + d_y(u^{k-1} q^k) = 0
//! ```
//!
//! with `r0 = rho0 (2 u0 theta + theta^2) d_y q0` and
//! `q0 = -int_0^y d_y^2 u0 / (rho0 u0^2)`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::compat::wall_derivative_estimate;
use crate::error::{Error, Result};
use crate::grid::YAxis;
use crate::interp::Pchip;
use crate::linalg::solve_narrow_upper;
use crate::math::{log, sqrt};
use crate::stencil::fornberg;

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyParams {
    pub theta: f64,
    /// Strictly decreasing, ending at a value `>= 0`; empty means `[theta]`.
    pub theta_schedule: Vec<f64>,
    pub m: usize,
    pub sigma_tilde: f64,
    pub dx: f64,
    pub length: f64,
    /// `u0'(0) / 4` when `None`.
    pub lambda0: Option<f64>,
    /// `min u0 / 2` over `[delta / 2, y_max]` when `None`.
    pub xi0: Option<f64>,
    /// `min rho0 / 2` when `None`.
    pub kappa3: Option<f64>,
    /// Upper bound `delta_0` for the near-wall width.
    pub delta_nb: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub rho_inf: f64,
    pub u_inf: f64,
}

impl Default for SteadyParams {
    fn default() -> Self {
        Self {
            theta: 1e-2,
            theta_schedule: vec![1e-1, 1e-2, 1e-3, 0.0],
            m: 3,
            sigma_tilde: 2.0,
            dx: 1e-3,
            length: 0.1,
            lambda0: None,
            xi0: None,
            kappa3: None,
            delta_nb: 0.5,
            picard_tol: 1e-8,
            picard_max_iters: 40,
            rho_inf: 1.0,
            u_inf: 1.0,
        }
    }
}

impl SteadyParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::Parameter(s));
        if self.m < 3 {
            return bad(format!("m = {} must be at least 3", self.m));
        }
        if !(self.sigma_tilde >= 2.0) {
            return bad(format!("sigma_tilde = {} must be at least 2", self.sigma_tilde));
        }
        if !(self.dx > 0.0) || !(self.length >= 0.0) {
            return bad("dx must be positive and L nonnegative".into());
        }
        if !(self.theta >= 0.0) {
            return bad("theta must be nonnegative".into());
        }
        if self.theta_schedule.windows(2).any(|p| !(p[1] < p[0])) || self.theta_schedule.iter().any(|&t| !(t >= 0.0)) {
            return bad("theta schedule must be strictly decreasing and nonnegative".into());
        }
        if matches!(self.kappa3, Some(k) if !(k > 0.0)) {
            return bad("kappa3 must be positive".into());
        }
        if !(self.picard_tol > 0.0) || self.picard_max_iters == 0 {
            return bad("Picard tolerance and iteration cap must be positive".into());
        }
        if !(self.delta_nb > 0.0) {
            return bad("delta_nb must be positive".into());
        }
        Ok(())
    }

    pub fn schedule(&self) -> Vec<f64> {
        if self.theta_schedule.is_empty() {
            vec![self.theta]
        } else {
            self.theta_schedule.clone()
        }
    }
}

/// One `x` station.
#[derive(Clone, Debug, PartialEq)]
pub struct SteadyState {
    pub x: f64,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub q: Vec<f64>,
    /// `d_y q` as produced by the first integral.
    pub qy: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SlabStop {
    WallSlope { x: f64, slope: f64 },
    Separation { x: f64 },
}

impl SlabStop {
    pub fn x(&self) -> f64 {
        match self {
            SlabStop::WallSlope { x, .. } | SlabStop::Separation { x } => *x,
        }
    }
}

/// An iterate: stations `x_j = j dx`, possibly cut short.
#[derive(Clone, Debug, PartialEq)]
pub struct Slab {
    pub stations: Vec<SteadyState>,
    pub stop: Option<SlabStop>,
}

impl Slab {
    pub fn x_end(&self) -> f64 {
        self.stations.last().map_or(0.0, |s| s.x)
    }
}

/// Fourth-order second-derivative weights on arbitrary nodes.
#[derive(Clone, Debug)]
pub struct HighOrderD2 {
    rows: Vec<(usize, [f64; 6], usize)>,
}

impl HighOrderD2 {
    pub fn new(y: &[f64]) -> Result<Self> {
        let n = y.len();
        if n < 6 {
            return Err(Error::Usage("fourth-order d2 needs 6 nodes".into()));
        }
        let rows = (0..n)
            .map(|i| {
                let (start, len) = if i < 2 {
                    (0, 6)
                } else if i + 2 >= n {
                    (n - 6, 6)
                } else {
                    (i - 2, 5)
                };
                let c = fornberg(y[i], &y[start..start + len], 2);
                let mut w = [0.0; 6];
                w[..len].copy_from_slice(&c[2]);
                (start, w, len)
            })
            .collect();
        Ok(Self { rows })
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|(s, w, l)| (0..*l).map(|j| w[j] * f[s + j]).sum())
            .collect()
    }
}

/// Initial data with the grid operators the march needs.
#[derive(Clone, Debug)]
pub struct SteadyData {
    pub y: Arc<YAxis>,
    pub rho0: Vec<f64>,
    pub u0: Vec<f64>,
    pub q0: Vec<f64>,
    pub q0y: Vec<f64>,
    d2_hi: HighOrderD2,
}

impl SteadyData {
    pub fn new(y: Arc<YAxis>, rho0: Vec<f64>, u0: Vec<f64>) -> Result<Self> {
        let d2_hi = HighOrderD2::new(y.nodes())?;
        let (q0, q0y) = q0_with_derivative(&y, &d2_hi, &rho0, &u0)?;
        Ok(Self { y, rho0, u0, q0, q0y, d2_hi })
    }

    pub fn initial_station(&self) -> SteadyState {
        SteadyState { x: 0.0, rho: self.rho0.clone(), u: self.u0.clone(), q: self.q0.clone(), qy: self.q0y.clone() }
    }

    /// `r0 = rho0 (2 u0 theta + theta^2) d_y q0`.
    pub fn r0(&self, theta: f64) -> Vec<f64> {
        (0..self.u0.len())
            .map(|i| self.rho0[i] * (2.0 * self.u0[i] * theta + theta * theta) * self.q0y[i])
            .collect()
    }

    pub fn d2_high(&self, f: &[f64]) -> Vec<f64> {
        self.d2_hi.apply(f)
    }
}

fn q0_with_derivative(y: &YAxis, d2: &HighOrderD2, rho0: &[f64], u0: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    if rho0.len() != n || u0.len() != n {
        return Err(Error::Usage("rho0, u0 and y differ in length".into()));
    }
    if rho0.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Data("rho0 must be positive".into()));
    }
    if u0[0] != 0.0 || u0[1..].iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Data("u0 must vanish at the wall and be positive above it".into()));
    }
    for k in [2, 3] {
        let (d, e) = wall_derivative_estimate(y.nodes(), u0, k)?;
        if d.abs() > 10.0 * e + 1e-10 {
            return Err(Error::Data(format!(
                "q0 integrand diverges at the wall: d_y^{k} u0(0) = {d:.3e} violates the compatibility conditions"
            )));
        }
    }
    let uyy = d2.apply(u0);
    let mut g: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { -uyy[i] / (rho0[i] * u0[i] * u0[i]) }).collect();
    g[0] = 0.0;
    let q = y.cumulative(&g);
    Ok((q, g))
}

/// `q0(y) = -int_0^y d_y^2 u0 / (rho0 u0^2)` by cumulative trapezoid with
/// the integrand set to 0 at the wall.
pub fn build_q0(y: &YAxis, rho0: &[f64], u0: &[f64]) -> Result<Vec<f64>> {
    let d2 = HighOrderD2::new(y.nodes())?;
    Ok(q0_with_derivative(y, &d2, rho0, u0)?.0)
}

/// `rho_next(y) = rho_prev(y - dx q(y))` with monotone cubic interpolation,
/// clamped to the range of `rho_prev`. Feet up to one cell below the wall
/// are moved to the wall.
pub fn advect_density(y: &[f64], rho_prev: &[f64], q: &[f64], dx: f64) -> Result<Vec<f64>> {
    let (lo, hi) = rho_prev
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let p = Pchip::new(y, rho_prev);
    let cell = y[1] - y[0];
    y.iter()
        .zip(q)
        .map(|(&yy, &qq)| {
            let mut foot = yy - dx * qq;
            if foot < 0.0 {
                if foot < -cell {
                    return Err(Error::Step(format!("characteristic foot {foot:.3e} lies below the wall")));
                }
                foot = 0.0;
            }
            Ok(p.eval(foot).clamp(lo, hi))
        })
        .collect()
}

/// Thresholds watched along the march.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorConstants {
    pub lambda0: f64,
    pub delta: f64,
    pub xi0: f64,
    pub kappa3: f64,
}

impl MonitorConstants {
    /// `lambda0 = u0'(0)/4`; `delta` the largest node `<= delta_nb` with
    /// `u0 >= 2 lambda0 y` on `[0, delta]`; `xi0 = min u0 / 2` over
    /// `[delta / 2, y_max]`; `kappa3 = min rho0 / 2`.
    pub fn from_data(data: &SteadyData, p: &SteadyParams) -> Result<Self> {
        let y = data.y.nodes();
        let lambda0 = match p.lambda0 {
            Some(l) => l,
            None => wall_derivative_estimate(y, &data.u0, 1)?.0 / 4.0,
        };
        if !(lambda0 > 0.0) {
            return Err(Error::Data(format!("wall slope must be positive, lambda0 = {lambda0:.3e}")));
        }
        let mut delta = 0.0;
        for (&yy, &u) in y.iter().zip(&data.u0) {
            if yy > p.delta_nb || u < 2.0 * lambda0 * yy {
                break;
            }
            delta = yy;
        }
        if !(delta > 0.0) {
            return Err(Error::Data("no near-wall interval with u0 >= 2 lambda0 y".into()));
        }
        let xi0 = match p.xi0 {
            Some(v) => v,
            None => {
                y.iter()
                    .zip(&data.u0)
                    .filter(|(&yy, _)| yy >= 0.5 * delta)
                    .map(|(_, &u)| u)
                    .fold(f64::INFINITY, f64::min)
                    / 2.0
            }
        };
        let kappa3 = p.kappa3.unwrap_or_else(|| 0.5 * data.rho0.iter().copied().fold(f64::INFINITY, f64::min));
        Ok(Self { lambda0, delta, xi0, kappa3 })
    }
}

/// Green/red state of the pointwise bounds at one station.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationMonitor {
    pub x: f64,
    pub wall_slope: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// `min (u - lambda0 y)` over `[0, delta]`.
    pub near_wall_margin: f64,
    /// `min u` over `[delta / 2, y_max]`.
    pub far_min_u: f64,
    pub green: bool,
}

pub fn wall_slope(y: &YAxis, u: &[f64]) -> f64 {
    y.d1_stencil(0).apply(u)
}

pub fn station_monitor(y: &YAxis, s: &SteadyState, c: &MonitorConstants) -> StationMonitor {
    let nodes = y.nodes();
    let slope = wall_slope(y, &s.u);
    let (rho_min, rho_max) = s.rho.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut near = f64::INFINITY;
    let mut far = f64::INFINITY;
    for (i, &yy) in nodes.iter().enumerate() {
        if yy <= c.delta {
            near = near.min(s.u[i] - c.lambda0 * yy);
        }
        if yy >= 0.5 * c.delta {
            far = far.min(s.u[i]);
        }
    }
    let green = slope >= 2.0 * c.lambda0 && rho_min >= c.kappa3 && near >= 0.0 && far >= c.xi0;
    StationMonitor { x: s.x, wall_slope: slope, rho_min, rho_max, near_wall_margin: near, far_min_u: far, green }
}

/// Operator of one implicit station update: `d_x u = K u + f` with
/// `K = D1 diag(U) M`, `f = -D1 diag(U) q_c`, and `q = q_c - M u`.
struct StationOperator {
    n: usize,
    k: Vec<f64>,
    f: Vec<f64>,
    a: Vec<f64>,
    r0: Vec<f64>,
}

fn station_operator(y: &YAxis, rho: &[f64], u_prev: &[f64], r0: &[f64], theta: f64) -> Result<StationOperator> {
    let n = y.len();
    let nodes = y.nodes();
    let mut a = vec![0.0; n];
    for i in 0..n {
        let d = rho[i] * (u_prev[i] + theta) * (u_prev[i] + theta);
        if i == 0 && theta == 0.0 {
            continue;
        }
        if !(d >= 1e-12) {
            return Err(Error::Degeneracy { min: d, required: 1e-12 });
        }
        a[i] = 1.0 / d;
    }
    let mut m = vec![0.0; n * n];
    let mut qc = vec![0.0; n];
    let add_d2 = |row: &mut [f64], i: usize, c: f64| {
        let s = y.d2_stencil(i);
        for j in 0..s.len {
            row[s.start + j] += c * s.w[j];
        }
    };
    for i in 1..n {
        let h = 0.5 * (nodes[i] - nodes[i - 1]);
        let (prev, cur) = m.split_at_mut(i * n);
        let row = &mut cur[..n];
        row.copy_from_slice(&prev[(i - 1) * n..i * n]);
        add_d2(row, i - 1, h * a[i - 1]);
        add_d2(row, i, h * a[i]);
        qc[i] = qc[i - 1] + h * (a[i - 1] * r0[i - 1] + a[i] * r0[i]);
    }
    let mut k = vec![0.0; n * n];
    let mut f = vec![0.0; n];
    for i in 0..n {
        let s = y.d1_stencil(i);
        for jj in 0..s.len {
            let j = s.start + jj;
            let c = s.w[jj] * u_prev[j];
            if c == 0.0 {
                continue;
            }
            f[i] -= c * qc[j];
            let mrow = &m[j * n..(j + 1) * n];
            let krow = &mut k[i * n..(i + 1) * n];
            let last = (j + 2).max(4).min(n);
            for col in 0..last {
                krow[col] += c * mrow[col];
            }
        }
    }
    Ok(StationOperator { n, k, f, a, r0: r0.to_vec() })
}

impl StationOperator {
    /// Solves `(I - beta K) u = rhs + beta f` with Dirichlet rows at both ends.
    fn solve(&self, beta: f64, rhs: &[f64], u_top: f64) -> Result<Vec<f64>> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n];
        let mut ext = vec![0usize; n];
        for i in 0..n {
            if i == 0 || i == n - 1 {
                a[i * n + i] = 1.0;
                b[i] = if i == 0 { 0.0 } else { u_top };
                ext[i] = i;
                continue;
            }
            let last = (i + 3).max(4).min(n);
            for c in 0..last {
                a[i * n + c] = -beta * self.k[i * n + c];
            }
            a[i * n + i] += 1.0;
            b[i] = rhs[i] + beta * self.f[i];
            ext[i] = last - 1;
        }
        solve_narrow_upper(&a, n, &ext, &b)
    }

    /// `d_y q = a (r0 - D2 u)` (zero at the wall when `theta = 0`) and `q`.
    fn quotient(&self, y: &YAxis, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut uyy = vec![0.0; self.n];
        y.d2_into(u, &mut uyy);
        let g: Vec<f64> = (0..self.n).map(|i| self.a[i] * (self.r0[i] - uyy[i])).collect();
        (y.cumulative(&g), g)
    }
}

/// Iterate `k` from iterate `k - 1`: density along the old characteristics,
/// then an implicit second-order (BDF2, first step backward Euler) march of
/// `d_x u = -d_y(u^{k-1} q^k)` with `q^k` from the first integral.
pub fn picard_step(prev: &Slab, data: &SteadyData, p: &SteadyParams, theta: f64, c: &MonitorConstants) -> Result<Slab> {
    let y = &*data.y;
    let nodes = y.nodes();
    let n = y.len();
    let r0 = data.r0(theta);
    let mut stations = vec![data.initial_station()];
    let steps = if p.length <= 0.0 { 0 } else { libm::round(p.length / p.dx) as usize };
    let avail = prev.stations.len().saturating_sub(1);
    let mut stop = None;
    for j in 0..steps.min(avail) {
        let cur = &stations[j];
        let (pa, pb) = (&prev.stations[j], &prev.stations[j + 1]);
        let qmid: Vec<f64> = pa.q.iter().zip(&pb.q).map(|(a, b)| 0.5 * (a + b)).collect();
        let rho = advect_density(nodes, &cur.rho, &qmid, p.dx)?;
        let op = station_operator(y, &rho, &pb.u, &r0, theta)?;
        let u = if j == 0 {
            op.solve(p.dx, &cur.u, p.u_inf)?
        } else {
            let older = &stations[j - 1];
            let rhs: Vec<f64> = (0..n).map(|i| (4.0 * cur.u[i] - older.u[i]) / 3.0).collect();
            op.solve(2.0 * p.dx / 3.0, &rhs, p.u_inf)?
        };
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalOverflow("steady march"));
        }
        let (q, qy) = op.quotient(y, &u);
        let x = (j + 1) as f64 * p.dx;
        let next = SteadyState { x, rho, u, q, qy };
        if next.u[1..n - 1].iter().any(|&v| !(v > 0.0)) {
            stop = Some(SlabStop::Separation { x });
            break;
        }
        let slope = wall_slope(y, &next.u);
        stations.push(next);
        if slope < c.lambda0 {
            stop = Some(SlabStop::WallSlope { x, slope });
            break;
        }
    }
    if stop.is_none() {
        stop = prev.stop.clone().filter(|s| s.x() < p.length);
    }
    Ok(Slab { stations, stop })
}

/// `max_j (sup|d rho| + sup|d u| + sup|d q|)` over the common stations.
pub fn slab_distance(a: &Slab, b: &Slab) -> f64 {
    let sup = |p: &[f64], q: &[f64]| p.iter().zip(q).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    a.stations
        .iter()
        .zip(&b.stations)
        .map(|(s, t)| sup(&s.rho, &t.rho) + sup(&s.u, &t.u) + sup(&s.q, &t.q))
        .fold(0.0, f64::max)
}

fn l2_y(y: &YAxis, f: &[f64]) -> f64 {
    sqrt(y.quadrature_weights().iter().zip(f).map(|(w, v)| w * v * v).sum())
}

/// Per-station check of the first integral
/// `rho^k (u^{k-1} + theta)^2 d_y q^k + d_y^2 u^k = r0`, with `d_y^2` of
/// fourth order. `tol` is a Richardson estimate of the second-order
/// `d_y^2` error (3-point stencils on every node vs every other node).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct R0Station {
    pub x: f64,
    pub residual: f64,
    pub tol: f64,
}

pub fn check_r0_stations(slab: &Slab, prev: &Slab, data: &SteadyData, theta: f64) -> Vec<R0Station> {
    let y = &*data.y;
    let r0 = data.r0(theta);
    let coarse = coarse_axis(y);
    slab.stations
        .iter()
        .zip(&prev.stations)
        .enumerate()
        .map(|(j, (s, pr))| {
            let u_prev = if j == 0 { &data.u0 } else { &pr.u };
            let uyy = data.d2_high(&s.u);
            let res: Vec<f64> = (0..s.u.len())
                .map(|i| {
                    let b = u_prev[i] + theta;
                    s.rho[i] * b * b * s.qy[i] + uyy[i] - r0[i]
                })
                .collect();
            let tol = coarse.as_ref().map_or(f64::INFINITY, |c| d2_error_estimate(y, c, &s.u));
            R0Station { x: s.x, residual: l2_y(y, &res), tol }
        })
        .collect()
}

/// `max_j ||rho^k (u^{k-1}+theta)^2 d_y q^k + d_y^2 u^k - r0||_{L^2_y}`.
pub fn check_r0(slab: &Slab, prev: &Slab, data: &SteadyData, theta: f64) -> f64 {
    check_r0_stations(slab, prev, data, theta)
        .iter()
        .map(|s| s.residual)
        .fold(0.0, f64::max)
}

fn coarse_axis(y: &YAxis) -> Option<YAxis> {
    let nodes: Vec<f64> = y.nodes().iter().step_by(2).copied().collect();
    if (y.len() - 1) % 2 != 0 {
        return None;
    }
    YAxis::new(nodes).ok()
}

fn d2_error_estimate(fine: &YAxis, coarse: &YAxis, u: &[f64]) -> f64 {
    let mut df = vec![0.0; fine.len()];
    fine.d2_into(u, &mut df);
    let uc: Vec<f64> = u.iter().step_by(2).copied().collect();
    let mut dc = vec![0.0; coarse.len()];
    coarse.d2_into(&uc, &mut dc);
    let diff: Vec<f64> = dc.iter().zip(df.iter().step_by(2)).map(|(c, f)| (c - f) / 3.0).collect();
    l2_y(coarse, &diff)
}

/// Relative residual of the differential form
/// `d_x{rho (u^{k-1}+theta)^2 d_y q} = d_y^3(u^{k-1} q)`, with the same
/// `x` differences as the march, over nodes away from both ends. Maximum
/// `||residual|| / ||d_y^3(u^{k-1} q)||` per station `x > 0`.
pub fn differential_residuals(slab: &Slab, prev: &Slab, data: &SteadyData, theta: f64, dx: f64) -> Vec<f64> {
    let y = &*data.y;
    let n = y.len();
    let m = slab.stations.len().min(prev.stations.len());
    let e: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let (s, up) = (&slab.stations[j], &prev.stations[j].u);
            (0..n).map(|i| s.rho[i] * (up[i] + theta) * (up[i] + theta) * s.qy[i]).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(m.saturating_sub(1));
    for j in 1..m {
        let (s, up) = (&slab.stations[j], &prev.stations[j].u);
        let uq: Vec<f64> = up.iter().zip(&s.q).map(|(a, b)| a * b).collect();
        let d3 = y.deriv(&uq, 3);
        let mut num = vec![0.0; n];
        let mut den = vec![0.0; n];
        for i in 3..n.saturating_sub(3) {
            let ex = if j == 1 {
                (e[1][i] - e[0][i]) / dx
            } else {
                (3.0 * e[j][i] - 4.0 * e[j - 1][i] + e[j - 2][i]) / (2.0 * dx)
            };
            num[i] = ex - d3[i];
            den[i] = d3[i];
        }
        let d = l2_y(y, &den);
        out.push(if d > 0.0 { l2_y(y, &num) / d } else { 0.0 });
    }
    out
}

pub fn differential_residual(slab: &Slab, prev: &Slab, data: &SteadyData, theta: f64, dx: f64) -> f64 {
    differential_residuals(slab, prev, data, theta, dx).into_iter().fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct R0Summary {
    pub k: usize,
    pub max_residual: f64,
    /// `max_j residual_j / tol_j` over stations `x > 0`.
    pub worst_ratio: f64,
    pub station0_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardDiagnostics {
    pub theta: f64,
    pub r0: Vec<f64>,
    pub k_done: usize,
    pub phi_series: Vec<f64>,
    pub contraction_ratio: f64,
    pub converged: bool,
    pub r0_checks: Vec<R0Summary>,
    /// Relative residual of the differential form beyond the two start-up
    /// stations of the last iterate.
    pub differential_residual: f64,
    /// The same over the two start-up stations, where the switch from the
    /// fourth-order `d_y^2 u0` in `q0` to the marched second-order one
    /// enters divided by `dx`.
    pub startup_residual: f64,
}

/// Converges the Picard iteration at one `theta`, starting from `start`.
pub fn run_picard(
    start: Slab,
    data: &SteadyData,
    p: &SteadyParams,
    theta: f64,
    c: &MonitorConstants,
) -> Result<(Slab, PicardDiagnostics)> {
    let mut prev = start;
    let mut phi = Vec::new();
    let mut checks = Vec::new();
    let mut bad_run = 0;
    let mut converged = false;
    let mut diff_res = Vec::new();
    for k in 1..=p.picard_max_iters {
        let next = picard_step(&prev, data, p, theta, c)?;
        let st = check_r0_stations(&next, &prev, data, theta);
        checks.push(R0Summary {
            k,
            max_residual: st.iter().map(|s| s.residual).fold(0.0, f64::max),
            worst_ratio: st.iter().skip(1).map(|s| s.residual / s.tol).fold(0.0, f64::max),
            station0_residual: st.first().map_or(0.0, |s| s.residual),
        });
        diff_res = differential_residuals(&next, &prev, data, theta, p.dx);
        let d = slab_distance(&next, &prev);
        phi.push(d);
        if phi.len() >= 2 {
            let r = d / phi[phi.len() - 2];
            bad_run = if r >= 1.0 { bad_run + 1 } else { 0 };
            if bad_run >= 3 {
                return Err(Error::IterationDivergence { theta, k, ratio: r });
            }
        }
        prev = next;
        if d < p.picard_tol {
            converged = true;
            break;
        }
    }
    let ratio = if phi.len() >= 2 { phi[phi.len() - 1] / phi[phi.len() - 2] } else { 0.0 };
    let diag = PicardDiagnostics {
        theta,
        r0: data.r0(theta),
        k_done: phi.len(),
        phi_series: phi,
        contraction_ratio: ratio,
        converged,
        r0_checks: checks,
        differential_residual: diff_res.iter().skip(2).copied().fold(0.0, f64::max),
        startup_residual: diff_res.iter().take(2).copied().fold(0.0, f64::max),
    };
    Ok((prev, diag))
}

/// The zeroth iterate: the initial slice copied to every station.
pub fn initial_slab(data: &SteadyData, p: &SteadyParams) -> Slab {
    let steps = if p.length <= 0.0 { 0 } else { libm::round(p.length / p.dx) as usize };
    let s0 = data.initial_station();
    let stations = (0..=steps)
        .map(|j| SteadyState { x: j as f64 * p.dx, ..s0.clone() })
        .collect();
    Slab { stations, stop: None }
}

#[derive(Clone, Debug, PartialEq)]
pub struct XYPoint {
    pub x: f64,
    pub x_energy: f64,
    pub y_dissipation: f64,
}

#[derive(Clone, Debug)]
pub struct SteadyRun {
    pub slabs: Vec<(f64, Slab)>,
    pub diagnostics: Vec<PicardDiagnostics>,
    /// Distances between converged slabs of consecutive theta values.
    pub cauchy_distances: Vec<f64>,
    pub cauchy_ok: bool,
    pub constants: MonitorConstants,
    pub monitors: Vec<StationMonitor>,
    /// Largest `x` up to which every station monitor is green.
    pub life_span: Option<f64>,
    pub xy_series: Vec<XYPoint>,
}

impl SteadyRun {
    pub fn final_slab(&self) -> &Slab {
        &self.slabs.last().expect("at least one theta").1
    }
}

pub fn run_steady(data: &SteadyData, p: &SteadyParams) -> Result<SteadyRun> {
    p.validate()?;
    let c = MonitorConstants::from_data(data, p)?;
    let mut slab = initial_slab(data, p);
    let mut slabs: Vec<(f64, Slab)> = Vec::new();
    let mut diagnostics = Vec::new();
    for theta in p.schedule() {
        let (s, d) = run_picard(slab, data, p, theta, &c)?;
        slabs.push((theta, s.clone()));
        diagnostics.push(d);
        slab = s;
    }
    let cauchy: Vec<f64> = slabs.windows(2).map(|w| slab_distance(&w[1].1, &w[0].1)).collect();
    let cauchy_ok = cauchy.windows(2).all(|w| w[1] < w[0]);
    let last = &slabs.last().expect("schedule is nonempty").1;
    let monitors: Vec<StationMonitor> = last.stations.iter().map(|s| station_monitor(&data.y, s, &c)).collect();
    let mut life_span = None;
    for m in &monitors {
        if !m.green {
            break;
        }
        life_span = Some(m.x);
    }
    let theta_last = slabs.last().map_or(0.0, |s| s.0);
    let mut xy_series = Vec::new();
    for j in p.m..last.stations.len() {
        let (xv, yv) = energy_xy(&last.stations[j - p.m..=j], &data.y, p, theta_last)?;
        xy_series.push(XYPoint { x: last.stations[j].x, x_energy: xv, y_dissipation: yv });
    }
    Ok(SteadyRun { slabs, diagnostics, cauchy_distances: cauchy, cauchy_ok, constants: c, monitors, life_span, xy_series })
}

fn backward_difference(window: &[SteadyState], a1: usize, dx: f64, f: impl Fn(&SteadyState) -> Vec<f64>) -> Vec<f64> {
    let w = window.len();
    let n = window[0].u.len();
    let mut out = vec![0.0; n];
    for i in 0..=a1 {
        let c = crate::math::binomial(a1, i) * if i % 2 == 0 { 1.0 } else { -1.0 };
        let v = f(&window[w - 1 - i]);
        for (o, x) in out.iter_mut().zip(&v) {
            *o += c * x;
        }
    }
    let s = crate::math::powi(dx, a1 as i32);
    out.iter_mut().for_each(|o| *o /= s);
    out
}

/// `X = sum_{|a|<=m} ||d^a (rho - rho_inf)||^2
///     + sum_{|a|<=m} ||sqrt(rho) (u + theta) d^a d_y q <y>^sigma~||^2
///     + ||u - u_inf||^2 + ||d_y u||^2`,
/// `Y = sum_{|a|<=m} ||sqrt(u) d^a d_y^2 q <y>^sigma~||^2` at the last
/// station of a window of `m + 1` stations; `x`-derivatives are backward
/// differences.
pub fn energy_xy(window: &[SteadyState], y: &YAxis, p: &SteadyParams, theta: f64) -> Result<(f64, f64)> {
    let m = p.m;
    if window.len() < m + 1 {
        return Err(Error::Usage(format!("energy window needs {} stations, got {}", m + 1, window.len())));
    }
    let window = &window[window.len() - (m + 1)..];
    let last = &window[m];
    let dx = if m > 0 && window[m].x > window[m - 1].x { window[m].x - window[m - 1].x } else { p.dx };
    let wt = y.weight(p.sigma_tilde);
    let sq = |f: &[f64], scale: &dyn Fn(usize) -> f64| -> f64 {
        y.quadrature_weights().iter().enumerate().map(|(i, w)| { let v = f[i] * scale(i); w * v * v }).sum()
    };
    let mut xe = 0.0;
    let mut ye = 0.0;
    let rho_coef: Vec<f64> = (0..last.u.len()).map(|i| sqrt(last.rho[i]) * (last.u[i] + theta) * wt[i]).collect();
    let u_coef: Vec<f64> = (0..last.u.len()).map(|i| sqrt(last.u[i].max(0.0)) * wt[i]).collect();
    for a1 in 0..=m {
        let rx = backward_difference(window, a1, dx, |s| s.rho.iter().map(|r| r - p.rho_inf).collect());
        let qx = backward_difference(window, a1, dx, |s| s.qy.clone());
        for a2 in 0..=(m - a1) {
            let dr = y.deriv(&rx, a2);
            xe += sq(&dr, &|_| 1.0);
            let dq = y.deriv(&qx, a2);
            xe += sq(&dq, &|i| rho_coef[i]);
            let dqq = y.deriv(&qx, a2 + 1);
            ye += sq(&dqq, &|i| u_coef[i]);
        }
    }
    let ub: Vec<f64> = last.u.iter().map(|u| u - p.u_inf).collect();
    xe += sq(&ub, &|_| 1.0);
    xe += sq(&y.deriv(&last.u, 1), &|_| 1.0);
    Ok((xe, ye))
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    /// `(x, ||sqrt(rho_1) u_2 d_y q~ <y>^sigma~||^2 + ||rho~||^2)`.
    pub functional: Vec<(f64, f64)>,
    pub identical: bool,
    pub envelope_ok: bool,
    pub fitted_growth: f64,
}

/// Stability functional of two converged slabs on the same grid, with
/// `q~ = (u_1 q_1 - u_2 q_2) / u_2`, and the smallest `C` with
/// `F(x) <= F(x_1) e^{C (x - x_1)}`.
pub fn stability_check(a: &Slab, b: &Slab, y: &YAxis, sigma_tilde: f64) -> Result<StabilityReport> {
    if a.stations.len() != b.stations.len()
        || a.stations.iter().zip(&b.stations).any(|(s, t)| s.u.len() != t.u.len() || s.x != t.x)
        || a.stations.first().map_or(0, |s| s.u.len()) != y.len()
    {
        return Err(Error::Usage("stability check needs slabs on the same grid".into()));
    }
    let identical = a == b;
    let wt = y.weight(sigma_tilde);
    let mut functional = Vec::with_capacity(a.stations.len());
    for (s1, s2) in a.stations.iter().zip(&b.stations) {
        let n = s1.u.len();
        let qt: Vec<f64> = (0..n)
            .map(|i| if i == 0 { 0.0 } else { (s1.u[i] * s1.q[i] - s2.u[i] * s2.q[i]) / s2.u[i] })
            .collect();
        let mut qty = vec![0.0; n];
        y.d1_into(&qt, &mut qty);
        let f: f64 = y
            .quadrature_weights()
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let g = sqrt(s1.rho[i]) * s2.u[i] * qty[i] * wt[i];
                let r = s1.rho[i] - s2.rho[i];
                w * (g * g + r * r)
            })
            .sum();
        functional.push((s1.x, f));
    }
    let finite = functional.iter().all(|(_, f)| f.is_finite());
    let mut growth = 0.0f64;
    if let Some(&(x1, f1)) = functional.get(1) {
        if f1 > 0.0 {
            for &(x, f) in functional.iter().skip(2) {
                if f > 0.0 {
                    growth = growth.max(log(f / f1) / (x - x1));
                }
            }
        }
    }
    Ok(StabilityReport { functional, identical, envelope_ok: finite && growth.is_finite(), fitted_growth: growth })
}

/// Sup over `x` of the stability functional.
pub fn stability_sup(r: &StabilityReport) -> f64 {
    r.functional.iter().map(|(_, f)| *f).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::{build_u0_blend, perturbation_profile, Tail};
    use crate::math::{exp, pow, tanh};
    use proptest::prelude::*;

    fn axis(ny: usize) -> Arc<YAxis> {
        Arc::new(YAxis::uniform(ny, 12.0).unwrap())
    }

    fn short_axis(ny: usize) -> Arc<YAxis> {
        Arc::new(YAxis::uniform(ny, 6.0).unwrap())
    }

    fn builder_data(ny: usize, delta: f64) -> SteadyData {
        let y = short_axis(ny);
        let mut u0 = build_u0_blend(1.0, 1.0, 0.3, 6, Tail::Algebraic { power: 2.0 }, y.nodes()).unwrap();
        for (u, &t) in u0.iter_mut().zip(y.nodes()) {
            *u += delta * perturbation_profile(t);
        }
        let rho0 = y.nodes().iter().map(|&t| 1.0 + 0.2 * exp(-t)).collect();
        SteadyData::new(y, rho0, u0).unwrap()
    }

    fn params(length: f64) -> SteadyParams {
        SteadyParams { dx: 1e-3, length, ..Default::default() }
    }

    fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
    }

    #[test]
    fn q0_vanishes_on_linear_part() {
        let d = builder_data(241, 0.0);
        let h = d.y.h_max();
        for (i, &t) in d.y.nodes().iter().enumerate() {
            if t <= 0.3 - 3.0 * h {
                assert!(d.q0[i].abs() < 1e-9, "q0({t}) = {}", d.q0[i]);
            }
        }
        assert_eq!(d.q0[0], 0.0);
    }

    #[test]
    fn q0_matches_quadrature() {
        // rho0 = 1 + e^{-y}/5, u0 = y (1 + y^4)^{-1/4}
        let oracle = [
            (0.5, 0.52713136637504331555),
            (1.0, 1.5118646460456221398),
            (2.0, 1.9584831929093623119),
            (4.0, 1.9864404753599790676),
            (8.0, 1.9873809539235722925),
            (12.0, 1.9874074449216089111),
        ];
        let mut errs = Vec::new();
        for ny in [1201, 2401, 4801] {
            let y = YAxis::uniform(ny, 12.0).unwrap();
            let rho0: Vec<f64> = y.nodes().iter().map(|&t| 1.0 + 0.2 * exp(-t)).collect();
            let u0: Vec<f64> = y.nodes().iter().map(|&t| t * pow(1.0 + t * t * t * t, -0.25)).collect();
            let q0 = build_q0(&y, &rho0, &u0).unwrap();
            let e = oracle
                .iter()
                .map(|&(t, v)| (q0[libm::round(t / 12.0 * (ny - 1) as f64) as usize] - v).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[2] < 5e-6, "{errs:?}");
        for w in errs.windows(2) {
            assert!(libm::log2(w[0] / w[1]) > 1.9, "{errs:?}");
        }
    }

    #[test]
    fn q0_rejects_incompatible_profile() {
        let y = axis(241);
        let rho0 = vec![1.0; 241];
        let u0: Vec<f64> = y.nodes().iter().map(|&t| tanh(t) + 0.5 * tanh(t) * tanh(t)).collect();
        assert!(matches!(build_q0(&y, &rho0, &u0), Err(Error::Data(_))));
        let mut bad = build_u0_blend(1.0, 1.0, 0.3, 6, Tail::Algebraic { power: 2.0 }, y.nodes()).unwrap();
        bad[0] = 0.1;
        assert!(matches!(build_q0(&y, &rho0, &bad), Err(Error::Data(_))));
    }

    #[test]
    fn advect_examples() {
        let y = axis(121);
        let nodes = y.nodes();
        let rho: Vec<f64> = nodes.iter().map(|&t| 1.0 + 0.3 * exp(-t)).collect();
        assert_eq!(advect_density(nodes, &rho, &vec![0.0; 121], 0.01).unwrap(), rho);
        let flat = vec![0.7; 121];
        let q: Vec<f64> = nodes.iter().map(|&t| t * exp(-t)).collect();
        assert_eq!(advect_density(nodes, &flat, &q, 0.01).unwrap(), flat);
        let lin: Vec<f64> = nodes.iter().map(|&t| 2.0 + 0.1 * t).collect();
        let out = advect_density(nodes, &lin, &vec![0.5; 121], 0.02).unwrap();
        for (i, &t) in nodes.iter().enumerate().skip(1) {
            assert!((out[i] - (2.0 + 0.1 * (t - 0.01))).abs() <= 1e-12);
        }
        assert!((out[0] - 2.0).abs() <= 1e-15);
        assert!(matches!(advect_density(nodes, &lin, &vec![10.0; 121], 0.02), Err(Error::Step(_))));
    }

    proptest! {
        #[test]
        fn advect_keeps_range(a in 0.1f64..2.0, b in -0.5f64..0.5, c in 0.0f64..3.0, dx in 1e-4f64..1e-2) {
            let y = axis(61);
            let nodes = y.nodes();
            let rho: Vec<f64> = nodes.iter().map(|&t| a + b * exp(-t) * libm::sin(3.0 * t)).collect();
            let q: Vec<f64> = nodes.iter().map(|&t| c * t * exp(-t)).collect();
            let out = advect_density(nodes, &rho, &q, dx).unwrap();
            let lo = rho.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(out.iter().all(|&r| r >= lo && r <= hi));
        }

        #[test]
        fn params_reject_bad_schedules(t0 in 0.0f64..1.0, t1 in 0.0f64..1.0) {
            let p = SteadyParams { theta_schedule: vec![t0, t1], ..Default::default() };
            prop_assert_eq!(p.validate().is_ok(), t1 < t0);
        }
    }

    #[test]
    fn params_validation() {
        assert!(SteadyParams::default().validate().is_ok());
        for p in [
            SteadyParams { m: 2, ..Default::default() },
            SteadyParams { sigma_tilde: 1.5, ..Default::default() },
            SteadyParams { kappa3: Some(0.0), ..Default::default() },
            SteadyParams { theta_schedule: vec![0.1, -0.1], ..Default::default() },
            SteadyParams { dx: 0.0, ..Default::default() },
        ] {
            assert!(matches!(p.validate(), Err(Error::Parameter(_))));
        }
    }

    #[test]
    fn first_step_at_theta_zero() {
        let d = builder_data(121, 0.0);
        assert!(d.r0(0.0).iter().all(|&r| r == 0.0));
        let p = params(0.005);
        let c = MonitorConstants::from_data(&d, &p).unwrap();
        let prev = initial_slab(&d, &p);
        let next = picard_step(&prev, &d, &p, 0.0, &c).unwrap();
        assert_eq!(next.stations[0].qy, d.q0y);
        for theta in [0.0, 1e-2, 1e-1] {
            let st = check_r0_stations(&next, &prev, &d, theta);
            assert!(st[0].residual <= 1e-10);
        }
    }

    #[test]
    fn zero_length_returns_initial_slice() {
        let d = builder_data(121, 0.0);
        let run = run_steady(&d, &params(0.0)).unwrap();
        let s = run.final_slab();
        assert_eq!(s.stations.len(), 1);
        assert_eq!(s.stations[0], d.initial_station());
        assert!(run.diagnostics.iter().all(|g| g.converged));
    }

    #[test]
    fn picard_contracts_and_is_a_fixed_point() {
        let d = builder_data(121, 0.0);
        let p = SteadyParams { theta_schedule: vec![1e-2], ..params(0.03) };
        let c = MonitorConstants::from_data(&d, &p).unwrap();
        let (slab, diag) = run_picard(initial_slab(&d, &p), &d, &p, 1e-2, &c).unwrap();
        assert!(diag.converged);
        assert!(diag.phi_series.iter().all(|&f| f >= 0.0));
        for w in diag.phi_series.windows(2).skip(1) {
            assert!(w[1] < 0.9 * w[0], "{:?}", diag.phi_series);
        }
        let again = picard_step(&slab, &d, &p, 1e-2, &c).unwrap();
        assert!(slab_distance(&again, &slab) < p.picard_tol);
        assert!(diag.differential_residual < 1e-6, "{}", diag.differential_residual);
        for r in &diag.r0_checks {
            assert!(r.worst_ratio <= 10.0 && r.station0_residual <= 1e-10, "{r:?}");
        }
    }

    #[test]
    fn first_integral_residual_converges() {
        let mut res = Vec::new();
        for ny in [121, 241, 481] {
            let d = builder_data(ny, 0.0);
            let p = SteadyParams { theta_schedule: vec![1e-2], ..params(0.01) };
            let c = MonitorConstants::from_data(&d, &p).unwrap();
            let (slab, _) = run_picard(initial_slab(&d, &p), &d, &p, 1e-2, &c).unwrap();
            let prev = picard_step(&slab, &d, &p, 1e-2, &c).unwrap();
            res.push(check_r0(&prev, &slab, &d, 1e-2));
        }
        for w in res.windows(2) {
            let order = libm::log2(w[0] / w[1]);
            assert!(order >= 1.8, "{res:?}");
        }
    }

    #[test]
    fn density_range_is_transported() {
        let d = builder_data(121, 0.0);
        let run = run_steady(&d, &SteadyParams { theta_schedule: vec![1e-2], ..params(0.03) }).unwrap();
        let min0 = d.rho0.iter().copied().fold(f64::INFINITY, f64::min);
        for s in &run.final_slab().stations {
            let lo = s.rho.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = s.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo >= min0 && lo - min0 < 1e-4 && hi == 1.2, "{lo} {hi}");
        }
    }

    #[test]
    fn march_converges_in_dx() {
        let d = builder_data(121, 0.0);
        let at = |dx: f64| {
            let p = SteadyParams { dx, theta_schedule: vec![1e-2], picard_tol: 1e-10, ..params(0.02) };
            let run = run_steady(&d, &p).unwrap();
            run.final_slab().stations.last().unwrap().u.clone()
        };
        let (a, b, c) = (at(2e-3), at(1e-3), at(5e-4));
        let order = libm::log2(sup_diff(&a, &b) / sup_diff(&b, &c));
        assert!(order > 1.6, "{order}");
    }

    #[test]
    fn theta_schedule_is_cauchy() {
        let d = builder_data(121, 0.0);
        let run = run_steady(&d, &params(0.05)).unwrap();
        assert_eq!(run.cauchy_distances.len(), 3);
        assert!(run.cauchy_ok, "{:?}", run.cauchy_distances);
        assert!(run.life_span.unwrap() >= 0.05 - 1e-12);
        assert_eq!(run.xy_series.len(), run.final_slab().stations.len() - 3);
    }

    #[test]
    fn degenerate_denominator() {
        let d = builder_data(121, 0.0);
        let p = params(0.002);
        let c = MonitorConstants::from_data(&d, &p).unwrap();
        let mut prev = initial_slab(&d, &p);
        prev.stations[1].u[10] = 0.0;
        assert!(matches!(picard_step(&prev, &d, &p, 0.0, &c), Err(Error::Degeneracy { .. })));
    }

    #[test]
    fn wall_slope_collapse_stops_the_march() {
        let d = builder_data(121, 0.0);
        let p = SteadyParams { lambda0: Some(0.49), ..params(0.3) };
        let run = run_steady(&d, &SteadyParams { theta_schedule: vec![1e-2], ..p }).unwrap();
        let next = run.final_slab();
        match next.stop.clone() {
            Some(SlabStop::WallSlope { x, slope }) => {
                assert!(slope < 0.49 && x < 0.3);
                assert_eq!(next.x_end(), x);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn monitor_constants_from_builder() {
        let d = builder_data(241, 0.0);
        let c = MonitorConstants::from_data(&d, &params(0.1)).unwrap();
        assert!((c.lambda0 - 0.25).abs() < 1e-10);
        assert!((c.kappa3 - 0.5 * (1.0 + 0.2 * exp(-6.0))).abs() < 1e-12);
        assert_eq!(c.delta, 0.5);
        assert!(station_monitor(&d.y, &d.initial_station(), &c).green);
    }

    #[test]
    fn energy_window() {
        let y = axis(241);
        let p = SteadyParams { m: 3, sigma_tilde: 2.0, ..Default::default() };
        let n = y.len();
        let st = |x: f64| SteadyState {
            x,
            rho: y.nodes().iter().map(|&t| 1.0 + exp(-t)).collect(),
            u: y.nodes().iter().map(|&t| 1.0 - exp(-t)).collect(),
            q: vec![0.0; n],
            qy: vec![0.0; n],
        };
        let w: Vec<SteadyState> = (0..4).map(|j| st(j as f64 * 1e-3)).collect();
        assert!(matches!(energy_xy(&w[..3], &y, &p, 0.0), Err(Error::Usage(_))));
        let (x, yy) = energy_xy(&w, &y, &p, 0.0).unwrap();
        // sum_{k<=3} ||d^k e^{-y}||^2 + ||e^{-y}||^2 + ||e^{-y}||^2 on [0, 12]
        let e2 = 0.5 * (1.0 - exp(-24.0));
        assert!((x - 6.0 * e2).abs() < 2e-3 * 6.0 * e2, "{x}");
        assert_eq!(yy, 0.0);
    }

    #[test]
    fn energy_at_initial_station() {
        // rho0 = 1 + e^{-y}/5, u0 = y (1 + y^4)^{-1/4}, m = 3, sigma~ = 2 on [0, 12]
        let y = axis(2401);
        let rho0 = y.nodes().iter().map(|&t| 1.0 + 0.2 * exp(-t)).collect();
        let u0 = y.nodes().iter().map(|&t| t * pow(1.0 + t * t * t * t, -0.25)).collect();
        let d = SteadyData::new(y, rho0, u0).unwrap();
        let w = vec![d.initial_station(); 4];
        let (x, _) = energy_xy(&w, &d.y, &params(0.0), 0.0).unwrap();
        let oracle = 15400.7229039096;
        assert!((x - oracle).abs() < 0.01 * oracle, "{x}");
    }

    #[test]
    fn stability_scales_quadratically() {
        let p = SteadyParams { theta_schedule: vec![1e-2], picard_tol: 1e-10, ..params(0.02) };
        let base = run_steady(&builder_data(121, 0.0), &p).unwrap();
        let same = run_steady(&builder_data(121, 0.0), &p).unwrap();
        let y = builder_data(121, 0.0).y;
        let r0 = stability_check(base.final_slab(), same.final_slab(), &y, 2.0).unwrap();
        assert!(r0.identical && stability_sup(&r0) == 0.0);
        let mut sups = Vec::new();
        for delta in [1e-6, 1e-3] {
            let other = run_steady(&builder_data(121, delta), &p).unwrap();
            let r = stability_check(other.final_slab(), base.final_slab(), &y, 2.0).unwrap();
            assert!(!r.identical && r.envelope_ok);
            sups.push(stability_sup(&r));
        }
        assert!(sups[0] < 1e-5, "{sups:?}");
        let ratio = sups[1] / sups[0];
        assert!((1e5..=1e7).contains(&ratio), "{ratio}");
    }

    #[test]
    fn stability_rejects_grid_mismatch() {
        let p = SteadyParams { theta_schedule: vec![1e-2], ..params(0.004) };
        let a = run_steady(&builder_data(241, 0.0), &p).unwrap();
        let b = run_steady(&builder_data(121, 0.0), &p).unwrap();
        let y = builder_data(121, 0.0).y;
        assert!(matches!(stability_check(a.final_slab(), b.final_slab(), &y, 2.0), Err(Error::Usage(_))));
    }
}
