//! Good unknowns of tangential order `s`,
//!
//! ```text
//! g_w = d_y w / w,          w_g   = d_x^s w   - g_w   d_x^s u,
//! g_rho = d_y rho / w,      rho_g = d_x^s rho - g_rho d_x^s u,
//! ```
//!
//! and residual checks of the identities and evolution equations they
//! satisfy.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{ddx, ddy, ScalarField};
use crate::math::{binomial, sqrt};
use crate::stencil::fornberg;
use crate::unsteady::{Forcing, UnsteadyParams, UnsteadyState};

#[derive(Clone, Debug, PartialEq)]
pub struct GoodUnknowns {
    pub s_order: usize,
    pub g_w: ScalarField,
    pub g_rho: ScalarField,
    pub w_g: ScalarField,
    pub rho_g: ScalarField,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualKind {
    WgEquation,
    RhogEquation,
    QuotientIdentity,
    BoundaryReduction1,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoodUnknownResidual {
    pub which: ResidualKind,
    pub residual_norm: f64,
    pub grid_h: f64,
}

/// `min over the grid of w <y>^sigma`.
pub fn min_w_sigma(w: &ScalarField, sigma: f64) -> f64 {
    let wt = w.grid().y().weight(sigma);
    w.scale_y(&wt).min()
}

fn lower_bound(state: &UnsteadyState, sigma: f64, delta_bl: f64) -> Result<()> {
    let m = min_w_sigma(&state.w, sigma);
    if !(m >= delta_bl) || !(m > 0.0) {
        return Err(Error::Degeneracy { min: m, required: delta_bl.max(0.0) });
    }
    Ok(())
}

pub fn compute_good_unknowns(state: &UnsteadyState, s: usize, sigma: f64, delta_bl: f64) -> Result<GoodUnknowns> {
    lower_bound(state, sigma, delta_bl)?;
    Ok(assemble(state, s))
}

fn assemble(state: &UnsteadyState, s: usize) -> GoodUnknowns {
    let w = &state.w;
    let g_w = ddy(w, 1).div(w);
    let g_rho = ddy(&state.rho, 1).div(w);
    let us = ddx(&state.u, s);
    let w_g = &ddx(w, s) - &(&g_w * &us);
    let rho_g = &ddx(&state.rho, s) - &(&g_rho * &us);
    GoodUnknowns { s_order: s, g_w, g_rho, w_g, rho_g }
}

/// `|| w_g - w d_y(d_x^s u / w) ||_{L^2}`.
pub fn verify_quotient_identity(
    state: &UnsteadyState,
    s: usize,
    sigma: f64,
    delta_bl: f64,
) -> Result<GoodUnknownResidual> {
    let gu = compute_good_unknowns(state, s, sigma, delta_bl)?;
    let q = ddx(&state.u, s).div(&state.w);
    let alt = &state.w * &ddy(&q, 1);
    Ok(GoodUnknownResidual {
        which: ResidualKind::QuotientIdentity,
        residual_norm: (&gu.w_g - &alt).l2(),
        grid_h: state.grid().y().h_max(),
    })
}

/// L^2 norm over `y in [y_1, y_max / 2]`.
pub fn interior_l2(f: &ScalarField) -> f64 {
    let g = f.grid();
    let y = g.y_nodes();
    let half = 0.5 * g.y_max();
    let last = y.iter().rposition(|&v| v <= half).unwrap_or(1).max(2);
    let mut acc = 0.0;
    for ix in 0..g.nx() {
        let c = f.column(ix);
        for i in 1..last {
            let h = y[i + 1] - y[i];
            acc += 0.5 * h * (c[i] * c[i] + c[i + 1] * c[i + 1]);
        }
    }
    sqrt(acc * g.dx())
}

struct Sources {
    f_rho: ScalarField,
    f_u: ScalarField,
}

fn sample_sources(state: &UnsteadyState, forcing: &dyn Forcing) -> Sources {
    let g = state.grid();
    let mut f_rho = ScalarField::zeros(g);
    let mut f_u = ScalarField::zeros(g);
    for ix in 0..g.nx() {
        let x = g.x(ix);
        for (iy, &y) in g.y_nodes().iter().enumerate() {
            let (a, b) = forcing.sources(state.t, x, y);
            f_rho.set(ix, iy, a);
            f_u.set(ix, iy, b);
        }
    }
    Sources { f_rho, f_u }
}

/// Terms of the two good-unknown equations at one state. Every product is
/// formed on the grid from spectral x-derivatives and finite-difference
/// y-derivatives.
struct Terms<'a> {
    st: &'a UnsteadyState,
    s: usize,
    inv_rho: ScalarField,
    us: ScalarField,
}

impl<'a> Terms<'a> {
    fn new(st: &'a UnsteadyState, s: usize) -> Self {
        Self { st, s, inv_rho: st.rho.map(|r| 1.0 / r), us: ddx(&st.u, s) }
    }

    /// `-sum_{0<k<=s} C(s,k) d_x^k u d_x^{s+1-k} f - sum_{0<k<s} C(s,k) d_x^k v d_x^{s-k} h`.
    fn q_commutator(&self, f: &ScalarField, h: &ScalarField) -> ScalarField {
        let s = self.s;
        let mut acc = ScalarField::zeros(self.st.grid());
        for k in 1..=s {
            let t = &ddx(&self.st.u, k) * &ddx(f, s + 1 - k);
            acc = &acc - &(&t * binomial(s, k));
        }
        for k in 1..s {
            let t = &ddx(&self.st.v, k) * &ddx(h, s - k);
            acc = &acc - &(&t * binomial(s, k));
        }
        acc
    }

    /// `sum_{1<=k<=s} C(s,k) d_x^k(1/rho) d_x^{s-k} d_y w`.
    fn density_commutator(&self) -> ScalarField {
        let wy = ddy(&self.st.w, 1);
        let mut acc = ScalarField::zeros(self.st.grid());
        for k in 1..=self.s {
            let t = &ddx(&self.inv_rho, k) * &ddx(&wy, self.s - k);
            acc = &acc + &(&t * binomial(self.s, k));
        }
        acc
    }

    /// `N = -u w_x - v w_y + d_y((1/rho) w_y)`.
    fn n_w(&self) -> ScalarField {
        let st = self.st;
        let wy = ddy(&st.w, 1);
        let diff = ddy(&(&self.inv_rho * &wy), 1);
        let adv = &(&st.u * &ddx(&st.w, 1)) + &(&st.v * &wy);
        &diff - &adv
    }

    fn q1(&self) -> ScalarField {
        self.q_commutator(&self.st.w, &ddy(&self.st.w, 1))
    }

    fn q2(&self) -> ScalarField {
        self.q_commutator(&self.st.u, &self.st.w)
    }

    /// Appendix-C grouping of the density-gradient terms.
    fn q3_star(&self, g_w: &ScalarField) -> ScalarField {
        let sum = self.density_commutator();
        let a = ddy(&sum, 1);
        let b = ddy(&(&(&self.inv_rho * &self.us) * &ddy(g_w, 1)), 1);
        let c = &ddx(&self.st.w, self.s) * &ddy(&(&self.inv_rho * g_w), 1);
        let d = &sum * g_w;
        &(&(&(-&a) - &b) - &c) + &d
    }

    /// `Q4 = D_t g_w - eps d_x^2 g_w`, with `w_t` from the vorticity equation.
    fn q4(&self, eps: f64, g_w: &ScalarField) -> ScalarField {
        let st = self.st;
        let w = &st.w;
        let wy = ddy(w, 1);
        let n = self.n_w();
        let wxx = ddx(w, 2);
        let forced = &n + &(&wxx * eps);
        let dt_g = &ddy(&forced, 1).div(w) - &(&wy * &forced).div(&(w * w));
        let gx = ddx(g_w, 1);
        let gy = ddy(g_w, 1);
        let adv = &(&st.u * &gx) + &(&st.v * &gy);
        &(&dt_g + &adv) - &(&ddx(g_w, 2) * eps)
    }

    fn q5(&self) -> ScalarField {
        let rho_y = ddy(&self.st.rho, 1);
        self.q_commutator(&self.st.rho, &rho_y)
    }

    fn q6(&self) -> ScalarField {
        let wy = ddy(&self.st.w, 1);
        &self.q2() + &ddx(&(&self.inv_rho * &wy), self.s)
    }

    /// `Q7 = D_t g_rho - eps d_x^2 g_rho`, with `rho_t` and `w_t` from the
    /// equations.
    fn q7(&self, eps: f64, g_rho: &ScalarField) -> ScalarField {
        let st = self.st;
        let w = &st.w;
        let rho_y = ddy(&st.rho, 1);
        let transport = &(&(&st.u * &ddx(&st.rho, 1)) + &(&st.v * &rho_y)) - &(&ddx(&st.rho, 2) * eps);
        let forced_w = &self.n_w() + &(&ddx(w, 2) * eps);
        let dt_g = &(-&ddy(&transport, 1).div(w)) - &(&rho_y * &forced_w).div(&(w * w));
        let adv = &(&st.u * &ddx(g_rho, 1)) + &(&st.v * &ddy(g_rho, 1));
        &(&dt_g + &adv) - &(&ddx(g_rho, 2) * eps)
    }
}

fn check_spacing(states: &[UnsteadyState; 3]) -> Result<f64> {
    let d1 = states[1].t - states[0].t;
    let d2 = states[2].t - states[1].t;
    if !(d1 > 0.0) || (d1 - d2).abs() > 1e-9 * d1.max(d2) {
        return Err(Error::Usage("states must be equally spaced and increasing in time".into()));
    }
    if states[0].grid() != states[1].grid() || states[1].grid() != states[2].grid() {
        return Err(Error::Usage("states live on different grids".into()));
    }
    Ok(d1)
}

/// Transport-diffusion operator of the good unknowns,
/// `d_t f + u f_x + v f_y - eps f_xx - [d_y((1/rho) d_y f)]`.
fn lhs(
    tm: &Terms<'_>,
    f_prev: &ScalarField,
    f_mid: &ScalarField,
    f_next: &ScalarField,
    dt: f64,
    eps: f64,
    with_viscous: bool,
) -> ScalarField {
    let st = tm.st;
    let ft = (f_next - f_prev).map(|v| v / (2.0 * dt));
    let adv = &(&st.u * &ddx(f_mid, 1)) + &(&st.v * &ddy(f_mid, 1));
    let mut out = &(&ft + &adv) - &(&ddx(f_mid, 2) * eps);
    if with_viscous {
        out = &out - &ddy(&(&tm.inv_rho * &ddy(f_mid, 1)), 1);
    }
    out
}

/// How the right side groups the density-gradient terms. Both must give
/// the same residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grouping {
    /// `Q3*` plus the separate `2 eps d_x^{s+1} u d_x g_w` term.
    AppendixC,
    /// `Q3 = Q3* - 2 eps d_x^{s+1} u d_x g_w` alone.
    MainText,
}

/// Residual field of the `w_g` (or `rho_g`) equation at the middle state,
/// from centred time differences over three equally spaced states.
pub fn residual_field(
    which: ResidualKind,
    states: &[UnsteadyState; 3],
    params: &UnsteadyParams,
    s: usize,
    forcing: Option<&dyn Forcing>,
    grouping: Grouping,
) -> Result<ScalarField> {
    let dt = check_spacing(states)?;
    for st in states {
        if !(st.w.min() > 0.0) {
            return Err(Error::Degeneracy { min: st.w.min(), required: 0.0 });
        }
    }
    let eps = params.eps;
    let mid = &states[1];
    let tm = Terms::new(mid, s);
    let gus: Vec<GoodUnknowns> = states.iter().map(|st| assemble(st, s)).collect();
    let gm = &gus[1];
    let us = &tm.us;
    let src = forcing.map(|f| sample_sources(mid, f));
    match which {
        ResidualKind::WgEquation => {
            let l = lhs(&tm, &gus[0].w_g, &gm.w_g, &gus[2].w_g, dt, eps, true);
            let eps_term = &(&ddx(&mid.u, s + 1) * &ddx(&gm.g_w, 1)) * (2.0 * eps);
            let q3 = tm.q3_star(&gm.g_w);
            let mut r = &(&tm.q1() - &(&tm.q2() * &gm.g_w)) - &(&tm.q4(eps, &gm.g_w) * us);
            r = match grouping {
                Grouping::AppendixC => &(&r - &q3) + &eps_term,
                Grouping::MainText => &r - &(&q3 - &eps_term),
            };
            if let Some(src) = &src {
                let w = &mid.w;
                let f_w = ddy(&src.f_u, 1);
                let corr = &ddy(&f_w, 1).div(w) - &(&ddy(w, 1) * &f_w).div(&(w * w));
                let sw = &(&ddx(&f_w, s) - &(&gm.g_w * &ddx(&src.f_u, s))) - &(us * &corr);
                r = &r + &sw;
            }
            Ok(&l - &r)
        }
        ResidualKind::RhogEquation => {
            let l = lhs(&tm, &gus[0].rho_g, &gm.rho_g, &gus[2].rho_g, dt, eps, false);
            let eps_term = &(&ddx(&mid.u, s + 1) * &ddx(&gm.g_rho, 1)) * (2.0 * eps);
            let mut r = &(&(&tm.q5() - &(&tm.q6() * &gm.g_rho)) - &(&tm.q7(eps, &gm.g_rho) * us)) + &eps_term;
            if let Some(src) = &src {
                let w = &mid.w;
                let f_w = ddy(&src.f_u, 1);
                let corr = &ddy(&src.f_rho, 1).div(w) - &(&ddy(&mid.rho, 1) * &f_w).div(&(w * w));
                let sr = &(&ddx(&src.f_rho, s) - &(&gm.g_rho * &ddx(&src.f_u, s))) - &(us * &corr);
                r = &r + &sr;
            }
            Ok(&l - &r)
        }
        _ => Err(Error::Usage("residual_field handles the two evolution equations only".into())),
    }
}

pub fn residual_good_unknown_equation(
    which: ResidualKind,
    states: &[UnsteadyState; 3],
    params: &UnsteadyParams,
    s: usize,
    forcing: Option<&dyn Forcing>,
) -> Result<GoodUnknownResidual> {
    let f = residual_field(which, states, params, s, forcing, Grouping::AppendixC)?;
    Ok(GoodUnknownResidual {
        which,
        residual_norm: interior_l2(&f),
        grid_h: states[1].grid().y().h_max(),
    })
}

/// One-sided wall derivative of order `k` with formal accuracy `p`.
pub fn wall_derivative(y: &[f64], f: &[f64], k: usize, p: usize) -> f64 {
    let n = (k + p).min(y.len());
    let c = fornberg(0.0, &y[..n], k);
    c[k].iter().zip(f).map(|(a, b)| a * b).sum()
}

/// `sup_x |d_y^3 w - (rho w d_x w + 2 (d_y rho / rho) d_y^2 w)|` at `y = 0`,
/// with the wall derivatives of `u` taken from fourth-order one-sided
/// stencils.
pub fn verify_boundary_reduction_1(state: &UnsteadyState) -> GoodUnknownResidual {
    let g = state.grid();
    let y = g.y_nodes();
    let wx = ddx(&state.u, 1);
    let mut worst = 0.0f64;
    for ix in 0..g.nx() {
        let u = state.u.column(ix);
        let r = state.rho.column(ix);
        let lhs = wall_derivative(y, u, 4, 4);
        let w0 = wall_derivative(y, u, 1, 4);
        let wx0 = wall_derivative(y, wx.column(ix), 1, 4);
        let w_yy = wall_derivative(y, u, 3, 4);
        let rho_y = wall_derivative(y, r, 1, 4);
        let rhs = r[0] * w0 * wx0 + 2.0 * rho_y / r[0] * w_yy;
        worst = worst.max((lhs - rhs).abs());
    }
    GoodUnknownResidual {
        which: ResidualKind::BoundaryReduction1,
        residual_norm: worst,
        grid_h: g.y().h_min(),
    }
}
