//! Weighted energy and dissipation functionals of the unsteady problem,
//! pointwise lower-bound monitors and the minimum-principle envelope.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::good_unknowns::{compute_good_unknowns, min_w_sigma, GoodUnknowns};
use crate::grid::{ddx, ddy, ScalarField, WeightParams};
use crate::math::exp;
use crate::unsteady::UnsteadyState;

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    /// `sum_{|a| <= s, a_1 <= s - 1} ||d^a w <y>^{gamma + a_2}||^2`.
    pub e_w: f64,
    /// Same sum with `a_1 <= s`.
    pub e_w_full: f64,
    /// Density analogue of `e_w` with weight `sigma`.
    pub e_rho: f64,
    /// `||rho_g <y>^gamma||^2 + ||w_g <y>^gamma||^2`; 0 when `gu_missing`.
    pub e_gu: f64,
    pub gu_missing: bool,
    /// `sup sum_{|a| <= 2} <y>^{2 sigma + 2 a_2} |d^a w|^2`.
    pub e_linf: f64,
    pub e_total: f64,
    pub d_total: f64,
    pub min_w_sigma: f64,
    /// `min_x w(x, 0)`.
    pub w_wall_min: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// `sup |Q8|`, the zeroth-order coefficient of the equation for
    /// `w <y>^sigma`.
    pub q8_sup: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub min_w_sigma: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub e_linf: f64,
}

fn sq_weighted(f: &ScalarField, lambda: f64) -> f64 {
    let n = f.l2_weighted(lambda);
    n * n
}

/// `sum over a_1 <= a1_max, a_1 + a_2 <= s` of
/// `||d_y^extra d^a f <y>^{lambda + a_2}||^2`.
fn derivative_sum(f: &ScalarField, s: usize, a1_max: usize, lambda: f64, extra_dy: usize) -> f64 {
    let mut acc = 0.0;
    for a1 in 0..=a1_max.min(s) {
        let fx = ddx(f, a1);
        for a2 in 0..=(s - a1) {
            let d = ddy(&fx, a2 + extra_dy);
            acc += sq_weighted(&d, lambda + a2 as f64);
        }
    }
    acc
}

pub fn monitor_bounds(state: &UnsteadyState, sigma: f64) -> Bounds {
    let w = &state.w;
    let y = state.grid().y();
    let mut sum = ScalarField::zeros(state.grid());
    for a1 in 0..=2usize {
        let wx = ddx(w, a1);
        for a2 in 0..=(2 - a1) {
            let d = ddy(&wx, a2);
            let wt = y.weight(2.0 * sigma + 2.0 * a2 as f64);
            sum = &sum + &(&d * &d).scale_y(&wt);
        }
    }
    Bounds {
        min_w_sigma: min_w_sigma(w, sigma),
        rho_min: state.rho.min(),
        rho_max: state.rho.max(),
        e_linf: sum.max(),
    }
}

fn good_unknowns_for(state: &UnsteadyState, weights: &WeightParams, s_max: usize, delta_bl: f64) -> Result<Option<GoodUnknowns>> {
    match compute_good_unknowns(state, s_max, weights.sigma, delta_bl) {
        Ok(g) => Ok(Some(g)),
        Err(Error::Degeneracy { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Energy components of one state. When the good unknowns are not
/// defined the report flags them as missing, or fails in `strict` mode.
pub fn energy_e(
    state: &UnsteadyState,
    weights: &WeightParams,
    rho_inf: f64,
    s_max: usize,
    delta_bl: f64,
    strict: bool,
) -> Result<EnergyReport> {
    if s_max == 0 || s_max > 6 {
        return Err(Error::Usage("s_max must lie in 1..=6".into()));
    }
    if strict {
        compute_good_unknowns(state, s_max, weights.sigma, delta_bl)?;
    }
    let gu = good_unknowns_for(state, weights, s_max, delta_bl)?;
    Ok(build_report(state, weights, rho_inf, s_max, gu.as_ref()))
}

fn build_report(
    state: &UnsteadyState,
    weights: &WeightParams,
    rho_inf: f64,
    s_max: usize,
    gu: Option<&GoodUnknowns>,
) -> EnergyReport {
    let (gamma, sigma) = (weights.gamma, weights.sigma);
    let w = &state.w;
    let e_w = derivative_sum(w, s_max, s_max - 1, gamma, 0);
    let e_w_full = e_w + sq_weighted(&ddx(w, s_max), gamma);
    let vr = state.rho.map(|r| r - rho_inf);
    let e_rho = derivative_sum(&vr, s_max, s_max - 1, sigma, 0);
    let e_gu = gu.map_or(0.0, |g| sq_weighted(&g.rho_g, gamma) + sq_weighted(&g.w_g, gamma));
    let b = monitor_bounds(state, sigma);
    let d_w = derivative_sum(w, s_max, s_max - 1, gamma, 1);
    let d_gu = gu.map_or(0.0, |g| sq_weighted(&ddy(&g.w_g, 1), gamma));
    EnergyReport {
        t: state.t,
        e_w,
        e_w_full,
        e_rho,
        e_gu,
        gu_missing: gu.is_none(),
        e_linf: b.e_linf,
        e_total: e_w + e_rho + e_gu + b.e_linf,
        d_total: d_w + d_gu,
        min_w_sigma: b.min_w_sigma,
        w_wall_min: state.w.row(0).iter().copied().fold(f64::INFINITY, f64::min),
        rho_min: b.rho_min,
        rho_max: b.rho_max,
        q8_sup: q8_sup(state, sigma),
    }
}

/// `Q8 = sigma <y>^{-1} v + sigma (sigma + 1) <y>^{-2} / rho
///      + sigma <y>^{-1} d_y rho / rho^2`.
pub fn q8_sup(state: &UnsteadyState, sigma: f64) -> f64 {
    let g = state.grid();
    let y = g.y_nodes();
    let rho_y = ddy(&state.rho, 1);
    let mut m = 0.0f64;
    for ix in 0..g.nx() {
        for (iy, &yy) in y.iter().enumerate() {
            let b = 1.0 / (1.0 + yy);
            let r = state.rho.get(ix, iy);
            let q = sigma * b * state.v.get(ix, iy)
                + sigma * (sigma + 1.0) * b * b / r
                + sigma * b * rho_y.get(ix, iy) / (r * r);
            m = m.max(q.abs());
        }
    }
    m
}

/// `sum ||d_y d^a w <y>^{gamma + a_2}||^2 + ||d_y w_g <y>^gamma||^2`.
pub fn dissipation_d(state: &UnsteadyState, weights: &WeightParams, s_max: usize, delta_bl: f64) -> Result<f64> {
    if s_max == 0 || s_max > 6 {
        return Err(Error::Usage("s_max must lie in 1..=6".into()));
    }
    let gu = good_unknowns_for(state, weights, s_max, delta_bl)?;
    let d_w = derivative_sum(&state.w, s_max, s_max - 1, weights.gamma, 1);
    Ok(d_w + gu.map_or(0.0, |g| sq_weighted(&ddy(&g.w_g, 1), weights.gamma)))
}

/// Energy, dissipation and monitors in one pass (non-strict).
pub fn energy_report(
    state: &UnsteadyState,
    weights: &WeightParams,
    rho_inf: f64,
    s_max: usize,
    delta_bl: f64,
) -> Result<EnergyReport> {
    energy_e(state, weights, rho_inf, s_max, delta_bl, false)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsEnvelope {
    /// Smallest rate for which the recorded minima stay above the envelope.
    pub lambda_fit: f64,
    /// `kappa(t) = min(min w<y>^sigma at t = 0, min over [0, t] of w(., 0))`.
    pub kappa_series: Vec<f64>,
    /// The recorded minima stay above `(1 - lambda t e^{lambda t}) kappa(t)`
    /// with `lambda = lambda_est`.
    pub passed: bool,
    /// Smallest `C` with `E_linf(t) <= (E_linf(0) + C t) e^{lambda_est t}`.
    pub linf_growth: f64,
}

fn envelope(lambda: f64, t: f64, kappa: f64) -> f64 {
    (1.0 - lambda * t * exp(lambda * t)) * kappa
}

pub fn check_principle_envelope(series: &[EnergyReport], lambda_est: f64) -> Result<BoundsEnvelope> {
    if series.is_empty() {
        return Err(Error::Usage("empty energy series".into()));
    }
    if series.windows(2).any(|p| !(p[1].t > p[0].t)) {
        return Err(Error::Usage("energy series times must increase".into()));
    }
    let t0 = series[0].t;
    let mut kappa = Vec::with_capacity(series.len());
    let mut wall = f64::INFINITY;
    for r in series {
        wall = wall.min(r.w_wall_min);
        kappa.push(series[0].min_w_sigma.min(wall));
    }
    let tol = 1e-9 * kappa[0].abs().max(f64::MIN_POSITIVE);
    let holds = |lam: f64| {
        series
            .iter()
            .zip(&kappa)
            .all(|(r, &k)| r.min_w_sigma >= envelope(lam, r.t - t0, k) - tol)
    };
    let lambda_fit = if holds(0.0) {
        0.0
    } else {
        let mut hi = lambda_est.max(1.0);
        let mut guard = 0;
        while !holds(hi) && guard < 60 {
            hi *= 2.0;
            guard += 1;
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if holds(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let e0 = series[0].e_linf;
    let linf_growth = series
        .iter()
        .skip(1)
        .map(|r| {
            let dt = r.t - t0;
            (r.e_linf * exp(-lambda_est * dt) - e0) / dt
        })
        .fold(0.0, f64::max);
    let passed = holds(lambda_est);
    Ok(BoundsEnvelope { lambda_fit, kappa_series: kappa, passed, linf_growth })
}

/// Longest initial stretch of the series on which
/// `E_total(t) <= factor * E_total(0)`; returns its end time.
pub fn energy_bound_interval(series: &[EnergyReport], factor: f64) -> Option<f64> {
    let e0 = series.first()?.e_total;
    let mut end = None;
    for r in series {
        if r.e_total <= factor * e0 {
            end = Some(r.t);
        } else {
            break;
        }
    }
    end
}
