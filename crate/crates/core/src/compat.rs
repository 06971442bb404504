//! Initial data for both solvers and the corner compatibility checker.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{ddy, Grid2D, ScalarField, WeightParams};
use crate::math::{binomial, cos, exp, pow, sin};
use crate::stencil::fornberg;

/// `gamma > 3/2` and `gamma + 1/2 < sigma <= 2 gamma - 1`.
pub fn validate_weights(gamma: f64, sigma: f64) -> bool {
    gamma > 1.5 && gamma + 0.5 < sigma && sigma <= 2.0 * gamma - 1.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialData1D {
    pub y: Vec<f64>,
    pub rho0: Vec<f64>,
    pub u0: Vec<f64>,
    /// `d_y^k u0(0)` for `k = 0..=5`, when known in closed form.
    pub analytic_derivs: Option<[f64; 6]>,
}

/// Far-field approach of the blended profile beyond `2 y_c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail {
    /// `u_inf - c (e^{-k y} - e^{-k Y})`.
    Exponential { rate: f64 },
    /// `u_inf - c ((1+y)^{-p} - (1+Y)^{-p})`; `w <y>^sigma` stays bounded
    /// below when `p <= sigma - 1`.
    Algebraic { power: f64 },
}

impl Default for Tail {
    fn default() -> Self {
        Tail::Algebraic { power: 2.0 }
    }
}

/// `S(t) = t^{m+1} sum_{k<=m} C(m+k, k) (1-t)^k`, the degree `2m+1`
/// step with `m` vanishing derivatives at both ends.
pub fn smoothstep(m: usize, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let mut acc = 0.0;
    let mut p = 1.0;
    for k in 0..=m {
        acc += binomial(m + k, k) * p;
        p *= 1.0 - t;
    }
    acc * pow(t, (m + 1) as f64)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// `u0 = lambda y` on `[0, y_c]`. Beyond, `d_y u0` is a `C^m` blend of
/// `lambda` and the tail slope `-A phi'` on `[y_c, 2 y_c]`, and
/// `u0 = u_inf - A (phi(y) - phi(y_max))` past `2 y_c`, with `A` fixed by
/// `u0(y_max) = u_inf`. Requires `1.5 lambda y_c < u_inf`.
pub fn build_u0_blend(lambda: f64, u_inf: f64, y_c: f64, m: usize, tail: Tail, y: &[f64]) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && y_c > 0.0) || 1.5 * lambda * y_c >= u_inf {
        return Err(Error::Parameter(format!(
            "blend needs lambda > 0, y_c > 0 and 1.5 lambda y_c < u_inf (got lambda = {lambda}, y_c = {y_c}, u_inf = {u_inf})"
        )));
    }
    if m > 6 {
        return Err(Error::Parameter(format!("blend smoothness m = {m} exceeds 6")));
    }
    let (phi, dphi): (&dyn Fn(f64) -> f64, &dyn Fn(f64) -> f64) = match tail {
        Tail::Exponential { rate } if rate > 0.0 => (
            &move |s: f64| exp(-rate * (s - y_c)),
            &move |s: f64| -rate * exp(-rate * (s - y_c)),
        ),
        Tail::Algebraic { power } if power > 0.0 => (
            &move |s: f64| pow(1.0 + s, -power),
            &move |s: f64| -power * pow(1.0 + s, -power - 1.0),
        ),
        _ => return Err(Error::Parameter("tail rate must be positive".into())),
    };
    let y_max = *y.last().ok_or_else(|| Error::Parameter("empty y grid".into()))?;
    if y_max <= 2.0 * y_c {
        return Err(Error::Parameter(format!("y_max = {y_max} must exceed 2 y_c = {}", 2.0 * y_c)));
    }
    let step = |s: f64| smoothstep(m, (s - y_c) / y_c);
    let (b0, b1) = (y_c, 2.0 * y_c);
    let tail_in_blend = simpson(|s| -step(s) * dphi(s), b0, b1, 2048);
    let amp = (u_inf - 1.5 * lambda * y_c) / (tail_in_blend + phi(b1) - phi(y_max));
    let w = |s: f64| {
        let b = step(s);
        (1.0 - b) * lambda - b * amp * dphi(s)
    };
    let u: Vec<f64> = y
        .iter()
        .map(|&s| {
            if s <= b0 {
                lambda * s
            } else if s < b1 {
                lambda * y_c + simpson(w, b0, s, 512)
            } else {
                u_inf - amp * (phi(s) - phi(y_max))
            }
        })
        .collect();
    Ok(u)
}

impl InitialData1D {
    pub fn builder(
        lambda: f64,
        u_inf: f64,
        y_c: f64,
        m: usize,
        tail: Tail,
        y: &[f64],
        rho0: Vec<f64>,
    ) -> Result<Self> {
        let u0 = build_u0_blend(lambda, u_inf, y_c, m, tail, y)?;
        if rho0.len() != y.len() {
            return Err(Error::Parameter("rho0 and y differ in length".into()));
        }
        Ok(Self { y: y.to_vec(), rho0, u0, analytic_derivs: Some([0.0, lambda, 0.0, 0.0, 0.0, 0.0]) })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompatEntry {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompatReport {
    pub entries: Vec<CompatEntry>,
    /// Highest `k` such that every wall condition of order `2..=k` holds
    /// (1 when `u0''(0) = 0` fails).
    pub overall_order_m: usize,
}

impl CompatReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, name: &str) -> Option<&CompatEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

const STENCIL_ACCURACY: usize = 4;

/// Wall derivative of order `k` with a Richardson error estimate from the
/// same stencil on every other node.
pub fn wall_derivative_estimate(y: &[f64], f: &[f64], k: usize) -> Result<(f64, f64)> {
    let n = k + STENCIL_ACCURACY;
    if y.len() < 2 * n - 1 {
        return Err(Error::Usage(format!(
            "wall derivative of order {k} needs {} nodes, grid has {}",
            2 * n - 1,
            y.len()
        )));
    }
    let fine = fornberg(0.0, &y[..n], k);
    let d_h: f64 = fine[k].iter().zip(f).map(|(c, v)| c * v).sum();
    let ys: Vec<f64> = (0..n).map(|i| y[2 * i]).collect();
    let fs: Vec<f64> = (0..n).map(|i| f[2 * i]).collect();
    let coarse = fornberg(0.0, &ys, k);
    let d_2h: f64 = coarse[k].iter().zip(&fs).map(|(c, v)| c * v).sum();
    let trunc = (d_h - d_2h).abs() / (pow(2.0, STENCIL_ACCURACY as f64) - 1.0);
    let fmax = f[..n].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let round = f64::EPSILON * fmax * fine[k].iter().map(|c| c.abs()).sum::<f64>();
    Ok((d_h, trunc + round))
}

/// Corner conditions on `(rho0, u0)` through wall order `m` (2..=5).
///
/// Wall derivatives come from the analytic values when present, else from
/// fourth-order one-sided stencils with threshold `10 x (truncation +
/// round-off)`. The `d_y^3 v0(0)` entry uses the wall expansion of
/// `v0 = -u0 int_0^y d_y^2 u0 / (rho0 u0^2)`, which is finite only when
/// `d_y^3 u0(0) = 0` and then equals
/// `3 a4 rho0'(0) / (2 lambda rho0(0)^2) - a5 / (2 lambda rho0(0))`.
pub fn check_compat(data: &InitialData1D, m: usize, kappa3: f64) -> Result<CompatReport> {
    let m = m.clamp(2, 5);
    let (y, u, r) = (&data.y, &data.u0, &data.rho0);
    if y.len() != u.len() || y.len() != r.len() || y.first() != Some(&0.0) {
        return Err(Error::Usage("initial data must share a y grid starting at 0".into()));
    }
    let scale = u.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut d = [(0.0, 0.0); 6];
    for k in 0..=5 {
        d[k] = match data.analytic_derivs {
            Some(a) => (a[k], 1e-12 * scale),
            None if k == 0 => (u[0], 0.0),
            None => wall_derivative_estimate(y, u, k)?,
        };
    }
    let (rho_y, rho_y_err) = wall_derivative_estimate(y, r, 1)?;
    let mut entries = Vec::new();
    let mut push = |name: &str, value: f64, threshold: f64, pass: bool| {
        entries.push(CompatEntry { name: name.into(), value, threshold, pass });
    };
    let zero = |(v, e): (f64, f64)| (v, 10.0 * e, v.abs() <= 10.0 * e);
    let (v, t, _) = zero(d[0]);
    push("u0(0) = 0", v, t.max(1e-12 * scale), v.abs() <= t.max(1e-12 * scale));
    let (slope, slope_err) = d[1];
    push("u0'(0) > 0", slope, 10.0 * slope_err, slope > 10.0 * slope_err);
    let names = ["", "", "u0''(0) = 0", "d3 u0(0) = 0", "d4 u0(0) = 0", "d5 u0(0) = 0"];
    let mut order = 1;
    let mut ok_so_far = true;
    for k in 2..=m {
        let (v, t, p) = zero(d[k]);
        push(names[k], v, t, p);
        ok_so_far &= p;
        if ok_so_far {
            order = k;
        }
    }
    if m >= 3 {
        let rho_w = r[0];
        let (a4, e4) = d[4];
        let (a5, e5) = d[5];
        let third_ok = d[3].0.abs() <= 10.0 * d[3].1;
        let (v, t) = if third_ok && slope > 0.0 {
            let v = 3.0 * a4 * rho_y / (2.0 * slope * rho_w * rho_w) - a5 / (2.0 * slope * rho_w);
            let t = 10.0
                * (3.0 * (e4 * rho_y.abs() + a4.abs() * rho_y_err) / (2.0 * slope * rho_w * rho_w)
                    + e5 / (2.0 * slope * rho_w));
            (v, t.max(1e-12 * scale))
        } else {
            (f64::INFINITY, 0.0)
        };
        push("d3 v0(0) = 0", v, t, v.abs() <= t);
    }
    let rmin = r.iter().copied().fold(f64::INFINITY, f64::min);
    push("rho0 >= kappa3", rmin, kappa3, rmin >= kappa3 && kappa3 > 0.0);
    Ok(CompatReport { entries, overall_order_m: order })
}

/// Shape of the x-dependent perturbation in [`build_unsteady_data`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnsteadyDataOptions {
    pub rho_inf: f64,
    pub u_inf: f64,
    pub slope: f64,
    pub y_c: f64,
    pub m: usize,
    pub tail: Tail,
    pub mode: u32,
    pub phase: f64,
}

impl Default for UnsteadyDataOptions {
    fn default() -> Self {
        Self {
            rho_inf: 1.0,
            u_inf: 1.0,
            slope: 1.0,
            y_c: 0.5,
            m: 6,
            tail: Tail::default(),
            mode: 1,
            phase: 0.0,
        }
    }
}

/// Perturbation profile of `u0`; vanishes to sixth order at the wall so
/// the corner conditions of the base profile survive.
pub fn perturbation_profile(y: f64) -> f64 {
    let y3 = y * y * y;
    y3 * y3 * exp(-2.0 * y)
}

/// `rho0 = rho_inf + amplitude c_rho cos(k x + phi) e^{-y}` with `c_rho`
/// the distance from `rho_inf` to the band `[2 kappa1, kappa2 / 2]`, and
/// `u0 = blend(y) + amplitude sin(k x + phi) y^6 e^{-2y}`. Fails unless
/// `w0 <y>^sigma >= 2 delta` and the density stays in the band.
pub fn build_unsteady_data(
    weights: &WeightParams,
    delta_bl: f64,
    kappa1: f64,
    kappa2: f64,
    amplitude: f64,
    grid: &Arc<Grid2D>,
    opts: &UnsteadyDataOptions,
) -> Result<(ScalarField, ScalarField)> {
    if !validate_weights(weights.gamma, weights.sigma) {
        return Err(Error::Parameter("inadmissible weights".into()));
    }
    let (lo, hi) = (2.0 * kappa1, 0.5 * kappa2);
    if !(kappa1 > 0.0) || lo > hi {
        return Err(Error::Parameter(format!("empty density band [2 kappa1, kappa2 / 2] = [{lo}, {hi}]")));
    }
    if opts.rho_inf < lo || opts.rho_inf > hi {
        return Err(Error::Parameter(format!("rho_inf = {} outside the band [{lo}, {hi}]", opts.rho_inf)));
    }
    if !(amplitude >= 0.0) {
        return Err(Error::Parameter("amplitude must be nonnegative".into()));
    }
    let base = build_u0_blend(opts.slope, opts.u_inf, opts.y_c, opts.m, opts.tail, grid.y_nodes())?;
    let c_rho = (opts.rho_inf - lo).min(hi - opts.rho_inf);
    let k = opts.mode as f64;
    let rho0 = ScalarField::from_fn(grid, |x, y| opts.rho_inf + amplitude * c_rho * cos(k * x + opts.phase) * exp(-y));
    let mut u0 = ScalarField::from_profile(grid, &base)?;
    let pert = ScalarField::from_fn(grid, |x, y| amplitude * sin(k * x + opts.phase) * perturbation_profile(y));
    u0 = &u0 + &pert;
    let top = grid.ny() - 1;
    for ix in 0..grid.nx() {
        u0.set(ix, 0, 0.0);
        u0.set(ix, top, opts.u_inf);
    }
    let w0 = ddy(&u0, 1);
    let achieved = crate::good_unknowns::min_w_sigma(&w0, weights.sigma);
    if !(achieved >= 2.0 * delta_bl) {
        return Err(Error::Construction { achieved, required: 2.0 * delta_bl });
    }
    if rho0.min() < lo || rho0.max() > hi {
        return Err(Error::Construction { achieved: rho0.min(), required: lo });
    }
    Ok((rho0, u0))
}

/// Largest amplitude in `[0, upper]` (to `tol`) for which
/// [`build_unsteady_data`] succeeds, by bisection.
pub fn max_admissible_amplitude(
    weights: &WeightParams,
    delta_bl: f64,
    kappa1: f64,
    kappa2: f64,
    grid: &Arc<Grid2D>,
    opts: &UnsteadyDataOptions,
    upper: f64,
    tol: f64,
) -> Result<f64> {
    let ok = |a: f64| build_unsteady_data(weights, delta_bl, kappa1, kappa2, a, grid, opts).is_ok();
    build_unsteady_data(weights, delta_bl, kappa1, kappa2, 0.0, grid, opts)?;
    if ok(upper) {
        return Ok(upper);
    }
    let (mut lo, mut hi) = (0.0, upper);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, YAxis};
    use crate::math::{erf, sqrt, tanh};
    use core::f64::consts::PI;
    use alloc::vec;
    use proptest::prelude::*;

    fn uniform(n: usize, y_max: f64) -> Vec<f64> {
        YAxis::uniform(n, y_max).unwrap().nodes().to_vec()
    }

    #[test]
    fn weights_region() {
        assert!(validate_weights(2.0, 3.0));
        assert!(!validate_weights(2.0, 3.5));
        assert!(!validate_weights(1.0, 2.0));
        assert!(!validate_weights(2.0, 2.5));
    }

    #[test]
    fn smoothstep_ends() {
        for m in 0..=6 {
            assert_eq!(smoothstep(m, 0.0), 0.0);
            assert_eq!(smoothstep(m, 1.0), 1.0);
            assert!((smoothstep(m, 0.5) - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn blend_profile_shape() {
        let y = uniform(2001, 20.0);
        let u = build_u0_blend(1.0, 1.0, 0.5, 6, Tail::default(), &y).unwrap();
        assert_eq!(u[50], 0.5);
        assert_eq!(*u.last().unwrap(), 1.0);
        let w: Vec<f64> = u.windows(2).map(|p| p[1] - p[0]).collect();
        assert!(w.iter().all(|&d| d > 0.0));
        assert!(build_u0_blend(2.0, 1.0, 0.5, 6, Tail::default(), &y).is_err());
        assert!(build_u0_blend(1.0, 1.0, 0.5, 7, Tail::default(), &y).is_err());
    }

    #[test]
    fn tanh_and_erf_fail_at_third_order() {
        let y = uniform(4001, 20.0);
        let rho = vec![1.0; y.len()];
        let cases: [(fn(f64) -> f64, f64); 2] = [(tanh, -2.0), (erf, -4.0 / sqrt(PI))];
        for (f, d3) in cases {
            let data = InitialData1D { y: y.clone(), rho0: rho.clone(), u0: y.iter().map(|&s| f(s)).collect(), analytic_derivs: None };
            let r = check_compat(&data, 5, 0.5).unwrap();
            assert!(r.entry("u0''(0) = 0").unwrap().pass);
            let e3 = r.entry("d3 u0(0) = 0").unwrap();
            assert!(!e3.pass);
            assert!((e3.value - d3).abs() < 1e-6, "{}", e3.value);
            assert_eq!(r.overall_order_m, 2);
            assert!(!r.passed());
        }
    }

    #[test]
    fn builder_passes_through_order_five() {
        let y = uniform(2001, 20.0);
        let rho: Vec<f64> = y.iter().map(|&s| 1.0 + 0.3 * exp(-s)).collect();
        let mut data = InitialData1D::builder(1.0, 1.0, 0.5, 6, Tail::default(), &y, rho).unwrap();
        let r = check_compat(&data, 5, 0.5).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.overall_order_m, 5);
        data.analytic_derivs = None;
        let r = check_compat(&data, 5, 0.5).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.overall_order_m, 5);
    }

    #[test]
    fn coarse_grid_without_analytic_values_is_usage_error() {
        let y = uniform(12, 20.0);
        let data = InitialData1D { y: y.clone(), rho0: vec![1.0; 12], u0: y.iter().map(|&s| tanh(s)).collect(), analytic_derivs: None };
        assert!(matches!(check_compat(&data, 5, 0.5), Err(Error::Usage(_))));
    }

    #[test]
    fn density_floor_is_checked() {
        let y = uniform(2001, 20.0);
        let data = InitialData1D::builder(1.0, 1.0, 0.5, 6, Tail::default(), &y, vec![0.4; y.len()]).unwrap();
        let r = check_compat(&data, 5, 0.5).unwrap();
        assert!(!r.entry("rho0 >= kappa3").unwrap().pass);
        assert_eq!(r.overall_order_m, 5);
    }

    #[test]
    fn v0_condition_tracks_fifth_derivative() {
        let y = uniform(2001, 20.0);
        let data = InitialData1D {
            y: y.clone(),
            rho0: vec![2.0; y.len()],
            u0: y.iter().map(|&s| s + pow(s, 5.0) / 120.0 * exp(-s)).collect(),
            analytic_derivs: Some([0.0, 1.0, 0.0, 0.0, 0.0, 1.0]),
        };
        let r = check_compat(&data, 5, 0.5).unwrap();
        let e = r.entry("d3 v0(0) = 0").unwrap();
        assert!((e.value + 0.25).abs() < 1e-14);
        assert!(!e.pass);
        assert_eq!(r.overall_order_m, 4);
    }

    fn grid() -> Arc<Grid2D> {
        Arc::new(make_grid(16, 401, 20.0, 0.0).unwrap())
    }

    #[test]
    fn unsteady_data_zero_amplitude_is_x_independent() {
        let g = grid();
        let wp = WeightParams::new(2.0, 3.0).unwrap();
        let (rho, u) = build_unsteady_data(&wp, 0.1, 0.25, 4.0, 0.0, &g, &UnsteadyDataOptions::default()).unwrap();
        assert_eq!(rho.min(), 1.0);
        assert_eq!(rho.max(), 1.0);
        for iy in 0..g.ny() {
            let row = u.row(iy);
            assert!(row.iter().all(|&v| v == row[0]));
        }
    }

    #[test]
    fn unsteady_data_band_and_bound() {
        let g = grid();
        let wp = WeightParams::new(2.0, 3.0).unwrap();
        let o = UnsteadyDataOptions::default();
        assert!(matches!(build_unsteady_data(&wp, 0.1, 1.0, 1.0, 0.1, &g, &o), Err(Error::Parameter(_))));
        let a_max = max_admissible_amplitude(&wp, 0.1, 0.25, 4.0, &g, &o, 1.0, 1e-4).unwrap();
        assert!(a_max > 0.0);
        let (rho, u) = build_unsteady_data(&wp, 0.1, 0.25, 4.0, 0.5 * a_max, &g, &o).unwrap();
        assert!(rho.min() >= 0.5 && rho.max() <= 2.0);
        let w = ddy(&u, 1);
        assert!(crate::good_unknowns::min_w_sigma(&w, 3.0) >= 0.2);
        assert!(matches!(build_unsteady_data(&wp, 10.0, 0.25, 4.0, 0.0, &g, &o), Err(Error::Construction { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn builder_always_passes(slope in 0.3f64..1.5, y_c in 0.3f64..0.6, m in 5usize..=6) {
            let y = uniform(2001, 20.0);
            prop_assume!(slope * y_c < 0.8);
            let Ok(mut data) = InitialData1D::builder(slope, 1.0, y_c, m, Tail::default(), &y, vec![1.0; y.len()]) else {
                return Ok(());
            };
            let exact = check_compat(&data, 5, 0.5).unwrap();
            prop_assert!(exact.passed());
            data.analytic_derivs = None;
            let r = check_compat(&data, 5, 0.5).unwrap();
            prop_assert!(r.passed());
            let (d1, e1) = wall_derivative_estimate(&y, &data.u0, 1).unwrap();
            prop_assert!((d1 - slope).abs() <= 10.0 * e1 + 1e-12);
        }

        #[test]
        fn weights_scan_matches_region(g in 0.5f64..5.0, s in 0.5f64..9.0) {
            prop_assert_eq!(validate_weights(g, s), g > 1.5 && s > g + 0.5 && s <= 2.0 * g - 1.0);
        }
    }
}
