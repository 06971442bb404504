//! Closed-form manufactured solution of the forced unsteady system,
//!
//! ```text
//! u   = u_inf (1 - e^{-y}) + a sin(x + t) y e^{-y}
//! rho = rho_inf + b cos(x - t) e^{-y}
//! v   = -a cos(x + t) (1 - (1 + y) e^{-y})
//! ```
//!
//! with the sources that make it exact.

use alloc::sync::Arc;

use crate::grid::{Grid2D, ScalarField};
use crate::math::{cos, exp, sin};
use crate::unsteady::{Forcing, UnsteadyState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Manufactured {
    pub a: f64,
    pub b: f64,
    pub u_inf: f64,
    pub rho_inf: f64,
    pub eps: f64,
}

impl Default for Manufactured {
    fn default() -> Self {
        Self { a: 0.04, b: 0.2, u_inf: 1.0, rho_inf: 1.0, eps: 1e-2 }
    }
}

struct Point {
    rho: f64,
    rho_t: f64,
    rho_x: f64,
    rho_xx: f64,
    rho_y: f64,
    u: f64,
    u_t: f64,
    u_x: f64,
    u_xx: f64,
    u_y: f64,
    u_yy: f64,
    v: f64,
}

impl Manufactured {
    fn point(&self, t: f64, x: f64, y: f64) -> Point {
        let e = exp(-y);
        let (s, c) = (sin(x + t), cos(x + t));
        let (sr, cr) = (sin(x - t), cos(x - t));
        let p = y * e;
        let p1 = (1.0 - y) * e;
        let p2 = (y - 2.0) * e;
        let int_p = 1.0 - (1.0 + y) * e;
        Point {
            rho: self.rho_inf + self.b * cr * e,
            rho_t: self.b * sr * e,
            rho_x: -self.b * sr * e,
            rho_xx: -self.b * cr * e,
            rho_y: -self.b * cr * e,
            u: self.u_inf * (1.0 - e) + self.a * s * p,
            u_t: self.a * c * p,
            u_x: self.a * c * p,
            u_xx: -self.a * s * p,
            u_y: self.u_inf * e + self.a * s * p1,
            u_yy: -self.u_inf * e + self.a * s * p2,
            v: -self.a * c * int_p,
        }
    }

    /// Exact state sampled on `grid` at time `t`. `w` is the analytic
    /// `d_y u`.
    pub fn state(&self, grid: &Arc<Grid2D>, t: f64) -> UnsteadyState {
        UnsteadyState {
            t,
            rho: ScalarField::from_fn(grid, |x, y| self.point(t, x, y).rho),
            u: ScalarField::from_fn(grid, |x, y| self.point(t, x, y).u),
            v: ScalarField::from_fn(grid, |x, y| self.point(t, x, y).v),
            w: ScalarField::from_fn(grid, |x, y| self.point(t, x, y).u_y),
        }
    }
}

impl Forcing for Manufactured {
    fn sources(&self, t: f64, x: f64, y: f64) -> (f64, f64) {
        let p = self.point(t, x, y);
        let f_rho = p.rho_t + p.u * p.rho_x + p.v * p.rho_y - self.eps * p.rho_xx;
        let f_u = p.u_t + p.u * p.u_x + p.v * p.u_y - self.eps * p.u_xx - p.u_yy / p.rho;
        (f_rho, f_u)
    }
}
