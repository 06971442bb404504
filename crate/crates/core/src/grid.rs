//! Structured grid on `T x [0, y_max]`, fields, derivatives and weighted
//! norms.
//!
//! The x direction is `2 pi`-periodic and differentiated spectrally. The y
//! direction carries second-order finite differences on possibly stretched
//! nodes, with one-sided stencils at both ends, and trapezoidal quadrature.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::fft::{apply_multiplier, Complex};
use crate::math::{bracket, powi, tanh};
use crate::stencil::Stencil;

pub const X_PERIOD: f64 = TAU;

/// Wall-normal axis with its derivative stencils and quadrature weights.
#[derive(Clone, Debug, PartialEq)]
pub struct YAxis {
    nodes: Vec<f64>,
    d1: Vec<Stencil>,
    d2: Vec<Stencil>,
    quad: Vec<f64>,
}

impl YAxis {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if n < 4 {
            return Err(Error::Config("a y axis needs at least 4 nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::Config("y axis must start at the wall y = 0".into()));
        }
        if nodes.windows(2).any(|p| !(p[1] > p[0])) || nodes.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("y nodes must be finite and strictly increasing".into()));
        }
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        for i in 0..n {
            let z = nodes[i];
            let s1 = if i == 0 {
                0
            } else if i == n - 1 {
                n - 3
            } else {
                i - 1
            };
            d1.push(Stencil::new(z, &nodes, s1, 3, 1));
            let (s2, l2) = if i == 0 {
                (0, 4)
            } else if i == n - 1 {
                (n - 4, 4)
            } else {
                (i - 1, 3)
            };
            d2.push(Stencil::new(z, &nodes, s2, l2, 2));
        }
        let mut quad = vec![0.0; n];
        for i in 0..n - 1 {
            let h = nodes[i + 1] - nodes[i];
            quad[i] += 0.5 * h;
            quad[i + 1] += 0.5 * h;
        }
        Ok(Self { nodes, d1, d2, quad })
    }

    pub fn uniform(n: usize, y_max: f64) -> Result<Self> {
        Self::stretched(n, y_max, 0.0)
    }

    /// `y(xi) = y_max (1 - tanh(s (1 - xi)) / tanh(s))`, clustering nodes at
    /// the wall for `s > 0`.
    pub fn stretched(n: usize, y_max: f64, stretch: f64) -> Result<Self> {
        if n < 2 || !(y_max > 0.0) || !(stretch >= 0.0) {
            return Err(Error::Config("invalid y axis size, height or stretch".into()));
        }
        let last = (n - 1) as f64;
        let nodes = (0..n)
            .map(|i| {
                if i == 0 {
                    0.0
                } else if i == n - 1 {
                    y_max
                } else if stretch == 0.0 {
                    y_max * i as f64 / last
                } else {
                    let xi = i as f64 / last;
                    y_max * (1.0 - tanh(stretch * (1.0 - xi)) / tanh(stretch))
                }
            })
            .collect();
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn y_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn h_min(&self) -> f64 {
        self.nodes.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn h_max(&self) -> f64 {
        self.nodes.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max)
    }

    pub fn d1_stencil(&self, i: usize) -> &Stencil {
        &self.d1[i]
    }

    pub fn d2_stencil(&self, i: usize) -> &Stencil {
        &self.d2[i]
    }

    pub fn quadrature_weights(&self) -> &[f64] {
        &self.quad
    }

    pub fn d1_into(&self, f: &[f64], out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(&self.d1) {
            *o = s.apply(f);
        }
    }

    pub fn d2_into(&self, f: &[f64], out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(&self.d2) {
            *o = s.apply(f);
        }
    }

    /// `d^n f / dy^n` by composing the second-order stencils
    /// (pairs of `d2`, then a trailing `d1` for odd `n`).
    pub fn deriv(&self, f: &[f64], n: usize) -> Vec<f64> {
        let mut cur = f.to_vec();
        let mut tmp = vec![0.0; f.len()];
        for _ in 0..n / 2 {
            self.d2_into(&cur, &mut tmp);
            core::mem::swap(&mut cur, &mut tmp);
        }
        if n % 2 == 1 {
            self.d1_into(&cur, &mut tmp);
            core::mem::swap(&mut cur, &mut tmp);
        }
        cur
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.quad).map(|(a, w)| a * w).sum()
    }

    /// Cumulative trapezoid `F(y_i) = int_0^{y_i} f`, with `F(0) = 0`.
    pub fn cumulative(&self, f: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(f.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 1..f.len() {
            acc += 0.5 * (self.nodes[i] - self.nodes[i - 1]) * (f[i] + f[i - 1]);
            out.push(acc);
        }
        out
    }

    /// `<y>^p` at every node.
    pub fn weight(&self, p: f64) -> Vec<f64> {
        self.nodes.iter().map(|&y| bracket(y, p)).collect()
    }
}

/// Tensor grid: `nx` equispaced periodic points in x times a [`YAxis`].
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D {
    nx: usize,
    y: YAxis,
    stretch: f64,
}

impl Grid2D {
    pub fn new(nx: usize, y: YAxis) -> Result<Self> {
        if nx < 4 {
            return Err(Error::Config("nx must be at least 4".into()));
        }
        Ok(Self { nx, y, stretch: 0.0 })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn dx(&self) -> f64 {
        X_PERIOD / self.nx as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn y(&self) -> &YAxis {
        &self.y
    }

    pub fn y_nodes(&self) -> &[f64] {
        self.y.nodes()
    }

    pub fn y_max(&self) -> f64 {
        self.y.y_max()
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny() + iy
    }
}

/// Build a grid with `nx >= 4`, `ny >= 16` and `y_max >= 10`.
pub fn make_grid(nx: usize, ny: usize, y_max: f64, stretch: f64) -> Result<Grid2D> {
    if nx < 4 {
        return Err(Error::Config("nx must be at least 4".into()));
    }
    if ny < 16 {
        return Err(Error::Config("ny must be at least 16".into()));
    }
    if !(y_max >= 10.0) {
        return Err(Error::Config("y_max must be at least 10".into()));
    }
    let y = YAxis::stretched(ny, y_max, stretch)?;
    Ok(Grid2D { nx, y, stretch })
}

/// Real field on a shared grid, stored column by column
/// (`values[ix * ny + iy]`).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid2D>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid2D>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Arc<Grid2D>, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &Arc<Grid2D>, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..grid.nx() {
            let x = grid.x(ix);
            for &y in grid.y_nodes() {
                values.push(f(x, y));
            }
        }
        Self { grid: grid.clone(), values }
    }

    /// x-independent field from a wall-normal profile.
    pub fn from_profile(grid: &Arc<Grid2D>, profile: &[f64]) -> Result<Self> {
        if profile.len() != grid.ny() {
            return Err(Error::Usage("profile length differs from ny".into()));
        }
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.nx() {
            values.extend_from_slice(profile);
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn from_values(grid: &Arc<Grid2D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Usage("value count differs from nx*ny".into()));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn grid(&self) -> &Arc<Grid2D> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.idx(ix, iy)]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        let k = self.grid.idx(ix, iy);
        self.values[k] = v;
    }

    pub fn column(&self, ix: usize) -> &[f64] {
        let ny = self.grid.ny();
        &self.values[ix * ny..(ix + 1) * ny]
    }

    pub fn column_mut(&mut self, ix: usize) -> &mut [f64] {
        let ny = self.grid.ny();
        &mut self.values[ix * ny..(ix + 1) * ny]
    }

    pub fn row(&self, iy: usize) -> Vec<f64> {
        (0..self.grid.nx()).map(|ix| self.get(ix, iy)).collect()
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Self {
        debug_assert!(Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid);
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Multiply every column by a y-profile.
    pub fn scale_y(&self, profile: &[f64]) -> Self {
        let ny = self.grid.ny();
        let mut out = self.clone();
        for (k, v) in out.values.iter_mut().enumerate() {
            *v *= profile[k % ny];
        }
        out
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `int int f dx dy`: exact periodic mean in x, trapezoid in y.
    pub fn integrate(&self) -> f64 {
        let dx = self.grid.dx();
        (0..self.grid.nx()).map(|ix| self.grid.y().integrate(self.column(ix))).sum::<f64>() * dx
    }

    /// `(int int f^2 <y>^{2 lambda})^{1/2}`.
    pub fn l2_weighted(&self, lambda: f64) -> f64 {
        let w = self.grid.y().weight(2.0 * lambda);
        let dx = self.grid.dx();
        let quad = self.grid.y().quadrature_weights();
        let ny = self.grid.ny();
        let mut acc = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            let j = k % ny;
            acc += v * v * w[j] * quad[j];
        }
        crate::math::sqrt(acc * dx)
    }

    pub fn l2(&self) -> f64 {
        self.l2_weighted(0.0)
    }

    /// Apply a Fourier multiplier `m(k)` along x on every row.
    pub fn x_multiplier<F: Fn(i64, bool) -> (f64, f64)>(&self, m: F) -> Self {
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        let mut out = self.clone();
        let mut row = vec![0.0; nx];
        let mut scratch = Vec::with_capacity(nx);
        for iy in 0..ny {
            for ix in 0..nx {
                row[ix] = self.values[ix * ny + iy];
            }
            apply_multiplier(&mut row, &mut scratch, |k, nyq| {
                let (re, im) = m(k, nyq);
                Complex::new(re, im)
            });
            for ix in 0..nx {
                out.values[ix * ny + iy] = row[ix];
            }
        }
        out
    }

    /// Apply a column operator to every x-column.
    pub fn map_columns<F: Fn(&[f64], &mut [f64])>(&self, f: F) -> Self {
        let ny = self.grid.ny();
        let mut out = self.clone();
        for (src, dst) in self.values.chunks(ny).zip(out.values.chunks_mut(ny)) {
            f(src, dst);
        }
        out
    }
}

macro_rules! field_binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<&ScalarField> for &ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: &ScalarField) -> ScalarField {
                self.zip_map(rhs, |a, b| a $op b)
            }
        }
        impl $tr<f64> for &ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: f64) -> ScalarField {
                self.map(|a| a $op rhs)
            }
        }
        impl $tr<&ScalarField> for f64 {
            type Output = ScalarField;
            fn $m(self, rhs: &ScalarField) -> ScalarField {
                rhs.map(|b| self $op b)
            }
        }
    };
}

field_binop!(Add, add, +);
field_binop!(Sub, sub, -);
field_binop!(Mul, mul, *);

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|a| -a)
    }
}

impl ScalarField {
    pub fn div(&self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a / b)
    }
}

/// Spectral x-derivative of any order. Odd orders drop the Nyquist mode.
pub fn ddx(f: &ScalarField, order: usize) -> ScalarField {
    if order == 0 {
        return f.clone();
    }
    f.x_multiplier(|k, nyq| {
        if nyq && order % 2 == 1 {
            return (0.0, 0.0);
        }
        let mag = powi(k as f64, order as i32);
        match order % 4 {
            0 => (mag, 0.0),
            1 => (0.0, mag),
            2 => (-mag, 0.0),
            _ => (0.0, -mag),
        }
    })
}

/// Finite-difference y-derivative. Orders 1 and 2 use the native stencils;
/// higher orders compose them.
pub fn ddy(f: &ScalarField, order: usize) -> ScalarField {
    match order {
        0 => f.clone(),
        1 => {
            let y = f.grid().y();
            f.map_columns(|s, d| y.d1_into(s, d))
        }
        2 => {
            let y = f.grid().y();
            f.map_columns(|s, d| y.d2_into(s, d))
        }
        n => ddy(&ddy(f, 2), n - 2),
    }
}

/// `d_x^a d_y^b f`.
pub fn dxy(f: &ScalarField, a: usize, b: usize) -> ScalarField {
    ddy(&ddx(f, a), b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMode {
    /// `(sum_{|alpha| <= s} ||<y>^{lambda + alpha_2} d^alpha f||^2)^{1/2}`.
    FullHsGamma,
    /// `||f <y>^lambda||_{L^2}`.
    SingleL2,
}

/// Weight exponents of the unsteady energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightParams {
    pub gamma: f64,
    pub sigma: f64,
}

impl WeightParams {
    pub fn new(gamma: f64, sigma: f64) -> Result<Self> {
        if !crate::compat::validate_weights(gamma, sigma) {
            return Err(Error::Parameter(alloc::format!(
                "weights (gamma, sigma) = ({gamma}, {sigma}) violate gamma > 3/2, gamma + 1/2 < sigma <= 2 gamma - 1"
            )));
        }
        Ok(Self { gamma, sigma })
    }
}

pub fn weighted_norm(f: &ScalarField, s: usize, lambda: f64, mode: NormMode) -> Result<f64> {
    let v = match mode {
        NormMode::SingleL2 => f.l2_weighted(lambda),
        NormMode::FullHsGamma => {
            if s > 6 {
                return Err(Error::Usage("weighted_norm supports s <= 6".into()));
            }
            let mut acc = 0.0;
            for a in 0..=s {
                let fx = ddx(f, a);
                for b in 0..=(s - a) {
                    let n = ddy(&fx, b).l2_weighted(lambda + b as f64);
                    acc += n * n;
                }
            }
            crate::math::sqrt(acc)
        }
    };
    if !v.is_finite() {
        return Err(Error::NumericalOverflow("weighted_norm"));
    }
    Ok(v)
}
