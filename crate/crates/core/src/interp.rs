//! Monotone piecewise-cubic (Fritsch-Carlson) interpolation on
//! non-uniform nodes.

use alloc::vec::Vec;

#[derive(Clone, Debug)]
pub struct Pchip<'a> {
    x: &'a [f64],
    y: &'a [f64],
    d: Vec<f64>,
}

impl<'a> Pchip<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64]) -> Self {
        let n = x.len();
        let mut d = alloc::vec![0.0; n];
        if n == 2 {
            let s = (y[1] - y[0]) / (x[1] - x[0]);
            d[0] = s;
            d[1] = s;
        } else if n > 2 {
            let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
            let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
            for i in 1..n - 1 {
                if del[i - 1] * del[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
                }
            }
            d[0] = end_slope(h[0], h[1], del[0], del[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        Self { x, y, d }
    }

    /// Interval index `i` with `x[i] <= t <= x[i+1]`, clamped to the table.
    pub fn locate(&self, t: f64) -> usize {
        locate(self.x, t)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if n == 1 {
            return self.y[0];
        }
        let t = t.clamp(self.x[0], self.x[n - 1]);
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d * del0 <= 0.0 {
        0.0
    } else if del0 * del1 <= 0.0 && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Interval index of `t` in the increasing table `x`, clamped to `[0, n-2]`.
pub fn locate(x: &[f64], t: f64) -> usize {
    let n = x.len();
    if t <= x[0] {
        return 0;
    }
    if t >= x[n - 1] {
        return n - 2;
    }
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if x[mid] <= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
