//! Finite-difference weights on arbitrary nodes (Fornberg's recursion).

use alloc::vec;
use alloc::vec::Vec;

/// Weights `c[k][j]` such that `f^(k)(z) ~ sum_j c[k][j] f(x[j])` for every
/// derivative order `k <= m`.
pub fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// A stencil of at most four consecutive nodes starting at `start`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stencil {
    pub start: usize,
    pub len: usize,
    pub w: [f64; 4],
}

impl Stencil {
    pub fn new(z: f64, nodes: &[f64], start: usize, len: usize, order: usize) -> Self {
        let c = fornberg(z, &nodes[start..start + len], order);
        let mut w = [0.0; 4];
        w[..len].copy_from_slice(&c[order][..len]);
        Self { start, len, w }
    }

    #[inline]
    pub fn apply(&self, f: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.len {
            acc += self.w[j] * f[self.start + j];
        }
        acc
    }
}
