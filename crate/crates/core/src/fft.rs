//! Minimal complex FFT for the periodic x direction. Radix-2 when the
//! length is a power of two, direct DFT otherwise.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::math::{cos, sin};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    #[inline]
    pub fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

/// Unnormalised transform: forward uses `exp(-i k x)`, inverse `exp(+i k x)`.
pub(crate) fn fft(buf: &mut [Complex], inverse: bool) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        radix2(buf, inverse);
    } else {
        dft(buf, inverse);
    }
}

fn radix2(buf: &mut [Complex], inverse: bool) {
    let n = buf.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * TAU / len as f64;
        let half = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let a = ang * k as f64;
                let tw = Complex::new(cos(a), sin(a));
                let u = buf[start + k];
                let v = buf[start + k + half].mul(tw);
                buf[start + k] = Complex::new(u.re + v.re, u.im + v.im);
                buf[start + k + half] = Complex::new(u.re - v.re, u.im - v.im);
            }
        }
        len <<= 1;
    }
}

fn dft(buf: &mut [Complex], inverse: bool) {
    let n = buf.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out = vec![Complex::default(); n];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = Complex::default();
        for (j, z) in buf.iter().enumerate() {
            let a = sign * TAU * ((k * j) % n) as f64 / n as f64;
            let t = z.mul(Complex::new(cos(a), sin(a)));
            acc.re += t.re;
            acc.im += t.im;
        }
        *o = acc;
    }
    buf.copy_from_slice(&out);
}

/// Signed integer wavenumber of FFT bin `j` for a `2 pi`-periodic signal of
/// length `n`. The Nyquist bin of an even length is flagged.
pub(crate) fn wavenumber(j: usize, n: usize) -> (i64, bool) {
    if 2 * j == n {
        ((n / 2) as i64, true)
    } else if 2 * j < n {
        (j as i64, false)
    } else {
        (j as i64 - n as i64, false)
    }
}

/// Apply a Fourier multiplier to a real periodic sequence in place.
pub(crate) fn apply_multiplier<F>(data: &mut [f64], scratch: &mut Vec<Complex>, mult: F)
where
    F: Fn(i64, bool) -> Complex,
{
    let n = data.len();
    scratch.clear();
    scratch.extend(data.iter().map(|&v| Complex::new(v, 0.0)));
    fft(scratch, false);
    for (j, z) in scratch.iter_mut().enumerate() {
        let (k, nyq) = wavenumber(j, n);
        *z = z.mul(mult(k, nyq));
    }
    fft(scratch, true);
    let inv = 1.0 / n as f64;
    for (d, z) in data.iter_mut().zip(scratch.iter()) {
        *d = z.re * inv;
    }
}
