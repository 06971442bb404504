pub(crate) use libm::{cos, exp, pow, sin, sqrt, tanh};
#[allow(unused_imports)]
pub(crate) use libm::{erf, log};

pub(crate) fn powi(x: f64, n: i32) -> f64 {
    let mut acc = 1.0;
    let mut base = if n < 0 { 1.0 / x } else { x };
    let mut e = n.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// `<y> = 1 + y` raised to a real power.
#[inline]
pub(crate) fn bracket(y: f64, p: f64) -> f64 {
    pow(1.0 + y, p)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
