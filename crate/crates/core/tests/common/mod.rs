//! Test-side reference computations, independent of the library numerics.
#![allow(dead_code)]

pub mod fast_oracle;

use sbl::{Field, Mat};

/// Double-exponential (tanh-sinh) quadrature on `[a, b]`.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let r = 0.5 * (b - a);
    let pi2 = std::f64::consts::FRAC_PI_2;
    let mut prev = f64::NAN;
    let mut h = 0.5;
    loop {
        let mut sum = 0.0;
        let n = (4.5 / h) as i64;
        for k in -n..=n {
            let t = k as f64 * h;
            let u = pi2 * t.sinh();
            let ch = u.cosh();
            let w = pi2 * t.cosh() / (ch * ch);
            // distance to the nearer endpoint, 1 - tanh|u| = e^{-|u|} / cosh u
            let gap = r * (-u.abs()).exp() / ch;
            let x = if u >= 0.0 { b - gap } else { a + gap };
            if !(x > a && x < b) || w == 0.0 {
                continue;
            }
            let v = f(x);
            if v.is_finite() {
                sum += w * v;
            }
        }
        let est = sum * h * r;
        if (est - prev).abs() <= 1e-13 * est.abs().max(1e-300) || h < 1.0 / 256.0 {
            return est;
        }
        prev = est;
        h *= 0.5;
    }
}

/// `∫_0^∞ f` split at `split` into a tanh-sinh piece and an exp-sinh tail.
pub fn half_line(f: impl Fn(f64) -> f64, split: f64) -> f64 {
    tanh_sinh(&f, 0.0, split) + exp_sinh(&f, split)
}

/// Exp-sinh quadrature on `[a, ∞)`.
pub fn exp_sinh(f: impl Fn(f64) -> f64, a: f64) -> f64 {
    let pi2 = std::f64::consts::FRAC_PI_2;
    let mut prev = f64::NAN;
    let mut h = 0.5;
    loop {
        let mut sum = 0.0;
        let n = (5.0 / h) as i64;
        for k in -n..=n {
            let t = k as f64 * h;
            let e = (pi2 * t.sinh()).exp();
            if !e.is_finite() {
                continue;
            }
            let w = pi2 * t.cosh() * e;
            let v = f(a + e);
            if v.is_finite() {
                sum += w * v;
            }
        }
        let est = sum * h;
        if (est - prev).abs() <= 1e-13 * est.abs().max(1e-300) || h < 1.0 / 256.0 {
            return est;
        }
        prev = est;
        h *= 0.5;
    }
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse<S: Field>(a: &Mat<S>) -> Mat<S> {
    let n = a.rows();
    let mut w: Vec<Vec<S>> = (0..n)
        .map(|i| {
            let mut row: Vec<S> = (0..n).map(|j| a[(i, j)]).collect();
            row.extend((0..n).map(|j| if i == j { S::one() } else { S::zero() }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| w[x][c].abs_sq().partial_cmp(&w[y][c].abs_sq()).unwrap())
            .unwrap();
        w.swap(c, p);
        let piv = w[c][c];
        for v in w[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = w[r][c];
                if f != S::zero() {
                    for k in 0..2 * n {
                        let t = w[c][k];
                        w[r][k] -= f * t;
                    }
                }
            }
        }
    }
    Mat::from_fn(n, n, |i, j| w[i][n + j])
}

/// Maximizer of `f` over a log-spaced grid on `[lo, hi]`.
pub fn log_grid_argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let (a, b) = (lo.ln(), hi.ln());
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..n {
        let x = (a + (b - a) * i as f64 / (n - 1) as f64).exp();
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Golden-section refinement of a unimodal maximum inside `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn max_abs_diff<S: Field>(a: &[S], b: &[S]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| sbl::Real::to_f64_lossy((*x - *y).modulus()))
        .fold(0.0, f64::max)
}
