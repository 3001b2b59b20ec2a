//! Reference computations for the fast scheme.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use sbl::fast::{objective_l, SparsityFactors};
use sbl::{generate_problem, FastState, Field, FieldKind, GenConfig, Mat, Observation};

use super::{gauss_jordan_inverse, golden_max};

pub fn draw(rng: &mut impl Rng) -> (SparsityFactors<f64>, f64) {
    let s = 10f64.powf(rng.random_range(-2.0..2.0));
    let q2 = s * 10f64.powf(rng.random_range(-1.0..2.5));
    let eta = 10f64.powf(rng.random_range(-3.0..1.0));
    (SparsityFactors { s, q2 }, eta)
}

pub fn field(rng: &mut impl Rng) -> FieldKind {
    if rng.random_bool(0.5) {
        FieldKind::Real
    } else {
        FieldKind::Complex
    }
}

/// Shape parameters as `(base, multiple of ρ)`: the ε < 1 grid and three
/// points of `(1, 1 + ρ]`.
pub const EPS_LIST: [(f64, f64); 7] =
    [(0.0, 0.0), (0.25, 0.0), (0.5, 0.0), (0.75, 0.0), (1.0, 0.25), (1.0, 0.5), (1.0, 1.0)];

/// Grid-plus-golden-section maximizer of ℓ following the pruning convention:
/// for ε < 1 the largest interior local maximum if it scores above 0, for
/// ε ≥ 1 the global maximum if it scores above 0, else 0.
pub fn grid_oracle(sf: SparsityFactors<f64>, eta: f64, eps: f64, f: FieldKind) -> f64 {
    let l = |g: f64| objective_l(g, sf, eta, eps, f).unwrap();
    let (lo, hi, n) = (1e-10f64, 1e10f64, 10_000usize);
    let step = ((hi / lo).ln() / (n - 1) as f64).exp();
    let grid: Vec<f64> = (0..n).map(|i| lo * step.powi(i as i32)).collect();
    let vals: Vec<f64> = grid.iter().map(|&g| l(g)).collect();
    let pick = if eps < 1.0 {
        (1..n - 1).rev().find(|&i| vals[i] > vals[i - 1] && vals[i] >= vals[i + 1])
    } else {
        let best = (0..n).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
        Some(best).filter(|&i| i > 0 && i < n - 1)
    };
    match pick {
        None => 0.0,
        Some(i) => {
            let g = golden_max(l, grid[i - 1], grid[i + 1]);
            if l(g) > 0.0 || eps > 1.0 {
                g
            } else {
                0.0
            }
        }
    }
}

pub fn small_instance<S: Field>(seed: u64, m: usize, l: usize) -> Observation<S> {
    let cfg = GenConfig { m, l, k: 4, snr_db: 20.0, field: S::KIND, seed, noise_precision: None };
    generate_problem::<S>(&cfg).unwrap().obs
}

/// `C^{-1}` with `C = λ^{-1} I + Σ_a γ_a h_a h_a^H`, by Gauss-Jordan.
pub fn dense_c_inv<S: Field>(obs: &Observation<S>, lambda: f64, active: &[usize], gamma: &[f64]) -> Mat<S> {
    let m = obs.m();
    let c = Mat::from_fn(m, m, |i, j| {
        let mut v = if i == j { S::from_real(sbl::Real::lit(1.0 / lambda)) } else { S::zero() };
        for (&a, &g) in active.iter().zip(gamma) {
            let h = obs.h.col(a);
            v += (h[i] * h[j].conj()).scale(sbl::Real::lit(g));
        }
        v
    });
    gauss_jordan_inverse(&c)
}

pub fn quad_form<S: Field>(cinv: &Mat<S>, x: &[S], y: &[S]) -> S {
    let cy = cinv.mul_vec(y);
    sbl::scalar::dotc(x, &cy)
}

/// Largest relative deviation of the incremental `S`, `Q`, `Σ`, `μ` from a
/// dense recomputation.
pub fn bookkeeping_error<S: Field<Real = f64>>(st: &FastState<S>, obs: &Observation<S>) -> f64 {
    let lambda = st.lambda();
    let cinv = dense_c_inv(obs, lambda, st.active(), st.gamma());
    let mut worst = 0.0f64;
    for l in 0..obs.l() {
        let h = obs.h.col(l);
        let s = quad_form(&cinv, h, h).re();
        let q = quad_form(&cinv, h, &obs.y);
        worst = worst.max((st.big_s()[l] - s).abs() / s.abs().max(1.0));
        worst = worst.max((st.big_q()[l] - q).modulus() / q.modulus().max(1.0));
    }
    let dense = FastState::with_active(obs, lambda, st.active(), st.gamma()).unwrap();
    let n = st.active().len();
    let smax = dense.sigma().max_abs().max(1e-300);
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((st.sigma()[(i, j)] - dense.sigma()[(i, j)]).modulus() / smax);
        }
    }
    let mmax = dense.mu().iter().map(|v| v.modulus()).fold(1e-300, f64::max);
    worst.max(super::max_abs_diff(st.mu(), dense.mu()) / mmax)
}

/// 30 random add / re-estimate / delete moves on an (M=15, L=30) instance.
pub fn random_moves<S: Field<Real = f64>>(seed: u64) -> (FastState<S>, Observation<S>) {
    let obs = small_instance::<S>(seed, 15, 30);
    let mut st = FastState::new(&obs, 3.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut moves = 0;
    while moves < 30 {
        let i = rng.random_range(0..30);
        let g = 10f64.powf(rng.random_range(-1.0..1.0));
        match st.gamma_of(i) {
            None if st.active().len() < 12 => st.add(i, g).unwrap(),
            None => continue,
            Some(_) if rng.random_bool(0.5) => st.reestimate(i, g).unwrap(),
            Some(_) => st.delete(i).unwrap(),
        }
        moves += 1;
    }
    assert!(!st.active().is_empty());
    (st, obs)
}

/// `E[γ^n]` of the GIG by direct quadrature of its kernel.
pub fn gig_moment_by_quadrature(p: f64, u: f64, v: f64, n: i32) -> f64 {
    let scale = (v / u).sqrt();
    let kernel = |k: f64| move |g: f64| g.powf(p - 1.0 + k) * (-(u * g + v / g) / 2.0).exp();
    super::half_line(kernel(n as f64), scale) / super::half_line(kernel(0.0), scale)
}
