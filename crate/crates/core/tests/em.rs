mod common;

use common::{gauss_jordan_inverse, max_abs_diff};
use sbl::em::{e_step, m_step_gamma};
use sbl::scalar::{dotc, norm_sq};
use sbl::{
    fit_em, generate_problem, run_em, Complex64, EmConfig, Field, FieldKind, FitFlag, GenConfig,
    LambdaMode, Mat, Observation, PriorConfig, ProblemInstance,
};

fn instance<S: Field>(seed: u64, m: usize, l: usize, k: usize, snr_db: f64) -> ProblemInstance<S> {
    let cfg = GenConfig { m, l, k, snr_db, field: S::KIND, seed, noise_precision: None };
    generate_problem::<S>(&cfg).unwrap()
}

fn monotone<S: Field<Real = f64>>(seed: u64, prior: PriorConfig<f64>, lambda_mode: LambdaMode<f64>) {
    let p = instance::<S>(seed, 40, 80, 8, 20.0);
    let mode = match lambda_mode {
        LambdaMode::Known(_) => LambdaMode::Known(p.lambda_true),
        m => m,
    };
    let fit = fit_em(&p.obs, &EmConfig::new(prior, mode)).unwrap();
    assert!(!fit.trace.is_empty());
    for (i, t) in fit.trace.iter().enumerate() {
        let slack = 1e-9 * t.before.abs().max(1.0);
        assert!(
            t.after >= t.before - slack,
            "seed {seed}, step {i}: {} -> {}",
            t.before,
            t.after
        );
    }
}

#[test]
fn objective_never_decreases() {
    let priors = [
        PriorConfig::two_layer(1.0, 1.0),
        PriorConfig::two_layer(0.5, 0.2),
        PriorConfig::rvm(),
        PriorConfig::three_layer(1.0, 1.0, 0.1),
    ];
    for seed in 0..10 {
        let prior = priors[seed as usize % priors.len()].clone();
        let mode = if seed % 2 == 0 { LambdaMode::Known(0.0) } else { LambdaMode::Estimate };
        monotone::<f64>(seed, prior.clone(), mode);
        monotone::<Complex64>(100 + seed, prior, mode);
    }
}

#[test]
fn active_set_only_shrinks() {
    let p = instance::<Complex64>(3, 30, 60, 5, 20.0);
    let mut prev: Option<Vec<usize>> = None;
    for iters in [1, 2, 5, 10, 20, 50, 100] {
        let cfg = EmConfig { max_iters: iters, tol: 0.0, ..EmConfig::new(PriorConfig::rvm(), LambdaMode::Estimate) };
        let fit = fit_em(&p.obs, &cfg).unwrap();
        if let Some(prev) = &prev {
            assert!(fit.active.iter().all(|i| prev.contains(i)));
        }
        prev = Some(fit.active);
    }
}

#[test]
fn e_step_examples() {
    // orthonormal columns: Σ = I/2, μ = H^H y / 2
    let h = Mat::<f64>::from_fn(4, 3, |i, j| if i == j { 1.0 } else { 0.0 });
    let y = vec![1.0, -2.0, 3.0, 4.0];
    let obs = Observation::new(h.clone(), y.clone()).unwrap();
    let post = e_step(&obs, &[0, 1, 2], &[1.0; 3], 1.0).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 0.5 } else { 0.0 };
            assert!((post.sigma[(i, j)] - want).abs() < 1e-15);
        }
        assert!((post.mu[i] - 0.5 * y[i]).abs() < 1e-15);
    }

    // one column: Σ = (λ s + 1/g)^{-1}
    let obs = Observation::new(Mat::<f64>::from_col_major(3, 1, vec![1.0, 2.0, 2.0]).unwrap(), vec![0.3, 0.1, -1.0]).unwrap();
    let post = e_step(&obs, &[0], &[0.7], 2.5).unwrap();
    assert!((post.sigma[(0, 0)] - 1.0 / (2.5 * 9.0 + 1.0 / 0.7)).abs() < 1e-15);
}

#[test]
fn e_step_matches_dense_solve() {
    let p = instance::<Complex64>(11, 20, 8, 3, 10.0);
    let active: Vec<usize> = (0..8).collect();
    let gamma = [0.3, 1.2, 2.0, 0.05, 0.8, 4.0, 1.0, 0.6];
    let lambda = 3.0;
    let post = e_step(&p.obs, &active, &gamma, lambda).unwrap();
    let g = p.obs.h.gram();
    let a = Mat::from_fn(8, 8, |i, j| {
        let d = if i == j { Complex64::new(1.0 / gamma[i], 0.0) } else { Complex64::new(0.0, 0.0) };
        g[(i, j)] * lambda + d
    });
    let sigma = gauss_jordan_inverse(&a);
    let hty = p.obs.h.adjoint_mul_vec(&p.obs.y);
    let mu: Vec<Complex64> = sigma.mul_vec(&hty).into_iter().map(|v| v * lambda).collect();
    assert!(max_abs_diff(sigma.as_col_major(), post.sigma.as_col_major()) < 1e-10);
    assert!(max_abs_diff(&mu, &post.mu) < 1e-10);

    // H^H (y - Hμ) = λ^{-1} Γ^{-1} μ
    let hmu = p.obs.h.mul_vec(&post.mu);
    let r: Vec<Complex64> = p.obs.y.iter().zip(&hmu).map(|(a, b)| a - b).collect();
    let lhs = p.obs.h.adjoint_mul_vec(&r);
    let rhs: Vec<Complex64> = post.mu.iter().zip(&gamma).map(|(m, g)| m / (lambda * g)).collect();
    let scale = norm_sq(&hty).sqrt();
    assert!(max_abs_diff(&lhs, &rhs) <= 1e-8 * scale);
}

#[test]
fn expected_residual_matches_explicit_trace() {
    let p = instance::<Complex64>(12, 20, 10, 3, 10.0);
    let active = [1, 3, 4, 8];
    let gamma = [0.5, 1.5, 0.2, 2.0];
    let lambda = 4.0;
    let post = e_step(&p.obs, &active, &gamma, lambda).unwrap();
    let ha = p.obs.h.select_cols(&active);
    let hmu = ha.mul_vec(&post.mu);
    let r: Vec<Complex64> = p.obs.y.iter().zip(&hmu).map(|(a, b)| a - b).collect();
    let tr = ha.mul(&post.sigma).mul(&ha.adjoint()).trace().re;
    let explicit = norm_sq(&r) + tr;
    // λ = M / residual when estimated with these γ held fixed for one step
    let cfg = EmConfig { max_iters: 1, tol: 0.0, ..EmConfig::new(PriorConfig::rvm(), LambdaMode::Estimate) };
    assert!(fit_em(&p.obs, &cfg).is_ok());
    let direct = {
        let g = ha.gram();
        let quad = dotc(&post.mu, &g.mul_vec(&post.mu)).re;
        norm_sq(&p.obs.y) - 2.0 * dotc(&ha.adjoint_mul_vec(&p.obs.y), &post.mu).re + quad + (g.mul(&post.sigma)).trace().re
    };
    assert!((explicit - direct).abs() <= 1e-10 * explicit.max(1.0));
}

#[test]
fn identity_dictionary_recovers_the_single_weight() {
    let obs = Observation::new(Mat::<f64>::identity(4), vec![5.0, 0.0, 0.0, 0.0]).unwrap();
    let cfg = EmConfig::new(PriorConfig::two_layer(1.0, 1.0), LambdaMode::Known(1e4));
    let fit = fit_em(&obs, &cfg).unwrap();
    assert_eq!(fit.active, vec![0]);
    assert!((fit.alpha[0] - 5.0).abs() < 1e-3, "{:?}", fit.alpha);
    assert!(fit.alpha[1..].iter().all(|&a| a == 0.0));
}

#[test]
fn empty_signal_prunes_everything() {
    let cfg = GenConfig { m: 20, l: 40, k: 0, snr_db: 0.0, field: FieldKind::Real, seed: 7, noise_precision: Some(100.0) };
    let p = generate_problem::<f64>(&cfg).unwrap();
    // the shrinkage threshold sqrt(2η)/λ must exceed every |h_l^T w|
    let em = EmConfig::new(PriorConfig::two_layer(1.0, 1e5), LambdaMode::Known(100.0));
    let (fit, metrics) = run_em(&p, &em).unwrap();
    assert_eq!(fit.flag, FitFlag::AllPruned);
    assert_eq!(metrics.k_hat, 0);
    assert!(fit.alpha.iter().all(|&a| a == 0.0));
}

/// Textbook RVM-EM with dense inverses: γ ← |μ|² + Σ_ll, prune below 1e-5.
fn reference_rvm<S: Field<Real = f64>>(obs: &Observation<S>, lambda: f64, iters: usize) -> Vec<S> {
    let l = obs.l();
    let mut active: Vec<usize> = (0..l).collect();
    let mut gamma = vec![1.0; l];
    let hty = obs.h.adjoint_mul_vec(&obs.y);
    let posterior = |active: &[usize], gamma: &[f64]| {
        let ha = obs.h.select_cols(active);
        let g = ha.gram();
        let a = Mat::from_fn(active.len(), active.len(), |i, j| {
            let d = if i == j { S::from_real(1.0 / gamma[i]) } else { S::zero() };
            g[(i, j)].scale(lambda) + d
        });
        let sigma = gauss_jordan_inverse(&a);
        let z: Vec<S> = active.iter().map(|&i| hty[i]).collect();
        let mu: Vec<S> = sigma.mul_vec(&z).into_iter().map(|v| v.scale(lambda)).collect();
        (sigma, mu)
    };
    let (mut sigma, mut mu) = posterior(&active, &gamma);
    for _ in 0..iters {
        for k in 0..active.len() {
            gamma[k] = mu[k].abs_sq() + sigma[(k, k)].re();
        }
        let keep: Vec<usize> = (0..active.len()).filter(|&k| gamma[k] >= 1e-5).collect();
        active = keep.iter().map(|&k| active[k]).collect();
        gamma = keep.iter().map(|&k| gamma[k]).collect();
        if active.is_empty() {
            return vec![S::zero(); l];
        }
        (sigma, mu) = posterior(&active, &gamma);
    }
    let mut out = vec![S::zero(); l];
    for (&i, &v) in active.iter().zip(&mu) {
        out[i] = v;
    }
    out
}

#[test]
fn rvm_matches_reference_implementation() {
    let p = instance::<Complex64>(21, 25, 40, 4, 25.0);
    let iters = 60;
    let cfg = EmConfig {
        max_iters: iters,
        tol: 0.0,
        ..EmConfig::new(PriorConfig::rvm(), LambdaMode::Known(p.lambda_true))
    };
    let fit = fit_em(&p.obs, &cfg).unwrap();
    let reference = reference_rvm(&p.obs, p.lambda_true, iters);
    assert!(max_abs_diff(&fit.alpha, &reference) < 1e-8);
}

#[test]
fn laplace_fixed_point_satisfies_the_gamma_update() {
    for seed in 0..4 {
        let p = instance::<f64>(30 + seed, 30, 50, 5, 25.0);
        let eta = 0.5;
        let cfg = EmConfig {
            max_iters: 20_000,
            tol: 0.0,
            ..EmConfig::new(PriorConfig::two_layer(1.0, eta), LambdaMode::Known(p.lambda_true))
        };
        let fit = fit_em(&p.obs, &cfg).unwrap();
        let post = e_step(&p.obs, &fit.active, &fit.gamma, fit.lambda).unwrap();
        let worst = fit
            .gamma
            .iter()
            .enumerate()
            .map(|(k, &g)| {
                let m2 = post.sigma[(k, k)] + post.mu[k] * post.mu[k];
                (m_step_gamma(m2, eta, 1.0, FieldKind::Real) - g).abs() / g.max(1.0)
            })
            .fold(0.0, f64::max);
        assert!(worst <= 1e-9, "seed {seed}: fixed-point residual {worst:e}");
    }
}
