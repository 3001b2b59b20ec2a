mod common;

use common::fast_oracle::gig_moment_by_quadrature;
use common::{half_line, tanh_sinh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbl::priors::{
    pdf_2l, pdf_3l, posterior_inv_gamma, scalar_map_orthonormal, soft_threshold, ComponentPrior,
};
use sbl::vmp::update_q_gamma;
use sbl::{Complex64, FieldKind, Gig};
use std::f64::consts::PI;

#[test]
fn gig_moments_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for &p in &[-1.0, -0.5, 0.5, 1.0] {
        for _ in 0..100 {
            let u = 10f64.powf(rng.random_range(-1.0..1.0));
            let v = 10f64.powf(rng.random_range(-1.0..1.0));
            let g = Gig::new(p, u, v).unwrap();
            for n in [-1, 1] {
                let want = gig_moment_by_quadrature(p, u, v, n);
                let got = g.moment(n).unwrap();
                assert!(((got - want) / want).abs() < 1e-6, "p={p} u={u} v={v} n={n}");
            }
        }
    }
}

#[test]
fn gig_pdf_integrates_to_one() {
    for (p, u, v) in [(0.3f64, 1.0f64, 2.0f64), (-1.5, 0.2, 4.0), (2.0, 3.0, 0.1)] {
        let g = Gig::new(p, u, v).unwrap();
        let mass = half_line(|x| g.pdf(x).unwrap(), (v / u).sqrt());
        assert!((mass - 1.0).abs() < 1e-9, "{mass}");
    }
}

#[test]
fn gig_degenerate_limits() {
    // v = 0 is gamma(p, u/2): mean 2p/u
    let g = Gig::new(1.5f64, 3.0, 0.0).unwrap();
    assert!((g.mean().unwrap() - 1.0).abs() < 1e-13);
    // u = 0 is inverse gamma(-p, v/2): mean of 1/γ is 2(-p)/v
    let g = Gig::new(-2.0f64, 0.0, 4.0).unwrap();
    assert!((g.inv_mean().unwrap() - 1.0).abs() < 1e-13);
    assert!(Gig::new(0.5f64, 0.0, 1.0).is_err());
    assert!(Gig::new(-0.5f64, 1.0, 0.0).is_err());
}

#[test]
fn half_shape_inverse_mean_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let m2 = 10f64.powf(rng.random_range(-3.0..2.0));
        let eta = 10f64.powf(rng.random_range(-2.0..2.0));
        // p = ε - ρ = 1/2 in both fields
        for (field, eps) in [(FieldKind::Real, 1.0), (FieldKind::Complex, 1.5)] {
            let rho = field.rho();
            let (_, closed) = update_q_gamma(m2, eta, eps, field).unwrap();
            let general = Gig::new(0.5, 2.0 * eta, 2.0 * rho * m2).unwrap().inv_mean().unwrap();
            assert!(((closed - general) / general).abs() < 1e-9);
        }
    }
    let (_, ig) = update_q_gamma(2.0, 2.0, 1.0, FieldKind::Real).unwrap();
    assert!((ig - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn two_layer_density_is_normalized() {
    for (eps, eta) in [(1.0, 0.5), (0.75, 2.0), (1.6, 0.3), (3.0, 1.0)] {
        let mass = 2.0 * half_line(|r| pdf_2l(r, eps, eta).unwrap(), 1.0);
        assert!((mass - 1.0).abs() < 1e-8, "real ε={eps} η={eta}: {mass}");
        let f = |r: f64| 2.0 * PI * r * pdf_2l(Complex64::new(r, 0.0), eps, eta).unwrap();
        let mass = half_line(f, 1.0);
        assert!((mass - 1.0).abs() < 1e-8, "complex ε={eps} η={eta}: {mass}");
    }
}

#[test]
fn two_layer_density_matches_its_mixture() {
    // p(α) = ∫ N(α; 0, γ) Ga(γ; ε, η) dγ
    let (eps, eta, r) = (0.8f64, 1.7f64, 0.6f64);
    let gam = sbl::specfun::gamma(eps);
    let real = half_line(
        |g| {
            (-(r * r) / (2.0 * g)).exp() / (2.0 * PI * g).sqrt() * eta.powf(eps) * g.powf(eps - 1.0)
                * (-eta * g).exp()
                / gam
        },
        1.0,
    );
    assert!((pdf_2l(r, eps, eta).unwrap() / real - 1.0).abs() < 1e-9);
    let cplx = half_line(
        |g| (-(r * r) / g).exp() / (PI * g) * eta.powf(eps) * g.powf(eps - 1.0) * (-eta * g).exp() / gam,
        1.0,
    );
    let got = pdf_2l(Complex64::new(0.0, r), eps, eta).unwrap();
    assert!((got / cplx - 1.0).abs() < 1e-9);
}

#[test]
fn laplace_special_cases() {
    let eta = 0.9f64;
    for r in [0.0, 0.3, 2.0] {
        let real = (eta / 2.0).sqrt() * (-(2.0 * eta).sqrt() * r).exp();
        assert!((pdf_2l(r, 1.0, eta).unwrap() - real).abs() < 1e-13);
        let cplx = 2.0 * eta / PI * (-2.0 * eta.sqrt() * r).exp();
        let got = pdf_2l(Complex64::new(r, 0.0), 1.5, eta).unwrap();
        assert!((got - cplx).abs() < 1e-13);
    }
}

// mpmath nested quadrature of the 3-L mixture, 30 digits
#[test]
fn three_layer_density_reference_values() {
    let c = pdf_3l(Complex64::new(1.0, 0.0), 1.0, 1.0, 0.1).unwrap();
    assert!((c - 0.022_907_722_710_153_087).abs() < 1e-12);
    let r = pdf_3l(1.0f64, 1.0, 2.0, 1.0).unwrap();
    assert!((r - 0.139_198_856_046_996_18).abs() < 1e-12);
    let c = pdf_3l(Complex64::new(0.3, 0.0), 1.5, 0.7, 0.4).unwrap();
    assert!((c - 0.388_351_806_395_155_18).abs() < 1e-12);
}

#[test]
fn three_layer_density_is_normalized() {
    for (eps, a, b) in [(1.0, 1.0, 0.1), (2.0, 1.5, 0.7), (0.6, 2.0, 1.0)] {
        let mass = 2.0 * half_line(|r| pdf_3l(r, eps, a, b).unwrap(), 1.0);
        assert!((mass - 1.0).abs() < 1e-6, "real {eps} {a} {b}: {mass}");
        let f = |r: f64| 2.0 * PI * r * pdf_3l(Complex64::new(r, 0.0), eps, a, b).unwrap();
        assert!((half_line(f, 1.0) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn posterior_inverse_variance_matches_quadrature() {
    // 3-L: E[1/γ | α] from the joint (γ, η) posterior, integrated numerically
    let (eps, a, b, rho) = (0.5f64, 1.0f64, 0.4f64, 1.0f64);
    let r2 = 0.8f64;
    // marginal over η: p(γ) ∝ γ^{ε-1} / (γ + b)^{ε+a}
    let w = |g: f64, k: f64| {
        g.powf(k) * g.powf(-rho) * (-rho * r2 / g).exp() * g.powf(eps - 1.0) * (g + b).powf(-(eps + a))
    };
    let want = half_line(|g| w(g, -1.0), 1.0) / half_line(|g| w(g, 0.0), 1.0);
    let got =
        posterior_inv_gamma::<Complex64>(r2, ComponentPrior::ThreeLayer { epsilon: eps, a, b })
            .unwrap();
    assert!(((got - want) / want).abs() < 1e-8, "{got} vs {want}");
}

#[test]
fn laplace_map_is_soft_thresholding() {
    let prior = ComponentPrior::TwoLayer { epsilon: 1.0, eta: 2.0 };
    for z in [-3.0f64, -0.5, 0.1, 0.9, 4.0] {
        let map = scalar_map_orthonormal(z, prior, 2.5).unwrap();
        assert!(map.converged);
        assert!((map.value - soft_threshold(z, 2.0, 2.5)).abs() < 1e-8, "z={z}");
    }
    let t = soft_threshold(Complex64::new(3.0, 4.0), 1.0, 1.0);
    assert!((t - Complex64::new(2.4, 3.2)).norm() < 1e-14);
}

#[test]
fn tanh_sinh_oracle_sanity() {
    assert!((tanh_sinh(|x| x.sqrt(), 0.0, 1.0) - 2.0 / 3.0).abs() < 1e-13);
    assert!((half_line(|x| (-x).exp(), 1.0) - 1.0).abs() < 1e-12);
}
