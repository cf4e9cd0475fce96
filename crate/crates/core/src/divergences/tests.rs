use alloc::sync::Arc;
use alloc::vec;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::distributions::{FixedSide, QuasiGaussianParams, WeightExponents};
use crate::estimation::{GaussianLevels, GaussianScaledMean, TiltedPair};

fn n(mean: f64, sd: f64) -> DensityModel {
    DensityModel::gaussian(mean, sd).unwrap()
}

/// Closed form `KL(N(a, s²) ‖ N(b, t²))`.
fn kl_gauss(a: f64, s: f64, b: f64, t: f64) -> f64 {
    (t / s).ln() + (s * s + (a - b) * (a - b)) / (2.0 * t * t) - 0.5
}

/// `∫ f^λ g^{−λ} h` for unit-variance Gaussians with means `a, b, c`:
/// the integrand is `h` times `exp(λ(a−b)x − λ(a²−b²)/2)`, and
/// `E_h e^{tx} = e^{tc + t²/2}`.
fn hellinger3_gauss(lambda: f64, a: f64, b: f64, c: f64) -> f64 {
    let t = lambda * (a - b);
    (t * c + 0.5 * t * t - 0.5 * lambda * (a * a - b * b)).exp()
}

fn levels(n_max: usize, step: f64) -> ParamSpace {
    ParamSpace::new(n_max, vec![], Arc::new(GaussianLevels { step, sd: 1.0 })).unwrap()
}

#[test]
fn kl_examples() {
    let f = n(0.0, 1.0);
    assert_eq!(kl_divergence(&f, &f).unwrap().value, 0.0);
    let r = kl_divergence(&f, &n(1.0, 1.0)).unwrap();
    assert!((r.value - 0.5).abs() < 1e-8, "{r:?}");
    assert!(r.abs_error <= DIVERGENCE_TOL);
    let r = kl_divergence(&n(0.3, 0.7), &n(-1.0, 1.9)).unwrap();
    assert!((r.value - kl_gauss(0.3, 0.7, -1.0, 1.9)).abs() < 1e-8);
}

#[test]
fn kl_of_heavy_against_light_tails_diverges() {
    let r = kl_divergence(&DensityModel::Cauchy, &n(0.0, 1.0)).unwrap();
    assert!(r.divergent);
    assert_eq!(r.value, f64::INFINITY);
    // The other direction is finite.
    let r = kl_divergence(&n(0.0, 1.0), &DensityModel::Cauchy).unwrap();
    assert!(!r.divergent && r.value > 0.0);
}

#[test]
fn relative_entropy3_examples() {
    let (f, g, h) = (n(0.0, 1.0), n(1.0, 1.0), n(2.0, 1.0));
    let a = relative_entropy3(&f, &f, &h).unwrap().value;
    assert!((a - kl_divergence(&f, &h).unwrap().value).abs() < 1e-10);
    // ln g − ln h = (3 − 2x)/2, mean 3/2 under N(0,1).
    let v = relative_entropy3(&f, &g, &h).unwrap().value;
    assert!((v - 1.5).abs() < 1e-8);
    let w = relative_entropy3(&f, &h, &g).unwrap().value;
    assert!((v + w).abs() < 1e-10);
}

#[test]
fn hellinger_examples() {
    let (f, g) = (n(0.0, 1.0), n(1.0, 1.0));
    for lambda in [0.0, 1.0] {
        assert!((hellinger(lambda, &f, &g).unwrap().value - 1.0).abs() < 1e-10);
    }
    let h = hellinger(0.5, &f, &g).unwrap().value;
    assert!((h - (-0.125f64).exp()).abs() < 1e-8);
    // One-sided support: the λ = 0 and λ = 1 ends stay exact.
    let e = WeightExponents::new(0.5, 0.5).unwrap();
    let half = DensityModel::QuasiGaussian(QuasiGaussianParams::normalized(0.0, e, 1.0, FixedSide::Negative, 0.0).unwrap());
    assert!((hellinger(0.0, &half, &f).unwrap().value - 1.0).abs() < 1e-9);
    assert!((hellinger(1.0, &half, &f).unwrap().value - 1.0).abs() < 1e-9);
}

#[test]
fn hellinger_divergence_is_flagged_with_lambda() {
    // ∫ Cauchy^λ N^{1−λ} is finite for λ ≤ 1, but λ = 2 puts N^{−1} against
    // Cauchy².
    let err = hellinger(2.0, &DensityModel::Cauchy, &n(0.0, 1.0)).unwrap_err();
    assert_eq!(err, Error::DivergentIntegral { lambda: 2.0 });
}

#[test]
fn hellinger3_examples() {
    let (f, g, h) = (n(0.0, 1.0), n(1.0, 1.0), n(-0.5, 1.0));
    assert!((hellinger3(0.7, &f, &f, &h).unwrap().value - 1.0).abs() < 1e-10);
    let v = hellinger3(0.5, &f, &g, &h).unwrap().value;
    assert!((v - hellinger3_gauss(0.5, 0.0, 1.0, -0.5)).abs() < 1e-8);
}

#[test]
fn hellinger3_reduces_to_hellinger_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let lambda = rng.random_range(0.05..0.95);
        let f = n(rng.random_range(-2.0..2.0), rng.random_range(0.5..2.0));
        let g = n(rng.random_range(-2.0..2.0), rng.random_range(0.5..2.0));
        let a = hellinger3(lambda, &f, &g, &g).unwrap().value;
        let b = hellinger(lambda, &f, &g).unwrap().value;
        assert!((a - b).abs() < 1e-8, "{a} {b}");
    }
}

#[test]
fn divergences_on_heavy_and_quasi_gaussian_families() {
    let e = WeightExponents::new(-0.4, 1.5).unwrap();
    let qg = DensityModel::QuasiGaussian(QuasiGaussianParams::normalized(0.2, e, 1.1, FixedSide::Negative, 0.6).unwrap());
    let models = [
        n(0.0, 1.0),
        qg,
        DensityModel::stretched_exp(0.5, 1.0).unwrap(),
        DensityModel::stable(1.5).unwrap(),
        DensityModel::Cauchy,
        DensityModel::tilted(DensityModel::Cauchy).unwrap(),
    ];
    for f in &models {
        for g in &models {
            let kl = kl_divergence(f, g).unwrap();
            assert!(kl.value >= -1e-9, "{} {}", f.family_name(), g.family_name());
            if f == g {
                assert_eq!(kl.value, 0.0);
            }
            let h = hellinger(0.5, f, g).unwrap().value;
            assert!(h > 0.0 && h <= 1.0 + 1e-9);
        }
    }
}

#[test]
fn deviation_function_examples() {
    let s = levels(1, 1.0);
    let t0 = ParamPoint::level(0);
    let t1 = ParamPoint::level(1);
    assert_eq!(deviation_function(0.3, &t0, &t0, &s).unwrap(), 0.0);
    assert_eq!(deviation_function(0.0, &t1, &t0, &s).unwrap(), 0.0);
    for lambda in [0.1, 0.5, 0.9, 1.7, -0.4] {
        let v = deviation_function(lambda, &t1, &t0, &s).unwrap();
        assert!((v - (0.5 * lambda * lambda - 0.5 * lambda)).abs() < 1e-9, "{lambda} {v}");
    }
}

#[test]
fn phi_and_gamma_on_gaussians() {
    let s = levels(2, 1.0);
    let t0 = ParamPoint::level(0);
    let (t1, t2) = (ParamPoint::level(1), ParamPoint::level(2));
    assert_eq!(phi(0.0, &t1, &t0, &s).unwrap(), 0.0);
    assert_eq!(gamma(0.0, &t1, &t2, &t0, &s).unwrap(), 0.0);
    assert_eq!(gamma(0.8, &t1, &t1, &t0, &s).unwrap(), 0.0);
    for lambda in [1e-3, 0.2, 1.0, 3.0, 12.0] {
        let p = phi(lambda, &t1, &t0, &s).unwrap();
        assert!((p - 0.5 * lambda * lambda).abs() < 1e-8 * (1.0 + p), "{lambda} {p}");
        // Y − EY = (μ₁ − μ₂)·x under N(0, 1).
        let g = gamma(lambda, &t1, &t2, &t0, &s).unwrap();
        assert!((g - 0.5 * lambda * lambda).abs() < 1e-8 * (1.0 + g), "{lambda} {g}");
    }
    // Far in the tilted regime the log-space branch takes over.
    let p = phi(40.0, &t2, &t0, &s).unwrap();
    assert!((p / (0.5 * 1600.0 * 4.0) - 1.0).abs() < 1e-9);
}

#[test]
fn phi_for_tilted_pair_is_finite_for_positive_lambda() {
    let pair = TiltedPair::new(DensityModel::stretched_exp(0.5, 1.0).unwrap()).unwrap();
    let s = ParamSpace::new(1, vec![], Arc::new(pair)).unwrap();
    let (t0, t1) = (ParamPoint::level(0), ParamPoint::level(1));
    let p = phi(2.0, &t1, &t0, &s).unwrap();
    assert!(p.is_finite() && p > 0.0);
    // Negative λ puts e^{|λ||x|} against a sub-exponential tail.
    assert!(matches!(phi(-2.0, &t1, &t0, &s), Err(Error::DivergentIntegral { .. })));
}

#[test]
fn lower_bound_rate_examples() {
    let t0 = ParamPoint::level(0);
    let r = lower_bound_rate(&levels(1, 1.0), &t0, 9).unwrap();
    assert!((r - 0.125).abs() < 1e-6, "{r}");
    let r = lower_bound_rate(&levels(2, 1.0), &t0, 9).unwrap();
    assert!((r - 0.125).abs() < 1e-6);
    let r = lower_bound_rate(&levels(2, 0.0), &t0, 9).unwrap();
    assert_eq!(r, 0.0);
    assert!(lower_bound_rate(&levels(0, 1.0), &t0, 9).is_err());
}

#[test]
fn rate_functions_single_alternative() {
    let s = levels(1, 1.0);
    let rf = RateFunctions::build(&s, &ParamPoint::level(0), &RateOptions::default()).unwrap();
    assert_eq!(rf.lambda0(), f64::INFINITY);
    assert!((rf.lower_rate() - 0.125).abs() < 1e-6);
    assert!((rf.h_r_lower() - 0.5).abs() < 1e-10);
    // n·φ(λ/√n) does not depend on n here.
    for &l in &[0.01, 0.5, 2.0, 10.0] {
        let b = rf.phi_bar(l, 0);
        assert!(b.converged);
        assert!((b.value - 0.5 * l * l).abs() < 1e-8 * (1.0 + l * l));
        assert!((rf.nu(l) - 0.5 * l * l).abs() < 1e-8 * (1.0 + l * l));
    }
    let nu = rf.nu_table();
    assert_eq!(nu.y[0], 0.0);
    assert!(nu.is_convex(1e-9));
    for delta in [0.1, 0.5, 0.9] {
        assert_eq!(rf.entropy_series_g(delta).unwrap(), 0.0);
    }
    // G = 0 and ν* = v²/2: M(√n/2) → n/8 from below on the δ grid.
    let mut last = 1.0;
    for nn in [1u64, 4, 16, 64, 256] {
        let b = rf.upper_bound_qn(nn).unwrap();
        assert!(b.value <= 1.0 && b.value <= last);
        let exact = nn as f64 / 8.0;
        assert!(b.exponent <= exact + 1e-9 && b.exponent >= 0.999 * exact, "{nn} {b:?}");
        let q = crate::special::normal_sf((nn as f64).sqrt() / 2.0);
        assert!(b.value >= q);
        last = b.value;
    }
    assert!(rf.m_literal().unwrap() < 0.0);
}

#[test]
fn entropy_distance_on_a_mean_grid() {
    // Θ₁ = {1} × [1, 2] with means β: γ̄ = λ²(β₁ − β₂)²/2 and ν = 2λ², so
    // d(β₁, β₂) = |β₁ − β₂|/2.
    let s = ParamSpace::new(1, vec![(1.0, 2.0)], Arc::new(GaussianScaledMean { sd: 1.0 })).unwrap();
    let t0 = ParamPoint::new(0, vec![1.5]);
    let opts = RateOptions {
        beta_points: 11,
        ..RateOptions::default()
    };
    let rf = RateFunctions::build(&s, &t0, &opts).unwrap();
    let k = rf.thetas().len();
    assert_eq!(k, 11);
    for i in 0..k {
        assert_eq!(rf.theta_distance(i, i), 0.0);
        for j in 0..k {
            let d = rf.theta_distance(i, j);
            assert!(d >= 0.0);
            let b1 = rf.thetas()[i].beta[0];
            let b2 = rf.thetas()[j].beta[0];
            assert!((d - 0.5 * (b1 - b2).abs()).abs() < 1e-6, "{b1} {b2} {d}");
            assert!(rf.domination_gap(i, j) <= 1e-9 * (1.0 + rf.nu(rf.lambda_grid()[199])));
        }
    }
    // Diameter 1/2: one ball of radius 1/4 around β = 1.5 covers the grid.
    assert_eq!(rf.kolmogorov_entropy(0.25 + 1e-6), 0.0);
    assert!((rf.kolmogorov_entropy(0.0) - 11f64.ln()).abs() < 1e-12);
    assert!(rf.entropy_series_g(0.5).unwrap() > 0.0);
    let mut last = 1.0;
    for nn in [16u64, 64, 256, 1024] {
        let b = rf.upper_bound_qn(nn).unwrap();
        assert!(b.value <= last);
        last = b.value;
    }
    assert!(last < 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kl_is_nonnegative_and_matches_closed_form(
        a in -3.0f64..3.0, s in 0.3f64..3.0, b in -3.0f64..3.0, t in 0.3f64..3.0,
    ) {
        let r = kl_divergence(&n(a, s), &n(b, t)).unwrap();
        prop_assert!(r.value >= 0.0);
        prop_assert!((r.value - kl_gauss(a, s, b, t)).abs() < 1e-8 * (1.0 + r.value));
    }

    #[test]
    fn hellinger_is_log_convex_in_lambda(
        a in -2.0f64..2.0, s in 0.5f64..2.0, b in -2.0f64..2.0, t in 0.5f64..2.0, l in 0.05f64..0.45,
    ) {
        let (f, g) = (n(a, s), n(b, t));
        let lo = hellinger(l, &f, &g).unwrap().value.ln();
        let mid = hellinger(l + 0.25, &f, &g).unwrap().value.ln();
        let hi = hellinger(l + 0.5, &f, &g).unwrap().value.ln();
        prop_assert!(mid <= 0.5 * (lo + hi) + 1e-8);
    }

    #[test]
    fn relative_entropy3_is_antisymmetric(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, s in 0.5f64..2.0,
    ) {
        let (f, g, h) = (n(a, 1.0), n(b, s), n(c, 1.0));
        let x = relative_entropy3(&f, &g, &h).unwrap().value;
        let y = relative_entropy3(&f, &h, &g).unwrap().value;
        prop_assert!((x + y).abs() < 1e-9);
    }

    #[test]
    fn legendre_transform_is_convex_and_fenchel_bounded(u1 in -2.0f64..2.0, u2 in -2.0f64..2.0) {
        let grid: Vec<f64> = (0..=80).map(|i| -4.0 + 0.1 * i as f64).collect();
        let f = |z: f64| z.cosh() - 1.0 + 0.3 * z;
        let t = |u: f64| legendre_transform(f, &grid, u).unwrap().value;
        let mid = t(0.5 * (u1 + u2));
        prop_assert!(mid <= 0.5 * (t(u1) + t(u2)) + 1e-9);
        prop_assert!(t(u1) >= -f(0.0));
    }
}

/// `E e^{−λ|ξ|}` for standard Cauchy `ξ`, as `(2/π)∫₀^{π/2} e^{−λ tan t} dt`
/// by composite Simpson.
fn cauchy_laplace(lambda: f64) -> f64 {
    let k = 20_000;
    let h = core::f64::consts::FRAC_PI_2 / k as f64;
    let f = |t: f64| if t >= core::f64::consts::FRAC_PI_2 { 0.0 } else { (-lambda * t.tan()).exp() };
    let mut s = f(0.0) + f(core::f64::consts::FRAC_PI_2);
    for i in 1..k {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0 * 2.0 / core::f64::consts::PI
}

#[test]
fn deviation_function_without_a_mean() {
    // Under Cauchy f₀ the log ratio ln C − |x| has no mean, yet
    // Λ(λ) = ln E e^{−λ|ξ|} − λ ln E e^{−|ξ|} is finite on (0, 1].
    let space = ParamSpace::new(1, vec![], Arc::new(TiltedPair::new(DensityModel::Cauchy).unwrap())).unwrap();
    let (t0, t1) = (ParamPoint::level(0), ParamPoint::level(1));
    for lambda in [0.25, 0.5, 0.75, 1.0] {
        let exact = cauchy_laplace(lambda).ln() - lambda * cauchy_laplace(1.0).ln();
        let got = deviation_function(lambda, &t1, &t0, &space).unwrap();
        assert!((got - exact).abs() < 1e-8, "λ={lambda}: {got} vs {exact}");
    }
    let rate = lower_bound_rate(&space, &t0, 1).unwrap();
    assert!(rate > 0.1 && rate.is_finite(), "{rate}");
}
