use alloc::sync::Arc;
use alloc::vec;

use proptest::prelude::*;

use super::*;
use crate::distributions::{sample, DensityModel};
use crate::stream::replication_stream;

fn levels(n_max: usize) -> ParamSpace {
    ParamSpace::new(n_max, vec![], Arc::new(GaussianLevels { step: 1.0, sd: 1.0 })).unwrap()
}

fn location() -> ParamSpace {
    ParamSpace::new(1, vec![(-3.0, 3.0)], Arc::new(GaussianLocation { step: 1.0, sd: 1.0 })).unwrap()
}

/// Sample of size `n` with exactly the given mean (symmetric offsets).
fn sample_with_mean(mean: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| mean + 0.25 * (i as f64 - (n - 1) as f64 / 2.0))
        .collect()
}

#[test]
fn contrast_examples() {
    let s = levels(1);
    let t0 = ParamPoint::level(0);
    let t1 = ParamPoint::level(1);
    let xs = [0.3, -1.2, 2.5];
    assert_eq!(contrast(&xs, &t0, &t0, &s).unwrap(), 0.0);
    // ln φ(x − 1) − ln φ(x) = x − 1/2.
    assert!(contrast(&[0.5], &t1, &t0, &s).unwrap().abs() < 1e-15);
    let one = contrast(&[1.7], &t1, &t0, &s).unwrap();
    assert!((one - 1.2).abs() < 1e-12);
    let many = contrast(&[1.7; 9], &t1, &t0, &s).unwrap();
    assert!((many - 9.0 * one).abs() < 1e-12);
}

#[test]
fn contrast_reports_zero_density() {
    // A one-sided quasi-Gaussian law vanishes on one half-line.
    let spec = FamilySpec::QuasiGaussianLocation {
        step: 1.0,
        alpha_neg: 0.5,
        alpha_pos: 0.5,
        sigma: 1.0,
        c1: 0.0,
        located: false,
    };
    let s = ParamSpace::new(1, vec![], spec.build().unwrap()).unwrap();
    let err = contrast(&[2.5, -2.0], &ParamPoint::level(1), &ParamPoint::level(0), &s).unwrap_err();
    assert_eq!(err, Error::ZeroDensity { index: 1, x: -2.0 });
}

#[test]
fn parameter_space_validation() {
    let fam: Arc<dyn Family> = Arc::new(GaussianLocation { step: 1.0, sd: 1.0 });
    assert!(ParamSpace::new(1, vec![], fam.clone()).is_err());
    assert!(ParamSpace::new(1, vec![(1.0, 1.0)], fam.clone()).is_err());
    assert!(ParamSpace::new(1, vec![(0.0, f64::INFINITY)], fam).is_err());
    let ls: Arc<dyn Family> = Arc::new(GaussianLocationScale { step: 1.0 });
    assert!(ParamSpace::new(1, vec![(-1.0, 1.0), (0.0, 2.0)], ls.clone()).is_err());
    assert!(ParamSpace::new(1, vec![(-1.0, 1.0), (0.5, 2.0)], ls).is_ok());
    let pair = TiltedPair::new(DensityModel::gaussian(0.0, 1.0).unwrap()).unwrap();
    assert!(ParamSpace::new(2, vec![], Arc::new(pair)).is_err());
}

#[test]
fn beta_grid_is_lexicographic() {
    let fam: Arc<dyn Family> = Arc::new(GaussianLocationScale { step: 1.0 });
    let s = ParamSpace::new(1, vec![(0.0, 1.0), (1.0, 2.0)], fam).unwrap();
    let g = s.beta_grid(3);
    assert_eq!(g.len(), 9);
    assert_eq!(g[0], vec![0.0, 1.0]);
    assert_eq!(g[1], vec![0.0, 1.5]);
    assert_eq!(g[8], vec![1.0, 2.0]);
    assert_eq!(levels(2).beta_grid(17), vec![Vec::<f64>::new()]);
}

#[test]
fn identifiability_spot_check() {
    assert!(levels(3).check_identifiability().is_ok());
    let flat = ParamSpace::new(1, vec![], Arc::new(GaussianLevels { step: 0.0, sd: 1.0 })).unwrap();
    assert!(flat.check_identifiability().is_err());
}

#[test]
fn profile_recovers_the_sample_mean() {
    let s = location();
    let xs = sample_with_mean(1.2, 25);
    let t0 = ParamPoint::new(0, vec![0.0]);
    let p = profile_mle_continuous(&xs, 0, &s, &t0).unwrap();
    assert!((p.beta[0] - 1.2).abs() < 1e-4, "{p:?}");
    assert!(!p.boundary && !p.tie);
    // At level 1 the center is β + 1.
    let p1 = profile_mle_continuous(&xs, 1, &s, &t0).unwrap();
    assert!((p1.beta[0] - 0.2).abs() < 1e-4);
    assert!((p.value - p1.value).abs() < 1e-8);
}

#[test]
fn profile_without_continuous_part_returns_the_point() {
    let s = levels(1);
    let p = profile_mle_continuous(&[0.1, 0.2], 1, &s, &ParamPoint::level(0)).unwrap();
    assert!(p.beta.is_empty());
    assert!((p.value - (0.3 - 1.0)).abs() < 1e-12);
}

#[test]
fn constant_likelihood_returns_first_grid_point_with_tie() {
    let s = ParamSpace::new(1, vec![(-1.0, 2.0)], Arc::new(GaussianScaledMean { sd: 1.0 })).unwrap();
    let t0 = ParamPoint::new(0, vec![0.5]);
    let p = profile_mle_continuous(&[0.3, -0.4], 0, &s, &t0).unwrap();
    assert_eq!(p.beta, vec![-1.0]);
    assert!(p.tie);
}

#[test]
fn profile_flags_boundary_maxima() {
    let s = location();
    let xs = sample_with_mean(5.0, 10);
    let p = profile_mle_continuous(&xs, 0, &s, &ParamPoint::new(0, vec![0.0])).unwrap();
    assert!(p.boundary);
    assert_eq!(p.beta, vec![3.0]);
}

#[test]
fn mle_threshold_rule() {
    let s = levels(1);
    let t0 = ParamPoint::level(0);
    let r = mle(&sample_with_mean(0.6, 10), &s, &t0).unwrap();
    assert_eq!(r.tau_hat, 1);
    let r = mle(&sample_with_mean(0.4, 10), &s, &t0).unwrap();
    assert_eq!(r.tau_hat, 0);
    assert!(!r.tie_flag);
    let r = mle(&sample_with_mean(0.5, 10), &s, &t0).unwrap();
    assert_eq!(r.tau_hat, 0);
    assert!(r.tie_flag);
}

#[test]
fn mle_log_lik_is_the_contrast_at_the_estimate() {
    let s = location();
    let t0 = ParamPoint::new(0, vec![0.3]);
    let mut rng = replication_stream(11, 40, 0);
    let xs = sample(&DensityModel::gaussian(0.3, 1.0).unwrap(), &mut rng, 40).unwrap();
    let r = mle(&xs, &s, &t0).unwrap();
    let direct = contrast(&xs, &ParamPoint::new(r.tau_hat, r.beta_hat.clone()), &t0, &s).unwrap();
    assert!((r.log_lik - direct).abs() < 1e-9);
    assert_eq!(r.profile.len(), 2);
    assert!(r.profile.iter().all(|p| p.value <= r.log_lik + 1e-12 || r.tau_hat == 0));
}

#[test]
fn mle_rejects_empty_sample() {
    assert!(mle(&[], &levels(1), &ParamPoint::level(0)).is_err());
}

/// Wraps a family and adds an arbitrary function of `x` to every
/// log-likelihood term.
#[derive(Debug)]
struct Reweighted(GaussianLocation);

impl Family for Reweighted {
    fn beta_dim(&self) -> usize {
        1
    }
    fn model(&self, theta: &ParamPoint) -> Result<DensityModel> {
        self.0.model(theta)
    }
    fn ln_likelihood_term(&self, x: f64, theta: &ParamPoint) -> f64 {
        self.0.ln_likelihood_term(x, theta) + 3.0 * x.sin() + 0.1 * x * x
    }
}

#[test]
fn common_factors_do_not_move_the_estimate() {
    let fam = GaussianLocation { step: 1.0, sd: 1.0 };
    let plain = ParamSpace::new(2, vec![(-3.0, 3.0)], Arc::new(fam)).unwrap();
    let bent = ParamSpace::new(2, vec![(-3.0, 3.0)], Arc::new(Reweighted(fam))).unwrap();
    let t0 = ParamPoint::new(0, vec![0.0]);
    for seed in 0..5 {
        let mut rng = replication_stream(seed, 30, 0);
        let xs = sample(&DensityModel::gaussian(0.0, 1.0).unwrap(), &mut rng, 30).unwrap();
        let a = mle(&xs, &plain, &t0).unwrap();
        let b = mle(&xs, &bent, &t0).unwrap();
        assert_eq!(a.tau_hat, b.tau_hat);
        assert!((a.beta_hat[0] - b.beta_hat[0]).abs() < 1e-9);
        assert!((a.log_lik - b.log_lik).abs() < 1e-9);
    }
}

#[test]
fn stationarity_residual_examples() {
    let s = location();
    let t0 = ParamPoint::new(0, vec![0.0]);
    let xs = sample_with_mean(0.7, 20);
    let at_mean = stationarity_residual(&xs, &ParamPoint::new(0, vec![0.7]), &s, &t0).unwrap();
    assert!(at_mean < 1e-4, "{at_mean}");
    let off = stationarity_residual(&xs, &ParamPoint::new(0, vec![0.8]), &s, &t0).unwrap();
    // Score n·(x̄ − β) = 20·(−0.1).
    assert!(off > 0.01);
    assert!((off - 2.0).abs() < 1e-4);
    assert!(stationarity_residual(&xs, &ParamPoint::new(0, vec![3.0]), &s, &t0).is_err());

    let flat = ParamSpace::new(1, vec![(-1.0, 2.0)], Arc::new(GaussianScaledMean { sd: 1.0 })).unwrap();
    let r = stationarity_residual(&xs, &ParamPoint::new(0, vec![0.5]), &flat, &ParamPoint::new(0, vec![0.5])).unwrap();
    assert_eq!(r, 0.0);
}

#[test]
fn expected_contrast_examples() {
    let s = levels(2);
    let t0 = ParamPoint::level(0);
    assert_eq!(expected_contrast_a(&t0, &t0, &s).unwrap().value, 0.0);
    let a1 = expected_contrast_a(&ParamPoint::level(1), &t0, &s).unwrap().value;
    assert!((a1 + 0.5).abs() < 1e-10);
    let a2 = expected_contrast_a(&ParamPoint::level(2), &t0, &s).unwrap().value;
    assert!((a2 + 2.0).abs() < 1e-10);

    let pair = TiltedPair::new(DensityModel::stretched_exp(0.5, 1.0).unwrap()).unwrap();
    let s = ParamSpace::new(1, vec![], Arc::new(pair)).unwrap();
    assert!(expected_contrast_a(&ParamPoint::level(1), &t0, &s).unwrap().value < 0.0);
}

#[test]
fn consistency_on_gaussian_levels() {
    let s = levels(1);
    let t0 = ParamPoint::level(0);
    let law = DensityModel::gaussian(0.0, 1.0).unwrap();
    let mut correct = 0;
    for rep in 0..1000 {
        let mut rng = replication_stream(2024, 100, rep);
        let xs = sample(&law, &mut rng, 100).unwrap();
        if mle(&xs, &s, &t0).unwrap().tau_hat == 0 {
            correct += 1;
        }
    }
    // P(τ̂ ≠ 0) = 1 − Φ(5) ≈ 3e−7.
    assert!(correct >= 990, "{correct}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contrast_is_antisymmetric(
        xs in prop::collection::vec(-5.0f64..5.0, 1..30),
        m1 in 0usize..3, b1 in -3.0f64..3.0,
        m2 in 0usize..3, b2 in -3.0f64..3.0,
    ) {
        let s = ParamSpace::new(2, vec![(-3.0, 3.0)], Arc::new(GaussianLocation { step: 0.7, sd: 1.3 })).unwrap();
        let t1 = ParamPoint::new(m1, vec![b1]);
        let t2 = ParamPoint::new(m2, vec![b2]);
        let a = contrast(&xs, &t1, &t2, &s).unwrap();
        let b = contrast(&xs, &t2, &t1, &s).unwrap();
        prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn mle_is_deterministic(seed in 0u64..1000) {
        let s = location();
        let t0 = ParamPoint::new(0, vec![0.0]);
        let mut rng = replication_stream(seed, 15, 0);
        let xs = sample(&DensityModel::gaussian(0.0, 1.0).unwrap(), &mut rng, 15).unwrap();
        prop_assert_eq!(mle(&xs, &s, &t0).unwrap(), mle(&xs, &s, &t0).unwrap());
    }
}
