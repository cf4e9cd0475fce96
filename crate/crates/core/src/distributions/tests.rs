use alloc::vec;
use core::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::prelude::*;
use crate::quadrature::{integrate, integrate_real_line, QuadratureOptions};
use crate::special::{normal_cdf, normal_pdf};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn total_mass(model: &DensityModel) -> f64 {
    let opts = QuadratureOptions::default().with_tail_scale(model.length_scale());
    integrate_real_line(|x| model.density(x), &model.breakpoints(), &opts).value
}

fn qg(center: f64, a1: f64, a2: f64, sigma: f64, c1: f64) -> QuasiGaussianParams {
    let e = WeightExponents::new(a1, a2).unwrap();
    QuasiGaussianParams::normalized(center, e, sigma, FixedSide::Negative, c1).unwrap()
}

fn families() -> Vec<DensityModel> {
    let mix = MixtureModel::new(
        vec![0.3, 0.7],
        vec![vec![qg(-2.0, 0.5, 0.0, 0.8, 0.4)], vec![qg(1.5, -0.3, 2.0, 1.3, 1.0)]],
    )
    .unwrap();
    vec![
        DensityModel::gaussian(0.5, 2.0).unwrap(),
        DensityModel::QuasiGaussian(qg(0.0, -0.5, 1.5, 1.0, 0.3)),
        DensityModel::QuasiGaussian(qg(1.0, 2.0, 2.0, 0.5, 0.0)),
        DensityModel::Mixture(mix),
        DensityModel::stretched_exp(0.5, 1.0).unwrap(),
        DensityModel::power_tail(3.0).unwrap(),
        DensityModel::power_tail(0.7).unwrap(),
        DensityModel::stable(1.5).unwrap(),
        DensityModel::Cauchy,
        DensityModel::tilted(DensityModel::Cauchy).unwrap(),
        DensityModel::tilted(DensityModel::stretched_exp(0.5, 1.0).unwrap()).unwrap(),
    ]
}

#[test]
fn every_family_integrates_to_one() {
    for m in families() {
        let mass = total_mass(&m);
        assert!((mass - 1.0).abs() < 1e-8, "{}: {mass}", m.family_name());
    }
}

#[test]
fn flat_quasi_gaussian_equals_gaussian_pointwise() {
    let q = DensityModel::QuasiGaussian(QuasiGaussianParams::gaussian(0.0, 1.0).unwrap());
    let g = DensityModel::gaussian(0.0, 1.0).unwrap();
    assert!((g.density(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    for k in 0..1000 {
        let x = -6.0 + 12.0 * (k as f64 + 0.5) / 1000.0;
        assert!((q.density(x) - g.density(x)).abs() < 1e-12);
    }
}

#[test]
fn log_density_matches_density() {
    let mut r = rng(7);
    for m in families() {
        for _ in 0..50 {
            let x: f64 = rand::Rng::random_range(&mut r, -8.0..8.0);
            let ld = m.ln_density(x);
            let d = m.density(x);
            if d > 0.0 {
                assert!((ld - d.ln()).abs() < 1e-12, "{} at {x}", m.family_name());
            }
        }
    }
}

#[test]
fn mixture_density_is_weighted_sum_of_products() {
    let a = [qg(0.0, 0.0, 1.0, 1.0, 1.0), qg(1.0, 0.5, 0.5, 2.0, 0.2)];
    let b = [qg(-1.0, 1.0, 0.0, 0.7, 0.0), qg(0.5, 0.0, 0.0, 1.0, 1.0)];
    let m = MixtureModel::new(vec![0.25, 0.75], vec![a.to_vec(), b.to_vec()]).unwrap();
    let model = DensityModel::Mixture(m);
    let x = [0.4, 1.7];
    let direct = 0.25 * a[0].density(x[0]) * a[1].density(x[1]) + 0.75 * b[0].density(x[0]) * b[1].density(x[1]);
    assert!((model.density_at(&x).unwrap() - direct).abs() < 1e-15);
    assert!(model.density_at(&[0.1]).is_err());
}

#[test]
fn mixture_validation() {
    let c = || vec![qg(0.0, 0.0, 0.0, 1.0, 1.0)];
    assert!(MixtureModel::new(vec![0.5, 0.6], vec![c(), c()]).is_err());
    assert!(MixtureModel::new(vec![1.0, 0.0], vec![c(), c()]).is_err());
    assert!(MixtureModel::new(vec![0.5, 0.5], vec![c(), vec![c()[0], c()[0]]]).is_err());
    assert!(MixtureModel::new(vec![0.5, 0.5 + 1e-13], vec![c(), c()]).is_ok());
}

#[test]
fn power_tail_normalizer_is_cached_per_exponent() {
    let m = PowerTail::new(3.0).unwrap();
    // Independent oracle: trapezoid on x = tan θ over a very fine grid.
    let n = 400_000;
    let h = (PI / 2.0) / n as f64;
    let shape = |x: f64| 1.0 / ((1.0 + x.powi(4)) * (core::f64::consts::E + x).ln().powi(2));
    let mut s = 0.0;
    for k in 0..n {
        let t = (k as f64 + 0.5) * h;
        let x = t.tan();
        s += shape(x) / (t.cos() * t.cos());
    }
    let c0 = 1.0 / (2.0 * s * h);
    assert!((m.c0() - c0).abs() < 1e-7 * c0, "{} vs {c0}", m.c0());
}

#[test]
fn tilt_constant_for_cauchy() {
    // Oracle: x = −ln u turns (2/π)∫₀^∞ e^{−x}/(1+x²) dx into a proper
    // integral over (0, 1]; midpoint rule.
    let n = 2_000_000;
    let mut s = 0.0;
    for k in 0..n {
        let u = (k as f64 + 0.5) / n as f64;
        let l = u.ln();
        s += 1.0 / (1.0 + l * l);
    }
    let oracle = 1.0 / (2.0 / PI * s / n as f64);
    let c = tilt_constant(&DensityModel::Cauchy).unwrap();
    assert!((c - oracle).abs() < 1e-6, "{c} vs {oracle}");
    assert!((c - 2.528).abs() < 1e-3);
}

#[test]
fn tilt_constant_for_gaussian() {
    let c = tilt_constant(&DensityModel::gaussian(0.0, 1.0).unwrap()).unwrap();
    let closed = 1.0 / (2.0 * (0.5f64).exp() * normal_cdf(-1.0));
    assert!((c - closed).abs() < 1e-10 * closed);
    assert!((c - 1.911).abs() < 1e-3);
}

#[test]
fn tilted_log_ratio_is_exact() {
    let base = DensityModel::stable(1.5).unwrap();
    let t = DensityModel::tilted(base.clone()).unwrap();
    let DensityModel::Tilted { tilt, .. } = &t else { unreachable!() };
    let mut r = rng(3);
    for _ in 0..200 {
        let x: f64 = rand::Rng::random_range(&mut r, -30.0..30.0);
        let lr = t.ln_density(x) - base.ln_density(x);
        assert!((lr - (tilt.ln() - x.abs())).abs() < 1e-12);
    }
}

#[test]
fn tilt_of_small_index_stable_uses_the_spectral_route() {
    let t = DensityModel::tilted(DensityModel::stable(0.7).unwrap()).unwrap();
    let DensityModel::Tilted { tilt, .. } = t else { unreachable!() };
    assert!(tilt > 1.0);
}

#[test]
fn polar_examples() {
    assert_eq!(polar_decompose(1.0, 0.0).unwrap(), (1.0, 0.0));
    let (r, a) = polar_decompose(0.0, 2.0).unwrap();
    assert!((r - 2.0).abs() < 1e-15 && (a - PI / 2.0).abs() < 1e-15);
    let (r, a) = polar_decompose(-1.0, -1.0).unwrap();
    assert!((r - 2f64.sqrt()).abs() < 1e-15 && (a - 1.25 * PI).abs() < 1e-15);
    assert_eq!(polar_decompose(0.0, 0.0), Err(Error::Origin));
}

/// CDF oracle: cumulative adaptive quadrature between consecutive checkpoints.
fn ks_against_density(model: &DensityModel, draws: &mut Vec<f64>) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len();
    let opts = QuadratureOptions::default().with_tail_scale(model.length_scale());
    let mut pts = model.breakpoints();
    pts.push(draws[0]);
    let first = crate::quadrature::integrate_segments(
        |x| model.density(x),
        &{
            let mut v: Vec<f64> = pts.iter().copied().filter(|p| *p < draws[0]).collect();
            v.insert(0, f64::NEG_INFINITY);
            v.push(draws[0]);
            v
        },
        &opts,
    );
    let mut f = first.value;
    let mut worst: f64 = 0.0;
    let step = 50;
    let mut prev = draws[0];
    let mut i = 0;
    while i < n {
        let x = draws[i];
        if x > prev {
            let mut seg: Vec<f64> = model.breakpoints().into_iter().filter(|p| *p > prev && *p < x).collect();
            seg.insert(0, prev);
            seg.push(x);
            f += crate::quadrature::integrate_segments(|t| model.density(t), &seg, &opts).value;
        }
        let lo = i as f64 / n as f64;
        let hi = (i + 1) as f64 / n as f64;
        worst = worst.max((f - lo).abs()).max((f - hi).abs());
        prev = x;
        i += step;
    }
    worst
}

#[test]
fn samplers_match_their_densities() {
    let mut r = rng(11);
    for m in families() {
        if matches!(m, DensityModel::Mixture(_)) {
            continue;
        }
        let mut draws = sample(&m, &mut r, 100_000).unwrap();
        let ks = ks_against_density(&m, &mut draws);
        assert!(ks < 0.01, "{}: KS {ks}", m.family_name());
    }
}

#[test]
fn mixture_sampler_matches_marginal() {
    let mix = MixtureModel::new(
        vec![0.4, 0.6],
        vec![
            vec![qg(-1.0, 0.0, 1.0, 1.0, 0.5), qg(0.0, 0.0, 0.0, 1.0, 1.0)],
            vec![qg(2.0, 1.0, 1.0, 0.5, 1.0), qg(1.0, 0.0, 0.0, 2.0, 1.0)],
        ],
    )
    .unwrap();
    let first = MixtureModel::new(
        vec![0.4, 0.6],
        vec![vec![mix.components()[0][0]], vec![mix.components()[1][0]]],
    )
    .unwrap();
    let s = Sampler::new(&DensityModel::Mixture(mix)).unwrap();
    let mut r = rng(5);
    let mut buf = Vec::new();
    let mut xs = Vec::new();
    for _ in 0..100_000 {
        s.sample_point(&mut r, &mut buf).unwrap();
        assert_eq!(buf.len(), 2);
        xs.push(buf[0]);
    }
    let ks = ks_against_density(&DensityModel::Mixture(first), &mut xs);
    assert!(ks < 0.01, "KS {ks}");
}

#[test]
fn quasi_gaussian_sampler_matches_gamma_transform() {
    // |X − a| = σ√(2G), G ~ Gamma((α+1)/2), on each side with the side mass.
    use rand_distr::{Distribution, Gamma};
    let law = qg(0.5, 0.4, 2.5, 1.3, 0.6);
    let mut r = rng(21);
    let left = law.left_mass();
    let gl = Gamma::new(0.7, 1.0).unwrap();
    let gr = Gamma::new(1.75, 1.0).unwrap();
    let mut exact: Vec<f64> = (0..100_000)
        .map(|_| {
            if rand::Rng::random::<f64>(&mut r) < left {
                0.5 - 1.3 * (2.0 * gl.sample(&mut r)).sqrt()
            } else {
                0.5 + 1.3 * (2.0 * gr.sample(&mut r)).sqrt()
            }
        })
        .collect();
    let ks = ks_against_density(&DensityModel::QuasiGaussian(law), &mut exact);
    assert!(ks < 0.01, "oracle sampler KS {ks}");
}

#[test]
fn gaussian_sample_mean_within_clt_band() {
    let xs = sample(&DensityModel::gaussian(0.0, 1.0).unwrap(), &mut rng(1), 100_000).unwrap();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!(mean.abs() < 4.0 / (1e5f64).sqrt());
}

#[test]
fn stable_two_has_gaussian_characteristic_function() {
    let xs = sample(&DensityModel::stable(2.0).unwrap(), &mut rng(2), 100_000).unwrap();
    let cf = xs.iter().map(|x| x.cos()).sum::<f64>() / xs.len() as f64;
    assert!((cf - (-1f64).exp()).abs() < 0.01, "{cf}");
}

#[test]
fn stable_one_is_cauchy() {
    let mut xs = sample(&DensityModel::stable(1.0).unwrap(), &mut rng(4), 100_000).unwrap();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = 0.5 + x.atan() / PI;
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "{ks}");
}

#[test]
fn stable_sampler_characteristic_function() {
    let xs = sample(&DensityModel::stable(0.7).unwrap(), &mut rng(9), 100_000).unwrap();
    for &t in &[0.5, 1.0, 2.0] {
        let cf = xs.iter().map(|x| (t * x).cos()).sum::<f64>() / xs.len() as f64;
        assert!((cf - (-(t as f64).powf(0.7)).exp()).abs() < 0.01, "t={t}: {cf}");
    }
}

#[test]
fn polar_coordinates_are_independent() {
    // Same σ, different weight exponents and constants; each law symmetric in
    // its exponent so the radial power does not depend on the quadrant.
    let x_law = DensityModel::QuasiGaussian(qg(0.0, 0.5, 0.5, 1.2, 0.4));
    let y_law = DensityModel::QuasiGaussian(qg(0.0, 1.5, 1.5, 1.2, 0.0));
    let (sx, sy) = (Sampler::new(&x_law).unwrap(), Sampler::new(&y_law).unwrap());
    let mut r = rng(8);
    let n = 100_000;
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| polar_decompose(sx.sample(&mut r).unwrap(), sy.sample(&mut r).unwrap()).unwrap())
        .collect();
    let octiles = |mut v: Vec<f64>| -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        (1..8).map(|k| v[k * v.len() / 8]).collect()
    };
    let rq = octiles(pairs.iter().map(|p| p.0).collect());
    let aq = octiles(pairs.iter().map(|p| p.1).collect());
    let bin = |q: &[f64], v: f64| q.partition_point(|c| *c <= v);
    let mut table = [[0.0f64; 8]; 8];
    for (rho, zeta) in &pairs {
        table[bin(&rq, *rho)][bin(&aq, *zeta)] += 1.0;
    }
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..8).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut chi2 = 0.0;
    for i in 0..8 {
        for j in 0..8 {
            let e = rows[i] * cols[j] / n as f64;
            chi2 += (table[i][j] - e).powi(2) / e;
        }
    }
    // χ²₄₉ upper 0.001 quantile.
    assert!(chi2 < 85.35, "chi2 = {chi2}");
}

#[test]
fn gaussian_reference_cdf_is_consistent() {
    let opts = QuadratureOptions::default();
    let q = integrate(normal_pdf, f64::NEG_INFINITY, 0.7, &opts);
    assert!((q.value - normal_cdf(0.7)).abs() < 1e-12);
}

#[test]
fn quasi_gaussian_quantiles_near_a_singular_center() {
    let law = qg(0.0, -0.5, 1.5, 1.0, 0.3);
    let t = super::sampler::qg_table(&law).unwrap();
    let opts = QuadratureOptions::default();
    for k in 1..1000 {
        let u = k as f64 / 1000.0;
        let x = t.quantile(u);
        let f = crate::quadrature::integrate_segments(|y| law.density(y), &[f64::NEG_INFINITY, x.min(0.0), x], &opts).value;
        assert!((f - u).abs() < 1e-4, "u={u}: F(Q(u)) = {f}");
    }
}
