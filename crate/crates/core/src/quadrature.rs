//! Globally adaptive Gauss–Kronrod (10/21) quadrature.
//!
//! Integration ranges may be unbounded: a half-line `[a, ∞)` is mapped onto
//! `[0, π/2)` through `x = a + s·tan θ`, which keeps integrands with algebraic
//! tails bounded. Callers pass breakpoints at kinks and centers so that no
//! panel straddles a non-smooth point.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;
use core::f64::consts::FRAC_PI_2;

use crate::prelude::*;
use crate::{Error, Result};

pub(crate) const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

pub(crate) const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_977_306_924,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Weights of the embedded 10-point Gauss rule, attached to XGK[1], XGK[3], ...
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Cap on the total number of panels across all segments.
    pub max_panels: usize,
    /// Length scale `s` of the tangent map used on unbounded segments.
    pub tail_scale: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_panels: 4000,
            tail_scale: 1.0,
        }
    }
}

impl QuadratureOptions {
    pub fn with_abs_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self
    }

    pub fn with_tail_scale(mut self, scale: f64) -> Self {
        self.tail_scale = scale;
        self
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    /// Error target met within the panel budget.
    pub converged: bool,
    /// Some integrand value was infinite or NaN.
    pub non_finite: bool,
}

impl Integral {
    pub fn tolerance_met(&self, opts: &QuadratureOptions) -> bool {
        self.abs_error <= opts.abs_tol.max(opts.rel_tol * self.value.abs())
    }

    /// Promotes an unconverged result to an error.
    pub fn into_result(self, opts: &QuadratureOptions) -> Result<Integral> {
        if self.converged && !self.non_finite {
            Ok(self)
        } else {
            Err(Error::QuadratureNonConvergence {
                estimate: self.abs_error,
                tolerance: opts.abs_tol,
                evaluations: self.evaluations,
            })
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    /// `x = origin + s·tan θ`, θ ∈ [0, π/2) or (−π/2, 0].
    Tan { origin: f64, scale: f64 },
}

impl Map {
    #[inline]
    fn apply<F: FnMut(f64) -> f64>(&self, f: &mut F, t: f64) -> f64 {
        match *self {
            Map::Identity => f(t),
            Map::Tan { origin, scale } => {
                let (s, c) = (t.sin(), t.cos());
                let x = origin + scale * s / c;
                let v = f(x);
                if v == 0.0 {
                    0.0
                } else {
                    v * scale / (c * c)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    map: Map,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

struct Rule {
    value: f64,
    error: f64,
    non_finite: bool,
}

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, map: Map, a: f64, b: f64) -> Rule {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = map.apply(f, center);
    let mut res_k = f_center * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let mut non_finite = !f_center.is_finite();
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = map.apply(f, center - dx);
        let f2 = map.apply(f, center + dx);
        non_finite |= !(f1.is_finite() && f2.is_finite());
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let h = half.abs();
    let value = res_k * half;
    res_abs *= h;
    res_asc *= h;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Rule {
        value,
        error: err,
        non_finite,
    }
}

/// Integrates `f` over `[a, b]`; either end may be infinite.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadratureOptions) -> Integral {
    integrate_segments(f, &[a, b], opts)
}

/// Integrates `f` over the whole real line, splitting at `breakpoints`
/// (unsorted, duplicates allowed, non-finite entries ignored).
pub fn integrate_real_line<F: FnMut(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    opts: &QuadratureOptions,
) -> Integral {
    let mut points: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    points.push(f64::NEG_INFINITY);
    points.extend(breakpoints.iter().copied().filter(|x| x.is_finite()));
    points.push(f64::INFINITY);
    integrate_segments(f, &points, opts)
}

/// Integrates over the consecutive segments delimited by `points`
/// (sorted and deduplicated internally). Panels from all segments share one
/// global error budget.
pub fn integrate_segments<F: FnMut(f64) -> f64>(
    f: F,
    points: &[f64],
    opts: &QuadratureOptions,
) -> Integral {
    let mut pts: Vec<f64> = points.iter().copied().filter(|x| !x.is_nan()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let scale = opts.tail_scale;

    let mut work = Work {
        f,
        heap: BinaryHeap::new(),
        evaluations: 0,
        non_finite: false,
    };

    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => work.push(Map::Identity, lo, hi),
            (true, false) => {
                // Seed the tail with several panels so that bumps away from the
                // origin are not missed by a single coarse rule.
                let map = Map::Tan { origin: lo, scale };
                for e in RIGHT_TAIL_EDGES.windows(2) {
                    work.push(map, e[0], e[1]);
                }
            }
            (false, true) => {
                let map = Map::Tan { origin: hi, scale };
                for e in RIGHT_TAIL_EDGES.windows(2) {
                    work.push(map, -e[1], -e[0]);
                }
            }
            (false, false) => {
                let map = Map::Tan { origin: 0.0, scale };
                for e in RIGHT_TAIL_EDGES.windows(2) {
                    work.push(map, e[0], e[1]);
                    work.push(map, -e[1], -e[0]);
                }
            }
        }
    }

    loop {
        let (value, error) = work.totals();
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        let done = error <= target;
        if done || work.heap.len() >= opts.max_panels || work.non_finite {
            return work.finish(value, error, done);
        }
        let Some(worst) = work.heap.pop() else {
            return work.finish(0.0, 0.0, true);
        };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Panel can no longer be split in floating point.
            let (value, error) = work.totals();
            return work.finish(value + worst.value, error + worst.error, false);
        }
        work.push(worst.map, worst.a, mid);
        work.push(worst.map, mid, worst.b);
    }
}

const RIGHT_TAIL_EDGES: [f64; 9] = [0.0, 0.5, 0.9, 1.2, 1.4, 1.5, 1.54, 1.56, FRAC_PI_2];

struct Work<F> {
    f: F,
    heap: BinaryHeap<Panel>,
    evaluations: usize,
    non_finite: bool,
}

impl<F: FnMut(f64) -> f64> Work<F> {
    fn push(&mut self, map: Map, a: f64, b: f64) {
        let rule = gk21(&mut self.f, map, a, b);
        self.evaluations += 21;
        self.non_finite |= rule.non_finite;
        self.heap.push(Panel {
            a,
            b,
            map,
            value: rule.value,
            error: rule.error,
        });
    }

    fn totals(&self) -> (f64, f64) {
        self.heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
    }

    fn finish(&self, value: f64, abs_error: f64, converged: bool) -> Integral {
        Integral {
            value,
            abs_error,
            evaluations: self.evaluations,
            converged,
            non_finite: self.non_finite,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn opts() -> QuadratureOptions {
        QuadratureOptions::default()
    }

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, &opts());
        // [x⁴/4 − x² + x] from −1 to 3 = (81/4 − 9 + 3) − (1/4 − 1 − 1)
        let exact = (81.0 / 4.0 - 9.0 + 3.0) - (0.25 - 1.0 - 1.0);
        assert!(r.converged);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn gaussian_over_the_line() {
        let r = integrate_real_line(|x| (-0.5 * x * x).exp(), &[0.0], &opts());
        assert!(r.converged, "{r:?}");
        assert!((r.value - (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cauchy_tails_are_captured() {
        let r = integrate_real_line(|x| 1.0 / (PI * (1.0 + x * x)), &[0.0], &opts());
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫₀¹ x^{-1/2} dx = 2
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &opts());
        assert!(r.converged, "{r:?}");
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn far_bump_is_found() {
        // A narrow bump at x = 16 on the right half-line.
        let r = integrate_real_line(|x| (-8.0 * (x - 16.0) * (x - 16.0)).exp(), &[0.0], &opts());
        let exact = (PI / 8.0).sqrt();
        assert!((r.value - exact).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn divergent_integral_does_not_converge() {
        let r = integrate(|x| 1.0 / x, 0.0, 1.0, &opts());
        assert!(!r.converged || r.non_finite || r.value > 30.0);
    }
}
