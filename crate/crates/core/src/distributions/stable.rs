//! Symmetric α-stable laws with characteristic function `exp(−|t|^α)`.
//!
//! For `1 < α < 2` the density is tabulated once by inverting the
//! characteristic function on `|x| ≤ 50` and interpolated with local cubics;
//! beyond the table the asymptotic series in `x^{−kα−1}` takes over. `α = 1`
//! and `α = 2` use the Cauchy and `N(0, 2)` closed forms.

use alloc::sync::Arc;
use core::f64::consts::{FRAC_1_PI, FRAC_PI_2, PI};

use crate::prelude::*;
use crate::quadrature::{integrate, QuadratureOptions, WGK, XGK};
use crate::special::ln_gamma;
use crate::{Error, Result};

/// Half-width of the tabulated range.
pub const TABLE_RANGE: f64 = 50.0;
/// Intervals on `[0, TABLE_RANGE]`; the symmetric grid has `2·N + 1` points.
const TABLE_INTERVALS: usize = 1 << 14;
/// Characteristic function cut-off: `exp(−t^α)` is dropped once `t^α > 40`.
const CF_EXPONENT_CUTOFF: f64 = 40.0;
const PANEL_WIDTH: f64 = 0.05;
const RESEED_EVERY: usize = 1024;

#[derive(Debug)]
struct StableTable {
    step: f64,
    values: Vec<f64>,
}

impl StableTable {
    fn build(alpha: f64) -> Self {
        let step = TABLE_RANGE / TABLE_INTERVALS as f64;
        let t_max = CF_EXPONENT_CUTOFF.powf(1.0 / alpha);

        // Panels: geometrically graded towards t = 0, where exp(−t^α) is not
        // smooth, then uniform.
        let mut edges: Vec<f64> = (0..40).rev().map(|j| PANEL_WIDTH * 0.5f64.powi(j + 1)).collect();
        edges.insert(0, 0.0);
        let uniform = libm::ceil(t_max / PANEL_WIDTH) as usize;
        edges.extend((1..=uniform).map(|j| j as f64 * PANEL_WIDTH));

        let mut values = vec_zeros(TABLE_INTERVALS + 1);
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let center = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for j in 0..XGK.len() {
                let weight = WGK[j] * half;
                let nodes: &[f64] = if XGK[j] == 0.0 {
                    &[center]
                } else {
                    &[center - half * XGK[j], center + half * XGK[j]]
                };
                for &t in nodes {
                    accumulate_node(&mut values, t, weight * (-t.powf(alpha)).exp(), step);
                }
            }
        }
        for v in &mut values {
            *v *= FRAC_1_PI;
        }
        StableTable { step, values }
    }

    fn eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        let u = ax / self.step;
        let n = self.values.len() - 1;
        let k = (u as usize).min(n - 1);
        // Window of four nodes k−1..k+2, reflected at zero, clamped at the end.
        let base: isize = if k + 2 > n { n as isize - 3 } else { k as isize - 1 };
        let node = |i: isize| -> f64 { self.values[i.unsigned_abs()] };
        let s = u - base as f64;
        let (f0, f1, f2, f3) = (node(base), node(base + 1), node(base + 2), node(base + 3));
        // Lagrange cubic through s = 0, 1, 2, 3.
        let l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
        let l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
        let l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
        let l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
        f0 * l0 + f1 * l1 + f2 * l2 + f3 * l3
    }
}

fn vec_zeros(n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n);
    v.resize(n, 0.0);
    v
}

/// Adds `weight · cos(t·x_k)` to every grid value, advancing the angle by
/// complex rotation and reseeding periodically to bound drift.
fn accumulate_node(values: &mut [f64], t: f64, weight: f64, step: f64) {
    if weight == 0.0 {
        return;
    }
    let (sr, cr) = (t * step).sin_cos();
    for (block, chunk) in values.chunks_mut(RESEED_EVERY).enumerate() {
        let (mut s, mut c) = (t * step * (block * RESEED_EVERY) as f64).sin_cos();
        for v in chunk {
            *v += weight * c;
            let c_next = c * cr - s * sr;
            s = s * cr + c * sr;
            c = c_next;
        }
    }
}

/// Asymptotic expansion `(1/π) Σ (−1)^{k+1} Γ(kα+1)/k! sin(kπα/2) x^{−kα−1}`,
/// summed until the terms stop shrinking.
fn tail_series(alpha: f64, x: f64) -> Option<f64> {
    let lx = x.abs().ln();
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for k in 1..=40 {
        let kf = k as f64;
        let ln_mag = ln_gamma(kf * alpha + 1.0) - ln_gamma(kf + 1.0) - (kf * alpha + 1.0) * lx;
        let mag = ln_mag.exp();
        if mag > last {
            break;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * mag * (kf * PI * alpha / 2.0).sin();
        sum += term;
        if mag < 1e-17 * sum.abs() {
            return Some(sum * FRAC_1_PI);
        }
        last = mag;
    }
    // Accept an asymptotic (non-converged) sum when the smallest term is
    // already negligible against the total.
    if last < 1e-12 * sum.abs() {
        Some(sum * FRAC_1_PI)
    } else {
        None
    }
}

/// Symmetric α-stable law, `0 < α ≤ 2`.
#[derive(Debug, Clone)]
pub struct StableLaw {
    alpha: f64,
    table: Option<Arc<StableTable>>,
}

impl PartialEq for StableLaw {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha
    }
}

impl StableLaw {
    /// Builds the law, tabulating the density when `1 < α < 2`. For
    /// `α < 1` only sampling and the tilt integral are available.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::invalid("alpha", "stable index must lie in (0, 2]"));
        }
        let table = if alpha > 1.0 && alpha < 2.0 {
            Some(Arc::new(StableTable::build(alpha)))
        } else {
            None
        };
        Ok(StableLaw { alpha, table })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Whether pointwise density evaluation is supported.
    pub fn has_density(&self) -> bool {
        self.alpha >= 1.0
    }

    pub fn try_density(&self, x: f64) -> Result<f64> {
        if self.alpha == 1.0 {
            return Ok(FRAC_1_PI / (1.0 + x * x));
        }
        if self.alpha == 2.0 {
            return Ok((-x * x / 4.0).exp() / (2.0 * PI.sqrt()));
        }
        match &self.table {
            Some(table) if x.abs() <= TABLE_RANGE => Ok(table.eval(x).max(0.0)),
            Some(_) => tail_series(self.alpha, x).ok_or(Error::StableDensity {
                x,
                reason: "tail series did not settle",
            }),
            None => Err(Error::StableDensity {
                x,
                reason: "no density table for alpha < 1",
            }),
        }
    }

    /// Density, or NaN where [`try_density`](Self::try_density) fails.
    pub fn density(&self, x: f64) -> f64 {
        self.try_density(x).unwrap_or(f64::NAN)
    }

    /// `∫ e^{−|x|} f(x) dx` through the Fourier side,
    /// `(2/π) ∫₀^∞ e^{−t^α} / (1 + t²) dt`; needs no density.
    pub fn laplace_weight_spectral(&self) -> Result<f64> {
        let alpha = self.alpha;
        let opts = QuadratureOptions::default();
        let q = integrate(
            |t: f64| (-t.powf(alpha)).exp() / (1.0 + t * t),
            0.0,
            f64::INFINITY,
            &opts,
        )
        .into_result(&opts)?;
        Ok(2.0 * FRAC_1_PI * q.value)
    }

    /// Chambers–Mallows–Stuck transform of `V ~ U(−π/2, π/2)`, `W ~ Exp(1)`.
    pub fn transform(&self, v: f64, w: f64) -> f64 {
        let a = self.alpha;
        if a == 1.0 {
            return v.tan();
        }
        let lead = (a * v).sin() / v.cos().powf(1.0 / a);
        lead * (((1.0 - a) * v).cos() / w).powf((1.0 - a) / a)
    }
}

pub(crate) const V_RANGE: f64 = FRAC_PI_2;
