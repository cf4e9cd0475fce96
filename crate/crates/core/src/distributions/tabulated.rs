//! Inverse-CDF tables with monotone (Fritsch–Carlson) cubic interpolation.

use crate::prelude::*;
use crate::quadrature::{integrate, QuadratureOptions};
use crate::{Error, Result};

/// Knot count used by the built-in samplers.
pub const DEFAULT_INTERVALS: usize = 4096;

/// Quantile function of a density restricted to `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct InverseCdfTable {
    // Strictly increasing cumulative probabilities, from 0 to 1.
    cdf: Vec<f64>,
    x: Vec<f64>,
    // dx/dF at each knot.
    slope: Vec<f64>,
    mass: f64,
}

impl InverseCdfTable {
    /// Tabulates `density` on `intervals` equal cells of `[lo, hi]`, with
    /// the given interior `breakpoints` added as extra knots.
    pub fn build<F: Fn(f64) -> f64>(
        density: F,
        lo: f64,
        hi: f64,
        intervals: usize,
        breakpoints: &[f64],
    ) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || intervals == 0 {
            return Err(Error::invalid("table range", "need finite lo < hi and at least one cell"));
        }
        let mut knots: Vec<f64> = (0..=intervals)
            .map(|k| lo + (hi - lo) * (k as f64 / intervals as f64))
            .collect();
        knots.extend(breakpoints.iter().copied().filter(|b| *b > lo && *b < hi));
        knots.sort_by(f64::total_cmp);
        knots.dedup();

        let opts = QuadratureOptions::default().with_abs_tol(1e-15);
        let mut x = Vec::with_capacity(knots.len());
        let mut cum = Vec::with_capacity(knots.len());
        x.push(knots[0]);
        cum.push(0.0);
        let mut running = 0.0;
        for w in knots.windows(2) {
            let q = integrate(&density, w[0], w[1], &opts);
            if q.non_finite || !(q.value >= 0.0) {
                return Err(Error::QuadratureNonConvergence {
                    estimate: q.value,
                    tolerance: opts.abs_tol,
                    evaluations: q.evaluations,
                });
            }
            running += q.value;
            // Cells without mass carry no quantiles; fold them away.
            if q.value > 0.0 {
                x.push(w[1]);
                cum.push(running);
            } else if cum.len() == 1 {
                x[0] = w[1];
            }
        }
        if !(running > 0.0) || x.len() < 2 {
            return Err(Error::invalid("density", "no mass on the table range"));
        }
        // Increments below rounding leave repeated probabilities; drop them so
        // the knots stay strictly increasing in both coordinates.
        let mut cdf = Vec::with_capacity(cum.len());
        let mut xs = Vec::with_capacity(cum.len());
        for (c, xk) in cum.iter().zip(&x) {
            let u = (c / running).min(1.0);
            if cdf.last().is_some_and(|&last| u <= last) {
                continue;
            }
            cdf.push(u);
            xs.push(*xk);
        }
        if cdf.len() < 2 {
            return Err(Error::invalid("density", "no mass on the table range"));
        }
        let x = xs;
        let slope = monotone_slopes(&cdf, &x);
        Ok(InverseCdfTable {
            cdf,
            x,
            slope,
            mass: running,
        })
    }

    /// Probability mass of the density inside the table range.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Quantile at `u ∈ [0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.cdf.len();
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, n - 1) - 1;
        let (u0, u1) = (self.cdf[i], self.cdf[i + 1]);
        let h = u1 - u0;
        let t = ((u - u0) / h).clamp(0.0, 1.0);
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.x[i] + h10 * h * self.slope[i] + h01 * self.x[i + 1] + h11 * h * self.slope[i + 1]
    }

    /// Table CDF (piecewise-linear between knots); used for diagnostics.
    pub fn cdf_at(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return 0.0;
        }
        if x >= self.x[n - 1] {
            return 1.0;
        }
        let i = self.x.partition_point(|&k| k <= x) - 1;
        let t = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])
    }
}

fn monotone_slopes(u: &[f64], x: &[f64]) -> Vec<f64> {
    let n = u.len();
    let h: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (x[i + 1] - x[i]) / h[i]).collect();
    let mut d = Vec::with_capacity(n);
    d.push(delta[0]);
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        if a * b <= 0.0 {
            d.push(0.0);
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d.push((w1 + w2) / (w1 / a + w2 / b));
        }
    }
    d.push(delta[n - 2]);
    d
}
