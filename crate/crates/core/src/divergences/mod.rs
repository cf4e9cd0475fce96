//! Divergences between densities and the rate-function machinery built on
//! them.
//!
//! Model-level integrals ([`kl_divergence`], [`hellinger`], ...) take two or
//! three [`DensityModel`]s. Family-level quantities ([`deviation_function`],
//! [`phi`], [`gamma`], ...) take parameter points and use the family's own
//! log-likelihood ratio, which is exact even where the two densities are
//! individually hard to evaluate (tilted pairs).

use alloc::vec;

use crate::distributions::DensityModel;
use crate::estimation::{ParamPoint, ParamSpace};
use crate::prelude::*;
use crate::quadrature::{integrate_real_line, Integral, QuadratureOptions};
use crate::{Error, Result};

mod entropy;
mod legendre;
mod rates;

pub use entropy::{kolmogorov_entropy, CoverProfile, minimal_cover_exhaustive, EXHAUSTIVE_COVER_LIMIT};
pub use legendre::{golden_section_max, legendre_transform, Legendre, Tabulated};
pub use rates::{
    lower_bound_rate, Bound, NSup, RateFunctions, RateOptions, Tabulation, N_SUP_MAX,
};

/// Absolute tolerance requested from every divergence integral.
pub const DIVERGENCE_TOL: f64 = 1e-10;
/// An integral estimate beyond this magnitude is treated as divergent.
pub const DIVERGENCE_CEILING: f64 = 1e6;

/// A quadrature-backed value.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DivergenceResult {
    pub value: f64,
    pub abs_error: f64,
    pub nodes_used: usize,
    /// The integral diverges; `value` is then `±∞`.
    pub divergent: bool,
}

impl DivergenceResult {
    fn exact(value: f64) -> Self {
        DivergenceResult {
            value,
            abs_error: 0.0,
            nodes_used: 0,
            divergent: false,
        }
    }
}

pub(crate) fn options(scale: f64) -> QuadratureOptions {
    QuadratureOptions {
        abs_tol: DIVERGENCE_TOL,
        rel_tol: 1e-12,
        max_panels: 4000,
        tail_scale: scale,
    }
}

fn check_scalar(model: &DensityModel) -> Result<()> {
    if model.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: model.dim(),
        });
    }
    if let DensityModel::Stable(law) = model {
        if !law.has_density() {
            return Err(Error::StableDensity {
                x: 0.0,
                reason: "no tabulated density for alpha < 1",
            });
        }
    }
    Ok(())
}

/// Breakpoints and tail scale covering all `models`.
fn domain(models: &[&DensityModel]) -> Result<(Vec<f64>, f64)> {
    let mut pts = Vec::new();
    let mut scale = f64::INFINITY;
    for m in models {
        check_scalar(m)?;
        pts.extend(m.breakpoints());
        scale = scale.min(m.length_scale());
    }
    Ok((pts, scale))
}

/// `e^{ln}` times `w`, with the convention `0·∞ = 0` where the density
/// vanishes.
#[inline]
fn weighted(ln: f64, w: f64) -> f64 {
    if ln == f64::NEG_INFINITY {
        0.0
    } else {
        ln.exp() * w
    }
}

/// `λ·l` with `0·(−∞) = 0`.
#[inline]
fn scaled(lambda: f64, l: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        lambda * l
    }
}

/// Classifies a finished integral: converged, divergent or a genuine
/// quadrature failure.
fn settle(q: Integral, opts: &QuadratureOptions) -> DivergenceResult {
    let runaway = q.non_finite || q.value.abs() > DIVERGENCE_CEILING || !q.converged;
    if runaway {
        let sign = if q.value < 0.0 { -1.0 } else { 1.0 };
        DivergenceResult {
            value: sign * f64::INFINITY,
            abs_error: f64::INFINITY,
            nodes_used: q.evaluations,
            divergent: true,
        }
    } else {
        debug_assert!(q.tolerance_met(opts));
        DivergenceResult {
            value: q.value,
            abs_error: q.abs_error,
            nodes_used: q.evaluations,
            divergent: false,
        }
    }
}

/// `∫ f ln(f/g)`. A divergent integral is reported as `+∞` with the
/// `divergent` flag rather than as an error.
pub fn kl_divergence(f: &DensityModel, g: &DensityModel) -> Result<DivergenceResult> {
    if f == g {
        return Ok(DivergenceResult::exact(0.0));
    }
    relative_entropy3(f, f, g)
}

/// `∫ f ln(g/h)`.
pub fn relative_entropy3(f: &DensityModel, g: &DensityModel, h: &DensityModel) -> Result<DivergenceResult> {
    if g == h {
        return Ok(DivergenceResult::exact(0.0));
    }
    let (pts, scale) = domain(&[f, g, h])?;
    let opts = options(scale);
    let q = integrate_real_line(
        |x| {
            let lf = f.ln_density(x);
            if lf == f64::NEG_INFINITY {
                return 0.0;
            }
            weighted(lf, g.ln_density(x) - h.ln_density(x))
        },
        &pts,
        &opts,
    );
    Ok(settle(q, &opts))
}

fn hellinger_like<F: Fn(f64) -> f64>(lambda: f64, ln_integrand: F, pts: &[f64], scale: f64) -> Result<DivergenceResult> {
    let opts = options(scale);
    let q = integrate_real_line(|x| weighted(ln_integrand(x), 1.0), pts, &opts);
    let r = settle(q, &opts);
    if r.divergent {
        return Err(Error::DivergentIntegral { lambda });
    }
    Ok(r)
}

/// `∫ f^λ g^{1−λ}`.
pub fn hellinger(lambda: f64, f: &DensityModel, g: &DensityModel) -> Result<DivergenceResult> {
    let (pts, scale) = domain(&[f, g])?;
    hellinger_like(
        lambda,
        |x| scaled(lambda, f.ln_density(x)) + scaled(1.0 - lambda, g.ln_density(x)),
        &pts,
        scale,
    )
}

/// `∫ f^λ g^{−λ} h`.
pub fn hellinger3(lambda: f64, f: &DensityModel, g: &DensityModel, h: &DensityModel) -> Result<DivergenceResult> {
    let (pts, scale) = domain(&[f, g, h])?;
    hellinger_like(
        lambda,
        |x| {
            let lh = h.ln_density(x);
            if lh == f64::NEG_INFINITY {
                return lh;
            }
            scaled(lambda, f.ln_density(x) - g.ln_density(x)) + lh
        },
        &pts,
        scale,
    )
}

/// Law `f(·; θ_law)` and log ratio `Y = ln[f(·; θ₁)/f(·; θ₂)]`, evaluated
/// through the family.
struct RatioIntegrand<'a> {
    space: &'a ParamSpace,
    law: DensityModel,
    theta1: &'a ParamPoint,
    theta2: &'a ParamPoint,
    pts: Vec<f64>,
    scale: f64,
}

impl<'a> RatioIntegrand<'a> {
    fn new(space: &'a ParamSpace, law: &ParamPoint, theta1: &'a ParamPoint, theta2: &'a ParamPoint) -> Result<Self> {
        let law_model = space.model(law)?;
        let m1 = space.model(theta1)?;
        let m2 = space.model(theta2)?;
        let (pts, scale) = domain(&[&law_model, &m1, &m2])?;
        Ok(RatioIntegrand {
            space,
            law: law_model,
            theta1,
            theta2,
            pts,
            scale,
        })
    }

    #[inline]
    fn parts(&self, x: f64) -> (f64, f64) {
        let lf = self.law.ln_density(x);
        if lf == f64::NEG_INFINITY {
            return (lf, 0.0);
        }
        (lf, self.space.family().ln_ratio(x, self.theta1, self.theta2))
    }

    fn mean(&self) -> DivergenceResult {
        if self.theta1 == self.theta2 {
            return DivergenceResult::exact(0.0);
        }
        let opts = options(self.scale);
        let q = integrate_real_line(
            |x| {
                let (lf, y) = self.parts(x);
                weighted(lf, y)
            },
            &self.pts,
            &opts,
        );
        settle(q, &opts)
    }

    /// `ln E exp(s·(Y − c))` under the law, where `c = E Y`.
    fn ln_mgf(&self, s: f64, c: f64) -> Result<DivergenceResult> {
        self.ln_mgf_with(s, c, true)
    }

    /// `ln E exp(s·Y)` without centering, for laws under which `E Y` does
    /// not exist.
    fn ln_mgf_raw(&self, s: f64) -> Result<DivergenceResult> {
        self.ln_mgf_with(s, 0.0, false)
    }

    fn ln_mgf_with(&self, s: f64, c: f64, centered: bool) -> Result<DivergenceResult> {
        if s == 0.0 || self.theta1 == self.theta2 {
            return Ok(DivergenceResult::exact(0.0));
        }
        // Peak of the exponentially weighted integrand, located on a
        // tangent probe grid; used as a shift and as an extra breakpoint.
        let origin = self.pts.first().copied().unwrap_or(0.0);
        let width = 4.0 * self.scale;
        let mut peak = f64::NEG_INFINITY;
        let mut at = origin;
        for k in 0..256 {
            let t = core::f64::consts::PI * ((k as f64 + 0.5) / 256.0 - 0.5);
            let x = origin + width * t.tan();
            let (lf, y) = self.parts(x);
            let g = lf + s * (y - c);
            if g > peak {
                peak = g;
                at = x;
            }
        }
        let mut pts = self.pts.clone();
        if peak.is_finite() {
            pts.push(at);
        }
        if centered && peak.is_finite() && peak < 30.0 {
            // Near-quadratic regime: ∫ f (e^z − 1 − z) is nonnegative and free
            // of cancellation.
            let opts = QuadratureOptions {
                abs_tol: 1e-13 * s * s,
                rel_tol: 1e-10,
                ..options(self.scale)
            };
            let q = integrate_real_line(
                |x| {
                    let (lf, y) = self.parts(x);
                    if lf == f64::NEG_INFINITY {
                        return 0.0;
                    }
                    let z = s * (y - c);
                    if z.abs() < 1.0 {
                        lf.exp() * (z.exp_m1() - z)
                    } else {
                        (lf + z).exp() - lf.exp() * (1.0 + z)
                    }
                },
                &pts,
                &opts,
            );
            if q.non_finite || !q.converged {
                return Err(Error::DivergentIntegral { lambda: s });
            }
            return Ok(DivergenceResult {
                value: q.value.ln_1p(),
                abs_error: q.abs_error / (1.0 + q.value),
                nodes_used: q.evaluations,
                divergent: false,
            });
        }
        let shift = if peak.is_finite() { peak } else { 0.0 };
        let opts = QuadratureOptions {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            ..options(self.scale)
        };
        let q = integrate_real_line(
            |x| {
                let (lf, y) = self.parts(x);
                if lf == f64::NEG_INFINITY {
                    return 0.0;
                }
                (lf + s * (y - c) - shift).exp()
            },
            &pts,
            &opts,
        );
        if q.non_finite || !q.converged || !(q.value > 0.0) {
            return Err(Error::DivergentIntegral { lambda: s });
        }
        Ok(DivergenceResult {
            value: shift + q.value.ln(),
            abs_error: q.abs_error / q.value,
            nodes_used: q.evaluations,
            divergent: false,
        })
    }
}

/// `∫ f(·; θ_law) · ln[f(·; θ₁)/f(·; θ₂)]`.
pub fn mean_log_ratio(
    space: &ParamSpace,
    law: &ParamPoint,
    theta1: &ParamPoint,
    theta2: &ParamPoint,
) -> Result<DivergenceResult> {
    Ok(RatioIntegrand::new(space, law, theta1, theta2)?.mean())
}

/// `Λ(λ; θ) = ln ∫ f^λ(·; θ) f^{1−λ}(·; θ₀)`.
pub fn deviation_function(lambda: f64, theta: &ParamPoint, theta0: &ParamPoint, space: &ParamSpace) -> Result<f64> {
    if lambda == 0.0 || theta == theta0 {
        return Ok(0.0);
    }
    let ig = RatioIntegrand::new(space, theta0, theta, theta0)?;
    let mean = ig.mean();
    if mean.divergent {
        // No mean to center at; Λ itself may still be finite.
        return Ok(ig.ln_mgf_raw(lambda)?.value);
    }
    // Λ(λ) = φ(λ) + λ·E₀ ln(f_θ/f₀).
    Ok(ig.ln_mgf(lambda, mean.value)?.value + lambda * mean.value)
}

/// `H_r(θ) = ∫ f₀ ln(f₀/f_θ)`, the Kullback–Leibler level of `θ` against `θ₀`.
pub fn kl_level(theta: &ParamPoint, theta0: &ParamPoint, space: &ParamSpace) -> Result<DivergenceResult> {
    let r = mean_log_ratio(space, theta0, theta0, theta)?;
    Ok(r)
}

/// `φ(λ, θ) = λ·H_r + Λ(λ; θ)`: the cumulant generating function of the
/// centered log-likelihood ratio `η⁰ = ln(f_θ/f₀) + H_r` under `θ₀`.
pub fn phi(lambda: f64, theta: &ParamPoint, theta0: &ParamPoint, space: &ParamSpace) -> Result<f64> {
    centered_cgf(lambda, theta, theta0, theta0, space)
}

/// `γ(λ; θ₁, θ₂) = ln E₀ exp(λ(Y − E₀Y))` with `Y = ln[f(·; θ₁)/f(·; θ₂)]`,
/// i.e. the mean term `λ·H_R(θ₀; θ₂, θ₁)` plus the log of the three-term
/// Hellinger integral `∫ f₀ (f_{θ₁}/f_{θ₂})^λ`.
pub fn gamma(
    lambda: f64,
    theta1: &ParamPoint,
    theta2: &ParamPoint,
    theta0: &ParamPoint,
    space: &ParamSpace,
) -> Result<f64> {
    centered_cgf(lambda, theta1, theta2, theta0, space)
}

fn centered_cgf(
    lambda: f64,
    theta1: &ParamPoint,
    theta2: &ParamPoint,
    theta0: &ParamPoint,
    space: &ParamSpace,
) -> Result<f64> {
    if lambda == 0.0 || theta1 == theta2 {
        return Ok(0.0);
    }
    let ig = RatioIntegrand::new(space, theta0, theta1, theta2)?;
    let mean = ig.mean();
    if mean.divergent {
        return Err(Error::DivergentIntegral { lambda: 0.0 });
    }
    Ok(ig.ln_mgf(lambda, mean.value)?.value)
}

/// Tabulates `ρ(s) = φ(s)/s²` (or the `γ` analogue) and its error on `s_grid`,
/// the form in which the `n`-supremum `sup_n n·φ(λ/√n) = λ²·sup_n ρ(λ/√n)`
/// is cheap.
pub(crate) fn cgf_ratio_table(
    s_grid: &[f64],
    theta1: &ParamPoint,
    theta2: &ParamPoint,
    theta0: &ParamPoint,
    space: &ParamSpace,
) -> Result<Vec<(f64, f64)>> {
    if theta1 == theta2 {
        return Ok(vec![(0.0, 0.0); s_grid.len()]);
    }
    let ig = RatioIntegrand::new(space, theta0, theta1, theta2)?;
    let mean = ig.mean();
    if mean.divergent {
        return Err(Error::DivergentIntegral { lambda: 0.0 });
    }
    s_grid
        .iter()
        .map(|&s| ig.ln_mgf(s, mean.value).map(|r| (r.value / (s * s), r.abs_error / (s * s))))
        .collect()
}

#[cfg(test)]
mod tests;
