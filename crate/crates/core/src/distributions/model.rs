//! The tagged union of every density family in the crate.

use alloc::boxed::Box;
use core::f64::consts::{FRAC_1_PI, E};

use super::quasi_gaussian::QuasiGaussianParams;
use super::stable::{StableLaw, TABLE_RANGE};
use crate::prelude::*;
use crate::quadrature::{integrate_real_line, QuadratureOptions};
use crate::special::{ln_gamma, LN_SQRT_2PI};
use crate::{Error, Result};

/// Tolerance on `Σ weights = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Relative tolerance for normalizers obtained by quadrature.
const NORMALIZER_REL_TOL: f64 = 1e-10;

/// Weighted sum of product-form quasi-Gaussian components on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    weights: Vec<f64>,
    ln_weights: Vec<f64>,
    components: Vec<Vec<QuasiGaussianParams>>,
    dim: usize,
}

impl MixtureModel {
    pub fn new(weights: Vec<f64>, components: Vec<Vec<QuasiGaussianParams>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::invalid("weights", "need one positive weight per component"));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights", "all weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid("weights", alloc::format!("weights sum to {total}, not 1")));
        }
        let dim = components[0].len();
        if dim == 0 {
            return Err(Error::invalid("components", "dimension must be positive"));
        }
        if let Some(bad) = components.iter().find(|c| c.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: bad.len(),
            });
        }
        let ln_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(MixtureModel {
            weights,
            ln_weights,
            components,
            dim,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn components(&self) -> &[Vec<QuasiGaussianParams>] {
        &self.components
    }
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ln_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        let terms = self.components.iter().zip(&self.ln_weights).map(|(comp, lw)| {
            lw + comp.iter().zip(x).map(|(law, xi)| law.ln_density(*xi)).sum::<f64>()
        });
        Ok(ln_sum_exp(terms))
    }
}

fn ln_sum_exp<I: Iterator<Item = f64> + Clone>(terms: I) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max == f64::INFINITY {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `N(mean, sd²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    mean: f64,
    sd: f64,
}

impl Gaussian {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::invalid("mean", "must be finite"));
        }
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(Error::invalid("sd", "must be positive and finite"));
        }
        Ok(Gaussian { mean, sd })
    }
    pub fn mean(&self) -> f64 {
        self.mean
    }
    pub fn sd(&self) -> f64 {
        self.sd
    }
    pub fn ln_density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        -0.5 * z * z - self.sd.ln() - LN_SQRT_2PI
    }
}

/// `f(x) = exp(−|x/scale|^r) / (2·scale·Γ(1 + 1/r))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchedExp {
    r: f64,
    scale: f64,
    ln_norm: f64,
}

impl StretchedExp {
    pub fn new(r: f64, scale: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::invalid("r", "shape must be positive"));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid("scale", "must be positive and finite"));
        }
        let ln_norm = core::f64::consts::LN_2 + scale.ln() + ln_gamma(1.0 + 1.0 / r);
        Ok(StretchedExp { r, scale, ln_norm })
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn ln_density(&self, x: f64) -> f64 {
        -(x / self.scale).abs().powf(self.r) - self.ln_norm
    }
}

/// `f(x) = C₀(p) / ((1 + |x|^{p+1}) · ln²(e + |x|))`, `C₀` by quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTail {
    p: f64,
    ln_c0: f64,
}

impl PowerTail {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::invalid("p", "tail exponent must be positive"));
        }
        let opts = QuadratureOptions {
            rel_tol: 1e-13,
            ..QuadratureOptions::default()
        };
        let shape = |x: f64| (Self::ln_shape(p, x)).exp();
        let q = integrate_real_line(shape, &[0.0, -1.0, 1.0], &opts);
        if !q.converged || q.abs_error > NORMALIZER_REL_TOL * q.value {
            return Err(Error::QuadratureNonConvergence {
                estimate: q.value,
                tolerance: NORMALIZER_REL_TOL * q.value,
                evaluations: q.evaluations,
            });
        }
        Ok(PowerTail { p, ln_c0: -q.value.ln() })
    }

    fn ln_shape(p: f64, x: f64) -> f64 {
        let a = x.abs();
        -libm::log1p(a.powf(p + 1.0)) - 2.0 * (E + a).ln().ln()
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    /// The normalizer `C₀(p)`.
    pub fn c0(&self) -> f64 {
        self.ln_c0.exp()
    }
    pub fn ln_density(&self, x: f64) -> f64 {
        self.ln_c0 + Self::ln_shape(self.p, x)
    }
}

/// Every density family: closed forms, quasi-Gaussian laws and mixtures,
/// heavy-tailed examples, and exponential tilts `C·e^{−|x|}·f₀(x)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "super::ModelSpec", into = "super::ModelSpec")
)]
pub enum DensityModel {
    Gaussian(Gaussian),
    QuasiGaussian(QuasiGaussianParams),
    Mixture(MixtureModel),
    StretchedExp(StretchedExp),
    PowerTail(PowerTail),
    Stable(StableLaw),
    Cauchy,
    Tilted { base: Box<DensityModel>, tilt: f64 },
}

impl DensityModel {
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        Gaussian::new(mean, sd).map(DensityModel::Gaussian)
    }
    pub fn stretched_exp(r: f64, scale: f64) -> Result<Self> {
        StretchedExp::new(r, scale).map(DensityModel::StretchedExp)
    }
    pub fn power_tail(p: f64) -> Result<Self> {
        PowerTail::new(p).map(DensityModel::PowerTail)
    }
    pub fn stable(alpha: f64) -> Result<Self> {
        StableLaw::new(alpha).map(DensityModel::Stable)
    }

    /// `f₁ = C·e^{−|x|}·f₀` with `C` from [`tilt_constant`].
    pub fn tilted(base: DensityModel) -> Result<Self> {
        if matches!(base, DensityModel::Mixture(ref m) if m.dim() != 1) {
            return Err(Error::Dimension {
                expected: 1,
                got: base.dim(),
            });
        }
        let tilt = tilt_constant(&base)?;
        Ok(DensityModel::Tilted {
            base: Box::new(base),
            tilt,
        })
    }

    /// Name used in serialized records.
    pub fn family_name(&self) -> &'static str {
        match self {
            DensityModel::Gaussian(_) => "gaussian",
            DensityModel::QuasiGaussian(_) => "quasi_gaussian",
            DensityModel::Mixture(_) => "mixture",
            DensityModel::StretchedExp(_) => "stretched_exp",
            DensityModel::PowerTail(_) => "power_tail",
            DensityModel::Stable(_) => "stable",
            DensityModel::Cauchy => "cauchy",
            DensityModel::Tilted { .. } => "tilted",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DensityModel::Mixture(m) => m.dim(),
            _ => 1,
        }
    }

    /// `ln f(x)` for a scalar argument; NaN for a multivariate mixture or an
    /// unevaluable stable density (see [`try_ln_density`](Self::try_ln_density)).
    pub fn ln_density(&self, x: f64) -> f64 {
        self.try_ln_density(x).unwrap_or(f64::NAN)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    pub fn try_ln_density(&self, x: f64) -> Result<f64> {
        Ok(match self {
            DensityModel::Gaussian(g) => g.ln_density(x),
            DensityModel::QuasiGaussian(q) => q.ln_density(x),
            DensityModel::Mixture(m) => return m.ln_density(&[x]),
            DensityModel::StretchedExp(s) => s.ln_density(x),
            DensityModel::PowerTail(p) => p.ln_density(x),
            DensityModel::Stable(s) => s.try_density(x)?.ln(),
            DensityModel::Cauchy => -(FRAC_1_PI.recip() * (1.0 + x * x)).ln(),
            DensityModel::Tilted { base, tilt } => tilt.ln() - x.abs() + base.try_ln_density(x)?,
        })
    }

    pub fn try_density(&self, x: f64) -> Result<f64> {
        self.try_ln_density(x).map(f64::exp)
    }

    /// Density at a point of `R^d`; scalar families take a length-one slice.
    pub fn density_at(&self, x: &[f64]) -> Result<f64> {
        self.ln_density_at(x).map(f64::exp)
    }

    pub fn ln_density_at(&self, x: &[f64]) -> Result<f64> {
        match self {
            DensityModel::Mixture(m) => m.ln_density(x),
            _ if x.len() == 1 => self.try_ln_density(x[0]),
            _ => Err(Error::Dimension {
                expected: 1,
                got: x.len(),
            }),
        }
    }

    /// Points where the density is not smooth or has its bulk; quadrature
    /// splits there.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        match self {
            DensityModel::Gaussian(g) => pts.push(g.mean()),
            DensityModel::QuasiGaussian(q) => pts.push(q.center()),
            DensityModel::Mixture(m) => pts.extend(m.components().iter().map(|c| c[0].center())),
            DensityModel::Stable(s) if s.alpha() > 1.0 && s.alpha() < 2.0 => {
                pts.extend([-TABLE_RANGE, 0.0, TABLE_RANGE])
            }
            DensityModel::Tilted { base, .. } => {
                pts.push(0.0);
                pts.extend(base.breakpoints());
            }
            _ => pts.push(0.0),
        }
        pts
    }

    /// Characteristic length of the bulk, used to scale quadrature tails.
    pub fn length_scale(&self) -> f64 {
        match self {
            DensityModel::Gaussian(g) => g.sd(),
            DensityModel::QuasiGaussian(q) => q.sigma(),
            DensityModel::Mixture(m) => m
                .components()
                .iter()
                .map(|c| c[0].sigma())
                .fold(0.0, f64::max),
            DensityModel::StretchedExp(s) => s.scale(),
            DensityModel::Tilted { base, .. } => base.length_scale().min(1.0),
            _ => 1.0,
        }
    }
}

/// `C = 1 / ∫ e^{−|x|} f₀(x) dx`.
pub fn tilt_constant(base: &DensityModel) -> Result<f64> {
    if let DensityModel::Stable(law) = base {
        if !law.has_density() {
            return Ok(1.0 / law.laplace_weight_spectral()?);
        }
    }
    if base.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: base.dim(),
        });
    }
    let mut pts = base.breakpoints();
    pts.push(0.0);
    let opts = QuadratureOptions {
        rel_tol: NORMALIZER_REL_TOL,
        abs_tol: 0.0,
        tail_scale: base.length_scale().min(1.0),
        ..QuadratureOptions::default()
    };
    let q = integrate_real_line(|x: f64| (-x.abs()).exp() * base.density(x), &pts, &opts);
    if q.non_finite || !q.tolerance_met(&opts) {
        return Err(Error::QuadratureNonConvergence {
            estimate: q.value,
            tolerance: opts.rel_tol * q.value.abs(),
            evaluations: q.evaluations,
        });
    }
    if !(q.value > 0.0) {
        return Err(Error::invalid("base", "tilt integral vanishes"));
    }
    Ok(1.0 / q.value)
}
