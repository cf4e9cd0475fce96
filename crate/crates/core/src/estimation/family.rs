//! Parametric families `θ = (m, β) ↦ f(·; θ)` over scalar observations.

use alloc::sync::Arc;
use core::fmt::Debug;

use crate::distributions::{
    DensityModel, FixedSide, ModelSpec, QuasiGaussianParams, WeightExponents,
};
#[allow(unused_imports)] // needed for float methods under no_std; the lint misreports it
use num_traits::Float;
use crate::special::LN_SQRT_2PI;
use crate::{Error, Result};

use super::ParamPoint;

/// A rule binding each parameter point to a density.
pub trait Family: Debug + Send + Sync {
    /// Number of continuous coordinates in `β`.
    fn beta_dim(&self) -> usize;

    /// Largest admissible discrete level, if the family has one.
    fn max_level(&self) -> Option<usize> {
        None
    }

    /// Rejects boxes on which some density would be undefined.
    fn check_box(&self, _bounds: &[(f64, f64)]) -> Result<()> {
        Ok(())
    }

    /// The density `f(·; θ)` as a model (for quadrature and sampling).
    fn model(&self, theta: &ParamPoint) -> Result<DensityModel>;

    /// `ln f(x; θ)` plus an arbitrary function of `x` alone. Only differences
    /// across `θ` are ever used, so families may drop common factors.
    fn ln_likelihood_term(&self, x: f64, theta: &ParamPoint) -> f64;

    /// `ln f(x; θ₁) − ln f(x; θ₂)`.
    fn ln_ratio(&self, x: f64, theta1: &ParamPoint, theta2: &ParamPoint) -> f64 {
        self.ln_likelihood_term(x, theta1) - self.ln_likelihood_term(x, theta2)
    }
}

fn gaussian_ln(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be positive and finite"))
    }
}

/// `N(m·step, sd²)`; no continuous parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLevels {
    pub step: f64,
    pub sd: f64,
}

impl Family for GaussianLevels {
    fn beta_dim(&self) -> usize {
        0
    }
    fn model(&self, theta: &ParamPoint) -> Result<DensityModel> {
        DensityModel::gaussian(theta.m as f64 * self.step, self.sd)
    }
    fn ln_likelihood_term(&self, x: f64, theta: &ParamPoint) -> f64 {
        gaussian_ln(x, theta.m as f64 * self.step, self.sd)
    }
}

/// `N(m·β, sd²)`: at `m = 0` every `β` gives the same law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianScaledMean {
    pub sd: f64,
}

impl Family for GaussianScaledMean {
    fn beta_dim(&self) -> usize {
        1
    }
    fn model(&self, theta: &ParamPoint) -> Result<DensityModel> {
        DensityModel::gaussian(theta.m as f64 * theta.beta[0], self.sd)
    }
    fn ln_likelihood_term(&self, x: f64, theta: &ParamPoint) -> f64 {
        gaussian_ln(x, theta.m as f64 * theta.beta[0], self.sd)
    }
}

/// `N(β + m·step, sd²)`: a location nuisance parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLocation {
    pub step: f64,
    pub sd: f64,
}

impl Family for GaussianLocation {
    fn beta_dim(&self) -> usize {
        1
    }
    fn model(&self, theta: &ParamPoint) -> Result<DensityModel> {
        DensityModel::gaussian(theta.beta[0] + theta.m as f64 * self.step, self.sd)
    }
    fn ln_likelihood_term(&self, x: f64, theta: &ParamPoint) -> f64 {
        gaussian_ln(x, theta.beta[0] + theta.m as f64 * self.step, self.sd)
    }
}

/// `N(β₁ + m·step, β₂²)`: location and scale both unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLocationScale {
    pub step: f64,
}

impl Family for GaussianLocationScale {
    fn beta_dim(&self) -> usize {
        2
    }
    fn check_box(&self, bounds: &[(f64, f64)]) -> Result<()> {
        if bounds[1].0 > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid("box", "the scale coordinate needs a positive lower bound"))
        }
    }
    fn model(&self, theta: &ParamPoint) -> Result<DensityModel> {
        DensityModel::gaussian(theta.beta[0] + theta.m as f64 * self.step, theta.beta[1])
    }
    fn ln_likelihood_term(&self, x: f64, theta: &ParamPoint) -> f64 {
        gaussian_ln(x, theta.beta[0] + theta.m as f64 * self.step, theta.beta[1])
    }
}

/// A quasi-Gaussian law shifted to the center `β + m·step` (or `m·step`
/// without a continuous parameter).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiGaussianLocation {
    pub step: f64,
    law: QuasiGaussianParams,
    located: bool,
}

impl QuasiGaussianLocation {
    pub fn new(step: f64, law: QuasiGaussianParams, located: bool) -> Self {
        QuasiGaussianLocation { step, law, located }
    }

    fn center(&self, theta: &ParamPoint) -> f64 {
        let shift = if self.located { theta.beta[0] } else { 0.0 };
        shift + theta.m as f64 * self.step
    }
}

impl Family for QuasiGaussianLocation {
    fn beta_dim(&self) -> usize {
        usize::from(self.located)
    }
    fn model(&self, theta: &ParamPoint) -> Result<DensityModel> {
        Ok(DensityModel::QuasiGaussian(self.law.with_center(self.center(theta))))
    }
    fn ln_likelihood_term(&self, x: f64, theta: &ParamPoint) -> f64 {
        self.law.with_center(self.center(theta)).ln_density(x)
    }
}

/// Two hypotheses: `f₀` (level 0) against its tilt `C·e^{−|x|}·f₀` (level 1).
/// Likelihood ratios use the exact form `ln C − |x|`.
#[derive(Debug, Clone)]
pub struct TiltedPair {
    base: DensityModel,
    tilted: DensityModel,
    ln_tilt: f64,
}

impl TiltedPair {
    pub fn new(base: DensityModel) -> Result<Self> {
        let tilted = DensityModel::tilted(base.clone())?;
        let DensityModel::Tilted { tilt, .. } = &tilted else {
            unreachable!("tilted() returns a tilted model")
        };
        let ln_tilt = tilt.ln();
        Ok(TiltedPair {
            base,
            tilted,
            ln_tilt,
        })
    }

    pub fn ln_tilt(&self) -> f64 {
        self.ln_tilt
    }

    pub fn base(&self) -> &DensityModel {
        &self.base
    }
}

impl Family for TiltedPair {
    fn beta_dim(&self) -> usize {
        0
    }
    fn max_level(&self) -> Option<usize> {
        Some(1)
    }
    fn model(&self, theta: &ParamPoint) -> Result<DensityModel> {
        match theta.m {
            0 => Ok(self.base.clone()),
            1 => Ok(self.tilted.clone()),
            m => Err(Error::OutOfRange {
                value: m as f64,
                max: 1.0,
            }),
        }
    }
    fn ln_likelihood_term(&self, x: f64, theta: &ParamPoint) -> f64 {
        // The base density is common to both levels and dropped.
        if theta.m == 0 {
            0.0
        } else {
            self.ln_tilt - x.abs()
        }
    }
}

/// Serializable description of a family.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum FamilySpec {
    GaussianLevels {
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        step: f64,
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        sd: f64,
    },
    GaussianScaledMean {
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        sd: f64,
    },
    GaussianLocation {
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        step: f64,
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        sd: f64,
    },
    GaussianLocationScale {
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        step: f64,
    },
    QuasiGaussianLocation {
        step: f64,
        alpha_neg: f64,
        alpha_pos: f64,
        sigma: f64,
        c1: f64,
        /// Whether the center carries a continuous shift `β`.
        #[cfg_attr(feature = "serde", serde(default))]
        located: bool,
    },
    TiltedPair {
        base: ModelSpec,
    },
}

#[cfg(feature = "serde")]
fn one() -> f64 {
    1.0
}

impl FamilySpec {
    pub fn build(&self) -> Result<Arc<dyn Family>> {
        Ok(match *self {
            FamilySpec::GaussianLevels { step, sd } => {
                check_positive("sd", sd)?;
                Arc::new(GaussianLevels { step, sd })
            }
            FamilySpec::GaussianScaledMean { sd } => {
                check_positive("sd", sd)?;
                Arc::new(GaussianScaledMean { sd })
            }
            FamilySpec::GaussianLocation { step, sd } => {
                check_positive("sd", sd)?;
                Arc::new(GaussianLocation { step, sd })
            }
            FamilySpec::GaussianLocationScale { step } => Arc::new(GaussianLocationScale { step }),
            FamilySpec::QuasiGaussianLocation {
                step,
                alpha_neg,
                alpha_pos,
                sigma,
                c1,
                located,
            } => {
                let e = WeightExponents::new(alpha_neg, alpha_pos)?;
                let law = QuasiGaussianParams::normalized(0.0, e, sigma, FixedSide::Negative, c1)?;
                Arc::new(QuasiGaussianLocation::new(step, law, located))
            }
            FamilySpec::TiltedPair { ref base } => {
                Arc::new(TiltedPair::new(DensityModel::try_from(base.clone())?)?)
            }
        })
    }
}
