//! Plain-data descriptions of models, used for configuration records.

use alloc::boxed::Box;

use super::model::{DensityModel, MixtureModel};
use super::quasi_gaussian::{FixedSide, QuasiGaussianParams, WeightExponents};
use crate::prelude::*;
use crate::{Error, Result};

/// One quasi-Gaussian law; give `c1`, `c2`, or both (the missing one is
/// solved from the normalization).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QgSpec {
    pub center: f64,
    pub alpha_neg: f64,
    pub alpha_pos: f64,
    pub sigma: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub c1: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub c2: Option<f64>,
}

impl TryFrom<QgSpec> for QuasiGaussianParams {
    type Error = Error;
    fn try_from(s: QgSpec) -> Result<Self> {
        let e = WeightExponents::new(s.alpha_neg, s.alpha_pos)?;
        match (s.c1, s.c2) {
            (Some(c1), Some(c2)) => QuasiGaussianParams::new(s.center, e, s.sigma, c1, c2),
            (Some(c1), None) => QuasiGaussianParams::normalized(s.center, e, s.sigma, FixedSide::Negative, c1),
            (None, Some(c2)) => QuasiGaussianParams::normalized(s.center, e, s.sigma, FixedSide::Positive, c2),
            (None, None) => Err(Error::invalid("c1/c2", "give at least one of c1, c2")),
        }
    }
}

impl From<&QuasiGaussianParams> for QgSpec {
    fn from(q: &QuasiGaussianParams) -> Self {
        QgSpec {
            center: q.center(),
            alpha_neg: q.exponents().alpha_neg,
            alpha_pos: q.exponents().alpha_pos,
            sigma: q.sigma(),
            c1: Some(q.c1()),
            c2: Some(q.c2()),
        }
    }
}

/// Tagged record for a [`DensityModel`]: a family name plus its numbers.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case", deny_unknown_fields))]
pub enum ModelSpec {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    QuasiGaussian {
        center: f64,
        alpha_neg: f64,
        alpha_pos: f64,
        sigma: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        c1: Option<f64>,
        #[cfg_attr(feature = "serde", serde(default))]
        c2: Option<f64>,
    },
    Mixture {
        weights: Vec<f64>,
        components: Vec<Vec<QgSpec>>,
    },
    StretchedExp {
        r: f64,
        #[cfg_attr(feature = "serde", serde(default = "unit"))]
        scale: f64,
    },
    PowerTail {
        p: f64,
    },
    Stable {
        alpha: f64,
    },
    Cauchy,
    Tilted {
        base: Box<ModelSpec>,
        /// Written out for reference; when read back it must agree with the
        /// recomputed constant.
        #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
        tilt: Option<f64>,
    },
}

#[cfg(feature = "serde")]
fn unit() -> f64 {
    1.0
}

impl TryFrom<ModelSpec> for DensityModel {
    type Error = Error;
    fn try_from(spec: ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::Gaussian { mean, sd } => DensityModel::gaussian(mean, sd),
            ModelSpec::QuasiGaussian {
                center,
                alpha_neg,
                alpha_pos,
                sigma,
                c1,
                c2,
            } => QgSpec {
                center,
                alpha_neg,
                alpha_pos,
                sigma,
                c1,
                c2,
            }
            .try_into()
            .map(DensityModel::QuasiGaussian),
            ModelSpec::Mixture { weights, components } => {
                let comps = components
                    .into_iter()
                    .map(|c| c.into_iter().map(QuasiGaussianParams::try_from).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                MixtureModel::new(weights, comps).map(DensityModel::Mixture)
            }
            ModelSpec::StretchedExp { r, scale } => DensityModel::stretched_exp(r, scale),
            ModelSpec::PowerTail { p } => DensityModel::power_tail(p),
            ModelSpec::Stable { alpha } => DensityModel::stable(alpha),
            ModelSpec::Cauchy => Ok(DensityModel::Cauchy),
            ModelSpec::Tilted { base, tilt } => {
                let model = DensityModel::tilted(DensityModel::try_from(*base)?)?;
                if let (Some(given), DensityModel::Tilted { tilt: c, .. }) = (tilt, &model) {
                    if (given - c).abs() > 1e-6 * c {
                        return Err(Error::invalid(
                            "tilt",
                            alloc::format!("given {given} but the base integrates to {c}"),
                        ));
                    }
                }
                Ok(model)
            }
        }
    }
}

impl From<&DensityModel> for ModelSpec {
    fn from(m: &DensityModel) -> Self {
        match m {
            DensityModel::Gaussian(g) => ModelSpec::Gaussian {
                mean: g.mean(),
                sd: g.sd(),
            },
            DensityModel::QuasiGaussian(q) => {
                let s = QgSpec::from(q);
                ModelSpec::QuasiGaussian {
                    center: s.center,
                    alpha_neg: s.alpha_neg,
                    alpha_pos: s.alpha_pos,
                    sigma: s.sigma,
                    c1: s.c1,
                    c2: s.c2,
                }
            }
            DensityModel::Mixture(mx) => ModelSpec::Mixture {
                weights: mx.weights().to_vec(),
                components: mx
                    .components()
                    .iter()
                    .map(|c| c.iter().map(QgSpec::from).collect())
                    .collect(),
            },
            DensityModel::StretchedExp(s) => ModelSpec::StretchedExp {
                r: s.r(),
                scale: s.scale(),
            },
            DensityModel::PowerTail(p) => ModelSpec::PowerTail { p: p.p() },
            DensityModel::Stable(s) => ModelSpec::Stable { alpha: s.alpha() },
            DensityModel::Cauchy => ModelSpec::Cauchy,
            DensityModel::Tilted { base, tilt } => ModelSpec::Tilted {
                base: Box::new(ModelSpec::from(base.as_ref())),
                tilt: Some(*tilt),
            },
        }
    }
}

impl From<DensityModel> for ModelSpec {
    fn from(m: DensityModel) -> Self {
        ModelSpec::from(&m)
    }
}
