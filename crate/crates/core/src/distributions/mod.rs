//! Densities and samplers: the quasi-Gaussian family and its mixtures,
//! Gaussian, stretched-exponential, power-tail, symmetric stable and Cauchy
//! laws, and their exponential tilts.

mod model;
pub mod quasi_gaussian;
mod sampler;
mod spec;
pub mod stable;
pub mod tabulated;

pub use model::{tilt_constant, DensityModel, Gaussian, MixtureModel, PowerTail, StretchedExp};
pub use quasi_gaussian::{
    moment_integral, omega_weight, qg_normalize, FixedSide, QuasiGaussianParams, WeightExponents,
};
pub use sampler::{sample, Sampler, MAX_REJECTIONS};
pub use spec::{ModelSpec, QgSpec};
pub use stable::StableLaw;

use crate::special::wrap_angle;
use crate::{Error, Result};

/// Polar coordinates `(ρ, ζ)` of a nonzero planar point, `ζ ∈ [0, 2π)`.
pub fn polar_decompose(x: f64, y: f64) -> Result<(f64, f64)> {
    if x == 0.0 && y == 0.0 {
        return Err(Error::Origin);
    }
    Ok((libm::hypot(x, y), wrap_angle(libm::atan2(y, x))))
}

#[cfg(test)]
mod tests;
