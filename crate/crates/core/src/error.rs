use alloc::string::String;

/// Failures reported by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("normalization infeasible: the free constant would be {partner}")]
    Infeasible { partner: f64 },

    #[error("quadrature did not reach tolerance {tolerance:e} (error estimate {estimate:e}, {evaluations} evaluations)")]
    QuadratureNonConvergence {
        estimate: f64,
        tolerance: f64,
        evaluations: usize,
    },

    #[error("integral diverges at lambda = {lambda}")]
    DivergentIntegral { lambda: f64 },

    #[error("density vanishes at observation {index} (x = {x})")]
    ZeroDensity { index: usize, x: f64 },

    #[error("rejection sampler gave up after {attempts} consecutive rejections (last candidate {last})")]
    RejectionExhausted { attempts: u64, last: f64 },

    #[error("stable density unavailable at x = {x}: {reason}")]
    StableDensity { x: f64, reason: &'static str },

    #[error("polar angle is undefined at the origin")]
    Origin,

    #[error("empty effective domain: {0}")]
    EmptyDomain(&'static str),

    #[error("value {value} lies outside the tabulated range of nu (max {max})")]
    OutOfRange { value: f64, max: f64 },

    #[error("the lower Kullback-Leibler level over the alternatives is zero")]
    ZeroSeparation,

    #[error("the n-supremum did not settle by n = {n_max} at lambda = {lambda}")]
    NonConvergentSupremum { lambda: f64, n_max: usize },

    #[error("observation has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
