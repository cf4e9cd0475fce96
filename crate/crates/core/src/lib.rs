//! Numerical core for maximum-likelihood estimation over a mixed
//! discrete-continuous parameter space `Θ = {0..N} × B`.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. It provides
//!
//! * [`distributions`]: quasi-Gaussian laws and their mixtures, symmetric stable,
//!   stretched-exponential and power-tail densities, exponential tilts, samplers;
//! * [`quadrature`]: adaptive Gauss–Kronrod integration over the real line;
//! * [`divergences`]: Kullback–Leibler and Hellinger integrals, deviation and
//!   rate functions, Legendre transforms, the entropy distance on `Θ₁` and the
//!   resulting lower/upper bounds for the misclassification probability `Q_n`;
//! * [`estimation`]: the contrast function, profile maximization in `β` and the
//!   discrete arg-max with a deterministic tie rule;
//! * [`bounds`]: closed-form moment and tail bounds for `Q_n`;
//! * [`stream`]: counter-based random streams keyed by `(seed, n, replication)`.
//!
//! Everything here is a pure function of its inputs; random draws always come
//! from an explicitly passed generator.

#![no_std]
#![warn(missing_debug_implementations)]
// Float methods resolve to inherent std methods in test builds.
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;

pub mod bounds;
pub mod distributions;
pub mod divergences;
pub mod estimation;
pub mod quadrature;
pub mod special;
pub mod stream;

mod error;

pub use error::{Error, Result};

pub(crate) mod prelude {
    pub use alloc::vec::Vec;
    pub use num_traits::Float;
}
