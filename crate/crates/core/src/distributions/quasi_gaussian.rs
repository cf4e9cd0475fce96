//! The quasi-Gaussian family `QN(a, α, σ, C₁, C₂)`.
//!
//! A Gaussian kernel reweighted by a two-sided power function
//! `ω_α(x) = C₁|x|^{α₁}·1{x<0} + C₂ x^{α₂}·1{x>0}`, with the constants tied
//! together by `C₁ I_{α₁}(σ) + C₂ I_{α₂}(σ) = σ√(2π)`.

#[allow(unused_imports)] // needed for float methods under no_std; the lint misreports it
use num_traits::Float;
use crate::special::{ln_gamma, LN_SQRT_2PI};
use crate::{Error, Result};

/// Relative tolerance on the normalization identity.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Exponents `(α₁, α₂)` of the power weight on each side of the center.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightExponents {
    pub alpha_neg: f64,
    pub alpha_pos: f64,
}

impl WeightExponents {
    pub fn new(alpha_neg: f64, alpha_pos: f64) -> Result<Self> {
        let e = WeightExponents {
            alpha_neg,
            alpha_pos,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn symmetric(alpha: f64) -> Result<Self> {
        Self::new(alpha, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha_neg", self.alpha_neg), ("alpha_pos", self.alpha_pos)] {
            if !(a > -1.0) || !a.is_finite() {
                return Err(Error::invalid(name, "weight exponent must exceed -1"));
            }
        }
        Ok(())
    }
}

/// `ω_α(x; C₁, C₂)`; zero at the origin.
pub fn omega_weight(x: f64, exponents: &WeightExponents, c1: f64, c2: f64) -> f64 {
    if x < 0.0 {
        c1 * (-x).powf(exponents.alpha_neg)
    } else if x > 0.0 {
        c2 * x.powf(exponents.alpha_pos)
    } else {
        0.0
    }
}

/// `I_α(σ) = ∫₀^∞ x^α exp(−x²/(2σ²)) dx = 2^{(α−1)/2} σ^{α+1} Γ((α+1)/2)`.
pub fn moment_integral(alpha: f64, sigma: f64) -> Result<f64> {
    Ok(ln_moment_integral(alpha, sigma)?.exp())
}

pub(crate) fn ln_moment_integral(alpha: f64, sigma: f64) -> Result<f64> {
    if !(alpha > -1.0) {
        return Err(Error::invalid("alpha", "the moment integral diverges for alpha <= -1"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid("sigma", "must be positive and finite"));
    }
    Ok(0.5 * (alpha - 1.0) * core::f64::consts::LN_2
        + (alpha + 1.0) * sigma.ln()
        + ln_gamma(0.5 * (alpha + 1.0)))
}

/// Which of the two constants is pinned when solving the normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FixedSide {
    /// `C₁`, the constant on `x < 0`.
    Negative,
    /// `C₂`, the constant on `x > 0`.
    Positive,
}

/// Solves `C₁ I_{α₁}(σ) + C₂ I_{α₂}(σ) = σ√(2π)` for the free constant and
/// returns `(C₁, C₂)`.
pub fn qg_normalize(
    exponents: &WeightExponents,
    sigma: f64,
    fixed: FixedSide,
    value: f64,
) -> Result<(f64, f64)> {
    exponents.validate()?;
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::invalid("fixed constant", "must be nonnegative and finite"));
    }
    let i_neg = moment_integral(exponents.alpha_neg, sigma)?;
    let i_pos = moment_integral(exponents.alpha_pos, sigma)?;
    let budget = sigma * (2.0 * core::f64::consts::PI).sqrt();
    let (fixed_i, free_i) = match fixed {
        FixedSide::Negative => (i_neg, i_pos),
        FixedSide::Positive => (i_pos, i_neg),
    };
    let partner = (budget - value * fixed_i) / free_i;
    // Tolerate rounding right at the feasibility edge.
    let partner = if partner < 0.0 && partner > -1e-12 * budget / free_i {
        0.0
    } else {
        partner
    };
    if partner < 0.0 {
        return Err(Error::Infeasible { partner });
    }
    Ok(match fixed {
        FixedSide::Negative => (value, partner),
        FixedSide::Positive => (partner, value),
    })
}

/// One member of `QN(a, α, σ, C₁, C₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiGaussianParams {
    center: f64,
    exponents: WeightExponents,
    sigma: f64,
    c1: f64,
    c2: f64,
    // ln C₁ − ln(σ√2π), ln C₂ − ln(σ√2π); −∞ for a vanishing side.
    ln_coef_neg: f64,
    ln_coef_pos: f64,
}

impl QuasiGaussianParams {
    /// Validates every invariant, including the normalization identity.
    pub fn new(center: f64, exponents: WeightExponents, sigma: f64, c1: f64, c2: f64) -> Result<Self> {
        exponents.validate()?;
        if !center.is_finite() {
            return Err(Error::invalid("center", "must be finite"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("sigma", "must be positive and finite"));
        }
        if !(c1 >= 0.0 && c2 >= 0.0) || !(c1 + c2 > 0.0) || !(c1 + c2).is_finite() {
            return Err(Error::invalid("c1/c2", "need c1, c2 >= 0 with c1 + c2 > 0"));
        }
        let i_neg = moment_integral(exponents.alpha_neg, sigma)?;
        let i_pos = moment_integral(exponents.alpha_pos, sigma)?;
        let budget = sigma * (2.0 * core::f64::consts::PI).sqrt();
        let total = c1 * i_neg + c2 * i_pos;
        if ((total - budget) / budget).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(
                "c1/c2",
                alloc::format!(
                    "normalization violated: c1*I + c2*I = {total}, expected {budget}"
                ),
            ));
        }
        let ln_norm = sigma.ln() + LN_SQRT_2PI;
        Ok(QuasiGaussianParams {
            center,
            exponents,
            sigma,
            c1,
            c2,
            ln_coef_neg: c1.ln() - ln_norm,
            ln_coef_pos: c2.ln() - ln_norm,
        })
    }

    /// Builds the member whose `fixed` constant equals `value`, solving for
    /// the other one.
    pub fn normalized(
        center: f64,
        exponents: WeightExponents,
        sigma: f64,
        fixed: FixedSide,
        value: f64,
    ) -> Result<Self> {
        let (c1, c2) = qg_normalize(&exponents, sigma, fixed, value)?;
        Self::new(center, exponents, sigma, c1, c2)
    }

    /// The ordinary Gaussian `N(center, σ²)`: `α = (0, 0)`, `C₁ = C₂ = 1`.
    pub fn gaussian(center: f64, sigma: f64) -> Result<Self> {
        Self::new(center, WeightExponents::symmetric(0.0)?, sigma, 1.0, 1.0)
    }

    pub fn center(&self) -> f64 {
        self.center
    }
    pub fn exponents(&self) -> WeightExponents {
        self.exponents
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn c1(&self) -> f64 {
        self.c1
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// Returns a copy shifted to a new quasi-center.
    pub fn with_center(&self, center: f64) -> Self {
        QuasiGaussianParams { center, ..*self }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    /// `ln g(x − a)`; `−∞` at the center and on a vanishing side.
    pub fn ln_density(&self, x: f64) -> f64 {
        let y = x - self.center;
        let (coef, alpha, r) = if y < 0.0 {
            (self.ln_coef_neg, self.exponents.alpha_neg, -y)
        } else if y > 0.0 {
            (self.ln_coef_pos, self.exponents.alpha_pos, y)
        } else {
            return f64::NEG_INFINITY;
        };
        if coef == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let s = r / self.sigma;
        let power = if alpha == 0.0 { 0.0 } else { alpha * r.ln() };
        coef + power - 0.5 * s * s
    }

    /// Probability of the left side `x < a`.
    pub fn left_mass(&self) -> f64 {
        if self.c1 == 0.0 {
            return 0.0;
        }
        let i = moment_integral(self.exponents.alpha_neg, self.sigma).unwrap_or(f64::NAN);
        self.c1 * i / (self.sigma * (2.0 * core::f64::consts::PI).sqrt())
    }

    /// `E|X − a|^p`, in closed form through `I_{α+p}`.
    pub fn central_abs_moment(&self, p: f64) -> Result<f64> {
        let budget = self.sigma * (2.0 * core::f64::consts::PI).sqrt();
        let mut total = 0.0;
        if self.c1 > 0.0 {
            total += self.c1 * moment_integral(self.exponents.alpha_neg + p, self.sigma)?;
        }
        if self.c2 > 0.0 {
            total += self.c2 * moment_integral(self.exponents.alpha_pos + p, self.sigma)?;
        }
        Ok(total / budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, integrate_real_line, QuadratureOptions};
    use core::f64::consts::PI;

    #[test]
    fn omega_examples() {
        let flat = WeightExponents::new(0.0, 0.0).unwrap();
        assert_eq!(omega_weight(0.7, &flat, 1.0, 1.0), 1.0);
        let e = WeightExponents::new(2.0, 1.0).unwrap();
        assert_eq!(omega_weight(0.0, &e, 3.0, 5.0), 0.0);
        assert_eq!(omega_weight(-2.0, &e, 1.0, 0.0), 4.0);
    }

    #[test]
    fn exponents_at_or_below_minus_one_are_rejected() {
        assert!(WeightExponents::new(-1.0, 0.0).is_err());
        assert!(WeightExponents::new(0.0, -1.5).is_err());
        assert!(WeightExponents::new(-0.999, 0.0).is_ok());
    }

    #[test]
    fn moment_integral_examples() {
        assert!((moment_integral(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((moment_integral(0.0, 1.0).unwrap() - (PI / 2.0).sqrt()).abs() < 1e-14);
        assert!((moment_integral(1.0, 2.0).unwrap() - 4.0).abs() < 1e-13);
        assert!(moment_integral(-1.0, 1.0).is_err());
    }

    #[test]
    fn moment_integral_matches_quadrature() {
        let opts = QuadratureOptions::default();
        for &(alpha, sigma) in &[(-0.5, 1.0), (0.3, 0.7), (2.5, 1.8), (5.0, 0.4)] {
            let q = integrate(
                |x: f64| x.powf(alpha) * (-x * x / (2.0 * sigma * sigma)).exp(),
                0.0,
                f64::INFINITY,
                &opts,
            );
            let closed = moment_integral(alpha, sigma).unwrap();
            assert!((q.value - closed).abs() < 1e-8 * closed, "alpha={alpha}: {} vs {closed}", q.value);
        }
    }

    #[test]
    fn normalize_examples() {
        let flat = WeightExponents::new(0.0, 0.0).unwrap();
        let (c1, c2) = qg_normalize(&flat, 1.0, FixedSide::Negative, 1.0).unwrap();
        assert_eq!(c1, 1.0);
        assert!((c2 - 1.0).abs() < 1e-14);

        let e = WeightExponents::new(0.5, 1.5).unwrap();
        let (c1, c2) = qg_normalize(&e, 1.0, FixedSide::Negative, 0.0).unwrap();
        assert_eq!(c1, 0.0);
        let expected = (2.0 * PI).sqrt() / moment_integral(1.5, 1.0).unwrap();
        assert!((c2 - expected).abs() < 1e-13);

        // Feasibility edge sits at c1 = √(2π)/I₀(1) = 2.
        assert!(matches!(
            qg_normalize(&flat, 1.0, FixedSide::Negative, 3.0),
            Err(Error::Infeasible { .. })
        ));
        let (_, c2) = qg_normalize(&flat, 1.0, FixedSide::Negative, 2.0).unwrap();
        assert!(c2.abs() < 1e-12);
    }

    #[test]
    fn unnormalized_constants_are_rejected() {
        let flat = WeightExponents::new(0.0, 0.0).unwrap();
        assert!(QuasiGaussianParams::new(0.0, flat, 1.0, 1.0, 1.1).is_err());
        assert!(QuasiGaussianParams::new(0.0, flat, 0.0, 1.0, 1.0).is_err());
        assert!(QuasiGaussianParams::new(0.0, flat, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn flat_weight_is_gaussian() {
        let qg = QuasiGaussianParams::gaussian(0.3, 1.7).unwrap();
        for k in 0..200 {
            let x = -8.0 + 0.0813 * k as f64;
            let z = (x - 0.3) / 1.7;
            let phi = (-0.5 * z * z).exp() / (1.7 * (2.0 * PI).sqrt());
            if x != 0.3 {
                assert!((qg.density(x) - phi).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn one_sided_law_has_no_left_mass() {
        let e = WeightExponents::new(1.0, 1.0).unwrap();
        let qg = QuasiGaussianParams::normalized(2.0, e, 1.0, FixedSide::Negative, 0.0).unwrap();
        assert_eq!(qg.density(1.5), 0.0);
        assert_eq!(qg.left_mass(), 0.0);
        let total = integrate_real_line(|x| qg.density(x), &[2.0], &QuadratureOptions::default());
        assert!((total.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn absolute_moments_match_quadrature() {
        let e = WeightExponents::new(-0.4, 1.3).unwrap();
        let qg = QuasiGaussianParams::normalized(0.0, e, 1.2, FixedSide::Negative, 0.5).unwrap();
        let opts = QuadratureOptions::default();
        let q = integrate_real_line(|x: f64| x.abs().powi(2) * qg.density(x), &[0.0], &opts);
        let m = qg.central_abs_moment(2.0).unwrap();
        assert!((q.value - m).abs() < 1e-8, "{} vs {m}", q.value);
    }
}
