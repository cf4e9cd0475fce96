//! Maximum-likelihood estimation over `Θ = {0..N} × B`.
//!
//! For each discrete level `m` the contrast is maximized over the box `B`
//! (grid scan, then Nelder–Mead from the best grid points); the levels are
//! then compared with a strict inequality, so `τ̂ ≥ 1` only when some
//! alternative beats level 0 outright.

use alloc::sync::Arc;
use alloc::vec;

use crate::divergences::{mean_log_ratio, DivergenceResult};
use crate::prelude::*;
use crate::{Error, Result};

mod family;
pub mod nelder_mead;

pub use family::{
    Family, FamilySpec, GaussianLevels, GaussianLocation, GaussianLocationScale, GaussianScaledMean,
    QuasiGaussianLocation, TiltedPair,
};
use nelder_mead::{maximize, NelderMeadOptions};

/// Grid points per coordinate for the coarse profile scan.
pub const PROFILE_GRID_POINTS: usize = 17;
/// Number of best grid points refined by Nelder–Mead.
pub const PROFILE_STARTS: usize = 3;

/// A point `θ = (m, β)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamPoint {
    pub m: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub beta: Vec<f64>,
}

impl ParamPoint {
    pub fn new(m: usize, beta: Vec<f64>) -> Self {
        ParamPoint { m, beta }
    }

    /// A point without continuous coordinates.
    pub fn level(m: usize) -> Self {
        ParamPoint { m, beta: Vec::new() }
    }
}

/// `Θ = {0..N} × B` together with the family binding points to densities.
#[derive(Debug, Clone)]
pub struct ParamSpace {
    n_max: usize,
    bounds: Vec<(f64, f64)>,
    family: Arc<dyn Family>,
}

impl ParamSpace {
    pub fn new(n_max: usize, bounds: Vec<(f64, f64)>, family: Arc<dyn Family>) -> Result<Self> {
        if bounds.len() != family.beta_dim() {
            return Err(Error::Dimension {
                expected: family.beta_dim(),
                got: bounds.len(),
            });
        }
        for &(lo, hi) in &bounds {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid("box", "need finite lower < upper on every coordinate"));
            }
        }
        if let Some(max) = family.max_level() {
            if n_max > max {
                return Err(Error::OutOfRange {
                    value: n_max as f64,
                    max: max as f64,
                });
            }
        }
        family.check_box(&bounds)?;
        Ok(ParamSpace {
            n_max,
            bounds,
            family,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }
    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }
    pub fn family(&self) -> &dyn Family {
        self.family.as_ref()
    }
    pub fn beta_dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, theta: &ParamPoint) -> bool {
        theta.m <= self.n_max
            && theta.beta.len() == self.bounds.len()
            && theta
                .beta
                .iter()
                .zip(&self.bounds)
                .all(|(b, (lo, hi))| *b >= *lo && *b <= *hi)
    }

    pub fn check_point(&self, theta: &ParamPoint) -> Result<()> {
        if theta.beta.len() != self.bounds.len() {
            return Err(Error::Dimension {
                expected: self.bounds.len(),
                got: theta.beta.len(),
            });
        }
        if !self.contains(theta) {
            return Err(Error::invalid("theta", alloc::format!("{theta:?} lies outside the parameter space")));
        }
        Ok(())
    }

    /// Lexicographic product grid with `points` nodes per coordinate
    /// (endpoints included); a single empty vector when `B` is a point.
    pub fn beta_grid(&self, points: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|&(lo, hi)| {
                if points <= 1 {
                    vec![0.5 * (lo + hi)]
                } else {
                    (0..points)
                        .map(|i| lo + (hi - lo) * (i as f64 / (points - 1) as f64))
                        .collect()
                }
            })
            .collect();
        let mut grid = vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::with_capacity(grid.len() * axis.len());
            for prefix in &grid {
                for &v in axis {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            grid = next;
        }
        grid
    }

    /// The density at `θ`.
    pub fn model(&self, theta: &ParamPoint) -> Result<crate::distributions::DensityModel> {
        self.check_point(theta)?;
        self.family.model(theta)
    }

    /// Spot check that distinct levels give distinct densities: for every
    /// pair of levels and a 3-point probe per coordinate of `B`, the log
    /// ratio must be nonzero somewhere on 64 probe abscissae.
    pub fn check_identifiability(&self) -> Result<()> {
        let xs: Vec<f64> = (0..64)
            .map(|k| 4.0 * (core::f64::consts::PI * ((k as f64 + 0.5) / 64.0 - 0.5)).tan())
            .collect();
        let probes = self.beta_grid(3);
        let levels = self.n_max.min(8);
        for m1 in 0..=levels {
            for m2 in m1 + 1..=levels {
                for b1 in &probes {
                    for b2 in &probes {
                        let t1 = ParamPoint::new(m1, b1.clone());
                        let t2 = ParamPoint::new(m2, b2.clone());
                        let differs = xs
                            .iter()
                            .any(|&x| self.family.ln_ratio(x, &t1, &t2).abs() > 1e-9);
                        if !differs {
                            return Err(Error::invalid(
                                "family",
                                alloc::format!("{t1:?} and {t2:?} give the same density"),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// `Σᵢ ln[f(ξᵢ; θ)/f(ξᵢ; θ₀)]`.
pub fn contrast(sample: &[f64], theta: &ParamPoint, theta0: &ParamPoint, space: &ParamSpace) -> Result<f64> {
    space.check_point(theta)?;
    space.check_point(theta0)?;
    let fam = space.family();
    let mut total = 0.0;
    for (index, &x) in sample.iter().enumerate() {
        let (a, b) = (fam.ln_likelihood_term(x, theta), fam.ln_likelihood_term(x, theta0));
        if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY || a.is_nan() || b.is_nan() {
            return Err(Error::ZeroDensity { index, x });
        }
        total += fam.ln_ratio(x, theta, theta0);
    }
    Ok(total)
}

/// The contrast as a function of `θ` for one sample, with the `θ₀` terms
/// summed once.
struct Objective<'a> {
    sample: &'a [f64],
    space: &'a ParamSpace,
    base: f64,
    scale: f64,
    theta0: &'a ParamPoint,
}

impl<'a> Objective<'a> {
    fn new(sample: &'a [f64], space: &'a ParamSpace, theta0: &'a ParamPoint) -> Result<Self> {
        space.check_point(theta0)?;
        let fam = space.family();
        let mut base = 0.0;
        let mut scale = 0.0;
        for (index, &x) in sample.iter().enumerate() {
            let t = fam.ln_likelihood_term(x, theta0);
            if !t.is_finite() {
                return Err(Error::ZeroDensity { index, x });
            }
            base += t;
            scale += t.abs();
        }
        Ok(Objective {
            sample,
            space,
            base,
            scale,
            theta0,
        })
    }

    fn value(&self, m: usize, beta: &[f64]) -> f64 {
        if m == self.theta0.m && beta == self.theta0.beta.as_slice() {
            return 0.0;
        }
        let theta = ParamPoint::new(m, beta.to_vec());
        let fam = self.space.family();
        let mut total = 0.0;
        for &x in self.sample {
            total += fam.ln_likelihood_term(x, &theta);
        }
        if total.is_nan() {
            return f64::NEG_INFINITY;
        }
        total - self.base
    }

    /// Differences below this are treated as ties.
    fn tie_tolerance(&self) -> f64 {
        1e-12 * (1.0 + self.scale)
    }
}

/// Best `β` for one level.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProfilePoint {
    pub m: usize,
    pub beta: Vec<f64>,
    pub value: f64,
    /// Every refinement ended on the boundary of `B`.
    pub boundary: bool,
    /// Several grid points share the maximum and refinement found nothing
    /// strictly better.
    pub tie: bool,
}

fn on_boundary(beta: &[f64], bounds: &[(f64, f64)]) -> bool {
    beta.iter().zip(bounds).any(|(b, (lo, hi))| {
        let eps = 1e-7 * (hi - lo);
        *b <= lo + eps || *b >= hi - eps
    })
}

fn profile_with(obj: &Objective<'_>, m: usize) -> ProfilePoint {
    let space = obj.space;
    let bounds = space.bounds();
    if bounds.is_empty() {
        return ProfilePoint {
            m,
            beta: Vec::new(),
            value: obj.value(m, &[]),
            boundary: false,
            tie: false,
        };
    }
    let grid = space.beta_grid(PROFILE_GRID_POINTS);
    let mut scored: Vec<(usize, f64)> = grid.iter().enumerate().map(|(i, b)| (i, obj.value(m, b))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    let tol = obj.tie_tolerance();
    let grid_best = scored[0].1;
    let grid_ties = scored.iter().take_while(|(_, v)| *v >= grid_best - tol).count();

    let step: Vec<f64> = bounds
        .iter()
        .map(|(lo, hi)| 0.5 * (hi - lo) / (PROFILE_GRID_POINTS - 1) as f64)
        .collect();
    let opts = NelderMeadOptions::default();
    let mut best_beta = grid[scored[0].0].clone();
    let mut best_value = grid_best;
    let mut all_boundary = true;
    for &(start, _) in scored.iter().take(PROFILE_STARTS) {
        let r = maximize(|b| obj.value(m, b), &grid[start], &step, bounds, &opts);
        all_boundary &= on_boundary(&r.point, bounds);
        if r.value > best_value {
            best_value = r.value;
            best_beta = r.point;
        }
    }
    let improved = best_value > grid_best + tol;
    ProfilePoint {
        m,
        beta: best_beta,
        value: best_value,
        boundary: all_boundary,
        tie: grid_ties >= 2 && !improved,
    }
}

/// Maximizes the contrast over `β ∈ B` at level `m`.
pub fn profile_mle_continuous(
    sample: &[f64],
    m: usize,
    space: &ParamSpace,
    theta0: &ParamPoint,
) -> Result<ProfilePoint> {
    if m > space.n_max() {
        return Err(Error::OutOfRange {
            value: m as f64,
            max: space.n_max() as f64,
        });
    }
    let obj = Objective::new(sample, space, theta0)?;
    Ok(profile_with(&obj, m))
}

/// Output of [`mle`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MleResult {
    pub tau_hat: usize,
    pub beta_hat: Vec<f64>,
    /// Contrast at `(τ̂, β̂)`.
    pub log_lik: f64,
    pub profile: Vec<ProfilePoint>,
    pub tie_flag: bool,
    pub boundary_flag: bool,
}

/// `(τ̂, β̂) = argmax` of the contrast; `τ̂ ≥ 1` only when the best
/// alternative level strictly beats level 0, ties going to the smallest `m`.
pub fn mle(sample: &[f64], space: &ParamSpace, theta0: &ParamPoint) -> Result<MleResult> {
    if sample.is_empty() {
        return Err(Error::invalid("sample", "must be nonempty"));
    }
    let obj = Objective::new(sample, space, theta0)?;
    let tol = obj.tie_tolerance();
    let profile: Vec<ProfilePoint> = (0..=space.n_max()).map(|m| profile_with(&obj, m)).collect();
    let v0 = profile[0].value;
    let mut best = None::<usize>;
    for (m, p) in profile.iter().enumerate().skip(1) {
        if best.map_or(true, |b| p.value > profile[b].value) {
            best = Some(m);
        }
    }
    let (tau, tie_levels) = match best {
        Some(m) if profile[m].value > v0 + tol => (m, false),
        Some(m) => (0, profile[m].value >= v0 - tol),
        None => (0, false),
    };
    let chosen = &profile[tau];
    Ok(MleResult {
        tau_hat: tau,
        beta_hat: chosen.beta.clone(),
        log_lik: chosen.value,
        tie_flag: tie_levels || chosen.tie,
        boundary_flag: chosen.boundary,
        profile,
    })
}

/// Max-norm of the central-difference gradient of the contrast in `β`
/// (step `1e−5` of each coordinate's range).
pub fn stationarity_residual(
    sample: &[f64],
    theta_hat: &ParamPoint,
    space: &ParamSpace,
    theta0: &ParamPoint,
) -> Result<f64> {
    space.check_point(theta_hat)?;
    let obj = Objective::new(sample, space, theta0)?;
    let mut worst: f64 = 0.0;
    for (k, &(lo, hi)) in space.bounds().iter().enumerate() {
        let h = 1e-5 * (hi - lo);
        let b = theta_hat.beta[k];
        if b - h < lo || b + h > hi {
            return Err(Error::invalid("theta_hat", "estimate on the boundary of B; residual undefined"));
        }
        let mut up = theta_hat.beta.clone();
        let mut down = theta_hat.beta.clone();
        up[k] += h;
        down[k] -= h;
        let g = (obj.value(theta_hat.m, &up) - obj.value(theta_hat.m, &down)) / (2.0 * h);
        worst = worst.max(g.abs());
    }
    Ok(worst)
}

/// `a(θ) = E_{θ₀} ln[f(ξ; θ)/f(ξ; θ₀)] = −KL(f_{θ₀} ‖ f_θ)`.
pub fn expected_contrast_a(theta: &ParamPoint, theta0: &ParamPoint, space: &ParamSpace) -> Result<DivergenceResult> {
    mean_log_ratio(space, theta0, theta, theta0)
}

#[cfg(test)]
mod tests;
