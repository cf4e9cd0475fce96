//! Rate functions on the alternative set `Θ₁ = {m ≥ 1} × B`: the envelope
//! `ν`, the entropy distance `d`, the entropy series `G` and the resulting
//! bounds on `Q_n`.
//!
//! Everything is derived from one tabulation per parameter point (and per
//! ordered pair) of `ρ(s) = φ(s)/s²`, because the `n`-supremum
//! `sup_n n·φ(λ/√n)` equals `λ²·sup_n ρ(λ/√n)`.

use alloc::vec;

use super::entropy::CoverProfile;
use super::legendre::{legendre_transform, Tabulated};
use super::{cgf_ratio_table, deviation_function, kl_level};
use crate::estimation::{ParamPoint, ParamSpace};
use crate::prelude::*;
use crate::{Error, Result};

/// Largest `n` scanned by the `n`-suprema.
pub const N_SUP_MAX: usize = 10_000;

/// Terms that fail to increase for this many consecutive `n` end the scan.
const N_SUP_PATIENCE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateOptions {
    /// Grid points per coordinate of `B` in the `Θ₁` grid.
    pub beta_points: usize,
    /// Points on the logarithmic `λ` grid.
    pub lambda_points: usize,
    pub lambda_min: f64,
    /// Working upper end of the `λ` range when `λ₀ = ∞`.
    pub lambda_cap: f64,
    /// Resolution of the `ρ` tabulation in `s`.
    pub s_points_per_decade: usize,
    pub n_max: usize,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions {
            beta_points: 9,
            lambda_points: 200,
            lambda_min: 1e-4,
            lambda_cap: 16.0,
            s_points_per_decade: 12,
            n_max: N_SUP_MAX,
        }
    }
}

/// Outcome of an `n`-supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NSup {
    pub value: f64,
    /// Index attaining the supremum.
    pub n_star: usize,
    /// The scan stopped on the patience rule before `n_max`.
    pub converged: bool,
}

/// `sup_{1 ≤ n ≤ n_max} λ²·ρ(λ/√n)`, stopping once the terms have failed to
/// increase ten times in a row.
fn n_supremum<F: Fn(f64) -> f64>(rho: F, lambda: f64, n_max: usize) -> NSup {
    let mut best = f64::NEG_INFINITY;
    let mut n_star = 1;
    let mut prev = f64::NEG_INFINITY;
    let mut flat = 0;
    for n in 1..=n_max {
        let v = lambda * lambda * rho(lambda / (n as f64).sqrt());
        if v > best {
            best = v;
            n_star = n;
        }
        if v <= prev + 1e-12 * prev.abs() {
            flat += 1;
            if flat >= N_SUP_PATIENCE {
                return NSup {
                    value: best,
                    n_star,
                    converged: true,
                };
            }
        } else {
            flat = 0;
        }
        prev = v;
    }
    NSup {
        value: best,
        n_star,
        converged: false,
    }
}

/// A function tabulated with error estimates, for export.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tabulation {
    pub argument: Vec<f64>,
    pub value: Vec<f64>,
    pub error: Vec<f64>,
}

/// An upper bound for `Q_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bound {
    pub value: f64,
    /// `M(H̲_r·√n)`.
    pub exponent: f64,
    /// `M ≤ 0`, so only the trivial bound 1 is available.
    pub trivial: bool,
}

/// `ρ(s) = φ(s)/s²` on a logarithmic `s` grid; `ln s` interpolation,
/// constant below the grid, `+∞` above it.
#[derive(Debug, Clone)]
struct RhoTable {
    values: Vec<f64>,
    errors: Vec<f64>,
}

#[derive(Debug, Clone)]
struct SGrid {
    ln_lo: f64,
    step: f64,
    s: Vec<f64>,
}

impl SGrid {
    fn new(lo: f64, hi: f64, per_decade: usize) -> Self {
        let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
        let n = (((ln_hi - ln_lo) / core::f64::consts::LN_10) * per_decade as f64).ceil() as usize + 1;
        let step = (ln_hi - ln_lo) / (n - 1) as f64;
        let s = (0..n).map(|i| (ln_lo + step * i as f64).exp()).collect();
        SGrid { ln_lo, step, s }
    }

    fn interpolate(&self, values: &[f64], s: f64) -> f64 {
        let t = (s.ln() - self.ln_lo) / self.step;
        if t <= 0.0 {
            return values[0];
        }
        let last = values.len() - 1;
        if t > last as f64 + 1e-9 {
            return f64::INFINITY;
        }
        let k = (t.floor() as usize).min(last.saturating_sub(1));
        let w = t - k as f64;
        if last == 0 {
            return values[0];
        }
        values[k] + w * (values[k + 1] - values[k])
    }
}

/// Finite-grid rate machinery for one hypothesis `θ₀` and parameter space.
#[derive(Debug, Clone)]
pub struct RateFunctions {
    theta0: ParamPoint,
    thetas: Vec<ParamPoint>,
    h_r: Vec<f64>,
    lambda0: f64,
    lambda_grid: Vec<f64>,
    s_grid: SGrid,
    rho: Vec<RhoTable>,
    rho_pairs: Vec<Vec<RhoTable>>,
    nu_grid: Tabulated,
    nu_search_hi: f64,
    distance: Vec<Vec<f64>>,
    cover: CoverProfile,
    lower_rate: f64,
    n_max: usize,
}

/// The alternative grid `{1..N} × β-grid`.
fn alternatives(space: &ParamSpace, beta_points: usize) -> Result<Vec<ParamPoint>> {
    if space.n_max() == 0 {
        return Err(Error::EmptyDomain("no alternative level m >= 1"));
    }
    let grid = space.beta_grid(beta_points);
    let mut out = Vec::new();
    for m in 1..=space.n_max() {
        for b in &grid {
            out.push(ParamPoint::new(m, b.clone()));
        }
    }
    Ok(out)
}

/// `inf_{m ≥ 1, β} Λ*(0; m, β)` over the `β` grid, with
/// `Λ*(0) = sup_{λ ∈ [0, 1]} −Λ(λ)`.
pub fn lower_bound_rate(space: &ParamSpace, theta0: &ParamPoint, beta_points: usize) -> Result<f64> {
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let mut best = f64::INFINITY;
    for theta in alternatives(space, beta_points)? {
        let lam = |l: f64| deviation_function(l, &theta, theta0, space).unwrap_or(f64::INFINITY);
        let t = legendre_transform(lam, &grid, 0.0)?;
        best = best.min(t.value.max(0.0));
    }
    Ok(best)
}

impl RateFunctions {
    pub fn build(space: &ParamSpace, theta0: &ParamPoint, opts: &RateOptions) -> Result<Self> {
        space.check_point(theta0)?;
        let thetas = alternatives(space, opts.beta_points)?;
        let h_r = thetas
            .iter()
            .map(|t| {
                let r = kl_level(t, theta0, space)?;
                if r.divergent {
                    Err(Error::DivergentIntegral { lambda: 0.0 })
                } else {
                    Ok(r.value)
                }
            })
            .collect::<Result<Vec<f64>>>()?;

        let lambda0 = detect_lambda0(space, theta0, &thetas, 4.0 * opts.lambda_cap)?;
        let lambda_hi = if lambda0.is_finite() {
            lambda0 * (1.0 - 1e-6)
        } else {
            opts.lambda_cap
        };
        if !(lambda_hi > opts.lambda_min) {
            return Err(Error::EmptyDomain("lambda_0 lies below the smallest grid lambda"));
        }
        // ν⁻¹ may need arguments beyond the working λ range when λ₀ = ∞.
        let nu_search_hi = if lambda0.is_finite() {
            lambda_hi
        } else {
            4.0 * opts.lambda_cap
        };
        let lambda_grid = log_grid(opts.lambda_min, lambda_hi, opts.lambda_points);
        let s_grid = SGrid::new(
            opts.lambda_min / (opts.n_max as f64).sqrt(),
            nu_search_hi,
            opts.s_points_per_decade,
        );

        let rho = thetas
            .iter()
            .map(|t| rho_table(&s_grid, t, theta0, theta0, space))
            .collect::<Result<Vec<_>>>()?;
        let mut rho_pairs = Vec::with_capacity(thetas.len());
        for t1 in &thetas {
            let row = thetas
                .iter()
                .map(|t2| rho_table(&s_grid, t1, t2, theta0, space))
                .collect::<Result<Vec<_>>>()?;
            rho_pairs.push(row);
        }

        let mut rf = RateFunctions {
            theta0: theta0.clone(),
            thetas,
            h_r,
            lambda0,
            lambda_grid,
            s_grid,
            rho,
            rho_pairs,
            nu_grid: Tabulated::new(vec![0.0], vec![0.0])?,
            nu_search_hi,
            distance: Vec::new(),
            cover: CoverProfile::new(&[]),
            lower_rate: 0.0,
            n_max: opts.n_max,
        };
        let mut xs = vec![0.0];
        xs.extend_from_slice(&rf.lambda_grid);
        let ys = xs.iter().map(|&l| rf.nu(l)).collect();
        rf.nu_grid = Tabulated::new(xs, ys)?;

        let k = rf.thetas.len();
        let mut distance = vec![vec![0.0; k]; k];
        for (i, row) in distance.iter_mut().enumerate() {
            for (j, d) in row.iter_mut().enumerate() {
                *d = rf.compute_distance(i, j)?;
            }
        }
        rf.cover = CoverProfile::new(&distance);
        rf.distance = distance;
        rf.lower_rate = lower_bound_rate(space, theta0, opts.beta_points)?;
        Ok(rf)
    }

    pub fn theta0(&self) -> &ParamPoint {
        &self.theta0
    }

    /// The `Θ₁` evaluation grid.
    pub fn thetas(&self) -> &[ParamPoint] {
        &self.thetas
    }

    /// `H_r(θ)` on the grid.
    pub fn kl_levels(&self) -> &[f64] {
        &self.h_r
    }

    /// `H̲_r = min_θ H_r(θ)` over the grid.
    pub fn h_r_lower(&self) -> f64 {
        self.h_r.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `λ₀ = sup{λ : ν(λ) < ∞}`; `+∞` when no divergence was found up to
    /// four times the working cap.
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn lambda_grid(&self) -> &[f64] {
        &self.lambda_grid
    }

    /// `inf Λ*(0)` over the grid.
    pub fn lower_rate(&self) -> f64 {
        self.lower_rate
    }

    fn rho_at(&self, table: &RhoTable, s: f64) -> f64 {
        self.s_grid.interpolate(&table.values, s)
    }

    /// `φ(s, θ_i)` from the tabulation.
    pub fn phi(&self, s: f64, i: usize) -> f64 {
        s * s * self.rho_at(&self.rho[i], s.abs())
    }

    /// `φ̄(λ, θ_i) = sup_n n·φ(λ/√n, θ_i)`.
    pub fn phi_bar(&self, lambda: f64, i: usize) -> NSup {
        n_supremum(|s| self.rho_at(&self.rho[i], s), lambda, self.n_max)
    }

    /// `γ̄(λ; θ_i, θ_j)`.
    pub fn gamma_bar(&self, lambda: f64, i: usize, j: usize) -> NSup {
        n_supremum(|s| self.rho_at(&self.rho_pairs[i][j], s), lambda, self.n_max)
    }

    /// `ν(λ) = max_θ φ̄(λ, θ)` (`+∞` if some supremum did not settle).
    pub fn nu(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return 0.0;
        }
        let mut best = 0.0f64;
        for i in 0..self.thetas.len() {
            let s = self.phi_bar(lambda, i);
            if !s.converged {
                return f64::INFINITY;
            }
            best = best.max(s.value);
        }
        best
    }

    /// Like [`nu`](Self::nu) but reports an unsettled supremum.
    pub fn try_nu(&self, lambda: f64) -> Result<f64> {
        let v = self.nu(lambda);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonConvergentSupremum {
                lambda,
                n_max: self.n_max,
            })
        }
    }

    /// `ν` on `{0} ∪ λ-grid`.
    pub fn nu_table(&self) -> &Tabulated {
        &self.nu_grid
    }

    /// `ν` with error estimates, for export.
    pub fn nu_tabulation(&self) -> Tabulation {
        let error = self
            .nu_grid
            .x
            .iter()
            .map(|&l| {
                self.rho
                    .iter()
                    .map(|t| l * l * t.errors.iter().copied().fold(0.0, f64::max))
                    .fold(0.0, f64::max)
            })
            .collect();
        Tabulation {
            argument: self.nu_grid.x.clone(),
            value: self.nu_grid.y.clone(),
            error,
        }
    }

    /// `ν⁻¹(y)` by bisection on the increasing function `ν`.
    pub fn nu_inverse(&self, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Ok(0.0);
        }
        let top = self.nu(self.nu_search_hi);
        if !(y <= top) {
            return Err(Error::OutOfRange {
                value: y,
                max: top,
            });
        }
        let (mut lo, mut hi) = (0.0, self.nu_search_hi);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.nu(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        Ok(hi)
    }

    fn compute_distance(&self, i: usize, j: usize) -> Result<f64> {
        if i == j {
            return Ok(0.0);
        }
        let mut d = 0.0f64;
        for &l in &self.lambda_grid {
            let g = self.gamma_bar(l, i, j);
            if !g.converged {
                return Err(Error::NonConvergentSupremum {
                    lambda: l,
                    n_max: self.n_max,
                });
            }
            d = d.max(self.nu_inverse(g.value)? / l);
        }
        Ok(d)
    }

    /// `d(θ_i, θ_j) = sup_λ ν⁻¹(γ̄(λ; θ_i, θ_j))/λ` over the `λ` grid.
    pub fn theta_distance(&self, i: usize, j: usize) -> f64 {
        self.distance[i][j]
    }

    pub fn distance_matrix(&self) -> &[Vec<f64>] {
        &self.distance
    }

    /// Largest `γ̄(λ; θ_i, θ_j) − ν(λ·d(θ_i, θ_j))` over the `λ` grid; at most
    /// rounding noise by construction of `d`.
    pub fn domination_gap(&self, i: usize, j: usize) -> f64 {
        let d = self.distance[i][j];
        self.lambda_grid
            .iter()
            .map(|&l| self.gamma_bar(l, i, j).value - self.nu(l * d))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `H(Θ₁, d, ε)` on the grid.
    pub fn kolmogorov_entropy(&self, eps: f64) -> f64 {
        self.cover.entropy(eps)
    }

    /// `G(δ) = Σ_{m ≥ 1} δ^{m−1} H(Θ₁, d, δ^m)`, truncated once the terms
    /// fall below `1e−12`; the tail below the grid resolution is summed in
    /// closed form.
    pub fn entropy_series_g(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid("delta", "must lie in (0, 1)"));
        }
        let floor = self.cover.entropy(0.0);
        let resolution = self.cover.resolution();
        let mut total = 0.0;
        let mut weight = 1.0; // δ^{m−1}
        for _ in 0..100_000 {
            let radius = weight * delta;
            if radius < resolution {
                return Ok(total + floor * weight / (1.0 - delta));
            }
            let term = weight * self.cover.entropy(radius);
            total += term;
            if term < 1e-12 && weight < 1e-12 {
                break;
            }
            weight *= delta;
        }
        Ok(total)
    }

    /// `ν*(v) = sup_{λ > 0} (v·λ − ν(λ))` over the `λ` grid.
    pub fn nu_conjugate(&self, v: f64) -> Result<f64> {
        Ok(legendre_transform(|l| self.nu(l), &self.lambda_grid, v)?
            .value
            .max(0.0))
    }

    fn delta_grid() -> Vec<f64> {
        let mut d = vec![1e-4, 1e-3];
        d.extend((1..100).map(|k| k as f64 / 100.0));
        d
    }

    /// `M(u) = sup_δ [ν*(u(1−δ)) − G(δ)]`, the exponent of the maximal
    /// inequality for the normalized field with the uniform envelope `ν` in
    /// place of `γ`.
    pub fn m_interpreted(&self, u: f64) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for delta in Self::delta_grid() {
            let v = self.nu_conjugate(u * (1.0 - delta))? - self.entropy_series_g(delta)?;
            best = best.max(v);
        }
        Ok(best)
    }

    /// `inf_δ [G(δ) − ν*(H̲_r(1−δ))]` exactly as printed: independent of
    /// its argument and typically negative.
    pub fn m_literal(&self) -> Result<f64> {
        let h = self.h_r_lower();
        let mut best = f64::INFINITY;
        for delta in Self::delta_grid() {
            let v = self.entropy_series_g(delta)? - self.nu_conjugate(h * (1.0 - delta))?;
            best = best.min(v);
        }
        Ok(best)
    }

    /// `min(1, exp(−M(H̲_r·√n)))`.
    pub fn upper_bound_qn(&self, n: u64) -> Result<Bound> {
        let h = self.h_r_lower();
        if !(h > 0.0) {
            return Err(Error::ZeroSeparation);
        }
        let m = self.m_interpreted(h * (n as f64).sqrt())?;
        if !(m > 0.0) {
            return Ok(Bound {
                value: 1.0,
                exponent: m,
                trivial: true,
            });
        }
        Ok(Bound {
            value: (-m).exp().min(1.0),
            exponent: m,
            trivial: false,
        })
    }

    /// `G` on the `δ` grid.
    pub fn g_tabulation(&self) -> Result<Tabulation> {
        let argument = Self::delta_grid();
        let value = argument
            .iter()
            .map(|&d| self.entropy_series_g(d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Tabulation {
            error: vec![0.0; argument.len()],
            argument,
            value,
        })
    }

    /// `M` at the given arguments.
    pub fn m_tabulation(&self, us: &[f64]) -> Result<Tabulation> {
        let value = us
            .iter()
            .map(|&u| self.m_interpreted(u))
            .collect::<Result<Vec<_>>>()?;
        Ok(Tabulation {
            argument: us.to_vec(),
            error: vec![0.0; us.len()],
            value,
        })
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n.max(2) - 1) as f64).exp())
        .collect()
}

fn rho_table(
    grid: &SGrid,
    theta1: &ParamPoint,
    theta2: &ParamPoint,
    theta0: &ParamPoint,
    space: &ParamSpace,
) -> Result<RhoTable> {
    let (values, errors) = cgf_ratio_table(&grid.s, theta1, theta2, theta0, space)?
        .into_iter()
        .unzip();
    Ok(RhoTable { values, errors })
}

/// Largest `λ ≤ limit` at which every `φ(λ, θ)` is finite (bisection);
/// `+∞` if that holds at `limit` itself.
fn detect_lambda0(space: &ParamSpace, theta0: &ParamPoint, thetas: &[ParamPoint], limit: f64) -> Result<f64> {
    let finite = |l: f64| -> Result<bool> {
        for t in thetas {
            match super::phi(l, t, theta0, space) {
                Ok(v) if v.is_finite() => {}
                Ok(_) | Err(Error::DivergentIntegral { .. }) => return Ok(false),
                Err(e) => return Err(e),
            }
        }
        Ok(true)
    };
    if finite(limit)? {
        return Ok(f64::INFINITY);
    }
    let (mut lo, mut hi) = (0.0, limit);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if finite(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_supremum_of_constant_sequence_stops_early() {
        let s = n_supremum(|_| 0.5, 2.0, N_SUP_MAX);
        assert!(s.converged);
        assert_eq!(s.value, 2.0);
        assert!(s.n_star == 1);
    }

    #[test]
    fn n_supremum_flags_runaway_growth() {
        // ρ(s) = 1/s: n·φ(λ/√n) = λ√n grows without bound.
        let s = n_supremum(|s| 1.0 / s, 1.0, 500);
        assert!(!s.converged);
        assert!((s.value - 500f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn n_supremum_finds_an_interior_peak() {
        // Peak of λ²ρ(λ/√n) at s = λ/√n = 0.1, i.e. n = 100 for λ = 1.
        let s = n_supremum(|s| (-(s.ln() - 0.1f64.ln()).powi(2)).exp(), 1.0, N_SUP_MAX);
        assert!(s.converged);
        assert_eq!(s.n_star, 100);
    }

    #[test]
    fn s_grid_interpolates_in_log_scale() {
        let g = SGrid::new(1e-3, 10.0, 10);
        let vals: Vec<f64> = g.s.iter().map(|s| s.ln()).collect();
        for &s in &[2e-3, 0.05, 3.3, 9.99] {
            assert!((g.interpolate(&vals, s) - f64::ln(s)).abs() < 1e-9);
        }
        assert_eq!(g.interpolate(&vals, 1e-6), vals[0]);
        assert_eq!(g.interpolate(&vals, 20.0), f64::INFINITY);
    }
}
