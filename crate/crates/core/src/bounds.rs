//! Closed-form upper bounds for `Q_n` in two-hypothesis problems where the
//! log-likelihood ratio is `b − |ξ|` (tilted pairs): moment bounds
//! (Rosenthal/Chebyshev, martingale), the Grand Lebesgue subexponential
//! bound and the tail-transform bound.
//!
//! Throughout, `d > 0` is the gap in `Q_n = P(Σ(|ξ_k| − E|ξ|) < −n·d)`.

use alloc::sync::Arc;
use alloc::vec;
use core::fmt;

use crate::distributions::DensityModel;
use crate::divergences::{legendre_transform, Tabulated};
use crate::prelude::*;
use crate::quadrature::{integrate_real_line, QuadratureOptions};
use crate::{Error, Result};

/// Rosenthal's constant.
pub const ROSENTHAL_CONSTANT: f64 = 1.773682;

/// A bound on a probability, clamped to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundValue {
    pub value: f64,
    /// The raw expression exceeded 1.
    pub clamped: bool,
}

impl BoundValue {
    fn clamp(raw: f64) -> Self {
        if raw > 1.0 {
            BoundValue {
                value: 1.0,
                clamped: true,
            }
        } else {
            BoundValue {
                value: raw,
                clamped: false,
            }
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be positive and finite"))
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::invalid("n", "must be at least 1"))
    } else {
        Ok(())
    }
}

/// `C_R^p·|ξ|_p^p·p^p / (n^{p/2}·d^p·ln^p p)`.
pub fn rosenthal_bound(p: f64, moment_norm: f64, d: f64, n: u64) -> Result<BoundValue> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(Error::invalid("p", "must exceed 2"));
    }
    check_positive("moment_norm", moment_norm)?;
    check_positive("d", d)?;
    check_n(n)?;
    let ln_raw = p * (ROSENTHAL_CONSTANT.ln() + moment_norm.ln() + p.ln() - d.ln() - p.ln().ln())
        - 0.5 * p * (n as f64).ln();
    Ok(BoundValue::clamp(ln_raw.exp()))
}

/// `d^{−p}·(p−1)^p·n^{−p/2}·{n^{−1} Σ |η_i|_p²}^{p/2}`, one norm per
/// observation.
pub fn martingale_moment_bound(p: f64, moment_norms: &[f64], d: f64, n: u64) -> Result<BoundValue> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::invalid("p", "must be at least 2"));
    }
    check_positive("d", d)?;
    check_n(n)?;
    if moment_norms.len() as u64 != n {
        return Err(Error::Dimension {
            expected: n as usize,
            got: moment_norms.len(),
        });
    }
    if moment_norms.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
        return Err(Error::invalid("moment_norms", "must be finite and nonnegative"));
    }
    let nf = n as f64;
    let mean_sq = moment_norms.iter().map(|m| m * m).sum::<f64>() / nf;
    if mean_sq == 0.0 {
        return Ok(BoundValue::clamp(0.0));
    }
    let ln_raw = p * ((p - 1.0).ln() - d.ln()) - 0.5 * p * nf.ln() + 0.5 * p * mean_sq.ln();
    Ok(BoundValue::clamp(ln_raw.exp()))
}

/// `n^{−(p−2)}`: the shape of the Baum–Katz rate, whose constant is
/// unknown. Only meaningful for plotting against measured curves.
pub fn baum_katz_shape(p: f64, n: u64) -> f64 {
    (n as f64).powf(-(p - 2.0))
}

/// Where a ψ function came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PsiProvenance {
    Analytic,
    NaturalFromMoments,
}

/// A generating function `ψ` of a Grand Lebesgue space on `(a, b)`,
/// tabulated on an evaluation grid inside the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiFunction {
    pub a: f64,
    /// Upper end of the domain; `+∞` allowed.
    pub b: f64,
    pub table: Tabulated,
    pub provenance: PsiProvenance,
}

impl PsiFunction {
    /// `ψ` given in closed form, sampled on the points of `grid` inside
    /// `(a, b)`.
    pub fn analytic<F: Fn(f64) -> f64>(a: f64, b: f64, psi: F, grid: &[f64]) -> Result<Self> {
        if !(a >= 2.0) || !(b > a) {
            return Err(Error::invalid("domain", "need 2 <= a < b"));
        }
        let x: Vec<f64> = grid.iter().copied().filter(|&p| p > a && p < b).collect();
        let y: Vec<f64> = x.iter().map(|&p| psi(p)).collect();
        if y.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("psi", "must be positive and finite on the grid"));
        }
        let out = PsiFunction {
            a,
            b,
            table: Tabulated::new(x, y)?,
            provenance: PsiProvenance::Analytic,
        };
        if !out.is_log_convex(1e-9) {
            return Err(Error::invalid("psi", "p·ln ψ(p) is not convex on the grid"));
        }
        Ok(out)
    }

    pub fn eval(&self, p: f64) -> f64 {
        self.table.eval(p)
    }

    /// `p ↦ p·ln ψ(p)` is convex on the grid, up to `slack`.
    pub fn is_log_convex(&self, slack: f64) -> bool {
        let t = Tabulated {
            x: self.table.x.clone(),
            y: self.table
                .x
                .iter()
                .zip(&self.table.y)
                .map(|(p, v)| p * v.ln())
                .collect(),
        };
        t.is_convex(slack)
    }

    /// With `b = ∞`, `ψ` must grow without bound; checked as growth over
    /// the last half of the grid.
    pub fn grows_at_infinity(&self) -> bool {
        if self.b.is_finite() {
            return true;
        }
        let y = &self.table.y;
        let n = y.len();
        n >= 2 && y[n - 1] > y[n / 2] && y[n - 1] > y[0]
    }

    /// `||ξ||_{Gψ} = sup_p |ξ|_p/ψ(p)` over the grid.
    pub fn norm_of(&self, model: &DensityModel) -> Result<f64> {
        let mut best = 0.0f64;
        for (&p, &v) in self.table.x.iter().zip(&self.table.y) {
            let m = absolute_moment_norm(model, p)?;
            best = best.max(m / v);
        }
        Ok(best)
    }
}

/// Largest moment order for families whose tails are known in closed
/// form: moments of order `≥` the returned value are infinite.
fn moment_limit(model: &DensityModel) -> Option<f64> {
    match model {
        DensityModel::PowerTail(pt) => Some(pt.p()),
        DensityModel::Stable(s) if s.alpha() < 2.0 => Some(s.alpha()),
        DensityModel::Cauchy => Some(1.0),
        _ => None,
    }
}

/// `|ξ|_p = (E|ξ|^p)^{1/p}`; `DivergentIntegral` (with the order in the
/// `lambda` slot) when the moment is infinite.
pub fn absolute_moment_norm(model: &DensityModel, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::invalid("p", "must be positive"));
    }
    if moment_limit(model).is_some_and(|lim| p >= lim) {
        return Err(Error::DivergentIntegral { lambda: p });
    }
    let opts = QuadratureOptions {
        abs_tol: 0.0,
        rel_tol: 1e-10,
        tail_scale: model.length_scale(),
        ..QuadratureOptions::default()
    };
    let mut pts = model.breakpoints();
    pts.push(0.0);
    let q = integrate_real_line(
        |x| {
            let d = model.density(x);
            if d == 0.0 {
                0.0
            } else {
                x.abs().powf(p) * d
            }
        },
        &pts,
        &opts,
    );
    if q.non_finite || !q.converged || !(q.value > 0.0) {
        return Err(Error::DivergentIntegral { lambda: p });
    }
    Ok(q.value.powf(1.0 / p))
}

/// The natural choice `ψ(p) = |ξ|_p` on `p_grid ∩ (2, b)`, where `b` is the
/// first grid order with an infinite moment (or `+∞` if none); the norm of
/// `ξ` in the resulting space is 1.
pub fn gl_natural_psi(model: &DensityModel, p_grid: &[f64]) -> Result<PsiFunction> {
    let mut grid: Vec<f64> = p_grid.iter().copied().filter(|&p| p > 2.0).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut b = f64::INFINITY;
    for &p in &grid {
        match absolute_moment_norm(model, p) {
            Ok(v) => {
                x.push(p);
                y.push(v);
            }
            Err(Error::DivergentIntegral { .. }) => {
                b = p;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(lim) = moment_limit(model) {
        b = b.min(lim);
    }
    if x.is_empty() {
        return Err(Error::EmptyDomain("no finite moment of order above 2 on the grid"));
    }
    Ok(PsiFunction {
        a: 2.0,
        b,
        table: Tabulated::new(x, y)?,
        provenance: PsiProvenance::NaturalFromMoments,
    })
}

/// `exp(−ψ₃(ln(√n/‖ξ‖)))` with `ψ₁(p) = C_R·ψ(p)·p/(d·ln p)`,
/// `ψ₂(p) = p·ln ψ₁(p)` and `ψ₃ = ψ₂*` over the ψ grid.
pub fn gl_bound(psi: &PsiFunction, norm: f64, d: f64, n: u64) -> Result<BoundValue> {
    check_positive("d", d)?;
    check_positive("norm", norm)?;
    check_n(n)?;
    let psi2 = psi2_table(psi, d)?;
    let z = (0.5 * (n as f64).ln()) - norm.ln();
    let t = legendre_transform(|p| psi2.eval(p), &psi2.x, z)?;
    Ok(BoundValue::clamp((-t.value).exp()))
}

/// `ψ₂(p) = p·ln(C_R·ψ(p)·p/(d·ln p))` on the ψ grid.
pub fn psi2_table(psi: &PsiFunction, d: f64) -> Result<Tabulated> {
    let y = psi
        .table
        .x
        .iter()
        .zip(&psi.table.y)
        .map(|(&p, &v)| p * (ROSENTHAL_CONSTANT * v * p / (d * p.ln())).ln())
        .collect();
    Tabulated::new(psi.table.x.clone(), y)
}

/// A tail function `T(x)`, nonincreasing on `x > 0` with `T(0⁺) ≤ 1`,
/// held as `ln T` so that far tails do not underflow.
#[derive(Clone)]
pub struct TailFunction {
    ln_t: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    label: &'static str,
}

impl fmt::Debug for TailFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TailFunction").field("label", &self.label).finish()
    }
}

/// Grid of the `v` infimum.
pub const W_V_MIN: f64 = 1e-3;
pub const W_V_MAX: f64 = 1e3;
pub const W_V_POINTS: usize = 400;
/// Partition cells of the Stieltjes sum per `v` grid cell.
const W_REFINE: usize = 32;
/// The Stieltjes partition extends to `W_V_MAX · W_TAIL_REACH`.
const W_TAIL_REACH: f64 = 1e4;

impl TailFunction {
    /// Wraps `T`.
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(t: F, label: &'static str) -> Result<Self> {
        TailFunction::from_ln(move |x| t(x).ln(), label)
    }

    /// Wraps `ln T`, checking monotonicity and `T(0⁺) ≤ 1` on a log grid.
    pub fn from_ln<F: Fn(f64) -> f64 + Send + Sync + 'static>(ln_t: F, label: &'static str) -> Result<Self> {
        let mut prev = f64::INFINITY;
        for k in 0..=200 {
            let x = 10f64.powf(-6.0 + 0.06 * k as f64);
            let v = ln_t(x);
            if v.is_nan() || v > 0.0 || v > prev {
                return Err(Error::invalid("tail", "must be nonincreasing with values in [0, 1]"));
            }
            prev = v;
        }
        Ok(TailFunction {
            ln_t: Arc::new(ln_t),
            label,
        })
    }

    /// `T(x) = exp(−(x/K)^q)`.
    pub fn stretched(q: f64, k: f64) -> Result<Self> {
        check_positive("q", q)?;
        check_positive("K", k)?;
        TailFunction::from_ln(move |x: f64| -(x / k).powf(q), "stretched exponential")
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.ln_eval(x).exp()
    }

    pub fn ln_eval(&self, x: f64) -> f64 {
        (self.ln_t)(x)
    }

    pub fn label(&self) -> &'static str {
        self.label
    }
}

/// Outcome of [`tail_transform_w`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailBound {
    pub value: f64,
    /// `ln` of the (clamped) bound; finite even when `value` underflows.
    pub ln_value: f64,
    pub clamped: bool,
    /// Minimizing `v` on the grid.
    pub v_star: f64,
}

/// `W[T](x) = min(1, inf_v [e^{−x²/(8v²)} + ∫_v^∞ y² |dT(y)|])`, the infimum
/// taken over a 400-point logarithmic grid on `[10⁻³, 10³]`.
///
/// The Stieltjes integral is a sum over a geometric partition,
/// `Σ y_{k+1}²·(T(y_k) − T(y_{k+1}))` (right endpoints, so the sum never
/// undershoots).
pub fn tail_transform_w(t: &TailFunction, x: f64) -> Result<TailBound> {
    let table = StieltjesTable::new(t)?;
    table.w(x)
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// `ln ∫_v^∞ y²|dT|` at the `v` grid points, reusable across `x`.
#[derive(Debug, Clone)]
pub struct StieltjesTable {
    v: Vec<f64>,
    ln_tail: Vec<f64>,
}

impl StieltjesTable {
    pub fn new(t: &TailFunction) -> Result<Self> {
        let ln_lo = W_V_MIN.ln();
        let ln_hi = W_V_MAX.ln();
        let cell = (ln_hi - ln_lo) / (W_V_POINTS - 1) as f64;
        let h = cell / W_REFINE as f64;
        let top = (W_V_MAX * W_TAIL_REACH).ln();
        let steps = ((top - ln_lo) / h).ceil() as usize;
        let ln_y: Vec<f64> = (0..=steps).map(|k| ln_lo + h * k as f64).collect();
        let ln_ts: Vec<f64> = ln_y.iter().map(|&l| t.ln_eval(l.exp())).collect();
        let last = ln_y[steps];
        // Whatever mass remains beyond the partition must be negligible.
        if !(2.0 * last + ln_ts[steps] < -27.6) {
            return Err(Error::invalid(
                "tail",
                "second-moment Stieltjes integral does not settle on the partition",
            ));
        }
        let mut cum = vec![f64::NEG_INFINITY; ln_y.len()];
        for k in (0..steps).rev() {
            let (a, b) = (ln_ts[k], ln_ts[k + 1]);
            // ln(T_k − T_{k+1}) = ln T_k + ln(1 − T_{k+1}/T_k)
            let ln_jump = if a == f64::NEG_INFINITY || b >= a {
                f64::NEG_INFINITY
            } else {
                a + (-(b - a).exp()).ln_1p()
            };
            cum[k] = log_add(cum[k + 1], 2.0 * ln_y[k + 1] + ln_jump);
        }
        if cum[0].is_nan() || cum[0] == f64::INFINITY {
            return Err(Error::invalid("tail", "second-moment Stieltjes integral is not finite"));
        }
        let v = (0..W_V_POINTS).map(|i| ln_y[i * W_REFINE].exp()).collect();
        let ln_tail = (0..W_V_POINTS).map(|i| cum[i * W_REFINE]).collect();
        Ok(StieltjesTable { v, ln_tail })
    }

    /// `∫_v^∞ y²|dT|` at the grid points.
    pub fn tail_integrals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.v.iter().zip(&self.ln_tail).map(|(&v, &l)| (v, l.exp()))
    }

    pub fn w(&self, x: f64) -> Result<TailBound> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::invalid("x", "must be positive and finite"));
        }
        let mut best = f64::INFINITY;
        let mut v_star = self.v[0];
        for (&v, &ln_tail) in self.v.iter().zip(&self.ln_tail) {
            let val = log_add(-x * x / (8.0 * v * v), ln_tail);
            if val < best {
                best = val;
                v_star = v;
            }
        }
        let clamped = best > 0.0;
        let ln_value = best.min(0.0);
        Ok(TailBound {
            value: ln_value.exp(),
            ln_value,
            clamped,
            v_star,
        })
    }
}
